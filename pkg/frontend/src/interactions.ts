// User gestures -> outbound session events or bridge directives.
import { bridgeMessage, BridgeMessage } from "./bridge";
import { EventKind } from "./types";

export type Interaction =
  | { kind: "building_click"; entityId: string }
  | { kind: "ping"; entityId: string }
  | { kind: "comm_line_click"; entityId: string }
  | { kind: "open_package"; entityId: string }
  | { kind: "close_package"; entityId: string }
  | { kind: "open_popup"; entityId: string; position: { x: number; y: number } }
  | { kind: "close_popup"; entityId: string }
  | { kind: "text_selection"; file: string | null; range: any };

export type Outbound =
  | { type: "event"; kind: EventKind; payload: any }
  | { type: "bridge"; message: BridgeMessage }
  | { type: "reveal"; entityId: string };

/**
 * Translate one gesture. Communication-line clicks go to the host editor
 * when embedded; standalone mode jumps the in-app code pane instead.
 */
export function emitInteraction(interaction: Interaction, embedded: boolean): Outbound {
  switch (interaction.kind) {
    case "building_click":
      return {
        type: "event",
        kind: "EntitySelected",
        payload: { entity_id: interaction.entityId },
      };
    case "ping":
      return { type: "event", kind: "Ping", payload: { entity_id: interaction.entityId } };
    case "comm_line_click":
      if (embedded) {
        return {
          type: "bridge",
          message: bridgeMessage("toHost", "revealInEditor", {
            entity_id: interaction.entityId,
          }),
        };
      }
      return { type: "reveal", entityId: interaction.entityId };
    case "open_package":
      return {
        type: "event",
        kind: "PackageOpened",
        payload: { entity_id: interaction.entityId },
      };
    case "close_package":
      return {
        type: "event",
        kind: "PackageClosed",
        payload: { entity_id: interaction.entityId },
      };
    case "open_popup":
      return {
        type: "event",
        kind: "PopupOpened",
        payload: { entity_id: interaction.entityId, position: interaction.position },
      };
    case "close_popup":
      return {
        type: "event",
        kind: "PopupClosed",
        payload: { entity_id: interaction.entityId },
      };
    case "text_selection":
      return {
        type: "event",
        kind: "TextSelection",
        payload: { file: interaction.file, range: interaction.range },
      };
  }
}

/**
 * Maven-layout heuristic for standalone reveals: a class or method entity
 * id maps onto "<app>/src/main/java/<packages>/<Class>.java". Package and
 * application entities have no file.
 */
export function fileForEntity(entityId: string): { file: string; className: string } | null {
  const parts = entityId.split("/");
  if (parts.length < 3) return null;
  const [app, packages, className] = parts;
  const packagePath = packages === "" ? "" : packages.replace(/\./g, "/") + "/";
  return {
    file: `${app}/src/main/java/${packagePath}${className}.java`,
    className,
  };
}
