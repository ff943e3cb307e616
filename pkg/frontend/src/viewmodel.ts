// The single source of truth for everything on screen. Remote events feed
// the reducer in arrival order. The hub never echoes a client's own events
// back (originator exclusion), so on an ordered connection the only holes
// in the received seq stream are the client's own submissions: forward
// gaps are accepted, own effects are applied locally at submit time, and a
// seq regression is the out-of-order signal that demands a resync via the
// resume protocol.
import { CityLayout, EventKind, HighlightMarker, SessionEvent, SessionStateDoc } from "./types";

export const PING_DECAY_MS = 3000;

export type SessionView = {
  roster: string[]; // sorted
  openPackages: string[]; // sorted
  selections: Record<string, string | null>;
  popups: Record<string, { position: any; openedBy: string }>;
  textSelections: Record<string, { file: string; range: any } | null>;
};

export type PingMarker = { entityId: string; user: string; expiresAtMs: number };

export type CodePane = {
  file: string | null;
  lines: string[];
  markers: HighlightMarker[];
  scrollLine: number | null;
};

export type ConnectionStatus = "disconnected" | "connecting" | "live" | "resyncing";

export type ViewModel = {
  layout: CityLayout | null;
  lastSnapshotId: string | null;
  session: SessionView;
  lastSeq: number;
  needsResync: boolean;
  pings: PingMarker[];
  selectedEntity: string | null;
  codePane: CodePane;
  connection: ConnectionStatus;
  user: string | null;
};

export function initialViewModel(): ViewModel {
  return {
    layout: null,
    lastSnapshotId: null,
    session: emptySession(),
    lastSeq: 0,
    needsResync: false,
    pings: [],
    selectedEntity: null,
    codePane: { file: null, lines: [], markers: [], scrollLine: null },
    connection: "disconnected",
    user: null,
  };
}

export function emptySession(): SessionView {
  return {
    roster: [],
    openPackages: [],
    selections: {},
    popups: {},
    textSelections: {},
  };
}

export function sessionFromDoc(doc: SessionStateDoc): SessionView {
  const popups: SessionView["popups"] = {};
  for (const p of doc.popups) {
    popups[p.entity_id] = { position: p.position, openedBy: p.opened_by };
  }
  return {
    roster: [...doc.roster].sort(),
    openPackages: [...doc.open_packages].sort(),
    selections: { ...doc.selections },
    popups,
    textSelections: { ...doc.text_selections },
  };
}

function added(list: string[], value: string): string[] {
  return list.includes(value) ? list : [...list, value].sort();
}

function removed(list: string[], value: string): string[] {
  return list.filter((v) => v !== value);
}

// One semantic transition, shared by remote events and the local echo of
// own submissions. Mirrors the hub's reducer.
export function applyKind(
  view: SessionView,
  kind: EventKind,
  payload: any,
  user: string
): SessionView {
  switch (kind) {
    case "Ping":
      return view; // ephemeral, visual marker handled separately
    case "PackageOpened":
      return { ...view, openPackages: added(view.openPackages, payload.entity_id) };
    case "PackageClosed":
      return { ...view, openPackages: removed(view.openPackages, payload.entity_id) };
    case "EntitySelected":
      return { ...view, selections: { ...view.selections, [user]: payload.entity_id } };
    case "PopupOpened":
      return {
        ...view,
        popups: {
          ...view.popups,
          [payload.entity_id]: { position: payload.position, openedBy: user },
        },
      };
    case "PopupClosed": {
      const popups = { ...view.popups };
      delete popups[payload.entity_id];
      return { ...view, popups };
    }
    case "TextSelection": {
      const value =
        payload.file == null ? null : { file: payload.file, range: payload.range };
      return { ...view, textSelections: { ...view.textSelections, [user]: value } };
    }
    case "UserJoined":
      return { ...view, roster: added(view.roster, payload.user) };
    case "UserLeft": {
      const selections = { ...view.selections };
      delete selections[payload.user];
      const textSelections = { ...view.textSelections };
      delete textSelections[payload.user];
      return {
        ...view,
        roster: removed(view.roster, payload.user),
        selections,
        textSelections,
      };
    }
    default:
      return view;
  }
}

export function applyRemoteEvent(vm: ViewModel, event: SessionEvent, nowMs: number): ViewModel {
  if (event.seq <= vm.lastSeq) {
    // out-of-order: a regression can only mean we lost track of the stream
    return { ...vm, needsResync: true, connection: "resyncing" };
  }
  const pings =
    event.kind === "Ping"
      ? [
          ...vm.pings,
          {
            entityId: event.payload.entity_id,
            user: event.origin_user,
            expiresAtMs: nowMs + PING_DECAY_MS,
          },
        ]
      : vm.pings;
  return {
    ...vm,
    session: applyKind(vm.session, event.kind, event.payload, event.origin_user),
    lastSeq: event.seq,
    pings,
  };
}

// Local echo: the hub excludes the originator from delivery, so the effect
// of an own submission has to land immediately on the own view.
export function applyLocalEcho(
  vm: ViewModel,
  kind: EventKind,
  payload: any,
  nowMs: number
): ViewModel {
  const user = vm.user ?? "";
  const pings =
    kind === "Ping"
      ? [...vm.pings, { entityId: payload.entity_id, user, expiresAtMs: nowMs + PING_DECAY_MS }]
      : vm.pings;
  return {
    ...vm,
    session: applyKind(vm.session, kind, payload, user),
    pings,
  };
}

export function prunePings(vm: ViewModel, nowMs: number): ViewModel {
  const pings = vm.pings.filter((p) => p.expiresAtMs > nowMs);
  return pings.length === vm.pings.length ? vm : { ...vm, pings };
}

// Remote-selection overlays are only rendered for users still in the roster.
export function visibleTextSelections(
  vm: ViewModel
): Record<string, { file: string; range: any }> {
  const out: Record<string, { file: string; range: any }> = {};
  for (const [user, sel] of Object.entries(vm.session.textSelections)) {
    if (sel != null && vm.session.roster.includes(user) && user !== vm.user) {
      out[user] = sel;
    }
  }
  return out;
}

export function visibleRemoteSelections(vm: ViewModel): Record<string, string> {
  const out: Record<string, string> = {};
  for (const [user, entity] of Object.entries(vm.session.selections)) {
    if (entity != null && vm.session.roster.includes(user) && user !== vm.user) {
      out[user] = entity;
    }
  }
  return out;
}
