// In-page message bridge for embedded mode. The vocabulary must match the
// backend's editor contract bit for bit.

export const BRIDGE_TYPES = [
  "revealInEditor",
  "highlightSelection",
  "focusEntity",
  "snapshotUpdated",
] as const;

export type BridgeType = (typeof BRIDGE_TYPES)[number];

export type BridgeMessage = {
  direction: "toHost" | "toEmbed";
  type: BridgeType;
  payload: any;
};

export function bridgeMessage(
  direction: "toHost" | "toEmbed",
  type: BridgeType,
  payload: any
): BridgeMessage {
  if (!BRIDGE_TYPES.includes(type)) {
    throw new Error(`unknown bridge message type: ${type}`);
  }
  return { direction, type, payload };
}

type PostTarget = { postMessage(message: any, targetOrigin: string): void };
type ListenTarget = {
  addEventListener(type: "message", cb: (ev: { data: any }) => void): void;
};

export class EmbedBridge {
  constructor(private host: PostTarget | null) {}

  get embedded(): boolean {
    return this.host !== null;
  }

  toHost(type: BridgeType, payload: any): BridgeMessage {
    const message = bridgeMessage("toHost", type, payload);
    this.host?.postMessage(message, "*");
    return message;
  }

  listen(target: ListenTarget, handler: (message: BridgeMessage) => void): void {
    target.addEventListener("message", (ev) => {
      const data = ev.data;
      if (
        data &&
        data.direction === "toEmbed" &&
        BRIDGE_TYPES.includes(data.type)
      ) {
        handler(data as BridgeMessage);
      }
    });
  }
}

/** The hosting window when running inside an iframe, else null. */
export function detectHost(win: Window): PostTarget | null {
  return win.parent && win.parent !== win ? win.parent : null;
}
