// WebSocket session channel: pushes server-assigned events onto one ordered
// queue, submits client frames, reconnects with resume on demand.
import { EventKind, SessionEvent } from "./types";

export type SocketLike = {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: { data: any }) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
};

export type SocketFactory = (url: string) => SocketLike;

export type ChannelOptions = {
  wsBaseUrl: string; // e.g. ws://127.0.0.1:8000
  token: string;
  user: string;
  socketFactory: SocketFactory;
  onEvent: (event: SessionEvent) => void;
  onStatus?: (status: "connecting" | "live" | "disconnected") => void;
};

export class SessionChannel {
  private socket: SocketLike | null = null;
  private closedByUs = false;
  private open = false;
  // frames submitted before the socket opens are flushed on open
  private outbox: string[] = [];
  // arrival-ordered queue: network callbacks enqueue, the reducer drains
  private queue: SessionEvent[] = [];
  private draining = false;

  constructor(private opts: ChannelOptions) {}

  connect(resumeFrom: number): void {
    this.closedByUs = false;
    this.open = false;
    this.opts.onStatus?.("connecting");
    const url =
      `${this.opts.wsBaseUrl}/v1/sessions/${this.opts.token}` +
      `?user=${encodeURIComponent(this.opts.user)}&resume=${resumeFrom}`;
    const socket = this.opts.socketFactory(url);
    socket.onopen = () => {
      this.open = true;
      for (const frame of this.outbox.splice(0)) {
        socket.send(frame);
      }
      this.opts.onStatus?.("live");
    };
    socket.onmessage = (ev) => {
      this.queue.push(JSON.parse(String(ev.data)) as SessionEvent);
      this.drain();
    };
    socket.onclose = () => {
      this.open = false;
      if (!this.closedByUs) this.opts.onStatus?.("disconnected");
    };
    socket.onerror = () => {};
    this.socket = socket;
  }

  private drain(): void {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.queue.length) {
        this.opts.onEvent(this.queue.shift()!);
      }
    } finally {
      this.draining = false;
    }
  }

  submit(kind: EventKind, payload: any): void {
    if (!this.socket) throw new Error("channel is not connected");
    const frame = JSON.stringify({ kind, payload });
    if (this.open) {
      this.socket.send(frame);
    } else {
      this.outbox.push(frame);
    }
  }

  /** Tear down and re-attach, replaying everything after resumeFrom. */
  resync(resumeFrom: number): void {
    this.closedByUs = true;
    this.socket?.close();
    this.connect(resumeFrom);
  }

  close(): void {
    this.closedByUs = true;
    this.socket?.close();
    this.socket = null;
    this.opts.onStatus?.("disconnected");
  }
}
