// Snapshot polling: once per commit interval, skip re-render when the id
// has not changed.
import { ApiClient } from "./api";
import { CityLayout, SnapshotDoc } from "./types";

export class SnapshotPoller {
  private lastId: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private systemId: string,
    private onNewSnapshot: (snapshot: SnapshotDoc, layout: CityLayout) => void
  ) {}

  get lastSnapshotId(): string | null {
    return this.lastId;
  }

  /** One poll; resolves true when a new snapshot triggered a re-render. */
  async tick(): Promise<boolean> {
    const snapshot = await this.api.latestSnapshot(this.systemId);
    if (!snapshot || snapshot.snapshot_id === this.lastId) {
      return false;
    }
    const layout = await this.api.layout(snapshot.snapshot_id);
    this.lastId = snapshot.snapshot_id;
    this.onNewSnapshot(snapshot, layout);
    return true;
  }

  start(intervalMs: number): void {
    this.stop();
    void this.tick();
    this.timer = setInterval(() => void this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
