// Thin HTTP client over the backend's /v1 surface.
import { CityLayout, HighlightMarker, SessionStateDoc, SnapshotDoc, SystemInfo } from "./types";

export type FetchLike = (url: string, init?: any) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<any>;
  text(): Promise<string>;
}>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = fetch
  ) {}

  private async getJson(path: string): Promise<any> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw new Error(`GET ${path} -> ${response.status}`);
    }
    return response.json();
  }

  listSystems(): Promise<SystemInfo[]> {
    return this.getJson("/v1/systems");
  }

  /** null when no closed window has data yet. */
  async latestSnapshot(systemId: string): Promise<SnapshotDoc | null> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/systems/${encodeURIComponent(systemId)}/snapshots/latest`
    );
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`latest snapshot -> ${response.status}`);
    return response.json();
  }

  layout(snapshotId: string): Promise<CityLayout> {
    return this.getJson(`/v1/snapshots/${snapshotId}/layout`);
  }

  highlights(snapshotId: string, file: string): Promise<HighlightMarker[]> {
    return this.getJson(
      `/v1/snapshots/${snapshotId}/highlights?file=${encodeURIComponent(file)}`
    );
  }

  async createSession(host: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ host }),
    });
    if (!response.ok) throw new Error(`create session -> ${response.status}`);
    return (await response.json()).token;
  }

  sessionState(token: string): Promise<SessionStateDoc> {
    return this.getJson(`/v1/sessions/${token}/state`);
  }

  /** Plain text of a workspace file (served from the static root). */
  async fileText(workspaceBase: string, path: string): Promise<string | null> {
    const response = await this.fetchImpl(
      this.baseUrl + workspaceBase + path
    );
    if (!response.ok) return null;
    return response.text();
  }
}
