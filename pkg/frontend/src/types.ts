// Shared wire/document types, mirroring the backend's JSON shapes exactly.

export type Rect = { x: number; z: number; width: number; depth: number };

export type District = { rect: Rect; level: number };
export type Building = { rect: Rect; height: number };
export type Arc = {
  source: string;
  target: string;
  apex_height: number;
  weight: number;
};

export type CityLayout = {
  districts: Record<string, District>;
  buildings: Record<string, Building>;
  arcs: Arc[];
};

export type EventKind =
  | "PackageOpened"
  | "PackageClosed"
  | "EntitySelected"
  | "PopupOpened"
  | "PopupClosed"
  | "Ping"
  | "TextSelection"
  | "UserJoined"
  | "UserLeft";

export type SessionEvent = {
  seq: number;
  session: string;
  origin_user: string;
  server_ts_ns: number;
  kind: EventKind;
  payload: any;
};

export type SessionStateDoc = {
  roster: string[];
  open_packages: string[];
  selections: Record<string, string | null>;
  popups: { entity_id: string; position: any; opened_by: string }[];
  text_selections: Record<string, { file: string; range: any } | null>;
  last_seq: number;
};

export type HighlightMarker = {
  file: string;
  line: number;
  kind: "class" | "method";
  entity_id: string;
  call_count: number;
  label: string;
};

export type SnapshotDoc = {
  snapshot_id: string;
  window: { system_id: string; index: number; interval_ns: number };
  landscape: any;
  class_metrics: Record<string, { method_call_count: number; instance_count: number }>;
  method_metrics: Record<string, { call_count: number; total_duration_ns: number }>;
  edges: { source: string; target: string; call_count: number }[];
};

export type SystemInfo = {
  system_id: string;
  display_name: string;
  first_seen_ns: number;
  last_seen_ns: number;
  span_count: number;
};
