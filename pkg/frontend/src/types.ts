/** Shared shapes for the portal: what the services return and what the
 * views render. */

export interface EndpointMap {
  /** search service base URL (/search, /sync) */
  search: string;
  /** access management base URL (/auth, /profile, /rights, /report) */
  access: string;
  /** repository base URL, used only for the public /annotation intake */
  annotation: string;
  /** ingest pipeline base URL (/ingest), used only for publish/direct entry */
  ingest: string;
}

export interface SearchEntry {
  handle: string;
  score: number;
  summary: {
    title: string;
    description: string;
    collections: string[];
    has_annotations: boolean;
    kind: string;
    subjects: string[];
  };
  item_pointer: { identifier: string; handle: string };
}

export interface SearchResponse {
  total: number;
  entries: SearchEntry[];
  notice: string;
}

export interface SessionInfo {
  token: string;
  expires: number;
  categories: string[];
  kind: string;
}

export interface Decision {
  outcome: "grant" | "grant-with-terms" | "deny";
  use_statement?: string;
  matched?: { audience: string; use_type: string };
}

export type AccessBadge = "open" | "with-terms" | "restricted" | "unknown";

/** One rendered result row: RankedList order is preserved upstream. */
export interface ResultRow {
  handle: string;
  title: string;
  description: string;
  score: number;
  collections: string[];
  annotated: boolean;
  kind: string;
  identifier: string;
  badge: AccessBadge;
  useStatement: string;
}

export interface ResultView {
  total: number;
  notice: string;
  rows: ResultRow[];
}

export interface SearchFilters {
  collection?: string;
  audience?: string;
  dateAfter?: string;
  annotatedOnly?: boolean;
}

export interface CollectionCard {
  handle: string;
  title: string;
  description: string;
  subjects: string[];
}

export interface BrowseDirectory {
  /** subject heading -> cards; "General" collects unsubjected ones */
  groups: Map<string, CollectionCard[]>;
  stale: boolean;
}

export interface QdcElementMap {
  [element: string]: Array<[string, string]>;
}
