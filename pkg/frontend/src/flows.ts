/** The portal's user-facing flows, kept free of DOM concerns so they are
 * directly exercisable against a running stack. */

import { ApiClient } from "./api.js";
import { buildExpression, BROWSE_EXPRESSION } from "./query.js";
import { PortalSession } from "./session.js";
import {
  AccessBadge,
  BrowseDirectory,
  CollectionCard,
  Decision,
  QdcElementMap,
  ResultRow,
  ResultView,
  SearchEntry,
  SearchFilters,
} from "./types.js";

export function badgeFor(decision: Decision): AccessBadge {
  if (decision.outcome === "grant") return "open";
  if (decision.outcome === "grant-with-terms") return "with-terms";
  return "restricted";
}

/** Search with filters: filters become restriction clauses, the text
 * becomes the ranked expression, and each visible entry gets an access
 * badge from the rights broker. Row order preserves the ranked list. */
export async function searchFlow(
  api: ApiClient,
  session: PortalSession,
  text: string,
  filters: SearchFilters = {},
  limit = 25,
  offset = 0,
): Promise<ResultView | null> {
  const expression = buildExpression(text, filters);
  if (expression === null) {
    return null; // inline validation: nothing to ask
  }
  const response = await api.search(expression, limit, offset);
  await session.recordSearch(expression);
  const rows: ResultRow[] = [];
  for (const entry of response.entries) {
    rows.push(await describeEntry(api, session, entry));
  }
  return { total: response.total, notice: response.notice, rows };
}

async function describeEntry(
  api: ApiClient,
  session: PortalSession,
  entry: SearchEntry,
): Promise<ResultRow> {
  let badge: AccessBadge = "unknown";
  let useStatement = "";
  try {
    const decision = await api.rightsCheck(session.token, entry.handle);
    badge = badgeFor(decision);
    useStatement = decision.use_statement ?? "";
  } catch {
    badge = "unknown"; // broker unreachable: badge degrades, list survives
  }
  return {
    handle: entry.handle,
    title: entry.summary.title || entry.handle,
    description: entry.summary.description,
    score: entry.score,
    collections: entry.summary.collections,
    annotated: entry.summary.has_annotations,
    kind: entry.summary.kind,
    identifier: entry.item_pointer.identifier,
    badge,
    useStatement,
  };
}

/** Browse: the collection directory, grouped by subject, fetched through
 * the search service (the portal never reads the repository directly).
 * On failure the last good directory is reused with a staleness notice. */
export async function browseFlow(
  api: ApiClient,
  cache: { last: BrowseDirectory | null } = { last: null },
): Promise<BrowseDirectory> {
  try {
    const response = await api.search(BROWSE_EXPRESSION, 200, 0);
    const groups = new Map<string, CollectionCard[]>();
    for (const entry of response.entries) {
      const card: CollectionCard = {
        handle: entry.handle,
        title: entry.summary.title,
        description: entry.summary.description,
        subjects: entry.summary.subjects,
      };
      // a collection appears under each of its subjects: flat entry
      // points rather than forced drill-down
      const headings = card.subjects.length ? card.subjects : ["General"];
      for (const heading of headings) {
        if (!groups.has(heading)) groups.set(heading, []);
        groups.get(heading)!.push(card);
      }
    }
    const directory = { groups, stale: false };
    cache.last = directory;
    return directory;
  } catch (err) {
    if (cache.last) {
      return { ...cache.last, stale: true };
    }
    throw err;
  }
}

/** Selecting a collection card pre-fills the search filter. */
export function browseSelect(card: CollectionCard): SearchFilters {
  return { collection: card.handle };
}

/** Generate the personal-collection record for the user to review
 * before publishing. Saved items ride along as part references. */
export function personalCollectionRecord(
  session: PortalSession,
  saved: string[],
  title?: string,
): QdcElementMap {
  const owner = session.displayName || "library user";
  const qdc: QdcElementMap = {
    title: [["", title ?? `Saved items of ${owner}`]],
    description: [
      ["", `Personal collection of ${saved.length} saved item(s), published from the portal.`],
    ],
  };
  if (saved.length) {
    qdc.relation = saved.map((handle) => ["hasPart", handle]);
  }
  return qdc;
}

/** Publish the approved record; requires a logged-in session. Returns
 * the new collection handle (it becomes harvestable immediately). */
export async function publishFlow(
  api: ApiClient,
  session: PortalSession,
  approved: QdcElementMap | null,
): Promise<string | null> {
  if (!session.loggedIn) {
    throw new Error("publishing requires login");
  }
  if (approved === null) {
    return null; // user rejected the preview: nothing submitted
  }
  const result = await api.publishPortal(approved, session.displayName);
  return result.handle;
}

/** Submit an annotation; the result pages show the indicator after the
 * next index sync, so the caller renders a pending marker meanwhile. */
export async function annotateFlow(
  api: ApiClient,
  session: PortalSession,
  target: string,
  text: string,
): Promise<{ handle: string; pending: true } | { error: string }> {
  if (!text.trim()) {
    return { error: "annotation text is empty" }; // blocked client-side
  }
  if (!session.loggedIn) {
    return { error: "annotating requires login" };
  }
  const result = await api.annotate(
    target,
    text,
    session.categories,
    session.displayName,
  );
  return { handle: result.handle, pending: true };
}
