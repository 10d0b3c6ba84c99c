/** Building the three-part query expression the search service speaks:
 * filter controls become restriction clauses (membership), free text
 * becomes the ranked expression (order). */

import { SearchFilters } from "./types.js";

function quote(value: string): string {
  return value.includes(" ") || value === "" ? `"${value}"` : value;
}

/** Compose the wire expression. Returns null when there is nothing to
 * ask (no text and no filters), which callers surface as inline
 * validation instead of a request. */
export function buildExpression(
  text: string,
  filters: SearchFilters = {},
): string | null {
  const clauses: string[] = [];
  if (filters.collection) {
    clauses.push(`collection=${filters.collection}`);
  }
  if (filters.audience) {
    clauses.push(`audience=${quote(filters.audience)}`);
  }
  if (filters.dateAfter) {
    clauses.push(`date>=${filters.dateAfter}`);
  }
  if (filters.annotatedOnly) {
    clauses.push(`annotations=true`);
  }
  const ranked = text.trim();
  if (!ranked && clauses.length === 0) {
    return null;
  }
  return `${clauses.join(" ")} :: ${ranked}`.trim();
}

/** The browse directory is just a restriction-only query for collection
 * records; the portal never talks to the repository for it. */
export const BROWSE_EXPRESSION = "kind=collection ::";
