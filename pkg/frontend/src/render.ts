/** HTML renderers: pure string builders so the views are testable
 * without a browser. Rendering order always preserves the ranked-list
 * order it was given. Result links point straight at the resource with
 * no session information attached. */

import { BrowseDirectory, ResultRow, ResultView } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const BADGE_LABELS: Record<string, string> = {
  open: "open",
  "with-terms": "terms apply",
  restricted: "restricted",
  unknown: "access unknown",
};

export function renderResultRow(row: ResultRow, saved: boolean): string {
  const badge = `<span class="badge badge-${row.badge}">${BADGE_LABELS[row.badge]}</span>`;
  const annotated = row.annotated
    ? `<span class="flag flag-annotated" title="has annotations">&#9998; annotated</span>`
    : "";
  const collections = row.collections
    .map((c) => `<span class="collection-tag" data-collection="${escapeHtml(c)}">${escapeHtml(c)}</span>`)
    .join(" ");
  const link =
    row.badge === "restricted"
      ? `<span class="result-title">${escapeHtml(row.title)}</span>`
      : `<a class="result-title" href="${escapeHtml(row.identifier)}" rel="external noreferrer">${escapeHtml(row.title)}</a>`;
  const statement = row.useStatement
    ? `<p class="use-statement">${escapeHtml(row.useStatement)}</p>`
    : "";
  const denied =
    row.badge === "restricted"
      ? `<p class="use-statement">Access to this item is not available to your user community.</p>`
      : "";
  return `
  <li class="result" data-handle="${escapeHtml(row.handle)}">
    ${link} ${badge} ${annotated}
    <p class="result-description">${escapeHtml(row.description)}</p>
    <p class="result-context">in ${collections || "no collection"}</p>
    ${statement}${denied}
    <button class="save-item" data-handle="${escapeHtml(row.handle)}">${saved ? "saved" : "save"}</button>
    <button class="annotate-item" data-handle="${escapeHtml(row.handle)}">annotate</button>
  </li>`;
}

export function renderResults(view: ResultView, saved: string[]): string {
  const savedSet = new Set(saved);
  const rows = view.rows
    .map((row) => renderResultRow(row, savedSet.has(row.handle)))
    .join("\n");
  const notice = view.notice
    ? `<p class="notice">${escapeHtml(view.notice)}</p>`
    : "";
  return `${notice}<p class="total">${view.total} result(s)</p><ol class="results">${rows}</ol>`;
}

export function renderBrowse(directory: BrowseDirectory): string {
  const stale = directory.stale
    ? `<p class="notice">Showing the last directory; the search service is unreachable.</p>`
    : "";
  if (directory.groups.size === 0) {
    return `${stale}<p class="empty">No collections are registered yet.</p>`;
  }
  const sections: string[] = [];
  const headings = [...directory.groups.keys()].sort((a, b) => a.localeCompare(b));
  for (const heading of headings) {
    const cards = directory.groups
      .get(heading)!
      .map(
        (card) => `
      <div class="collection-card" data-collection="${escapeHtml(card.handle)}">
        <h4>${escapeHtml(card.title)}</h4>
        <p>${escapeHtml(card.description)}</p>
        <button class="browse-search" data-collection="${escapeHtml(card.handle)}">search this collection</button>
      </div>`,
      )
      .join("\n");
    sections.push(`<section><h3>${escapeHtml(heading)}</h3>${cards}</section>`);
  }
  return stale + sections.join("\n");
}

export function renderSavedList(handles: string[]): string {
  if (!handles.length) {
    return `<p class="empty">Nothing saved yet. Save results to build a personal collection.</p>`;
  }
  const items = handles
    .map(
      (h) =>
        `<li>${escapeHtml(h)} <button class="unsave-item" data-handle="${escapeHtml(h)}">remove</button></li>`,
    )
    .join("");
  return `<ul class="saved">${items}</ul>`;
}
