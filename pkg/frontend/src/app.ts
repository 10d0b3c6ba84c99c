/** DOM shell: wires the flows to the page. All state changes go through
 * the flow layer; this file only reads inputs and swaps innerHTML. */

import { ApiClient, ServiceError } from "./api.js";
import {
  annotateFlow,
  browseFlow,
  browseSelect,
  personalCollectionRecord,
  publishFlow,
  searchFlow,
} from "./flows.js";
import { renderBrowse, renderResults, renderSavedList, escapeHtml } from "./render.js";
import { PortalSession } from "./session.js";
import { BrowseDirectory, EndpointMap, SearchFilters } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function banner(message: string, kind = "error"): void {
  const box = el<HTMLDivElement>("banner");
  box.innerHTML = message
    ? `<div class="banner banner-${kind}">${escapeHtml(message)}</div>`
    : "";
}

async function main(): Promise<void> {
  const endpoints = (await (await fetch("./endpoints.json")).json()) as EndpointMap;
  const api = new ApiClient(endpoints);
  const session = new PortalSession(api, window.localStorage);
  await session.start();

  const browseCache: { last: BrowseDirectory | null } = { last: null };
  const filters: SearchFilters = {};

  const searchInput = el<HTMLInputElement>("search-text");
  const collectionFilter = el<HTMLInputElement>("filter-collection");
  const annotatedFilter = el<HTMLInputElement>("filter-annotated");
  const results = el<HTMLDivElement>("results");

  async function runSearch(): Promise<void> {
    banner("");
    filters.collection = collectionFilter.value.trim() || undefined;
    filters.annotatedOnly = annotatedFilter.checked || undefined;
    let view;
    try {
      view = await searchFlow(api, session, searchInput.value, filters);
    } catch (err) {
      banner(err instanceof ServiceError ? err.message : String(err));
      return; // never a blank page: previous results stay up
    }
    if (view === null) {
      banner("Enter search terms or set a filter first.", "info");
      return;
    }
    results.innerHTML = renderResults(view, await session.savedItems());
  }

  el<HTMLButtonElement>("search-go").onclick = () => void runSearch();
  searchInput.onkeydown = (event) => {
    if (event.key === "Enter") void runSearch();
  };

  // result-list actions: save and annotate
  results.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const handle = target.dataset.handle;
    if (!handle) return;
    if (target.classList.contains("save-item")) {
      void session.saveItem(handle).then(() => {
        target.textContent = "saved";
      });
    }
    if (target.classList.contains("annotate-item")) {
      const text = window.prompt("Your annotation (text only):") ?? "";
      void annotateFlow(api, session, handle, text).then((outcome) => {
        if ("error" in outcome) {
          banner(outcome.error);
        } else {
          banner("Annotation submitted; it becomes searchable after the next index sync.", "info");
        }
      });
    }
  });

  // browse
  const browseBox = el<HTMLDivElement>("browse");
  el<HTMLButtonElement>("browse-go").onclick = async () => {
    const directory = await browseFlow(api, browseCache);
    browseBox.innerHTML = renderBrowse(directory);
  };
  browseBox.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const collection = target.dataset.collection;
    if (target.classList.contains("browse-search") && collection) {
      const prefill = browseSelect({ handle: collection, title: "", description: "", subjects: [] });
      collectionFilter.value = prefill.collection ?? "";
      void runSearch();
    }
  });

  // login
  el<HTMLButtonElement>("login-go").onclick = async () => {
    try {
      await session.login(
        el<HTMLInputElement>("login-user").value,
        el<HTMLInputElement>("login-pass").value,
      );
      banner(`Signed in; your cohort: ${session.categories.join(", ")}`, "info");
    } catch (err) {
      banner(err instanceof ServiceError ? err.message : String(err));
    }
  };

  // saved items + publish
  const savedBox = el<HTMLDivElement>("saved");
  el<HTMLButtonElement>("saved-go").onclick = async () => {
    savedBox.innerHTML = renderSavedList(await session.savedItems());
  };
  savedBox.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("unsave-item") && target.dataset.handle) {
      void session.removeItem(target.dataset.handle).then(async () => {
        savedBox.innerHTML = renderSavedList(await session.savedItems());
      });
    }
  });
  el<HTMLButtonElement>("publish-go").onclick = async () => {
    if (!session.loggedIn) {
      banner("Publishing requires login.", "info");
      return;
    }
    const saved = await session.savedItems();
    const record = personalCollectionRecord(session, saved);
    const preview = JSON.stringify(record, null, 2);
    const approved = window.confirm(
      `Publish this collection record?\n\n${preview}`,
    );
    try {
      const handle = await publishFlow(api, session, approved ? record : null);
      banner(
        handle
          ? `Published as collection ${handle}; it is now harvestable.`
          : "Publish cancelled; nothing was submitted.",
        "info",
      );
    } catch (err) {
      banner(err instanceof ServiceError ? err.message : String(err));
    }
  };
}

void main();
