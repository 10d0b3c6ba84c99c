import { describe, expect, it } from "vitest";

import { badgeFor, personalCollectionRecord, browseSelect } from "../../src/flows.js";
import { renderBrowse, renderResultRow, renderResults, renderSavedList } from "../../src/render.js";
import { MemoryStorage, PortalSession } from "../../src/session.js";
import { BrowseDirectory, ResultRow, ResultView } from "../../src/types.js";

function row(overrides: Partial<ResultRow> = {}): ResultRow {
  return {
    handle: "na-0002/I1",
    title: "Comet basics",
    description: "Telescope tips.",
    score: 1.25,
    collections: ["na-0002/C1"],
    annotated: false,
    kind: "item",
    identifier: "http://resources.example/comets",
    badge: "open",
    useStatement: "",
    ...overrides,
  };
}

describe("badgeFor", () => {
  it("maps decisions onto badges", () => {
    expect(badgeFor({ outcome: "grant" })).toBe("open");
    expect(badgeFor({ outcome: "grant-with-terms", use_statement: "x" })).toBe(
      "with-terms",
    );
    expect(badgeFor({ outcome: "deny" })).toBe("restricted");
  });
});

describe("renderResults", () => {
  it("preserves ranked-list order exactly", () => {
    const view: ResultView = {
      total: 3,
      notice: "",
      rows: [
        row({ handle: "na-0002/I3", title: "Third" }),
        row({ handle: "na-0002/I1", title: "First" }),
        row({ handle: "na-0002/I2", title: "Second" }),
      ],
    };
    const html = renderResults(view, []);
    const order = [...html.matchAll(/data-handle="(na-[^"]+)"/g)].map((m) => m[1]);
    expect([...new Set(order)]).toEqual(["na-0002/I3", "na-0002/I1", "na-0002/I2"]);
  });

  it("shows annotation indicator only when flagged", () => {
    expect(renderResultRow(row({ annotated: true }), false)).toContain("flag-annotated");
    expect(renderResultRow(row({ annotated: false }), false)).not.toContain(
      "flag-annotated",
    );
  });

  it("restricted rows get no resource link and a deny notice", () => {
    const html = renderResultRow(row({ badge: "restricted" }), false);
    expect(html).not.toContain("href=");
    expect(html).toContain("not available to your user community");
  });

  it("open rows link straight at the resource with no session data", () => {
    const html = renderResultRow(row(), false);
    expect(html).toContain('href="http://resources.example/comets"');
    expect(html).not.toMatch(/token/i);
  });

  it("use statements are rendered for grant-with-terms", () => {
    const html = renderResultRow(
      row({ badge: "with-terms", useStatement: "For a fee." }),
      false,
    );
    expect(html).toContain("For a fee.");
  });

  it("escapes markup in metadata", () => {
    const html = renderResultRow(row({ title: "<script>alert(1)</script>" }), false);
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("renderBrowse", () => {
  it("renders cards per subject group and an empty state", () => {
    const groups = new Map();
    groups.set("astronomy", [
      {
        handle: "na-0002/C1",
        title: "Comet resources",
        description: "Open astronomy materials.",
        subjects: ["astronomy"],
      },
    ]);
    const directory: BrowseDirectory = { groups, stale: false };
    const html = renderBrowse(directory);
    expect(html).toContain("astronomy");
    expect(html).toContain("Comet resources");
    expect(html).toContain('data-collection="na-0002/C1"');

    expect(renderBrowse({ groups: new Map(), stale: false })).toContain(
      "No collections",
    );
  });

  it("marks a cached directory as stale", () => {
    const html = renderBrowse({ groups: new Map(), stale: true });
    expect(html).toContain("unreachable");
  });
});

describe("browseSelect", () => {
  it("prefills the collection filter", () => {
    expect(
      browseSelect({ handle: "na-0002/C1", title: "", description: "", subjects: [] }),
    ).toEqual({ collection: "na-0002/C1" });
  });
});

describe("renderSavedList", () => {
  it("lists handles and shows an empty state", () => {
    expect(renderSavedList([])).toContain("Nothing saved");
    const html = renderSavedList(["na-0002/I1", "na-0002/I2"]);
    expect(html).toContain("na-0002/I1");
    expect(html).toContain("na-0002/I2");
  });
});

describe("personalCollectionRecord", () => {
  it("builds a reviewable record carrying the saved handles", () => {
    const session = new PortalSession(
      // the record builder only reads displayName
      { } as never,
      new MemoryStorage(),
    );
    session.displayName = "pat.teacher";
    const record = personalCollectionRecord(session, ["na-0002/I1", "na-0002/I2"]);
    expect(record.title[0][1]).toContain("pat.teacher");
    expect(record.description[0][1]).toContain("2 saved item(s)");
    expect(record.relation).toEqual([
      ["hasPart", "na-0002/I1"],
      ["hasPart", "na-0002/I2"],
    ]);
  });
});
