// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError } from "../src/api.js";
import { createApp } from "../src/app.js";
import { APP_TEMPLATE } from "../src/template.js";

import type { Client, RecordView, SearchResponse } from "../src/api.js";

function mount() {
  document.body.innerHTML = `<div id="app">${APP_TEMPLATE}</div>`;
}

const CORPORA = [
  {
    name: "biosample_lung",
    source: "biosample",
    cohort: "lung",
    conditions: ["baseline", "dd", "cedar"],
    record_count: 20,
  },
];

function searchResponse(ids: string[]): SearchResponse {
  return {
    corpus: "biosample_lung",
    condition: "cedar",
    query: { field: "tissue", value: "lung" },
    total: ids.length,
    ids,
    hits: ids.map((id) => ({ id, tissue: "lung", gold_label: "lung" })),
  };
}

const RECORD_VIEW: RecordView = {
  id: "S1",
  corpus: "biosample_lung",
  conditions: ["baseline", "cedar"],
  versions: {
    baseline: { fields: [{ name: "tissue", value: "lung cancer" }] },
    cedar: { fields: [{ name: "tissue", value: "lung" }, { name: "disease", value: "lung cancer" }] },
  },
  field_diffs: [
    {
      field_name: "tissue",
      values: { baseline: "lung cancer", cedar: "lung" },
      changed: true,
      validation: {
        baseline: { conforms: false, violation: "NotInOntologyBranch" },
        cedar: { conforms: true, violation: null },
      },
    },
    {
      field_name: "sex",
      values: { baseline: "female", cedar: "female" },
      changed: false,
      validation: {
        baseline: { conforms: true, violation: null },
        cedar: { conforms: true, violation: null },
      },
    },
    {
      field_name: "disease",
      values: { baseline: null, cedar: "lung cancer" },
      changed: true,
      validation: { baseline: null, cedar: { conforms: true, violation: null } },
    },
  ],
};

function stubClient(overrides: Partial<Record<keyof Client, unknown>> = {}) {
  return {
    corpora: vi.fn().mockResolvedValue(CORPORA),
    search: vi.fn().mockResolvedValue(searchResponse(["S1", "S2"])),
    record: vi.fn().mockResolvedValue(RECORD_VIEW),
    ...overrides,
  } as unknown as Client;
}

async function appWithSearch(client: Client) {
  mount();
  const app = createApp(document, client);
  await app.loadCorpora();
  (document.getElementById("condition-select") as HTMLSelectElement).value = "cedar";
  (document.getElementById("query-input") as HTMLInputElement).value = "tissue:lung";
  await app.runSearch();
  return app;
}

describe("search view", () => {
  beforeEach(() => vi.restoreAllMocks());

  it("renders hits with tissue values and gold-label chips", async () => {
    const client = stubClient();
    await appWithSearch(client);
    const items = Array.from(document.querySelectorAll("#results li"));
    expect(items.map((li) => li.querySelector(".hit-id")?.textContent)).toEqual(["S1", "S2"]);
    expect(items[0].querySelector(".chip")?.textContent).toBe("lung");
    expect(document.getElementById("result-count")?.textContent).toBe("(2)");
    expect(client.search).toHaveBeenCalledWith("biosample_lung", "cedar", "tissue:lung");
  });

  it("shows a syntax hint on 400 without re-requesting", async () => {
    const client = stubClient({
      search: vi.fn().mockRejectedValue(new ApiError(400, "no colon")),
    });
    await appWithSearch(client);
    const banner = document.getElementById("banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.className).toContain("banner-hint");
    expect(banner.textContent).toContain("field:value");
    expect(banner.querySelector(".banner-retry")).toBeNull();
    expect(client.search).toHaveBeenCalledTimes(1);
  });

  it("shows a retry banner when the service is down, and retries", async () => {
    const search = vi
      .fn()
      .mockRejectedValueOnce(new TypeError("fetch failed"))
      .mockResolvedValueOnce(searchResponse(["S9"]));
    const client = stubClient({ search });
    await appWithSearch(client);
    const banner = document.getElementById("banner")!;
    expect(banner.className).toContain("banner-error");
    const retry = banner.querySelector(".banner-retry") as HTMLButtonElement;
    expect(retry).not.toBeNull();
    retry.click();
    await vi.waitFor(() => {
      expect(document.querySelectorAll("#results li").length).toBe(1);
    });
    expect(search).toHaveBeenCalledTimes(2);
  });
});

describe("compare view", () => {
  it("renders aligned columns, highlights changes, badges violations", async () => {
    const client = stubClient();
    const app = await appWithSearch(client);
    await app.openRecord("S1");
    const rows = Array.from(document.querySelectorAll("#compare tr.field-row"));
    expect(rows.map((r) => (r as HTMLElement).dataset.field)).toEqual([
      "tissue", "sex", "disease",
    ]);
    const byField = new Map(rows.map((r) => [(r as HTMLElement).dataset.field, r]));
    expect(byField.get("tissue")?.classList.contains("changed")).toBe(true);
    expect(byField.get("sex")?.classList.contains("changed")).toBe(false);
    expect(byField.get("disease")?.classList.contains("added")).toBe(true);
    const badge = byField.get("tissue")?.querySelector(".badge");
    expect(badge?.textContent).toBe("NotInOntologyBranch");
    expect(client.record).toHaveBeenCalledWith("biosample_lung", "S1", ["baseline", "cedar"]);
  });

  it("shows a placeholder when the record is missing in a condition", async () => {
    const client = stubClient({
      record: vi.fn().mockRejectedValue(new ApiError(404, "not there")),
    });
    const app = await appWithSearch(client);
    await app.openRecord("S1");
    const placeholder = document.querySelector("#compare .missing-record");
    expect(placeholder?.textContent).toContain("record missing in condition cedar");
  });

  it("ignores clicks on ids that are not in the result list", async () => {
    const client = stubClient();
    const app = await appWithSearch(client);
    await app.openRecord("NOT_THERE");
    expect(client.record).not.toHaveBeenCalled();
    expect(app.session.selectedId).toBeNull();
  });
});
