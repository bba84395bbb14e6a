import { ApiError, Client } from "./api.js";
import {
  clearBanner,
  renderCompare,
  renderHits,
  renderMissingRecord,
  showBanner,
} from "./render.js";
import { applyResults, newSession, nextSeq, selectRecord } from "./state.js";

const QUERY_HINT = "Queries are exact matches written as field:value, e.g. tissue:lung";

/**
 * Wire the review app onto an already-templated document. Returns the
 * session plus the async actions, so tests can drive them directly and
 * await completion.
 */
export function createApp(doc: Document, client: Client) {
  const session = newSession();
  const corpusSelect = doc.getElementById("corpus-select") as HTMLSelectElement;
  const conditionSelect = doc.getElementById("condition-select") as HTMLSelectElement;
  const queryInput = doc.getElementById("query-input") as HTMLInputElement;
  const form = doc.getElementById("search-form") as HTMLFormElement;
  const banner = doc.getElementById("banner") as HTMLElement;
  const results = doc.getElementById("results") as HTMLElement;
  const resultCount = doc.getElementById("result-count") as HTMLElement;
  const compare = doc.getElementById("compare") as HTMLElement;

  async function loadCorpora(): Promise<void> {
    const corpora = await client.corpora();
    corpusSelect.textContent = "";
    for (const corpus of corpora) {
      const option = doc.createElement("option");
      option.value = corpus.name;
      option.textContent = `${corpus.name} (${corpus.record_count})`;
      corpusSelect.appendChild(option);
    }
    const first = corpora[0];
    conditionSelect.textContent = "";
    for (const condition of first ? first.conditions : []) {
      const option = doc.createElement("option");
      option.value = condition;
      option.textContent = condition;
      conditionSelect.appendChild(option);
    }
  }

  async function runSearch(): Promise<void> {
    session.corpus = corpusSelect.value || null;
    session.condition = conditionSelect.value || "baseline";
    session.query = queryInput.value.trim();
    if (!session.corpus || !session.query) return;
    const seq = nextSeq(session);
    clearBanner(banner);
    try {
      const response = await client.search(session.corpus, session.condition, session.query);
      if (!applyResults(session, seq, response.hits, response.total)) return; // stale
      renderHits(results, resultCount, session.hits, session.total);
      if (session.selectedId === null) {
        compare.textContent = "";
      }
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        showBanner(banner, "hint", QUERY_HINT);
      } else if (error instanceof ApiError) {
        showBanner(banner, "error", `search failed: ${error.message}`, "Retry");
      } else {
        showBanner(banner, "error", "service unreachable", "Retry");
      }
    }
  }

  async function openRecord(id: string): Promise<void> {
    if (!selectRecord(session, id) || session.corpus === null) return;
    const left = "baseline";
    const right = session.condition;
    const conditions = left === right ? [left] : [left, right];
    try {
      const view = await client.record(session.corpus, id, conditions);
      renderCompare(compare, view, left, right);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        renderMissingRecord(compare, right);
      } else {
        showBanner(banner, "error", "could not load record", "Retry");
      }
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void runSearch();
  });
  results.addEventListener("click", (event) => {
    const hit = (event.target as HTMLElement).closest("li.hit") as HTMLElement | null;
    if (hit && hit.dataset.id) void openRecord(hit.dataset.id);
  });
  banner.addEventListener("click", (event) => {
    if ((event.target as HTMLElement).classList.contains("banner-retry")) {
      void runSearch();
    }
  });

  return { session, loadCorpora, runSearch, openRecord };
}

export type App = ReturnType<typeof createApp>;
