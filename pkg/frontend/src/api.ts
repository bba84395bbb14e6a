/**
 * Typed client for the review service. All endpoints are idempotent GETs;
 * the service is read-only.
 */

export interface CorpusInfo {
  name: string;
  source: string;
  cohort: string;
  conditions: string[];
  record_count: number;
}

export interface SearchHit {
  id: string;
  tissue: string | null;
  gold_label: string | null;
}

export interface SearchResponse {
  corpus: string;
  condition: string;
  query: { field: string; value: string };
  total: number;
  ids: string[];
  hits: SearchHit[];
}

export interface FieldValidation {
  conforms: boolean;
  violation: string | null;
}

export interface FieldDiff {
  field_name: string;
  values: Record<string, string | null>;
  changed: boolean;
  validation: Record<string, FieldValidation | null>;
}

export interface RecordView {
  id: string;
  corpus: string;
  conditions: string[];
  versions: Record<string, { fields: { name: string; value: string }[] }>;
  field_diffs: FieldDiff[];
}

/** Non-2xx response; carries the HTTP status so views can branch on it. */
export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class Client {
  constructor(private base: string = "") {}

  corpora(): Promise<CorpusInfo[]> {
    return getJson(`${this.base}/corpora`);
  }

  search(corpus: string, condition: string, q: string, limit = 200): Promise<SearchResponse> {
    const params = new URLSearchParams({ corpus, condition, q, limit: String(limit) });
    return getJson(`${this.base}/search?${params}`);
  }

  record(corpus: string, id: string, conditions: string[]): Promise<RecordView> {
    const params = new URLSearchParams({ conditions: conditions.join(",") });
    return getJson(
      `${this.base}/records/${encodeURIComponent(corpus)}/${encodeURIComponent(id)}?${params}`,
    );
  }
}
