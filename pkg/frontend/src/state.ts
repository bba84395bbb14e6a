import type { SearchHit } from "./api.js";

/**
 * Client-side review session. Responses are applied only when their
 * sequence number is newer than the last applied one, so a slow response
 * can never clobber a later search. The selected record always belongs to
 * the current result list, or is cleared.
 */
export interface ReviewSession {
  corpus: string | null;
  condition: string;
  query: string;
  hits: SearchHit[];
  total: number;
  selectedId: string | null;
  issuedSeq: number;
  appliedSeq: number;
}

export function newSession(): ReviewSession {
  return {
    corpus: null,
    condition: "baseline",
    query: "",
    hits: [],
    total: 0,
    selectedId: null,
    issuedSeq: 0,
    appliedSeq: 0,
  };
}

export function nextSeq(session: ReviewSession): number {
  session.issuedSeq += 1;
  return session.issuedSeq;
}

/** Apply search results; returns false (and changes nothing) for stale ones. */
export function applyResults(
  session: ReviewSession,
  seq: number,
  hits: SearchHit[],
  total: number,
): boolean {
  if (seq <= session.appliedSeq) return false;
  session.appliedSeq = seq;
  session.hits = hits;
  session.total = total;
  if (session.selectedId !== null && !hits.some((h) => h.id === session.selectedId)) {
    session.selectedId = null;
  }
  return true;
}

/** Select a record from the current result list; unknown ids clear it. */
export function selectRecord(session: ReviewSession, id: string): boolean {
  if (session.hits.some((h) => h.id === id)) {
    session.selectedId = id;
    return true;
  }
  session.selectedId = null;
  return false;
}
