"""Corpus construction: repository queries, record fetching, and sampling.

Live fetching talks to the NCBI E-utilities endpoints and is always behind
an explicit flag; tests run on canned payloads. Sampling is deterministic
given a seed, which is recorded in the corpus header.
"""

from __future__ import annotations

import logging
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import requests

from .errors import InsufficientRecords, MalformedRecord, NetworkError, QuotaError
from .records import Cohort, Condition, Corpus, RecordParser, Source

log = logging.getLogger(__name__)

#: Repository queries per (cohort, source).
REPOSITORY_QUERIES: dict[tuple[Cohort, Source], str] = {
    (Cohort.LUNG, Source.BIOSAMPLE): 'lung cancer[All Fields] AND "human 1 0"[filter]',
    (Cohort.LUNG, Source.GEO): "lung cancer[All Fields] AND human[Organism]",
    (Cohort.LIVER, Source.BIOSAMPLE): 'liver cancer[All Fields] AND "human 1 0"[filter]',
    (Cohort.LIVER, Source.GEO): "liver cancer[All Fields] AND human[Organism]",
    (Cohort.OVARIAN, Source.BIOSAMPLE): 'ovarian cancer[All Fields] AND "human 1 0"[filter]',
    (Cohort.OVARIAN, Source.GEO): "ovarian cancer[All Fields] AND human[Organism]",
}


@dataclass(frozen=True)
class CohortQuery:
    cohort: Cohort
    source: Source
    query_string: str

    def __post_init__(self):
        expected = REPOSITORY_QUERIES[(self.cohort, self.source)]
        if self.query_string != expected:
            raise ValueError(
                f"query for ({self.cohort.value}, {self.source.value}) must be {expected!r}"
            )


def build_query(cohort: Cohort, source: Source) -> CohortQuery:
    return CohortQuery(cohort, source, REPOSITORY_QUERIES[(cohort, source)])


@dataclass(frozen=True)
class SamplingPlan:
    initial_count: int = 1000
    target_count: int = 800
    seed: int = 0

    def __post_init__(self):
        if self.initial_count <= 0 or self.target_count <= 0:
            raise ValueError("counts must be positive")
        if self.target_count > self.initial_count:
            raise ValueError("target_count must not exceed initial_count")


# ---------------------------------------------------------------------------
# Repository client
# ---------------------------------------------------------------------------

EUTILS_BASE = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"
_RETRYABLE = {429, 500, 502, 503, 504}
_DB_FOR_SOURCE = {Source.BIOSAMPLE: "biosample", Source.GEO: "gds"}


class LiveRepositoryClient:
    """E-utilities search+fetch with polite retry/backoff.

    Retries transient statuses up to 3 attempts with exponential backoff
    starting at 1s; quota/authorization refusals are not retried.
    """

    def __init__(
        self,
        source: Source,
        base_url: str = EUTILS_BASE,
        api_key: Optional[str] = None,
        session: Optional[requests.Session] = None,
        max_attempts: int = 3,
        backoff_start: float = 1.0,
        sleep=time.sleep,
        timeout: float = 60.0,
    ):
        self.source = source
        self.db = _DB_FOR_SOURCE[source]
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.session = session or requests.Session()
        self.max_attempts = max_attempts
        self.backoff_start = backoff_start
        self.sleep = sleep
        self.timeout = timeout

    def _get(self, path: str, params: dict):
        params = dict(params)
        if self.api_key:
            params["api_key"] = self.api_key
        url = f"{self.base_url}/{path}"
        delay = self.backoff_start
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self.session.get(url, params=params, timeout=self.timeout)
            except requests.RequestException as exc:
                if attempt == self.max_attempts:
                    raise NetworkError(f"request failed after {attempt} attempts: {exc}") from exc
                log.warning("request error (%s), retry %d", exc, attempt)
                self.sleep(delay)
                delay *= 2
                continue
            if resp.status_code == 200:
                return resp
            if resp.status_code == 403:
                raise QuotaError(f"repository refused request: {resp.status_code}")
            if resp.status_code in _RETRYABLE and attempt < self.max_attempts:
                log.warning("transient status %d, retry %d", resp.status_code, attempt)
                self.sleep(delay)
                delay *= 2
                continue
            raise NetworkError(f"repository returned {resp.status_code}")
        raise NetworkError("retries exhausted")

    def search(self, query_string: str, limit: int) -> list[str]:
        resp = self._get(
            "esearch.fcgi",
            {"db": self.db, "term": query_string, "retmax": limit, "retmode": "json"},
        )
        try:
            ids = resp.json()["esearchresult"]["idlist"]
        except (ValueError, KeyError) as exc:
            raise NetworkError(f"malformed search response: {exc}") from exc
        return [str(i) for i in ids[:limit]]

    def fetch(self, ids: Sequence[str]) -> list[str]:
        if not ids:
            return []
        params = {"db": self.db, "id": ",".join(ids)}
        if self.source == Source.BIOSAMPLE:
            params["retmode"] = "xml"
        resp = self._get("efetch.fcgi", params)
        payloads = _split_payload(resp.text, self.source)
        if len(payloads) != len(ids):
            log.warning("fetch returned %d payloads for %d ids", len(payloads), len(ids))
        return payloads


_BIOSAMPLE_SPLIT_RE = re.compile(r"<BioSample\b.*?</BioSample>", re.DOTALL)
_GEO_SPLIT_RE = re.compile(r"\n(?=\d+\.\s)")


def _split_payload(text: str, source: Source) -> list[str]:
    if source == Source.BIOSAMPLE:
        return _BIOSAMPLE_SPLIT_RE.findall(text)
    chunks = [c.strip() for c in _GEO_SPLIT_RE.split(text)]
    return [c for c in chunks if c]


def fetch_raw(
    query: CohortQuery,
    limit: int,
    client,
    cache_dir=None,
    max_concurrency: int = 3,
    batch_size: int = 50,
) -> list[str]:
    """Fetch up to `limit` raw record payloads for a cohort query.

    Payloads are cached under `<cache_dir>/<source>/<cohort>/<id>` and cache
    hits are not re-fetched. Batches of ids may be fetched concurrently, up
    to `max_concurrency` in flight.
    """
    if limit == 0:
        return []
    ids = client.search(query.query_string, limit)[:limit]
    log.info(
        "search %s/%s returned %d ids", query.source.value, query.cohort.value, len(ids)
    )

    cache_base = None
    if cache_dir is not None:
        cache_base = Path(cache_dir) / query.source.value / query.cohort.value
        cache_base.mkdir(parents=True, exist_ok=True)

    payloads: dict[str, str] = {}
    to_fetch = []
    for rid in ids:
        if cache_base is not None:
            path = cache_base / _safe_name(rid)
            if path.exists():
                payloads[rid] = path.read_text(encoding="utf-8")
                continue
        to_fetch.append(rid)

    batches = [to_fetch[i : i + batch_size] for i in range(0, len(to_fetch), batch_size)]
    if batches:
        with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
            for batch, texts in zip(batches, pool.map(client.fetch, batches)):
                for rid, text in zip(batch, texts):
                    payloads[rid] = text
                    if cache_base is not None:
                        (cache_base / _safe_name(rid)).write_text(text, encoding="utf-8")

    return [payloads[rid] for rid in ids if rid in payloads]


_SAFE_RE = re.compile(r"[^A-Za-z0-9._-]")


def _safe_name(record_id: str) -> str:
    return _SAFE_RE.sub("_", record_id)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleReport:
    input: int
    malformed: int
    sampled: int
    duplicate_ids: int = 0


def sample_uniform(
    raw: Sequence[str],
    plan: SamplingPlan,
    parser: RecordParser,
    name: str,
    source: Source,
    cohort: Cohort,
) -> tuple[Corpus, SampleReport]:
    """Parse raw payloads, drop malformed ones, and take a seeded sample.

    The shuffle is deterministic in plan.seed; the seed lands in the corpus
    header so a run can be reproduced. Raises InsufficientRecords when fewer
    records survive parsing than the target.
    """
    survivors = []
    seen_ids = set()
    malformed = 0
    duplicates = 0
    for text in raw:
        try:
            record = parser(text)
        except MalformedRecord:
            malformed += 1
            continue
        if record.id in seen_ids:
            duplicates += 1
            continue
        seen_ids.add(record.id)
        survivors.append(record)

    if len(survivors) < plan.target_count:
        raise InsufficientRecords(
            f"only {len(survivors)} well-formed records for target {plan.target_count}"
        )

    rng = random.Random(plan.seed)
    shuffled = list(survivors)
    rng.shuffle(shuffled)
    sampled = shuffled[: plan.target_count]

    corpus = Corpus(
        name=name,
        source=source,
        cohort=cohort,
        condition=Condition.BASELINE,
        records=tuple(sampled),
        meta={"seed": plan.seed},
    )
    report = SampleReport(
        input=len(raw), malformed=malformed, sampled=len(sampled), duplicate_ids=duplicates
    )
    log.info(
        "sampled %d of %d raw payloads (%d malformed, %d duplicate ids)",
        report.sampled, report.input, report.malformed, report.duplicate_ids,
    )
    return corpus, report
