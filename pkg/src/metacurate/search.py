"""Exact-match field:value retrieval over corpora.

A record is retrieved iff the named field's canonical value equals the
canonical query value; no partial matching, stemming, or synonym
expansion. Missing markers never match, even for the query value "na".
An inverted index accelerates lookups; a linear scan is kept as the
reference path and both must agree on every query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidQuery
from .records import MISSING, Corpus, canon, canon_name


@dataclass(frozen=True)
class SearchQuery:
    field: str
    value: str
    #: value exactly as typed (trimmed), for --strict-case matching
    raw_value: str = ""

    def __post_init__(self):
        if not self.field or not self.value:
            raise InvalidQuery("query needs a non-empty field and value")


def parse_query(text: str) -> SearchQuery:
    """Split at the first colon and canonicalize both sides."""
    if ":" not in text:
        raise InvalidQuery(f"query {text!r} has no colon; expected field:value")
    raw_field, raw_value = text.split(":", 1)
    f, v = canon_name(raw_field), canon(raw_value)
    if not f or not v:
        raise InvalidQuery(f"query {text!r} has an empty field or value")
    return SearchQuery(field=f, value=v, raw_value=raw_value.strip())


@dataclass(frozen=True)
class QueryResult:
    query: SearchQuery
    corpus_name: str
    retrieved_ids: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.retrieved_ids)) != len(self.retrieved_ids):
            raise ValueError("retrieved ids contain duplicates")


def _matches(stored: str, query: SearchQuery, strict_case: bool) -> bool:
    if stored == MISSING:
        return False
    if strict_case:
        return stored == query.raw_value
    return canon(stored) == query.value


def execute(query: SearchQuery, corpus: Corpus, strict_case: bool = False) -> QueryResult:
    """Linear-scan retrieval; ids returned in corpus order."""
    ids = []
    for rec in corpus.records:
        value = rec.lookup(query.field)
        if value is not None and _matches(value, query, strict_case):
            ids.append(rec.id)
    return QueryResult(query=query, corpus_name=corpus.name, retrieved_ids=tuple(ids))


@dataclass
class Index:
    """Immutable (field, canonical value) -> ordered id list mapping."""

    corpus_name: str
    _postings: dict = field(default_factory=dict)
    _strict_postings: dict = field(default_factory=dict)

    def lookup(self, query: SearchQuery, strict_case: bool = False) -> tuple[str, ...]:
        if strict_case:
            return self._strict_postings.get((query.field, query.raw_value), ())
        return self._postings.get((query.field, query.value), ())


def build_index(corpus: Corpus) -> Index:
    """Index the FIRST occurrence of each field per record (lookup semantics)."""
    index = Index(corpus_name=corpus.name)
    for rec in corpus.records:
        seen: set[str] = set()
        for pair in rec.fields:
            if pair.name in seen:
                continue
            seen.add(pair.name)
            if pair.missing:
                continue
            key = (pair.name, canon(pair.value))
            index._postings.setdefault(key, []).append(rec.id)
            strict_key = (pair.name, pair.value)
            index._strict_postings.setdefault(strict_key, []).append(rec.id)
    index._postings = {k: tuple(v) for k, v in index._postings.items()}
    index._strict_postings = {k: tuple(v) for k, v in index._strict_postings.items()}
    return index


def execute_indexed(query: SearchQuery, index: Index, strict_case: bool = False) -> QueryResult:
    return QueryResult(
        query=query,
        corpus_name=index.corpus_name,
        retrieved_ids=tuple(index.lookup(query, strict_case)),
    )
