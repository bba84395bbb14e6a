"""Retrieval evaluation: confusion counts, precision/recall/F1, macro
averages, and paired statistical comparisons between conditions.

Gold labels are computed once on the baseline (original) corpora and held
fixed across conditions, so recall comparisons share one relevant set.
Report serialization is canonical (sorted keys, rounded floats) so repeat
runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import EmptyInput, MissingCorpus, UnsupportedQuery
from .labeling import TissueLabel, assign_tissue_label, query_value_to_label
from .records import Cohort, Condition, Corpus, Source
from .search import SearchQuery, build_index, execute_indexed, parse_query
from .stats import StatComparison, compare_paired

CONDITION_ORDER = (Condition.BASELINE, Condition.DD, Condition.CEDAR)

#: Default queries per cohort: the cohort's organ query plus tissue:blood.
COHORT_QUERIES: dict[Cohort, tuple[str, ...]] = {
    Cohort.LUNG: ("tissue:lung", "tissue:blood"),
    Cohort.LIVER: ("tissue:liver", "tissue:blood"),
    Cohort.OVARIAN: ("tissue:ovary", "tissue:blood"),
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class MetricValues:
    precision: float
    recall: float
    f1: float


def compute_labels(corpus: Corpus) -> dict[str, TissueLabel]:
    return {rec.id: assign_tissue_label(rec) for rec in corpus.records}


def relevant_set(corpus: Corpus, query: SearchQuery) -> set[str]:
    """Ids of records whose gold label matches the query's tissue label.

    The corpus must be the baseline version; labels are never recomputed on
    corrected corpora.
    """
    if query.field != "tissue":
        raise UnsupportedQuery(f"no gold labels for field {query.field!r}")
    label = query_value_to_label(query.value)
    if label is None:
        raise UnsupportedQuery(f"query value {query.value!r} is not a gold-label target")
    return {rec.id for rec in corpus.records if assign_tissue_label(rec) == label}


def compute_confusion(retrieved: set, relevant: set) -> ConfusionCounts:
    return ConfusionCounts(
        tp=len(retrieved & relevant),
        fp=len(retrieved - relevant),
        fn=len(relevant - retrieved),
    )


def metrics(counts: ConfusionCounts) -> MetricValues:
    """Precision, recall, F1 with the zero-denominator-means-zero convention."""
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return MetricValues(precision=p, recall=r, f1=f1)


def macro_average(values: Sequence[MetricValues]) -> MetricValues:
    if not values:
        raise EmptyInput("cannot average zero metric values")
    n = len(values)
    return MetricValues(
        precision=math.fsum(v.precision for v in values) / n,
        recall=math.fsum(v.recall for v in values) / n,
        f1=math.fsum(v.f1 for v in values) / n,
    )


def _micro(counts: Sequence[ConfusionCounts]) -> MetricValues:
    total = ConfusionCounts(
        tp=sum(c.tp for c in counts),
        fp=sum(c.fp for c in counts),
        fn=sum(c.fn for c in counts),
    )
    return metrics(total)


@dataclass(frozen=True)
class QueryCell:
    """One evaluated (corpus, query) pair."""

    source: Source
    cohort: Cohort
    condition: Condition
    query: str
    counts: ConfusionCounts
    values: MetricValues


@dataclass(frozen=True)
class AggregateRow:
    source: Optional[Source]  # None = overall
    condition: Condition
    values: MetricValues


@dataclass(frozen=True)
class EvaluationReport:
    aggregation: str
    per_query: tuple[QueryCell, ...]
    per_source_condition: tuple[AggregateRow, ...]
    overall: tuple[AggregateRow, ...]
    comparisons: tuple[StatComparison, ...]
    footnotes: tuple[str, ...] = field(default=())

    def mean_recall(self, source: Optional[Source], condition: Condition) -> float:
        rows = self.overall if source is None else [
            r for r in self.per_source_condition if r.source == source
        ]
        for row in rows:
            if row.condition == condition:
                return row.values.recall
        raise KeyError((source, condition))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "aggregation": self.aggregation,
            "per_query": [
                {
                    "source": c.source.value,
                    "cohort": c.cohort.value,
                    "condition": c.condition.value,
                    "query": c.query,
                    "tp": c.counts.tp,
                    "fp": c.counts.fp,
                    "fn": c.counts.fn,
                    "precision": _round10(c.values.precision),
                    "recall": _round10(c.values.recall),
                    "f1": _round10(c.values.f1),
                }
                for c in self.per_query
            ],
            "per_source_condition": [
                {
                    "source": r.source.value,
                    "condition": r.condition.value,
                    "precision": _round10(r.values.precision),
                    "recall": _round10(r.values.recall),
                    "f1": _round10(r.values.f1),
                }
                for r in self.per_source_condition
            ],
            "overall": [
                {
                    "condition": r.condition.value,
                    "precision": _round10(r.values.precision),
                    "recall": _round10(r.values.recall),
                    "f1": _round10(r.values.f1),
                }
                for r in self.overall
            ],
            "comparisons": [
                {
                    "a": s.condition_a,
                    "b": s.condition_b,
                    "metric": "recall",
                    "t_statistic": _round10(s.t_statistic),
                    "p_value": _round10(s.p_value),
                    "dof": s.degrees_of_freedom,
                    "cohens_d": _round10(s.cohens_d),
                    "n_pairs": s.n_pairs,
                }
                for s in self.comparisons
            ],
            "footnotes": list(self.footnotes),
        }

    def to_json_bytes(self) -> bytes:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)
        return (text + "\n").encode("utf-8")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["source", "cohort", "condition", "query", "tp", "fp", "fn",
             "precision", "recall", "f1"]
        )
        for c in self.per_query:
            writer.writerow(
                [c.source.value, c.cohort.value, c.condition.value, c.query,
                 c.counts.tp, c.counts.fp, c.counts.fn,
                 _round10(c.values.precision), _round10(c.values.recall),
                 _round10(c.values.f1)]
            )
        return buf.getvalue()

    def to_plot_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["source", "condition", "mean_precision", "mean_recall", "mean_f1"])
        for r in self.per_source_condition:
            writer.writerow(
                [r.source.value, r.condition.value, _round10(r.values.precision),
                 _round10(r.values.recall), _round10(r.values.f1)]
            )
        for r in self.overall:
            writer.writerow(
                ["overall", r.condition.value, _round10(r.values.precision),
                 _round10(r.values.recall), _round10(r.values.f1)]
            )
        return buf.getvalue()


def _round10(x: float) -> float:
    v = round(float(x), 10)
    return 0.0 if v == 0 else v


def _condition_rank(condition: Condition) -> int:
    return CONDITION_ORDER.index(condition)


def evaluate_all(
    corpora: Iterable[Corpus],
    queries: Optional[Mapping[Cohort, Sequence[str]]] = None,
    aggregation: str = "macro",
) -> EvaluationReport:
    """Run every applicable query against every corpus and assemble a report.

    Each (source, cohort) needs baseline, dd, and cedar corpora. Each cohort
    runs its organ query plus tissue:blood. The three pairwise condition
    comparisons are computed over (source, cohort, query) recall cells.
    """
    if aggregation not in ("macro", "micro"):
        raise ValueError(f"unknown aggregation {aggregation!r}")

    groups: dict[tuple[Source, Cohort], dict[Condition, Corpus]] = {}
    for corpus in corpora:
        groups.setdefault((corpus.source, corpus.cohort), {})[corpus.condition] = corpus

    for (source, cohort), by_condition in sorted(groups.items()):
        for condition in CONDITION_ORDER:
            if condition not in by_condition:
                raise MissingCorpus(
                    f"no {condition.value} corpus for {source.value}/{cohort.value}"
                )

    cells: list[QueryCell] = []
    footnotes: list[str] = []
    group_keys = sorted(groups.keys(), key=lambda k: (k[0].value, k[1].value))
    for source, cohort in group_keys:
        by_condition = groups[(source, cohort)]
        baseline = by_condition[Condition.BASELINE]
        if queries is not None and cohort in queries:
            query_texts = tuple(queries[cohort])
        else:
            query_texts = COHORT_QUERIES[cohort]
        parsed = [parse_query(q) for q in query_texts]
        relevant = {q.value: relevant_set(baseline, q) for q in parsed}
        for condition in CONDITION_ORDER:
            corpus = by_condition[condition]
            index = build_index(corpus)
            for qtext, q in zip(query_texts, parsed):
                retrieved = set(execute_indexed(q, index).retrieved_ids)
                counts = compute_confusion(retrieved, relevant[q.value])
                vals = metrics(counts)
                cells.append(
                    QueryCell(source, cohort, condition, qtext, counts, vals)
                )
                if counts.tp + counts.fp == 0:
                    footnotes.append(
                        f"precision defaulted to 0 (nothing retrieved): "
                        f"{source.value}/{cohort.value}/{condition.value}/{qtext}"
                    )
                if counts.tp + counts.fn == 0:
                    footnotes.append(
                        f"recall defaulted to 0 (empty relevant set): "
                        f"{source.value}/{cohort.value}/{condition.value}/{qtext}"
                    )

    cells.sort(key=lambda c: (c.source.value, c.cohort.value,
                              _condition_rank(c.condition), c.query))

    sources = sorted({c.source for c in cells}, key=lambda s: s.value)
    per_source: list[AggregateRow] = []
    for source in sources:
        for condition in CONDITION_ORDER:
            sel = [c for c in cells if c.source == source and c.condition == condition]
            agg = macro_average([c.values for c in sel]) if aggregation == "macro" \
                else _micro([c.counts for c in sel])
            per_source.append(AggregateRow(source, condition, agg))

    overall: list[AggregateRow] = []
    for condition in CONDITION_ORDER:
        if aggregation == "macro":
            rows = [r.values for r in per_source if r.condition == condition]
            agg = macro_average(rows)
        else:
            agg = _micro([c.counts for c in cells if c.condition == condition])
        overall.append(AggregateRow(None, condition, agg))

    # Paired comparisons over per-(source, cohort, query) recall vectors.
    cell_keys = sorted({(c.source.value, c.cohort.value, c.query) for c in cells})
    recall_by_condition: dict[Condition, list[float]] = {}
    for condition in CONDITION_ORDER:
        by_key = {
            (c.source.value, c.cohort.value, c.query): c.values.recall
            for c in cells
            if c.condition == condition
        }
        recall_by_condition[condition] = [by_key[k] for k in cell_keys]

    pairs = (
        (Condition.BASELINE, Condition.DD),
        (Condition.DD, Condition.CEDAR),
        (Condition.BASELINE, Condition.CEDAR),
    )
    comparisons = tuple(
        compare_paired(a.value, b.value, recall_by_condition[a], recall_by_condition[b])
        for a, b in pairs
    )

    return EvaluationReport(
        aggregation=aggregation,
        per_query=tuple(cells),
        per_source_condition=tuple(per_source),
        overall=tuple(overall),
        comparisons=comparisons,
        footnotes=tuple(sorted(set(footnotes))),
    )
