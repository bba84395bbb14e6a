#!/usr/bin/env python3
"""Compute the golden evaluation report for the fixture suite by brute force.

Deliberately independent of the package: corpus files are read as plain
JSONL, gold labels come from a straight-line re-implementation of the
annotation rules, retrieval is a direct string comparison, and the paired
statistics come from scipy.stats. The output must match the pipeline's
report byte for byte, so the serialization schema (key names, ordering,
10-decimal rounding) is replicated here by hand.

Usage: python3 tools/compute_golden_report.py [--suite tests/fixtures/suite]
"""

import argparse
import json
import math
import statistics
from pathlib import Path

from scipy import stats as scipy_stats

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

CONDITIONS = ["baseline", "dd", "cedar"]
ORGAN_QUERY = {"lung": "tissue:lung", "liver": "tissue:liver", "ovarian": "tissue:ovary"}


def canon(text):
    return " ".join(text.split()).lower()


def read_corpus(path):
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0].startswith("#corpus ")
    header = json.loads(lines[0][len("#corpus "):])
    records = [json.loads(line) for line in lines[1:] if line.strip()]
    return header, records


def first_value(record, field_name):
    for pair in record["fields"]:
        if pair["name"] == field_name:
            return pair["value"]
    return None


def gold_label(record):
    value = first_value(record, "tissue")
    if value is None or value == "" or value == "NA":
        return "unknown"
    v = canon(value)
    if "lung" in v:
        return "lung"
    if "liver" in v or "hcc" in v:
        return "liver"
    if "ovary" in v or "ovarian" in v:
        return "ovary"
    if "pbmc" in v or "blood" in v:
        return "blood"
    if "plasma" in v:
        return "plasma"
    if "lymph" in v:
        return "lymph"
    return "unknown"


def retrieve(records, field_name, wanted):
    hits = []
    for record in records:
        value = first_value(record, field_name)
        if value is None or value == "NA":
            continue
        if canon(value) == wanted:
            hits.append(record["id"])
    return hits


def prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def round10(x):
    v = round(float(x), 10)
    return 0.0 if v == 0 else v


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite", type=Path, default=Path("tests/fixtures/suite"))
    args = parser.parse_args()

    suite = tomllib.loads((args.suite / "suite.toml").read_text(encoding="utf-8"))
    corpora = {}
    for entry in suite["corpora"]:
        header, records = read_corpus(args.suite / entry["path"])
        corpora[(entry["source"], entry["cohort"], entry["condition"])] = records

    sources = sorted({src for src, _, _ in corpora})
    cohorts = sorted({coh for _, coh, _ in corpora})

    cells = []
    for source in sources:
        for cohort in cohorts:
            baseline = corpora[(source, cohort, "baseline")]
            labels = {rec["id"]: gold_label(rec) for rec in baseline}
            for query_text in (ORGAN_QUERY[cohort], "tissue:blood"):
                wanted = query_text.split(":", 1)[1]
                relevant = {rid for rid, lab in labels.items() if lab == wanted}
                for condition in CONDITIONS:
                    records = corpora[(source, cohort, condition)]
                    retrieved = set(retrieve(records, "tissue", wanted))
                    tp = len(retrieved & relevant)
                    fp = len(retrieved - relevant)
                    fn = len(relevant - retrieved)
                    p, r, f1 = prf(tp, fp, fn)
                    cells.append({
                        "source": source, "cohort": cohort, "condition": condition,
                        "query": query_text, "tp": tp, "fp": fp, "fn": fn,
                        "precision": p, "recall": r, "f1": f1,
                    })

    rank = {c: i for i, c in enumerate(CONDITIONS)}
    cells.sort(key=lambda c: (c["source"], c["cohort"], rank[c["condition"]], c["query"]))

    per_source = []
    for source in sources:
        for condition in CONDITIONS:
            sel = [c for c in cells if c["source"] == source and c["condition"] == condition]
            per_source.append({
                "source": source, "condition": condition,
                "precision": math.fsum(c["precision"] for c in sel) / len(sel),
                "recall": math.fsum(c["recall"] for c in sel) / len(sel),
                "f1": math.fsum(c["f1"] for c in sel) / len(sel),
            })

    overall = []
    for condition in CONDITIONS:
        rows = [r for r in per_source if r["condition"] == condition]
        overall.append({
            "condition": condition,
            "precision": math.fsum(r["precision"] for r in rows) / len(rows),
            "recall": math.fsum(r["recall"] for r in rows) / len(rows),
            "f1": math.fsum(r["f1"] for r in rows) / len(rows),
        })

    cell_keys = sorted({(c["source"], c["cohort"], c["query"]) for c in cells})
    recall_vectors = {}
    for condition in CONDITIONS:
        lookup = {
            (c["source"], c["cohort"], c["query"]): c["recall"]
            for c in cells if c["condition"] == condition
        }
        recall_vectors[condition] = [lookup[k] for k in cell_keys]

    comparisons = []
    for a, b in (("baseline", "dd"), ("dd", "cedar"), ("baseline", "cedar")):
        va, vb = recall_vectors[a], recall_vectors[b]
        result = scipy_stats.ttest_rel(vb, va)
        diffs = [y - x for x, y in zip(va, vb)]
        dz = statistics.fmean(diffs) / statistics.stdev(diffs)
        comparisons.append({
            "a": a, "b": b, "metric": "recall",
            "t_statistic": round10(float(result.statistic)),
            "p_value": round10(float(result.pvalue)),
            "dof": len(va) - 1,
            "cohens_d": round10(dz),
            "n_pairs": len(va),
        })

    report = {
        "aggregation": "macro",
        "per_query": [
            {
                "source": c["source"], "cohort": c["cohort"], "condition": c["condition"],
                "query": c["query"], "tp": c["tp"], "fp": c["fp"], "fn": c["fn"],
                "precision": round10(c["precision"]), "recall": round10(c["recall"]),
                "f1": round10(c["f1"]),
            }
            for c in cells
        ],
        "per_source_condition": [
            {
                "source": r["source"], "condition": r["condition"],
                "precision": round10(r["precision"]), "recall": round10(r["recall"]),
                "f1": round10(r["f1"]),
            }
            for r in per_source
        ],
        "overall": [
            {
                "condition": r["condition"], "precision": round10(r["precision"]),
                "recall": round10(r["recall"]), "f1": round10(r["f1"]),
            }
            for r in overall
        ],
        "comparisons": comparisons,
        "footnotes": [],
    }

    golden_dir = args.suite / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    report_bytes = (json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    (golden_dir / "report.json").write_bytes(report_bytes)
    print(f"wrote {golden_dir / 'report.json'}")

    reports_dir = args.suite / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    (reports_dir / "report-0001.json").write_bytes(report_bytes)
    print(f"wrote {reports_dir / 'report-0001.json'}")

    golden_queries = []
    for source, cohort, condition, query_text in [
        ("biosample", "lung", "baseline", "tissue:lung"),
        ("biosample", "lung", "dd", "tissue:lung"),
        ("biosample", "lung", "cedar", "tissue:lung"),
        ("biosample", "ovarian", "cedar", "tissue:ovary"),
        ("geo", "liver", "cedar", "tissue:blood"),
        ("geo", "ovarian", "dd", "tissue:ovary"),
    ]:
        wanted = query_text.split(":", 1)[1]
        ids = retrieve(corpora[(source, cohort, condition)], "tissue", wanted)
        golden_queries.append({
            "corpus": f"{source}_{cohort}", "condition": condition,
            "q": query_text, "ids": ids,
        })
    search_payload = {"queries": golden_queries}
    (golden_dir / "search.json").write_text(
        json.dumps(search_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {golden_dir / 'search.json'}")

    for row in overall:
        print(f"  {row['condition']:<8} mean recall {row['recall']:.4f}")


if __name__ == "__main__":
    main()
