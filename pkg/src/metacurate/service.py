"""Read-only HTTP API backing the review UI.

All corpora are loaded and indexed once at startup; request handling never
mutates state, so concurrent reads need no locking. Responses carry
`Cache-Control: no-store` plus a corpus content hash so the UI can detect
a restarted server with different data.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .errors import InvalidQuery, MetacurateError
from .labeling import assign_tissue_label
from .records import MISSING, Condition, Corpus, canon, load_corpus
from .schema import load_bundled_template, validate_value
from .search import build_index, execute_indexed, parse_query

CONDITION_ORDER = (Condition.BASELINE, Condition.DD, Condition.CEDAR)


class ServiceState:
    """Immutable snapshot of every corpus, index, label map and report."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.corpora: dict[tuple[str, Condition], Corpus] = {}
        self.indexes = {}
        self.hashes: dict[tuple[str, Condition], str] = {}
        self.labels: dict[str, dict[str, str]] = {}
        self.templates = {}

        corpora_dir = self.data_dir / "corpora"
        if corpora_dir.is_dir():
            for path in sorted(corpora_dir.glob("*.jsonl")):
                corpus = load_corpus(path)
                key = (corpus.name, corpus.condition)
                if key in self.corpora:
                    raise MetacurateError(
                        f"duplicate corpus {corpus.name}/{corpus.condition.value}"
                    )
                self.corpora[key] = corpus
                self.indexes[key] = build_index(corpus)
                self.hashes[key] = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
                if corpus.source not in self.templates:
                    self.templates[corpus.source] = load_bundled_template(corpus.source)

        for (name, condition), corpus in self.corpora.items():
            if condition is Condition.BASELINE:
                self.labels[name] = {
                    rec.id: assign_tissue_label(rec).value for rec in corpus.records
                }

    def names(self) -> list[str]:
        return sorted({name for name, _ in self.corpora})

    def conditions_for(self, name: str) -> list[Condition]:
        return [c for c in CONDITION_ORDER if (name, c) in self.corpora]

    def get(self, name: str, condition: Condition) -> Corpus:
        return self.corpora[(name, condition)]

    def latest_report(self) -> Optional[Path]:
        reports_dir = self.data_dir / "reports"
        if not reports_dir.is_dir():
            return None
        candidates = sorted(reports_dir.glob("*.json"))
        return candidates[-1] if candidates else None


def _diff_value(value: Optional[str]) -> Optional[str]:
    """Canonical comparison value; absent and missing-marker are equivalent."""
    if value is None or value == MISSING:
        return None
    return canon(value)


def paired_record_view(state: ServiceState, name: str, record_id: str,
                       conditions: list[Condition]) -> dict:
    versions = {}
    for condition in conditions:
        corpus = state.get(name, condition)
        record = corpus.get(record_id)
        if record is None:
            raise HTTPException(
                status_code=404,
                detail=f"record {record_id} not in {name}/{condition.value}",
            )
        versions[condition] = record

    source = state.get(name, conditions[0]).source
    template = state.templates[source]

    field_order: list[str] = []
    seen = set()
    for condition in conditions:
        for pair in versions[condition].fields:
            if pair.name not in seen:
                seen.add(pair.name)
                field_order.append(pair.name)

    diffs = []
    for field_name in field_order:
        values = {c: versions[c].lookup(field_name) for c in conditions}
        comparable = {_diff_value(v) for v in values.values()}
        validation = {}
        for condition in conditions:
            value = values[condition]
            if value is None:
                validation[condition.value] = None
            else:
                result = validate_value(template, field_name, value)
                validation[condition.value] = {
                    "conforms": result.conforms,
                    "violation": result.violation.value if result.violation else None,
                }
        diffs.append(
            {
                "field_name": field_name,
                "values": {c.value: values[c] for c in conditions},
                "changed": len(comparable) > 1,
                "validation": validation,
            }
        )

    return {
        "id": record_id,
        "corpus": name,
        "conditions": [c.value for c in conditions],
        "versions": {
            c.value: {"fields": [{"name": p.name, "value": p.value} for p in versions[c].fields]}
            for c in conditions
        },
        "field_diffs": diffs,
    }


def build_app(data_dir, ui_dir=None) -> FastAPI:
    state = ServiceState(Path(data_dir))
    app = FastAPI(title="metacurate review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def no_store(request: Request, call_next):
        response = await call_next(request)
        response.headers["Cache-Control"] = "no-store"
        return response

    def resolve(name: str, condition_text: str) -> tuple[str, Condition]:
        try:
            condition = Condition(condition_text.lower())
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown condition {condition_text!r}")
        if (name, condition) not in state.corpora:
            raise HTTPException(
                status_code=404, detail=f"no corpus {name!r} under condition {condition.value!r}"
            )
        return name, condition

    @app.get("/corpora")
    def list_corpora():
        out = []
        for name in state.names():
            conditions = state.conditions_for(name)
            first = state.get(name, conditions[0])
            out.append(
                {
                    "name": name,
                    "source": first.source.value,
                    "cohort": first.cohort.value,
                    "conditions": [c.value for c in conditions],
                    "record_count": len(first),
                }
            )
        return out

    @app.get("/search")
    def search(
        response: Response,
        corpus: str,
        condition: str = "baseline",
        q: str = Query(...),
        limit: int = Query(100, ge=0),
        offset: int = Query(0, ge=0),
    ):
        name, cond = resolve(corpus, condition)
        try:
            query = parse_query(q)
        except InvalidQuery as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        target = state.get(name, cond)
        result = execute_indexed(query, state.indexes[(name, cond)])
        labels = state.labels.get(name, {})
        page = result.retrieved_ids[offset : offset + limit]
        hits = [
            {
                "id": rid,
                "tissue": target.get(rid).lookup("tissue"),
                "gold_label": labels.get(rid),
            }
            for rid in page
        ]
        response.headers["X-Corpus-Hash"] = state.hashes[(name, cond)]
        return {
            "corpus": name,
            "condition": cond.value,
            "query": {"field": query.field, "value": query.value},
            "total": len(result.retrieved_ids),
            "ids": list(page),
            "hits": hits,
        }

    @app.get("/records/{corpus}/{record_id}")
    def record_view(response: Response, corpus: str, record_id: str,
                    conditions: Optional[str] = None):
        available = state.conditions_for(corpus)
        if not available:
            raise HTTPException(status_code=404, detail=f"unknown corpus {corpus!r}")
        if conditions:
            requested = [resolve(corpus, c)[1] for c in conditions.split(",") if c]
        else:
            requested = available
        view = paired_record_view(state, corpus, record_id, requested)
        response.headers["X-Corpus-Hash"] = "-".join(
            state.hashes[(corpus, c)] for c in requested
        )
        return view

    @app.get("/reports/latest")
    def latest_report():
        path = state.latest_report()
        if path is None:
            raise HTTPException(status_code=404, detail="no evaluation reports stored")
        return Response(content=path.read_bytes(), media_type="application/json")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
