"""Prompt construction, model-output parsing, and batch correction.

Prompt wording beyond what the guidance itself contributes lives in a
versioned asset file (assets/prompts.json), so prompts are stable given
identical inputs and the replay cache stays valid across code changes
that do not touch the asset.
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Optional

from .errors import BackendError, MissingGuidance, ModelOutputUnparseable
from .records import Condition, Corpus, FieldValuePair, MetadataRecord, Source
from .schema import DataDictionary, MetadataTemplate


def _load_prompt_assets() -> dict:
    text = resources.files("metacurate.assets").joinpath("prompts.json").read_text("utf-8")
    return json.loads(text)


PROMPTS = _load_prompt_assets()


def render_record_inline(record: MetadataRecord) -> str:
    """Join pairs as `name:value` separated by em-dashes, in record order."""
    return " — ".join(f"{p.name}:{p.value}" for p in record.fields)


@dataclass(frozen=True)
class Prompt:
    text: str
    record_id: str
    condition: Condition
    guidance_digest: str


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_prompt(
    record: MetadataRecord,
    condition: Condition,
    dictionary: Optional[DataDictionary] = None,
    template: Optional[MetadataTemplate] = None,
) -> Prompt:
    """Assemble the full correction prompt for one record.

    DD prompts embed the complete dictionary rendering; CEDAR prompts embed
    the template rendering with constraint annotations. Baseline makes no
    backend call, so asking for a baseline prompt is an error.
    """
    inline = render_record_inline(record)
    if condition == Condition.DD:
        if dictionary is None:
            raise MissingGuidance("DD condition requires a data dictionary")
        guidance = dictionary.render(PROMPTS["dd_header"])
        text = PROMPTS["dd"].format(
            record=inline, guidance=guidance, response_format=PROMPTS["response_format"]
        )
    elif condition == Condition.CEDAR:
        if template is None:
            raise MissingGuidance("CEDAR condition requires a template")
        guidance = template.render(PROMPTS["cedar_header"])
        text = PROMPTS["cedar"].format(
            record=inline, guidance=guidance, response_format=PROMPTS["response_format"]
        )
    else:
        raise MissingGuidance("baseline performs no correction; no prompt to build")
    return Prompt(
        text=text,
        record_id=record.id,
        condition=condition,
        guidance_digest=_digest(guidance),
    )


_OUTPUT_LINE_RE = re.compile(r"^\s*([^:]+):(.*)$")


def parse_model_output(
    text: str, record_id: str = "", source: Source = Source.BIOSAMPLE
) -> MetadataRecord:
    """Turn completion text back into a record.

    Every line of the form `name: value` becomes a pair; other lines are
    ignored. "NA" values become missing markers. Raises
    ModelOutputUnparseable when no line parses.
    """
    pairs = []
    for line in text.splitlines():
        m = _OUTPUT_LINE_RE.match(line)
        if not m:
            continue
        name, value = m.group(1), m.group(2)
        try:
            pairs.append(FieldValuePair(name, value))
        except ValueError:
            continue
    if not pairs:
        raise ModelOutputUnparseable("no name: value lines in model output")
    return MetadataRecord(id=record_id, source=source, fields=tuple(pairs), raw_text=text)


class OutcomeStatus(str, Enum):
    CORRECTED = "corrected"
    PARSE_FAILED = "parse_failed"
    BACKEND_FAILED = "backend_failed"


@dataclass(frozen=True)
class StandardizationOutcome:
    record_id: str
    status: OutcomeStatus
    corrected: Optional[MetadataRecord] = None
    attempts: int = 0
    detail: str = ""

    def __post_init__(self):
        if (self.status == OutcomeStatus.CORRECTED) != (self.corrected is not None):
            raise ValueError("corrected record present iff status is corrected")


def _correct_one(
    record: MetadataRecord,
    condition: Condition,
    backend,
    dictionary: Optional[DataDictionary],
    template: Optional[MetadataTemplate],
) -> StandardizationOutcome:
    prompt = build_prompt(record, condition, dictionary, template)
    attempts = 0
    for extra in ("", "\n\n" + PROMPTS["retry_reminder"]):
        attempt_prompt = prompt if not extra else Prompt(
            text=prompt.text + extra,
            record_id=prompt.record_id,
            condition=prompt.condition,
            guidance_digest=prompt.guidance_digest,
        )
        attempts += 1
        try:
            completion = backend.complete(attempt_prompt)
        except BackendError as exc:
            return StandardizationOutcome(
                record_id=record.id,
                status=OutcomeStatus.BACKEND_FAILED,
                attempts=attempts,
                detail=str(exc),
            )
        try:
            corrected = parse_model_output(completion, record_id=record.id, source=record.source)
            return StandardizationOutcome(
                record_id=record.id,
                status=OutcomeStatus.CORRECTED,
                corrected=corrected,
                attempts=attempts,
            )
        except ModelOutputUnparseable:
            continue
    return StandardizationOutcome(
        record_id=record.id,
        status=OutcomeStatus.PARSE_FAILED,
        attempts=attempts,
        detail="model output had no name: value lines after retry",
    )


def standardize_batch(
    corpus: Corpus,
    condition: Condition,
    backend=None,
    dictionary: Optional[DataDictionary] = None,
    template: Optional[MetadataTemplate] = None,
    max_inflight: int = 4,
) -> tuple[Corpus, list[StandardizationOutcome]]:
    """Correct every record in the corpus under one condition.

    Every input record yields exactly one outcome, in input order. Failed
    records are carried through unchanged (and flagged in the output corpus
    meta), so corpus size is preserved.
    """
    if condition == Condition.BASELINE:
        outcomes = [
            StandardizationOutcome(
                record_id=rec.id, status=OutcomeStatus.CORRECTED, corrected=rec, attempts=0
            )
            for rec in corpus.records
        ]
        out = Corpus(
            name=corpus.name,
            source=corpus.source,
            cohort=corpus.cohort,
            condition=Condition.BASELINE,
            records=corpus.records,
            meta=dict(corpus.meta),
        )
        return out, outcomes

    if backend is None:
        raise MissingGuidance("non-baseline conditions need a completion backend")
    if condition == Condition.DD and dictionary is None:
        raise MissingGuidance("DD condition requires a data dictionary")
    if condition == Condition.CEDAR and template is None:
        raise MissingGuidance("CEDAR condition requires a template")

    def work(rec: MetadataRecord) -> StandardizationOutcome:
        return _correct_one(rec, condition, backend, dictionary, template)

    if max_inflight > 1:
        with ThreadPoolExecutor(max_workers=max_inflight) as pool:
            outcomes = list(pool.map(work, corpus.records))
    else:
        outcomes = [work(rec) for rec in corpus.records]

    records = []
    failed = []
    for rec, outcome in zip(corpus.records, outcomes):
        if outcome.status == OutcomeStatus.CORRECTED:
            records.append(outcome.corrected)
        else:
            records.append(rec)
            failed.append(rec.id)
    meta = dict(corpus.meta)
    if failed:
        meta["failed_ids"] = failed
    out = Corpus(
        name=corpus.name,
        source=corpus.source,
        cohort=corpus.cohort,
        condition=condition,
        records=tuple(records),
        meta=meta,
    )
    return out, outcomes
