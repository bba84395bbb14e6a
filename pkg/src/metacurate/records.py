"""Core record model: field/value pairs, records, corpora, parsers and corpus files.

Records are immutable after construction. Parsers are pure functions; the
same input bytes always yield the same record.
"""

from __future__ import annotations

import hashlib
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .errors import FormatError, MalformedRecord

#: Explicit missing-value marker. Values that read "NA" in any case are
#: stored as this marker and never match a search query.
MISSING = "NA"

_WS_RE = re.compile(r"\s+")

#: Field-name synonyms folded into one canonical name. Names are mapped,
#: values are never moved between semantically different fields.
NAME_SYNONYMS = {
    "tissue type": "tissue",
    "tissue_type": "tissue",
    "organism name": "organism",
}


class Source(str, Enum):
    BIOSAMPLE = "biosample"
    GEO = "geo"


class Cohort(str, Enum):
    LUNG = "lung"
    LIVER = "liver"
    OVARIAN = "ovarian"


class Condition(str, Enum):
    """Which guidance produced a corpus: none, data dictionary, or template."""

    BASELINE = "baseline"
    DD = "dd"
    CEDAR = "cedar"


def canon(text: str) -> str:
    """Canonical comparison form: trimmed, lowercased, whitespace collapsed."""
    return _WS_RE.sub(" ", text.strip()).lower()


def canon_name(name: str) -> str:
    """Canonical field name: `canon` plus the synonym map. Idempotent."""
    c = canon(name)
    return NAME_SYNONYMS.get(c, c)


def is_missing(value: str) -> bool:
    return canon(value) == "na"


@dataclass(frozen=True)
class FieldValuePair:
    """One metadata field. The name is canonicalized at construction."""

    name: str
    value: str

    def __post_init__(self):
        name = canon_name(self.name)
        if not name:
            raise ValueError("field name is empty after canonicalization")
        object.__setattr__(self, "name", name)
        value = self.value.strip()
        if value and is_missing(value):
            value = MISSING
        object.__setattr__(self, "value", value)

    @property
    def missing(self) -> bool:
        return self.value == MISSING


@dataclass(frozen=True)
class MetadataRecord:
    """Ordered field/value pairs with identity and provenance.

    Duplicate field names are kept in order; lookups return the first
    occurrence.
    """

    id: str
    source: Source
    fields: tuple[FieldValuePair, ...]
    raw_text: Optional[str] = None

    def lookup(self, name: str) -> Optional[str]:
        """Value of the first pair whose canonical name matches, else None."""
        wanted = canon_name(name)
        for pair in self.fields:
            if pair.name == wanted:
                return pair.value
        return None


def lookup_field(record: MetadataRecord, name: str) -> Optional[str]:
    return record.lookup(name)


@dataclass(frozen=True)
class Corpus:
    """A named set of records sharing source, cohort and condition."""

    name: str
    source: Source
    cohort: Cohort
    condition: Condition
    records: tuple[MetadataRecord, ...]
    meta: dict = field(default_factory=dict, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValueError(f"duplicate record id in corpus: {rec.id!r}")
            seen.add(rec.id)
            if rec.source != self.source:
                raise ValueError(
                    f"record {rec.id!r} has source {rec.source.value}, "
                    f"corpus is {self.source.value}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def get(self, record_id: str) -> Optional[MetadataRecord]:
        for rec in self.records:
            if rec.id == record_id:
                return rec
        return None


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------

# Top-level descriptor tags harvested from BioSample-style XML in addition
# to the attribute pairs.
_DESCRIPTOR_TAGS = {"organism", "title", "package"}


def parse_biosample_record(xml_text: str, record_id: Optional[str] = None) -> MetadataRecord:
    """Parse a BioSample-style XML fragment into a record.

    Accepts both `<Attribute attribute_name="x">v</Attribute>` elements and
    HTML-ish attribute tables of `<tr><td>name</td><td>value</td></tr>` rows.
    Top-level descriptors (Organism, Title, Package) become pairs too, in
    document order. Raises MalformedRecord on unparseable XML or when no
    pairs are found at all.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedRecord(f"unparseable XML: {exc}") from exc

    pairs: list[FieldValuePair] = []
    accession = root.get("accession") or root.get("id")

    for elem in root.iter():
        tag = elem.tag.lower()
        if tag == "attribute":
            name = (
                elem.get("harmonized_name")
                or elem.get("attribute_name")
                or elem.get("display_name")
            )
            value = (elem.text or "").strip()
            if name and name.strip():
                pairs.append(FieldValuePair(name, value))
        elif tag == "tr":
            cells = [c for c in elem if c.tag.lower() in ("td", "th")]
            if len(cells) >= 2:
                name = "".join(cells[0].itertext()).strip()
                value = "".join(cells[1].itertext()).strip()
                if name:
                    pairs.append(FieldValuePair(name, value))
        elif tag in _DESCRIPTOR_TAGS:
            value = elem.get("taxonomy_name") or "".join(elem.itertext()).strip()
            if value:
                pairs.append(FieldValuePair(elem.tag, value))

    if not pairs:
        raise MalformedRecord("no field/value pairs found")

    rid = record_id or accession or _digest_id(xml_text)
    return MetadataRecord(id=rid, source=Source.BIOSAMPLE, fields=tuple(pairs), raw_text=xml_text)


_GEO_SEP_RE = re.compile(r"[:=]")


def parse_geo_record(text: str, record_id: Optional[str] = None) -> MetadataRecord:
    """Parse line-oriented `key: value` / `key = value` text into a record.

    A line without a separator continues the previous value (joined with a
    single space), as does any indented line. Lines before the first pair
    are skipped. Raises MalformedRecord when no pairs parse at all.
    """
    pairs: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        continuation = line[:1].isspace() and pairs
        sep = _GEO_SEP_RE.search(line)
        if sep and not continuation:
            name, value = line[: sep.start()], line[sep.end() :]
            if name.strip():
                pairs.append((name, value.strip()))
                continue
            sep = None
        if pairs:
            name, value = pairs[-1]
            pairs[-1] = (name, f"{value} {line.strip()}".strip())
        # else: leading junk line, skipped

    if not pairs:
        raise MalformedRecord("no field/value pairs found")

    built = tuple(FieldValuePair(n, v) for n, v in pairs)
    rid = record_id or _geo_accession(built) or _digest_id(text)
    return MetadataRecord(id=rid, source=Source.GEO, fields=built, raw_text=text)


def _geo_accession(pairs: Iterable[FieldValuePair]) -> Optional[str]:
    for pair in pairs:
        if pair.name in ("geo accession", "accession", "sample id") and not pair.missing:
            return pair.value
    return None


def _digest_id(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


RecordParser = Callable[[str], MetadataRecord]

PARSERS: dict[Source, RecordParser] = {
    Source.BIOSAMPLE: parse_biosample_record,
    Source.GEO: parse_geo_record,
}


# ---------------------------------------------------------------------------
# Corpus files: one `#corpus` header line, then one JSON object per record
# ---------------------------------------------------------------------------

_HEADER_PREFIX = "#corpus "


def serialize_corpus(corpus: Corpus) -> str:
    def dump(obj) -> str:
        return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))

    lines = [
        _HEADER_PREFIX
        + dump(
            {
                "name": corpus.name,
                "source": corpus.source.value,
                "cohort": corpus.cohort.value,
                "condition": corpus.condition.value,
                "meta": corpus.meta,
            }
        )
    ]
    for rec in corpus.records:
        obj = {
            "id": rec.id,
            "source": rec.source.value,
            "cohort": corpus.cohort.value,
            "condition": corpus.condition.value,
            "fields": [{"name": p.name, "value": p.value} for p in rec.fields],
        }
        if rec.raw_text is not None:
            obj["raw"] = rec.raw_text
        lines.append(dump(obj))
    return "\n".join(lines) + "\n"


def deserialize_corpus(text: str) -> Corpus:
    # split on \n only: JSON never emits raw \n, but values may contain other
    # code points splitlines() would treat as line breaks
    lines = [line.rstrip("\r") for line in text.split("\n")]
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise FormatError("missing #corpus header line", line=1)
    try:
        header = json.loads(lines[0][len(_HEADER_PREFIX) :])
        name = header["name"]
        source = Source(header["source"])
        cohort = Cohort(header["cohort"])
        condition = Condition(header["condition"])
        meta = header.get("meta", {})
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise FormatError(f"bad corpus header: {exc}", line=1) from exc

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad record line: {exc}", line=lineno) from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise FormatError("record line missing id", line=lineno)
        try:
            rec_source = Source(obj.get("source", source.value))
            fields = tuple(
                FieldValuePair(f["name"], f["value"]) for f in obj.get("fields", [])
            )
            record = MetadataRecord(
                id=str(obj["id"]),
                source=rec_source,
                fields=fields,
                raw_text=obj.get("raw"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad record line: {exc}", line=lineno) from exc
        if rec_source != source:
            raise FormatError(
                f"record source {rec_source.value} != corpus source {source.value}",
                line=lineno,
            )
        records.append(record)

    try:
        return Corpus(
            name=name,
            source=source,
            cohort=cohort,
            condition=condition,
            records=tuple(records),
            meta=meta,
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return deserialize_corpus(fh.read())


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_corpus(corpus))
