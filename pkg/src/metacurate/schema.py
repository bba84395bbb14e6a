"""Data dictionaries, metadata templates, and value validation.

Templates and dictionaries are immutable after load. Ontology branches are
static curated term snapshots shipped with the package; nothing is resolved
from a live ontology service.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from importlib import resources
from typing import Optional, Union

from .errors import EmptyTermList, FormatError
from .records import MetadataRecord, canon, canon_name

EM_DASH = "—"


class Violation(str, Enum):
    UNKNOWN_FIELD = "UnknownField"
    TYPE_MISMATCH = "TypeMismatch"
    NOT_IN_VALUE_SET = "NotInValueSet"
    NOT_IN_ONTOLOGY_BRANCH = "NotInOntologyBranch"
    MISSING_REQUIRED = "MissingRequired"


@dataclass(frozen=True)
class ValidationResult:
    conforms: bool
    violation: Optional[Violation] = None

    def __post_init__(self):
        if self.conforms == (self.violation is not None):
            raise ValueError("conforms must hold exactly when violation is absent")

    @classmethod
    def ok(cls) -> "ValidationResult":
        return cls(True)

    @classmethod
    def fail(cls, violation: Violation) -> "ValidationResult":
        return cls(False, violation)


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------


class DataTypeKind(str, Enum):
    TEXT = "text"
    INTEGER = "integer"
    FLOAT_WITH_UNIT = "float_with_unit"
    DATE = "date"


_INT_RE = re.compile(r"^[+-]?\d+$")
# A decimal number optionally followed by a unit token; bare integers conform.
_FLOAT_UNIT_RE = re.compile(r"^[+-]?(\d+(\.\d+)?|\.\d+)\s*([a-zµ%]+)?$")
_DATE_FORMATS = ("%Y-%m-%d", "%Y/%m/%d", "%d-%b-%Y", "%Y-%m", "%Y")


@dataclass(frozen=True)
class DataType:
    kind: DataTypeKind

    def check(self, value: str) -> bool:
        v = canon(value)
        if self.kind == DataTypeKind.TEXT:
            return True
        if self.kind == DataTypeKind.INTEGER:
            return bool(_INT_RE.match(v))
        if self.kind == DataTypeKind.FLOAT_WITH_UNIT:
            return bool(_FLOAT_UNIT_RE.match(v))
        for fmt in _DATE_FORMATS:
            try:
                datetime.strptime(value.strip(), fmt)
                return True
            except ValueError:
                continue
        return False

    @property
    def violation(self) -> Violation:
        return Violation.TYPE_MISMATCH

    def value_format(self) -> str:
        return {
            DataTypeKind.TEXT: "{text}",
            DataTypeKind.INTEGER: "{integer}",
            DataTypeKind.FLOAT_WITH_UNIT: "{float}{unit}",
            DataTypeKind.DATE: "{date}",
        }[self.kind]


def _dedupe_terms(terms) -> tuple[str, ...]:
    seen = set()
    out = []
    for term in terms:
        c = canon(term)
        if c and c not in seen:
            seen.add(c)
            out.append(term.strip())
    return tuple(out)


@dataclass(frozen=True)
class ValueSet:
    terms: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _dedupe_terms(self.terms))
        if not self.terms:
            raise EmptyTermList("value set has no terms")

    def check(self, value: str) -> bool:
        return canon(value) in {canon(t) for t in self.terms}

    @property
    def violation(self) -> Violation:
        return Violation.NOT_IN_VALUE_SET

    def value_format(self) -> str:
        return "Must be one of: " + ", ".join(self.terms)


#: Display names used when rendering ontology constraints into prompts.
ONTOLOGY_DISPLAY = {"UBERON": "Uberon", "DOID": "Disease Ontology (DO)"}


@dataclass(frozen=True)
class OntologyBranch:
    ontology: str
    terms: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _dedupe_terms(self.terms))
        if not self.terms:
            raise EmptyTermList(f"ontology branch {self.ontology} has no terms")

    def check(self, value: str) -> bool:
        return canon(value) in {canon(t) for t in self.terms}

    @property
    def violation(self) -> Violation:
        return Violation.NOT_IN_ONTOLOGY_BRANCH

    def value_format(self) -> str:
        display = ONTOLOGY_DISPLAY.get(self.ontology, self.ontology)
        return f"Must be from {display} ontology (allowed terms: " + ", ".join(self.terms) + ")"


FieldConstraint = Union[DataType, ValueSet, OntologyBranch]


# ---------------------------------------------------------------------------
# Data dictionary (three text columns, em-dash separated)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DictionaryEntry:
    field_name: str
    description: str
    value_format: str


@dataclass(frozen=True)
class DataDictionary:
    entries: tuple[DictionaryEntry, ...]

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(e.field_name for e in self.entries)

    def render(self, header: str = "Name — Description — Value format") -> str:
        lines = [header]
        for e in self.entries:
            lines.append(f"{e.field_name} — {e.description} — {e.value_format}")
        return "\n\n".join(lines)


def parse_data_dictionary(text: str) -> DataDictionary:
    """Parse the three-column, em-dash-separated dictionary format.

    One entry per non-empty line; a leading header line is skipped. Entries
    with fewer than three columns raise FormatError with the entry index.
    """
    entries: list[DictionaryEntry] = []
    seen: set[str] = set()
    index = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(EM_DASH)]
        if index == 0 and [canon(p) for p in parts] == ["name", "description", "value format"]:
            continue
        index += 1
        if len(parts) < 3:
            raise FormatError(
                f"dictionary entry {index} has {len(parts)} column(s), expected 3",
                line=index,
            )
        name = canon_name(parts[0])
        description = (" " + EM_DASH + " ").join(parts[1:-1]) if len(parts) > 3 else parts[1]
        if name in seen:
            raise FormatError(f"duplicate dictionary field {name!r}", line=index)
        seen.add(name)
        entries.append(DictionaryEntry(name, description, parts[-1]))
    if not entries:
        raise FormatError("dictionary has no entries")
    return DataDictionary(tuple(entries))


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TemplateField:
    name: str
    description: str
    constraint: FieldConstraint
    required: bool = False


@dataclass(frozen=True)
class MetadataTemplate:
    name: str
    fields: tuple[TemplateField, ...]

    def __post_init__(self):
        if not self.fields:
            raise FormatError("template has no fields")
        names = [f.name for f in self.fields]
        if len(names) != len(set(names)):
            raise FormatError("template has duplicate field names")

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def field(self, name: str) -> Optional[TemplateField]:
        wanted = canon_name(name)
        for f in self.fields:
            if f.name == wanted:
                return f
        return None

    def render(self, header: str = "Name — Description — Comments") -> str:
        lines = [header]
        for f in self.fields:
            lines.append(f"{f.name} — {f.description} — {f.constraint.value_format()}")
        return "\n\n".join(lines)


def _parse_constraint(obj: dict) -> FieldConstraint:
    kind = obj.get("kind")
    if kind == "data_type":
        try:
            return DataType(DataTypeKind(obj["type"]))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad data_type constraint: {exc}") from exc
    if kind == "value_set":
        return ValueSet(tuple(obj.get("terms", [])))
    if kind == "ontology_branch":
        if "ontology" not in obj:
            raise FormatError("ontology_branch constraint missing ontology id")
        return OntologyBranch(obj["ontology"], tuple(obj.get("terms", [])))
    raise FormatError(f"unknown constraint kind {kind!r}")


def parse_template(obj: dict) -> MetadataTemplate:
    if not isinstance(obj, dict) or "fields" not in obj:
        raise FormatError("template object must have a fields array")
    fields = []
    for raw in obj["fields"]:
        try:
            name = canon_name(raw["name"])
            constraint = _parse_constraint(raw.get("constraint", {}))
            fields.append(
                TemplateField(
                    name=name,
                    description=raw.get("description", ""),
                    constraint=constraint,
                    required=bool(raw.get("required", False)),
                )
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad template field: {exc}") from exc
    return MetadataTemplate(name=obj.get("name", ""), fields=tuple(fields))


def load_template(path) -> MetadataTemplate:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"template is not valid JSON: {exc}") from exc
    return parse_template(obj)


def _asset_text(name: str) -> str:
    return resources.files("metacurate.assets").joinpath(name).read_text(encoding="utf-8")


def load_bundled_template(source) -> MetadataTemplate:
    """Bundled template for a source ("biosample" or "geo")."""
    key = source.value if hasattr(source, "value") else str(source)
    return parse_template(json.loads(_asset_text(f"{key}_template.json")))


def load_bundled_dictionary(source=None) -> DataDictionary:
    """Bundled data dictionary. GEO reuses the BioSample dictionary."""
    return parse_data_dictionary(_asset_text("biosample_dictionary.txt"))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_value(template: MetadataTemplate, field_name: str, value: str) -> ValidationResult:
    """Check one value against the named template field's constraint.

    Unknown fields and missing-marker values on required fields are
    violations; a missing marker on an optional field conforms.
    """
    tfield = template.field(field_name)
    if tfield is None:
        return ValidationResult.fail(Violation.UNKNOWN_FIELD)
    if canon(value) in ("", "na"):
        if tfield.required:
            return ValidationResult.fail(Violation.MISSING_REQUIRED)
        return ValidationResult.ok()
    if tfield.constraint.check(value):
        return ValidationResult.ok()
    return ValidationResult.fail(tfield.constraint.violation)


def validate_record(
    template: MetadataTemplate, record: MetadataRecord
) -> list[tuple[str, ValidationResult]]:
    """One result per template field plus UnknownField for extra record fields."""
    results: list[tuple[str, ValidationResult]] = []
    for tfield in template.fields:
        value = record.lookup(tfield.name)
        if value is None:
            if tfield.required:
                results.append((tfield.name, ValidationResult.fail(Violation.MISSING_REQUIRED)))
            else:
                results.append((tfield.name, ValidationResult.ok()))
        else:
            results.append((tfield.name, validate_value(template, tfield.name, value)))
    template_names = set(template.field_names)
    seen = set()
    for pair in record.fields:
        if pair.name not in template_names and pair.name not in seen:
            seen.add(pair.name)
            results.append((pair.name, ValidationResult.fail(Violation.UNKNOWN_FIELD)))
    return results
