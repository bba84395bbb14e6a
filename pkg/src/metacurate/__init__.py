"""Metadata standardization pipeline with retrieval evaluation."""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    MISSING,
    Cohort,
    Condition,
    Corpus,
    FieldValuePair,
    MetadataRecord,
    Source,
    canon,
    canon_name,
    deserialize_corpus,
    load_corpus,
    lookup_field,
    parse_biosample_record,
    parse_geo_record,
    save_corpus,
    serialize_corpus,
)
