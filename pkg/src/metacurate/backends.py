"""Completion backends: live HTTP, deterministic replay cache, and a rule
engine used for hermetic tests and trend reproduction.

All three satisfy one contract: ``complete(prompt) -> text``. The rule and
replay backends are pure given their configuration and safe to call from
concurrent batch workers.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from .errors import BackendError, CacheMiss, FormatError
from .records import MISSING, Condition, canon, canon_name
from .schema import DataDictionary, MetadataTemplate, OntologyBranch
from .standardize import Prompt


class LiveBackend:
    """Chat-completion HTTP backend; temperature fixed at 0, one sample."""

    def __init__(self, endpoint: str, model: str, api_key: Optional[str] = None,
                 session: Optional[requests.Session] = None, timeout: float = 120.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY")
        self.session = session or requests.Session()
        self.timeout = timeout

    def complete(self, prompt: Prompt) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": 0,
        }
        try:
            resp = self.session.post(self.endpoint, json=body, headers=headers,
                                     timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"completion request failed: {exc}") from exc
        if resp.status_code != 200:
            # Length rejections land here too; the record is failed, never truncated.
            raise BackendError(f"completion endpoint returned {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc


def prompt_cache_key(prompt_text: str) -> str:
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


class ReplayBackend:
    """Serves recorded responses keyed by prompt hash.

    In strict mode a cache miss is an error; in capture mode misses are
    forwarded to an inner backend and the response is recorded.
    """

    def __init__(self, cache_dir, mode: str = "strict", inner=None):
        if mode not in ("strict", "capture"):
            raise ValueError(f"unknown replay mode {mode!r}")
        if mode == "capture" and inner is None:
            raise ValueError("capture mode needs an inner backend to record")
        self.cache_dir = Path(cache_dir)
        self.mode = mode
        self.inner = inner

    def _path(self, prompt: Prompt) -> Path:
        return self.cache_dir / f"{prompt_cache_key(prompt.text)}.txt"

    def complete(self, prompt: Prompt) -> str:
        path = self._path(prompt)
        if path.exists():
            return path.read_text(encoding="utf-8")
        if self.mode == "strict":
            raise CacheMiss(f"no recorded response for prompt {path.stem[:12]}…")
        response = self.inner.complete(prompt)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(response, encoding="utf-8")
        return response


# ---------------------------------------------------------------------------
# Rule backend
# ---------------------------------------------------------------------------

_INLINE_RECORD_RE = re.compile(r'Convert the record: "(.*?)" to the format given by', re.DOTALL)

#: Tissue keyword rules in gold-label order mapped to ontology snapshot terms.
_KEYWORD_TERM_MAP: tuple[tuple[tuple[str, ...], str], ...] = (
    (("lung",), "lung"),
    (("liver", "hcc"), "liver"),
    (("ovary", "ovarian"), "ovary"),
    (("pbmc", "blood"), "blood"),
    (("plasma",), "blood plasma"),
    (("lymph",), "lymph"),
)

_TOKEN_RE = re.compile(r"[^a-z0-9]+")


class RuleBackend:
    """Deterministic mechanical standardizer.

    Dictionary guidance (DD) corrects conservatively: tissue values that are
    disease terms move to the disease field, and a tissue value is replaced
    by a bare ontology term only when that term already appears as a whole
    token (pure reformatting, e.g. "lung tissue" -> "lung"). Template
    guidance (CEDAR) additionally resolves synonyms, abbreviations and
    adjectives by substring keyword mapping ("PBMC" -> "blood",
    "ovarian tumor" -> "ovary"). Both fill absent guidance fields with the
    missing marker and emit fields in guidance order.
    """

    def __init__(self, template: MetadataTemplate, dictionary: Optional[DataDictionary] = None):
        self.template = template
        self.dictionary = dictionary
        self._tissue_terms = self._branch_terms("tissue")
        self._disease_terms = self._branch_terms("disease")
        # Single-token map targets, in rule order, that the snapshot vouches for.
        self._dd_targets = [
            term
            for _, term in _KEYWORD_TERM_MAP
            if " " not in term and canon(term) in self._tissue_terms
        ]

    def _branch_terms(self, field_name: str) -> set[str]:
        tfield = self.template.field(field_name)
        if tfield is None or not isinstance(tfield.constraint, OntologyBranch):
            return set()
        return {canon(t) for t in tfield.constraint.terms}

    def complete(self, prompt: Prompt) -> str:
        fields = self._parse_inline_record(prompt.text)
        values = {}
        for name, value in fields:
            values.setdefault(name, value)

        tissue = values.get("tissue")
        if tissue is not None and canon(tissue) != "na":
            moved = canon(tissue) in self._disease_terms
            if moved and canon(values.get("disease", MISSING)) in ("", "na"):
                values["disease"] = tissue
            if prompt.condition == Condition.CEDAR:
                values["tissue"] = self._map_cedar(tissue, moved)
            else:
                values["tissue"] = MISSING if moved else self._map_dd(tissue)

        names = self._guidance_field_names(prompt.condition)
        lines = [f"{name}: {values.get(name, MISSING)}" for name in names]
        return "\n".join(lines) + "\n"

    def _guidance_field_names(self, condition: Condition) -> tuple[str, ...]:
        if condition == Condition.DD and self.dictionary is not None:
            return self.dictionary.field_names
        return self.template.field_names

    def _map_cedar(self, tissue: str, moved: bool) -> str:
        if not moved and canon(tissue) in self._tissue_terms:
            return tissue
        hay = canon(tissue)
        for keywords, term in _KEYWORD_TERM_MAP:
            if any(kw in hay for kw in keywords):
                return term
        return MISSING if moved else tissue

    def _map_dd(self, tissue: str) -> str:
        tokens = set(_TOKEN_RE.split(canon(tissue)))
        for term in self._dd_targets:
            if term in tokens:
                return term
        return tissue

    @staticmethod
    def _parse_inline_record(prompt_text: str) -> list[tuple[str, str]]:
        m = _INLINE_RECORD_RE.search(prompt_text)
        if m is None:
            raise BackendError("prompt does not contain an inline record")
        fields = []
        for piece in m.group(1).split(" — "):
            if ":" not in piece:
                continue
            name, value = piece.split(":", 1)
            if name.strip():
                fields.append((canon_name(name), value.strip()))
        return fields


# ---------------------------------------------------------------------------
# Backend configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BackendConfig:
    kind: str
    endpoint: Optional[str] = None
    model: Optional[str] = None
    cache_path: Optional[str] = None
    replay_mode: str = "strict"
    max_inflight: int = 4
    extra: dict = field(default_factory=dict)

    def digest(self) -> str:
        blob = json.dumps(
            {
                "kind": self.kind,
                "endpoint": self.endpoint,
                "model": self.model,
                "cache_path": self.cache_path,
                "replay_mode": self.replay_mode,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def load_backend_config(path) -> BackendConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"backend config is not valid JSON: {exc}") from exc
    known = {"kind", "endpoint", "model", "cache_path", "replay_mode", "max_inflight"}
    if "kind" not in obj:
        raise FormatError("backend config missing 'kind'")
    return BackendConfig(
        kind=obj["kind"],
        endpoint=obj.get("endpoint"),
        model=obj.get("model"),
        cache_path=obj.get("cache_path"),
        replay_mode=obj.get("replay_mode", "strict"),
        max_inflight=int(obj.get("max_inflight", 4)),
        extra={k: v for k, v in obj.items() if k not in known},
    )


def build_backend(config: BackendConfig, template: Optional[MetadataTemplate] = None,
                  dictionary: Optional[DataDictionary] = None):
    if config.kind == "rule":
        if template is None:
            raise FormatError("rule backend needs a template")
        return RuleBackend(template=template, dictionary=dictionary)
    if config.kind == "replay":
        if not config.cache_path:
            raise FormatError("replay backend needs cache_path")
        inner = None
        if config.replay_mode == "capture":
            if template is None:
                raise FormatError("capture mode records the rule backend; template needed")
            inner = RuleBackend(template=template, dictionary=dictionary)
        return ReplayBackend(config.cache_path, mode=config.replay_mode, inner=inner)
    if config.kind == "live":
        if not config.endpoint or not config.model:
            raise FormatError("live backend needs endpoint and model")
        return LiveBackend(endpoint=config.endpoint, model=config.model)
    raise FormatError(f"unknown backend kind {config.kind!r}")
