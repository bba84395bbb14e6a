"""Command-line entry point orchestrating the pipeline stages.

Every artifact-producing subcommand drops a manifest.json beside its
outputs recording inputs, settings, and content hashes, so a run can be
reproduced. Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .backends import BackendConfig, build_backend, load_backend_config
from .errors import MetacurateError
from .evaluation import evaluate_all
from .ingest import (
    LiveRepositoryClient,
    SamplingPlan,
    build_query,
    fetch_raw,
    sample_uniform,
)
from .labeling import assign_tissue_label
from .records import (
    PARSERS,
    Cohort,
    Condition,
    Source,
    load_corpus,
    save_corpus,
)
from .schema import load_bundled_dictionary, load_bundled_template, load_template, parse_data_dictionary
from .search import build_index, execute_indexed, parse_query
from .standardize import standardize_batch


def _now_iso() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    created_at: str = field(default_factory=_now_iso)
    package_version: str = __version__
    seed: int | None = None
    backend_digest: str | None = None
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def add_input(self, path):
        path = Path(path)
        self.inputs[path.name] = _sha256_file(path)

    def write(self, out_dir: Path):
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "manifest.json"
        payload = {k: v for k, v in asdict(self).items() if v not in (None, {}, [])}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _fail(message: str) -> "click.ClickException":
    err = click.ClickException(message)
    err.exit_code = 1
    return err


source_option = click.option(
    "--source", type=click.Choice([s.value for s in Source]), required=True
)
cohort_option = click.option(
    "--cohort", type=click.Choice([c.value for c in Cohort]), required=True
)


@click.group()
@click.version_option(__version__)
def main():
    """Metadata standardization and retrieval-evaluation pipeline."""


# -- ingest ------------------------------------------------------------------

@main.command()
@source_option
@cohort_option
@click.option("--limit", type=int, default=1000, show_default=True)
@click.option("--cache-dir", type=click.Path(path_type=Path), default=Path("cache/raw"),
              show_default=True)
@click.option("--live", is_flag=True, help="Allow hitting the public repository endpoints.")
@click.option("--base-url", default=None,
              help="Override the repository base URL (implies permission to fetch).")
def ingest(source, cohort, limit, cache_dir, live, base_url):
    """Fetch raw records for one cohort query into the cache directory."""
    if not live and base_url is None:
        raise click.UsageError("refusing to fetch without --live (or an explicit --base-url)")
    src, coh = Source(source), Cohort(cohort)
    query = build_query(coh, src)
    client_kwargs = {"api_key": os.environ.get("NCBI_API_KEY")}
    if base_url:
        client_kwargs["base_url"] = base_url
    client = LiveRepositoryClient(src, **client_kwargs)
    try:
        payloads = fetch_raw(query, limit, client, cache_dir=cache_dir)
    except MetacurateError as exc:
        raise _fail(str(exc))
    out_dir = cache_dir / src.value / coh.value
    manifest = RunManifest(command="ingest")
    manifest.outputs = sorted(p.name for p in out_dir.iterdir() if p.name != "manifest.json")
    manifest.write(out_dir)
    click.echo(f"fetched {len(payloads)} raw payloads into {out_dir}")


# -- sample ------------------------------------------------------------------

@main.command()
@source_option
@cohort_option
@click.option("--raw-dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True, help="Directory of raw record payload files.")
@click.option("--initial", type=int, default=1000, show_default=True)
@click.option("--target", type=int, default=800, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--name", default=None, help="Corpus name (default: <source>_<cohort>).")
@click.option("--out", type=click.Path(path_type=Path), default=Path("corpora"),
              show_default=True)
def sample(source, cohort, raw_dir, initial, target, seed, name, out):
    """Parse raw payloads, drop malformed ones, and sample a baseline corpus."""
    src, coh = Source(source), Cohort(cohort)
    name = name or f"{src.value}_{coh.value}"
    files = sorted(p for p in raw_dir.iterdir() if p.is_file() and p.name != "manifest.json")
    raw = [p.read_text(encoding="utf-8") for p in files[:initial]]
    try:
        plan = SamplingPlan(initial_count=initial, target_count=target, seed=seed)
        corpus, report = sample_uniform(raw, plan, PARSERS[src], name=name,
                                        source=src, cohort=coh)
    except (MetacurateError, ValueError) as exc:
        raise _fail(str(exc))
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / f"{name}.baseline.jsonl"
    save_corpus(corpus, corpus_path)
    manifest = RunManifest(command="sample", seed=seed)
    for path in files[:initial]:
        manifest.add_input(path)
    manifest.outputs = [corpus_path.name]
    manifest.write(out)
    click.echo(
        f"sampled {report.sampled}/{report.input} "
        f"({report.malformed} malformed) -> {corpus_path}"
    )


# -- standardize -------------------------------------------------------------

@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--condition", type=click.Choice([c.value for c in Condition]), required=True)
@click.option("--backend", "backend_kind", type=click.Choice(["rule", "replay", "live"]),
              default="rule", show_default=True)
@click.option("--backend-config", type=click.Path(exists=True, path_type=Path), default=None,
              help="JSON backend config; overrides --backend.")
@click.option("--replay-cache", type=click.Path(path_type=Path), default=None)
@click.option("--replay-mode", type=click.Choice(["strict", "capture"]), default="strict",
              show_default=True)
@click.option("--template", "template_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Template file (default: bundled for the corpus source).")
@click.option("--dictionary", "dictionary_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Dictionary file (default: bundled).")
@click.option("--out", type=click.Path(path_type=Path), default=Path("standardized"),
              show_default=True)
def standardize(corpus_path, condition, backend_kind, backend_config, replay_cache,
                replay_mode, template_path, dictionary_path, out):
    """Correct a corpus under one condition and write the corrected corpus."""
    cond = Condition(condition)
    try:
        corpus = load_corpus(corpus_path)
    except MetacurateError as exc:
        raise _fail(f"cannot load corpus: {exc}")

    template = load_template(template_path) if template_path \
        else load_bundled_template(corpus.source)
    if dictionary_path:
        dictionary = parse_data_dictionary(Path(dictionary_path).read_text(encoding="utf-8"))
    else:
        dictionary = load_bundled_dictionary(corpus.source)

    if backend_config:
        config = load_backend_config(backend_config)
    else:
        config = BackendConfig(
            kind=backend_kind,
            cache_path=str(replay_cache) if replay_cache else None,
            replay_mode=replay_mode,
        )
    backend = None
    if cond is not Condition.BASELINE:
        try:
            backend = build_backend(config, template=template, dictionary=dictionary)
        except MetacurateError as exc:
            raise _fail(str(exc))

    try:
        corrected, outcomes = standardize_batch(
            corpus, cond, backend, dictionary=dictionary, template=template,
            max_inflight=config.max_inflight,
        )
    except MetacurateError as exc:
        raise _fail(str(exc))

    out.mkdir(parents=True, exist_ok=True)
    corpus_out = out / f"{corpus.name}.{cond.value}.jsonl"
    save_corpus(corrected, corpus_out)
    outcomes_out = out / f"{corpus.name}.{cond.value}.outcomes.jsonl"
    with open(outcomes_out, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(
                {"id": o.record_id, "status": o.status.value, "attempts": o.attempts,
                 "detail": o.detail}, ensure_ascii=False) + "\n")

    manifest = RunManifest(command="standardize", backend_digest=config.digest())
    manifest.add_input(corpus_path)
    manifest.outputs = [corpus_out.name, outcomes_out.name]
    manifest.write(out)

    failed = [o for o in outcomes if o.status.value != "corrected"]
    click.echo(f"standardized {len(outcomes) - len(failed)}/{len(outcomes)} records "
               f"-> {corpus_out}")
    if failed:
        click.echo(f"{len(failed)} records failed (carried through unchanged)", err=True)


# -- label -------------------------------------------------------------------

@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output directory (default: alongside the corpus).")
def label(corpus_path, out):
    """Write `id<TAB>label` gold labels for a corpus."""
    try:
        corpus = load_corpus(corpus_path)
    except MetacurateError as exc:
        raise _fail(f"cannot load corpus: {exc}")
    out_dir = out or corpus_path.parent
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out_dir / f"{corpus_path.name}.labels"
    with open(labels_path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(f"{rec.id}\t{assign_tissue_label(rec).value}\n")
    manifest = RunManifest(command="label")
    manifest.add_input(corpus_path)
    manifest.outputs = [labels_path.name]
    manifest.write(out_dir)
    click.echo(f"labeled {len(corpus)} records -> {labels_path}")


# -- search ------------------------------------------------------------------

@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--query", "query_text", required=True)
@click.option("--strict-case", is_flag=True, help="Match bytes exactly (no canonicalization).")
def search(corpus_path, query_text, strict_case):
    """Print the ids of records matching a field:value query, one per line."""
    try:
        corpus = load_corpus(corpus_path)
        query = parse_query(query_text)
    except MetacurateError as exc:
        raise _fail(str(exc))
    index = build_index(corpus)
    result = execute_indexed(query, index, strict_case=strict_case)
    for rid in result.retrieved_ids:
        click.echo(rid)


# -- evaluate ----------------------------------------------------------------

def _load_suite(path: Path):
    with open(path, "rb") as fh:
        obj = tomllib.load(fh)
    corpora = []
    for entry in obj.get("corpora", []):
        corpus_path = (path.parent / entry["path"]).resolve()
        corpus = load_corpus(corpus_path)
        declared = (entry.get("source"), entry.get("cohort"), entry.get("condition"))
        actual = (corpus.source.value, corpus.cohort.value, corpus.condition.value)
        if any(d is not None and d != a for d, a in zip(declared, actual)):
            raise MetacurateError(
                f"suite entry {entry['path']} declares {declared}, file says {actual}"
            )
        corpora.append((corpus_path, corpus))
    queries = None
    if "queries" in obj:
        queries = {Cohort(k): tuple(v) for k, v in obj["queries"].items()}
    return corpora, queries, obj


@main.command()
@click.option("--suite", "suite_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="TOML suite file listing the corpora to evaluate.")
@click.option("--aggregation", type=click.Choice(["macro", "micro"]), default="macro",
              show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("reports"),
              show_default=True)
def evaluate(suite_path, aggregation, out):
    """Evaluate retrieval across all corpora and conditions in a suite."""
    try:
        corpora, queries, _ = _load_suite(suite_path)
        report = evaluate_all([c for _, c in corpora], queries=queries,
                              aggregation=aggregation)
    except (MetacurateError, OSError) as exc:
        raise _fail(str(exc))
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_bytes(report.to_json_bytes())
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "plot_data.csv").write_text(report.to_plot_csv(), encoding="utf-8")

    manifest = RunManifest(command="evaluate")
    manifest.add_input(suite_path)
    for corpus_path, _ in corpora:
        manifest.add_input(corpus_path)
    manifest.outputs = ["report.json", "report.csv", "plot_data.csv"]
    manifest.write(out)
    click.echo(f"wrote {report_path}")
    for row in report.overall:
        click.echo(
            f"  {row.condition.value:<8} recall={row.values.recall:.4f} "
            f"precision={row.values.precision:.4f} f1={row.values.f1:.4f}"
        )


# -- serve -------------------------------------------------------------------

@main.command()
@click.option("--data-dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True)
@click.option("--listen", default="127.0.0.1:8080", show_default=True,
              metavar="HOST:PORT")
@click.option("--ui-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Static review-UI assets to serve under /ui.")
def serve(data_dir, listen, ui_dir):
    """Serve the read-only review API (and UI, if built) over HTTP."""
    import uvicorn

    from .service import build_app

    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError("--listen must look like HOST:PORT")
    app = build_app(data_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=int(port), log_level="info")


if __name__ == "__main__":
    main()
