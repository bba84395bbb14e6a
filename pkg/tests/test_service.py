import hashlib
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from metacurate.service import build_app

SUITE_DIR = Path(__file__).parent / "fixtures" / "suite"
GOLDEN_SEARCH = json.loads((SUITE_DIR / "golden" / "search.json").read_text())
GOLDEN_REPORT = (SUITE_DIR / "golden" / "report.json").read_bytes()


@pytest.fixture(scope="module")
def client():
    return TestClient(build_app(SUITE_DIR))


# -- /corpora ----------------------------------------------------------------

def test_corpora_listing(client):
    res = client.get("/corpora")
    assert res.status_code == 200
    listing = res.json()
    names = [c["name"] for c in listing]
    assert names == sorted(names)
    assert len(listing) == 6  # 2 sources x 3 cohorts
    for entry in listing:
        assert entry["conditions"] == ["baseline", "dd", "cedar"]
        assert entry["record_count"] == 20


def test_corpora_empty_data_dir(tmp_path):
    (tmp_path / "corpora").mkdir()
    local = TestClient(build_app(tmp_path))
    assert local.get("/corpora").json() == []


def test_corpora_after_adding_file_and_restart(tmp_path):
    (tmp_path / "corpora").mkdir()
    assert TestClient(build_app(tmp_path)).get("/corpora").json() == []
    shutil.copy(
        SUITE_DIR / "corpora" / "biosample_lung.baseline.jsonl",
        tmp_path / "corpora" / "biosample_lung.baseline.jsonl",
    )
    listing = TestClient(build_app(tmp_path)).get("/corpora").json()
    assert [c["name"] for c in listing] == ["biosample_lung"]


# -- /search -----------------------------------------------------------------

@pytest.mark.parametrize("case", GOLDEN_SEARCH["queries"],
                         ids=lambda c: f"{c['corpus']}-{c['condition']}-{c['q']}")
def test_search_matches_golden(client, case):
    res = client.get("/search", params={
        "corpus": case["corpus"], "condition": case["condition"], "q": case["q"],
    })
    assert res.status_code == 200
    body = res.json()
    assert body["ids"] == case["ids"]
    assert body["total"] == len(case["ids"])
    assert len(body["hits"]) == len(case["ids"])
    assert res.headers["cache-control"] == "no-store"
    assert res.headers["x-corpus-hash"]


def test_search_hit_snippets(client):
    case = GOLDEN_SEARCH["queries"][0]
    res = client.get("/search", params={
        "corpus": case["corpus"], "condition": case["condition"], "q": case["q"],
    })
    for hit in res.json()["hits"]:
        assert hit["tissue"] is not None
        assert hit["gold_label"] in {"lung", "liver", "ovary", "blood", "plasma",
                                     "lymph", "unknown"}


def test_search_agrees_with_cli(client, tmp_path):
    for case in GOLDEN_SEARCH["queries"]:
        corpus_file = SUITE_DIR / "corpora" / f"{case['corpus']}.{case['condition']}.jsonl"
        proc = subprocess.run(
            [sys.executable, "-m", "metacurate.cli", "search",
             "--corpus", str(corpus_file), "--query", case["q"]],
            capture_output=True, text=True, check=True,
        )
        cli_ids = proc.stdout.split()
        service_ids = client.get("/search", params={
            "corpus": case["corpus"], "condition": case["condition"], "q": case["q"],
            "limit": 1000,
        }).json()["ids"]
        assert cli_ids == service_ids


def test_search_pagination(client):
    case = GOLDEN_SEARCH["queries"][2]  # 11 hits
    res = client.get("/search", params={
        "corpus": case["corpus"], "condition": case["condition"], "q": case["q"],
        "limit": 3, "offset": 2,
    }).json()
    assert res["ids"] == case["ids"][2:5]
    assert res["total"] == len(case["ids"])


def test_search_invalid_query_400(client):
    res = client.get("/search", params={"corpus": "biosample_lung", "q": "tissue"})
    assert res.status_code == 400


def test_search_unknown_corpus_404(client):
    assert client.get("/search", params={"corpus": "nope", "q": "tissue:lung"}).status_code == 404
    res = client.get("/search", params={
        "corpus": "biosample_lung", "condition": "dd2", "q": "tissue:lung",
    })
    assert res.status_code == 404


# -- /records ----------------------------------------------------------------

def demo_record():
    import tomli

    suite = tomli.loads((SUITE_DIR / "suite.toml").read_text())
    return suite["fixtures"]["demo_record_corpus"], suite["fixtures"]["demo_record_id"]


def test_record_view_demo_diff(client):
    corpus, rid = demo_record()
    res = client.get(f"/records/{corpus}/{rid}", params={"conditions": "baseline,cedar"})
    assert res.status_code == 200
    view = res.json()
    assert view["conditions"] == ["baseline", "cedar"]
    diffs = {d["field_name"]: d for d in view["field_diffs"]}
    assert diffs["tissue"]["changed"]
    assert diffs["tissue"]["values"] == {"baseline": "lung cancer", "cedar": "lung"}
    assert diffs["disease"]["changed"]
    assert diffs["disease"]["values"]["baseline"] is None
    assert diffs["disease"]["values"]["cedar"] == "lung cancer"
    changed = sorted(name for name, d in diffs.items() if d["changed"])
    assert changed == ["disease", "tissue"]
    # validation badges: original tissue value violates the ontology branch
    assert diffs["tissue"]["validation"]["baseline"] == {
        "conforms": False, "violation": "NotInOntologyBranch",
    }
    assert diffs["tissue"]["validation"]["cedar"] == {"conforms": True, "violation": None}


def test_record_view_identical_versions(client):
    corpus, rid = demo_record()
    res = client.get(f"/records/{corpus}/{rid}", params={"conditions": "baseline,baseline"})
    view = res.json()
    assert all(not d["changed"] for d in view["field_diffs"])


def test_record_view_preserves_field_order(client):
    corpus, rid = demo_record()
    view = client.get(f"/records/{corpus}/{rid}",
                      params={"conditions": "baseline,cedar"}).json()
    baseline_fields = [f["name"] for f in view["versions"]["baseline"]["fields"]]
    diff_names = [d["field_name"] for d in view["field_diffs"]]
    assert diff_names[: len(baseline_fields)] == baseline_fields


def test_record_view_missing_in_condition_404(client):
    res = client.get("/records/biosample_lung/NO_SUCH_ID",
                     params={"conditions": "baseline,cedar"})
    assert res.status_code == 404


def test_record_view_unknown_corpus_404(client):
    assert client.get("/records/nope/SAMN91002").status_code == 404


def test_record_view_defaults_to_all_conditions(client):
    corpus, rid = demo_record()
    view = client.get(f"/records/{corpus}/{rid}").json()
    assert view["conditions"] == ["baseline", "dd", "cedar"]
    diffs = {d["field_name"]: d for d in view["field_diffs"]}
    assert diffs["tissue"]["values"]["dd"] == "NA"  # disease term moved out under DD


def test_cors_enabled_for_ui_origin(client):
    res = client.get("/corpora", headers={"Origin": "http://127.0.0.1:5173"})
    assert res.headers.get("access-control-allow-origin") in ("*", "http://127.0.0.1:5173")


# -- /reports ----------------------------------------------------------------

def test_latest_report_bytes_match_golden(client):
    res = client.get("/reports/latest")
    assert res.status_code == 200
    assert res.content == GOLDEN_REPORT


def test_latest_report_404_when_none(tmp_path):
    (tmp_path / "corpora").mkdir()
    local = TestClient(build_app(tmp_path))
    assert local.get("/reports/latest").status_code == 404


def test_latest_report_picks_newest(tmp_path):
    (tmp_path / "corpora").mkdir()
    reports = tmp_path / "reports"
    reports.mkdir()
    (reports / "report-0001.json").write_text('{"old": true}')
    (reports / "report-0002.json").write_text('{"new": true}')
    local = TestClient(build_app(tmp_path))
    assert local.get("/reports/latest").json() == {"new": True}


# -- read-only invariant ------------------------------------------------------

def _hash_tree(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(path.name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def test_request_storm_leaves_data_untouched(client):
    before = _hash_tree(SUITE_DIR)
    corpus, rid = demo_record()
    for _ in range(10):
        client.get("/corpora")
        client.get("/search", params={"corpus": "geo_liver", "condition": "cedar",
                                      "q": "tissue:blood"})
        client.get("/search", params={"corpus": "geo_liver", "q": "tissue"})  # 400
        client.get(f"/records/{corpus}/{rid}")
        client.get("/records/nope/nope")  # 404
        client.get("/reports/latest")
    assert _hash_tree(SUITE_DIR) == before
