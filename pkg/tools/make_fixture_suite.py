#!/usr/bin/env python3
"""Generate the checked-in synthetic fixture suite.

Builds six baseline corpora (2 sources x 3 cohorts, 20 records each) from
raw BioSample-style XML and GEO-style text payloads (including malformed
ones that the sampler must drop), then produces the DD- and CEDAR-corrected
corpora with the rule backend. Everything is deterministic; re-running the
script must reproduce the committed files byte for byte.

Usage: python3 tools/make_fixture_suite.py [--out tests/fixtures/suite]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from metacurate import Cohort, Condition, Source, save_corpus
from metacurate.backends import RuleBackend
from metacurate.ingest import SamplingPlan, sample_uniform
from metacurate.records import PARSERS
from metacurate.schema import load_bundled_dictionary, load_bundled_template
from metacurate.standardize import standardize_batch

# Tissue-value corruption mix per corpus. Classes:
#   value as written      -> what fixes it (gold label from the baseline value)
#   exact term            -> nothing needed, baseline already matches
#   "<organ> cancer"/HCC  -> CEDAR only (keyword mapping; disease terms move)
#   "<organ> tissue" etc. -> DD and CEDAR (term already present as a token)
#   case/space noise      -> baseline (canonicalized matching)
#   junk / missing        -> nothing; gold label unknown
BIOSAMPLE_LUNG = [
    "lung", "lung cancer", "lung cancer", "lung tissue", "lung",
    "PBMC", "blood", "primary lung tumor", "NSCLC tumor", "Lung ",
    "Lung Cancer", "whole blood", None, "blood", "lung biopsy",
    "PBMCs", "lung", "lung cancer", "adenocarcinoma", "plasma",
]
BIOSAMPLE_LIVER = [
    "liver", "liver cancer", "HCC", "liver tissue", "liver cancer",
    "PBMC", "liver tumor", "primary liver biopsy", "Liver ", "blood",
    "HCC sample", "hepatocellular carcinoma", "liver resection specimen", "PBMC sample", "liver",
    "liver cancer", "pbmc", "FFPE tumor block", None, "lymph node",
]
BIOSAMPLE_OVARIAN = [
    "ovary", "ovarian cancer", "ovary tissue", "ovary", "blood",
    "PBMC", "ovary sample", "ovarian cancer", "Ovary ", "whole blood",
    "ovary", "serous adenocarcinoma", None, "ovary biopsy", "ovarian cancer",
    "blood", "whole blood sample", "ovary", None, "plasma",
]
GEO_LUNG = [
    "lung", "lung cancer", "lung cancer", "lung tumor", "Lung",
    "blood", "PBMC", "lung cancer", "lung tissue", "NSCLC tumor",
    "whole blood", "LUNG", "lung cancer", "blood", None,
    "PBMCs", "resected lung specimen", "lung", "lung cancer", "plasma",
]
GEO_LIVER = [
    "liver", "liver cancer", "HCC", "liver tissue", "blood",
    "PBMC", "whole blood", "hepatocellular carcinoma", "liver", "liver cancer",
    "liver tumor", "whole blood", "cirrhotic nodule", None, "pbmc",
    "HCC tissue", "liver", "biopsy, flash frozen", None, "lymph",
]
GEO_OVARIAN = [
    "ovary", "ovarian cancer", "ovary tissue", "ovarian cancer", "blood",
    "PBMC", "ovary tumor", "OVARY", "ovarian cancer", "whole blood",
    "ovary biopsy", "omentum metastasis", None, "ovary", "ovarian carcinoma",
    "ovary sample", None, "ovary", "ascites fluid", "plasma",
]

TISSUE_MIX = {
    ("biosample", "lung"): BIOSAMPLE_LUNG,
    ("biosample", "liver"): BIOSAMPLE_LIVER,
    ("biosample", "ovarian"): BIOSAMPLE_OVARIAN,
    ("geo", "lung"): GEO_LUNG,
    ("geo", "liver"): GEO_LIVER,
    ("geo", "ovarian"): GEO_OVARIAN,
}

SAMPLE_SEEDS = {
    ("biosample", "lung"): 101,
    ("biosample", "liver"): 102,
    ("biosample", "ovarian"): 103,
    ("geo", "lung"): 104,
    ("geo", "liver"): 105,
    ("geo", "ovarian"): 106,
}

COHORT_NUM = {"lung": 1, "liver": 2, "ovarian": 3}

AGES = ["67", "54", "sixty-one", "45", "71", "38", "59"]
SEXES = ["female", "male"]
PROVIDERS = [
    "Dept. of Thoracic Oncology, Central University Hospital",
    "Institute for Cancer Research, Sample Bank 4",
    "Clinical Biobank, Unit 12",
]
DESCRIPTIONS = [
    "fresh frozen tumor specimen from resection",
    "specimen collected at surgery, stored at -80C",
    "FFPE section, pathology archive",
]

# The side-by-side review fixture: second record of biosample_lung mirrors
# the classic mislabeled-tissue example.
DEMO_RECORD_EXTRAS = {
    "isolate": "TN_32",
    "age": "67",
    "biomaterial provider": "Prof. Atsushi Kaneda, Department of Molecular Oncology, "
                            "Graduate School of Medicine, Chiba University, Inohana 1-8-1, "
                            "Chuo-ku, Chiba 260-8670 Japan",
    "sex": "female",
}


def biosample_xml(accession, i, tissue):
    if i == 2:
        # attribute-only record; every template field it carries survives
        # correction, so a diff against the corrected version shows exactly
        # the tissue change and the added disease
        attrs = dict(DEMO_RECORD_EXTRAS)
        attrs["tissue"] = tissue
        rows = "".join(
            f"<Attribute attribute_name=\"{name}\">{value}</Attribute>"
            for name, value in attrs.items()
        )
        return (
            f'<BioSample accession="{accession}">'
            "<Description><Organism taxonomy_name=\"Homo sapiens\"/></Description>"
            f"<Attributes>{rows}</Attributes></BioSample>"
        )
    else:
        attrs = {
            "isolate": f"ISO_{i:03d}",
            "age": AGES[i % len(AGES)],
            "biomaterial provider": PROVIDERS[i % len(PROVIDERS)],
            "sex": SEXES[i % len(SEXES)],
        }
        if tissue is not None:
            attrs["tissue"] = tissue
        else:
            attrs["description"] = DESCRIPTIONS[i % len(DESCRIPTIONS)]
        if i % 4 == 0:
            attrs["sample type"] = "tissue"
        if i % 7 == 0 and tissue is not None:
            # duplicate field: parsers must keep both, lookups take the first
            attrs["tissue "] = "see above"
    rows = "".join(
        f"<Attribute attribute_name=\"{name}\">{value}</Attribute>"
        for name, value in attrs.items()
    )
    return (
        f'<BioSample accession="{accession}">'
        "<Description><Organism taxonomy_name=\"Homo sapiens\"/>"
        f"<Title>sample {accession}</Title></Description>"
        f"<Attributes>{rows}</Attributes></BioSample>"
    )


def geo_text(accession, i, tissue, cohort):
    lines = [
        f"title: {cohort} study sample {i:02d}",
        f"geo accession: {accession}",
        "organism: Homo sapiens",
        f"source name: patient {cohort} specimen",
    ]
    if tissue is not None:
        lines.append(f"tissue: {tissue}")
    else:
        lines.append(f"description: {DESCRIPTIONS[i % len(DESCRIPTIONS)]}")
        lines.append("description:   with additional clinical notes")
    lines.append(f"age: {AGES[i % len(AGES)]}")
    lines.append(f"sex: {SEXES[(i + 1) % len(SEXES)]}")
    if i % 5 == 0:
        lines.append("molecule: total RNA")
    return "\n".join(lines) + "\n"


MALFORMED = {
    "biosample": [
        "<BioSample><Attributes><table></table></Attributes></BioSample>",
        "<BioSample accession=\"SAMNBROKEN\"><Attributes><tr><td>tissue</td>",
    ],
    "geo": [
        "",
        "corrupted export dump\nwithout any separators at all\n",
    ],
}


def build_raw_payloads(source, cohort):
    mix = TISSUE_MIX[(source, cohort)]
    num = COHORT_NUM[cohort]
    payloads = []
    for i, tissue in enumerate(mix, start=1):
        if source == "biosample":
            accession = f"SAMN9{num}{i:03d}"
            payloads.append(biosample_xml(accession, i, tissue))
        else:
            accession = f"GSM9{num}{i:03d}"
            payloads.append(geo_text(accession, i, tissue, cohort))
    # malformed payloads interleaved near the end; the sampler drops them
    payloads.insert(7, MALFORMED[source][0])
    payloads.append(MALFORMED[source][1])
    return payloads


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("tests/fixtures/suite"))
    args = parser.parse_args()

    corpora_dir = args.out / "corpora"
    corpora_dir.mkdir(parents=True, exist_ok=True)

    dictionary = load_bundled_dictionary()
    templates = {s: load_bundled_template(s) for s in Source}
    backends = {s: RuleBackend(template=templates[s], dictionary=dictionary) for s in Source}

    suite_entries = []
    for source_text, cohort_text in TISSUE_MIX:
        source, cohort = Source(source_text), Cohort(cohort_text)
        name = f"{source_text}_{cohort_text}"
        raw = build_raw_payloads(source_text, cohort_text)
        plan = SamplingPlan(
            initial_count=len(raw), target_count=20,
            seed=SAMPLE_SEEDS[(source_text, cohort_text)],
        )
        baseline, report = sample_uniform(
            raw, plan, PARSERS[source], name=name, source=source, cohort=cohort
        )
        assert report.malformed == 2, (name, report)
        assert report.sampled == 20

        for condition in (Condition.BASELINE, Condition.DD, Condition.CEDAR):
            if condition is Condition.BASELINE:
                corpus = baseline
            else:
                corpus, outcomes = standardize_batch(
                    baseline, condition, backends[source],
                    dictionary=dictionary, template=templates[source],
                )
                assert all(o.status.value == "corrected" for o in outcomes), name
            path = corpora_dir / f"{name}.{condition.value}.jsonl"
            save_corpus(corpus, path)
            suite_entries.append((source_text, cohort_text, condition.value, path.name))
            print(f"wrote {path}")

    suite_lines = ['name = "fixture-suite"', ""]
    suite_lines += ["[fixtures]",
                    'demo_record_corpus = "biosample_lung"',
                    'demo_record_id = "SAMN91002"', ""]
    for source_text, cohort_text, condition, filename in suite_entries:
        suite_lines += [
            "[[corpora]]",
            f'source = "{source_text}"',
            f'cohort = "{cohort_text}"',
            f'condition = "{condition}"',
            f'path = "corpora/{filename}"',
            "",
        ]
    (args.out / "suite.toml").write_text("\n".join(suite_lines), encoding="utf-8")
    print(f"wrote {args.out / 'suite.toml'}")


if __name__ == "__main__":
    main()
