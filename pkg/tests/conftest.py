import pytest

from metacurate import (
    Cohort,
    Condition,
    Corpus,
    FieldValuePair,
    MetadataRecord,
    Source,
    parse_biosample_record,
)
from metacurate.schema import load_bundled_dictionary, load_bundled_template

MISLABELED_XML = """<BioSample accession="SAMN0000001">
  <Description><Organism taxonomy_name="Homo sapiens"/></Description>
  <Attributes>
    <table border="0">
      <tr> <td>isolate</td> <td>TN_32</td> </tr>
      <tr> <td>age</td> <td>67</td> </tr>
      <tr> <td>biomaterial provider</td> <td>Prof. Atsushi Kaneda, Department of Molecular Oncology, Graduate School of Medicine, Chiba University, Inohana 1-8-1, Chuo-ku, Chiba 260-8670 Japan</td> </tr>
      <tr> <td>sex</td> <td>female</td> </tr>
      <tr> <td>tissue</td> <td>lung cancer</td> </tr>
    </table>
  </Attributes>
</BioSample>"""


@pytest.fixture
def mislabeled_record():
    return parse_biosample_record(MISLABELED_XML)


@pytest.fixture(scope="session")
def biosample_template():
    return load_bundled_template(Source.BIOSAMPLE)


@pytest.fixture(scope="session")
def geo_template():
    return load_bundled_template(Source.GEO)


@pytest.fixture(scope="session")
def biosample_dictionary():
    return load_bundled_dictionary()


def make_record(rid, source=Source.BIOSAMPLE, **fields):
    pairs = [FieldValuePair(name.replace("_", " "), value) for name, value in fields.items()]
    return MetadataRecord(id=rid, source=source, fields=tuple(pairs))


def make_corpus(records, name="test", source=Source.BIOSAMPLE, cohort=Cohort.LUNG,
                condition=Condition.BASELINE):
    return Corpus(name=name, source=source, cohort=cohort, condition=condition,
                  records=tuple(records))
