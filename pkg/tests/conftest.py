import pytest

from ranksig import data
from ranksig.ingest import Counting, InstitutionRecord
from ranksig.stats import ContingencyTable


@pytest.fixture
def trio():
    return data.trio_records()


@pytest.fixture
def worked_table():
    """Observed counts of the two-university worked example."""
    return ContingencyTable(
        rows=("Tsinghua University", "Zhejiang University"),
        cols=("top10", "other"),
        observed=((2738.0, 17164.0), (2604.0, 20906.0)),
    )


def make_record(name="Some University", p=1000.0, pp=0.12, t=None, ci=None, **kw):
    fields = dict(
        name=name,
        country="CN",
        period="2015-2018",
        field="All sciences",
        counting=Counting.FRACTIONAL,
        p=p,
        t_top10=pp * p if t is None else t,
        pp_top10=pp,
    )
    if ci is not None:
        fields["ci_lower"], fields["ci_upper"] = ci
    fields.update(kw)
    return InstitutionRecord(**fields)
