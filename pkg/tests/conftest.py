import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vaxlens.dataset import Dataset
from vaxlens.schema import parse_schema

settings.register_profile(
    "ci",
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")

SMALL_SCHEMA_TEXT = (
    "satisfaction\tordinal\tC\t1|2|3|4|5\n"
    "gender\tnominal\tB\tmale|female\n"
    "age\tnumeric\tB\t\n"
    "region\tnominal\tA\tnorth|south|east|west\n"
    "decision\tnominal\t-\trefuse|accept\n"
    "!target\tdecision\taccept\n"
)


@pytest.fixture
def small_schema():
    return parse_schema(SMALL_SCHEMA_TEXT)


def make_rows(n, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        rows.append(
            {
                "satisfaction": str(rng.integers(1, 6)),
                "gender": ["male", "female"][rng.integers(0, 2)],
                "age": float(rng.normal(40, 10)),
                "region": ["north", "south", "east", "west"][rng.integers(0, 4)],
                "decision": ["refuse", "accept"][rng.integers(0, 2)],
            }
        )
    return rows


@pytest.fixture
def small_dataset(small_schema):
    return Dataset.from_records(small_schema, make_rows(40, seed=1))


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    if a.schema != b.schema or a.n_rows != b.n_rows:
        return False
    if not np.array_equal(a.target, b.target):
        return False
    return all(np.array_equal(a.codes(s.name), b.codes(s.name)) for s in a.schema.predictors)


def row_multiset(d: Dataset):
    cols = [d.codes(s.name) for s in d.schema.predictors]
    return sorted(tuple(col[i] for col in cols) + (d.target[i],) for i in range(d.n_rows))
