import numpy as np
import pytest

from wcc import projections as pj
from wcc.lattice import LatticeSpec, enumerate_elements
from wcc.volume import Domain


def random_group(rng, d, scale=0.6):
    """Random unimodular matrix with chamber displacement of controlled size."""
    y = rng.normal(size=d) * scale
    y -= y.mean()
    y = np.sort(y)[::-1]
    k1 = pj.random_so(d, rng)
    k2 = pj.random_so(d, rng)
    return pj.GroupElement(k1 @ np.diag(np.exp(y)) @ k2, check=False)


def random_group_batch(rng, d, n, scale=0.6):
    ys = rng.normal(size=(n, d)) * scale
    ys -= ys.mean(axis=1, keepdims=True)
    ys = -np.sort(-ys, axis=1)
    k1 = pj.random_so(d, rng, size=n)
    k2 = pj.random_so(d, rng, size=n)
    return k1 @ (np.exp(ys)[:, :, None] * k2)


@pytest.fixture(scope="session")
def census_t8():
    records, meta = enumerate_elements(LatticeSpec("sl2"), Domain("ball", 8.0))
    return records, meta


@pytest.fixture(scope="session")
def classes_trace_10():
    from wcc.survey import conjugacy_classes_sl2

    return conjugacy_classes_sl2(10)
