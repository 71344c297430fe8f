import numpy as np
import pytest

from tadkit import AttributeSchema, AttributeTable


def random_table(rng, n_categories, sizes, prefix="k", pool_tag=""):
    """Random distribution table; ``sizes`` gives |V| per attribute."""
    schema = AttributeSchema((f"a{i}", tuple(str(v) for v in range(s))) for i, s in enumerate(sizes))
    ids = [f"{prefix}{i:03d}" for i in range(n_categories)]
    blocks = [rng.dirichlet(np.ones(s), size=n_categories) for s in sizes]
    return AttributeTable.from_matrix(schema, ids, np.hstack(blocks), pool_tag=pool_tag)


def binary_table(probs, ids=None):
    """Binary table from a (C, L) array of P(value 1)."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    C, L = probs.shape
    flat = np.empty((C, 2 * L))
    flat[:, 0::2] = 1 - probs
    flat[:, 1::2] = probs
    ids = ids or [f"c{i}" for i in range(C)]
    return AttributeTable.from_matrix(AttributeSchema.binary(L), ids, flat)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
