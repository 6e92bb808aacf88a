"""Backend equivalence: the compiled kernels must match the pure-Python
reference bit for bit (search results and random streams alike)."""
import random

import numpy as np
import pytest

from coinpattern.kernels import BACKEND, _pure

try:
    from coinpattern.kernels import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="extension not built")


def random_csr(rng, n, avg_deg=2):
    edges = []
    for u in range(n):
        for _ in range(rng.randint(0, avg_deg * 2)):
            edges.append((u, rng.randrange(n)))
    edges.sort()
    indptr = np.zeros(n + 1, dtype=np.int64)
    dst = np.zeros(len(edges), dtype=np.int64)
    for i, (u, v) in enumerate(edges):
        indptr[u + 1] += 1
        dst[i] = v
    np.cumsum(indptr, out=indptr)
    return indptr, dst


@needs_core
def test_reachability_and_bfs_match():
    rng = random.Random(0)
    for trial in range(30):
        n = rng.randint(2, 60)
        indptr, dst = random_csr(rng, n)
        starts = np.asarray([0], dtype=np.int64)
        active = np.ones(n, dtype=np.uint8)
        active[rng.randrange(n)] = 0
        a = _pure.forward_reachable(indptr, dst, starts, active)
        b = _core.forward_reachable(indptr, dst, starts, active)
        assert (a == b).all(), trial
        pa = _pure.bfs_parents(indptr, dst, starts, active)
        pb = _core.bfs_parents(indptr, dst, starts, active)
        assert (pa == pb).all(), trial


@needs_core
def test_tarjan_matches():
    rng = random.Random(1)
    for trial in range(30):
        n = rng.randint(2, 60)
        indptr, dst = random_csr(rng, n)
        active = np.ones(n, dtype=np.uint8)
        ca, da = _pure.tarjan_scc(indptr, dst, active)
        cb, db = _core.tarjan_scc(indptr, dst, active)
        assert (ca == cb).all() and (da == db).all(), trial


@needs_core
def test_nested_dfs_matches_exactly():
    rng = random.Random(2)
    found = 0
    for trial in range(60):
        n = rng.randint(2, 50)
        indptr, dst = random_csr(rng, n)
        starts = np.asarray([0], dtype=np.int64)
        accepting = np.asarray([rng.random() < 0.3 for _ in range(n)],
                               dtype=np.uint8)
        active = np.ones(n, dtype=np.uint8)
        a = _pure.cvwy_lasso(indptr, dst, starts, accepting, active)
        b = _core.cvwy_lasso(indptr, dst, starts, accepting, active)
        if a is None:
            assert b is None, trial
        else:
            found += 1
            assert (a[0] == b[0]).all() and (a[1] == b[1]).all(), trial
    assert found > 10


@needs_core
def test_sampler_streams_match():
    # two-node coin graph: node 0 tosses, node 1 terminal-ish self loop
    indptr = np.asarray([0, 2, 3], dtype=np.int64)
    dst = np.asarray([0, 1, 1], dtype=np.int64)
    label = np.asarray([1, 2, 0], dtype=np.int64)  # C0, C1, TAU
    pnum = np.asarray([1, 2, 1], dtype=np.int64)
    pden = np.asarray([3, 3, 1], dtype=np.int64)
    choice = np.full(2, -1, dtype=np.int64)
    term = np.asarray([0, 1], dtype=np.uint8)
    for seed in (0, 1, 123456789, 2 ** 63):
        a = _pure.sample_runs(indptr, dst, label, pnum, pden, choice, 0, term,
                              500, 100, 10, seed)
        b = _core.sample_runs(indptr, dst, label, pnum, pden, choice, 0, term,
                              500, 100, 10, seed)
        assert a == b, seed


def test_splitmix_known_values():
    # freeze the stream so seeds stay portable across refactors
    state = 0
    draws = []
    for _ in range(3):
        state, z = _pure._mix64(state)
        draws.append(z)
    assert draws == [16294208416658607535, 7960286522194355700,
                     487617019471545679]


def test_backend_is_reported():
    assert BACKEND in ("pure", "compiled")
