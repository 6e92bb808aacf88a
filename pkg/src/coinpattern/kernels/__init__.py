"""Graph-search and sampling kernels with a compiled fast path.

The Cython extension is preferred when it imported cleanly; set
``COINPATTERN_PURE=1`` to force the pure-Python backend.  Both backends
implement identical algorithms and return identical results.
"""
import os

import numpy as np

from . import _pure

if os.environ.get("COINPATTERN_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

forward_reachable = _impl.forward_reachable
bfs_parents = _impl.bfs_parents
tarjan_scc = _impl.tarjan_scc
cvwy_lasso = _impl.cvwy_lasso
sample_runs = _impl.sample_runs


def reverse_csr(indptr, dst):
    """Reversed adjacency (rindptr, rdst, redge) where redge maps a reversed
    edge back to its original CSR position."""
    n = len(indptr) - 1
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    order = np.argsort(dst, kind="stable")
    rdst = src[order]
    counts = np.bincount(dst, minlength=n)
    rindptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=rindptr[1:])
    return rindptr, rdst, order


def backward_reachable(indptr, dst, targets, active):
    rindptr, rdst, _ = reverse_csr(indptr, dst)
    return forward_reachable(rindptr, rdst, targets, active)


def bfs_edge_path(indptr, dst, starts, goal, active):
    """Shortest edge path from any start to ``goal`` honoring edge order,
    or None."""
    parent = bfs_parents(indptr, dst, np.asarray(starts, dtype=np.int64), active)
    if parent[goal] == -1:
        return None
    path = []
    cur = int(goal)
    src = None
    while parent[cur] != -2:
        k = int(parent[cur])
        path.append(k)
        src = int(np.searchsorted(indptr, k, side="right") - 1)
        cur = src
    path.reverse()
    return path
