"""Pure-Python graph-search and sampling kernels.

Reference implementations; the compiled module in ``_core.pyx`` mirrors
these loop for loop so both backends return identical results, including
the first counterexample found and the random stream consumed.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

TAU, C0, C1, A0, A1 = range(5)


def forward_reachable(indptr, dst, starts, active):
    n = len(indptr) - 1
    seen = np.zeros(n, dtype=np.uint8)
    work = []
    for s in starts:
        s = int(s)
        if active[s] and not seen[s]:
            seen[s] = 1
            work.append(s)
    while work:
        u = work.pop()
        for k in range(int(indptr[u]), int(indptr[u + 1])):
            v = int(dst[k])
            if active[v] and not seen[v]:
                seen[v] = 1
                work.append(v)
    return seen


def bfs_parents(indptr, dst, starts, active):
    """Breadth-first parents; entry i holds the CSR edge index used to reach
    node i, -2 for start nodes, -1 for unreached."""
    n = len(indptr) - 1
    parent = np.full(n, -1, dtype=np.int64)
    queue = []
    for s in starts:
        s = int(s)
        if active[s] and parent[s] == -1:
            parent[s] = -2
            queue.append(s)
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for k in range(int(indptr[u]), int(indptr[u + 1])):
            v = int(dst[k])
            if active[v] and parent[v] == -1:
                parent[v] = k
                queue.append(v)
    return parent


def tarjan_scc(indptr, dst, active):
    """Iterative Tarjan.  Returns (comp, disc): component ids (-1 for
    inactive nodes) and discovery indices."""
    n = len(indptr) - 1
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    comp = np.full(n, -1, dtype=np.int64)
    onstack = np.zeros(n, dtype=np.uint8)
    scc_stack = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if not active[root] or index[root] >= 0:
            continue
        index[root] = low[root] = counter
        counter += 1
        scc_stack.append(root)
        onstack[root] = 1
        work = [(root, int(indptr[root]))]
        while work:
            u, it = work[-1]
            if it < int(indptr[u + 1]):
                work[-1] = (u, it + 1)
                v = int(dst[it])
                if not active[v]:
                    continue
                if index[v] < 0:
                    index[v] = low[v] = counter
                    counter += 1
                    scc_stack.append(v)
                    onstack[v] = 1
                    work.append((v, int(indptr[v])))
                elif onstack[v] and index[v] < low[u]:
                    low[u] = index[v]
            else:
                work.pop()
                if work:
                    p = work[-1][0]
                    if low[u] < low[p]:
                        low[p] = low[u]
                if low[u] == index[u]:
                    while True:
                        w = scc_stack.pop()
                        onstack[w] = 0
                        comp[w] = ncomp
                        if w == u:
                            break
                    ncomp += 1
    return comp, index


def cvwy_lasso(indptr, dst, starts, accepting, active):
    """Nested depth-first search for an accepting lasso.

    The outer search explores successors in transition order; when an
    accepting state is popped, an inner search looks for a cycle back to
    the outer path.  Returns (prefix_edges, loop_edges) as CSR edge index
    arrays, or None when the product language is empty.
    """
    n = len(indptr) - 1
    visited = np.zeros(n, dtype=np.uint8)
    inner_visited = np.zeros(n, dtype=np.uint8)
    path_pos = np.full(n, -1, dtype=np.int64)

    def inner(seed):
        # DFS from seed over states not yet inner-visited; a hit is any edge
        # into the current outer path (which still contains seed).
        inner_visited[seed] = 1
        st_state = [seed]
        st_enter = [-1]
        st_it = [int(indptr[seed])]
        while st_state:
            u = st_state[-1]
            it = st_it[-1]
            if it < int(indptr[u + 1]):
                st_it[-1] = it + 1
                v = int(dst[it])
                if not active[v]:
                    continue
                if path_pos[v] >= 0:
                    return v, [e for e in st_enter[1:]] + [it]
                if not inner_visited[v]:
                    inner_visited[v] = 1
                    st_state.append(v)
                    st_enter.append(it)
                    st_it.append(int(indptr[v]))
            else:
                st_state.pop()
                st_enter.pop()
                st_it.pop()
        return None, None

    for s0 in starts:
        s0 = int(s0)
        if not active[s0] or visited[s0]:
            continue
        visited[s0] = 1
        path_pos[s0] = 0
        st_state = [s0]
        st_enter = [-1]
        st_it = [int(indptr[s0])]
        while st_state:
            u = st_state[-1]
            it = st_it[-1]
            if it < int(indptr[u + 1]):
                st_it[-1] = it + 1
                v = int(dst[it])
                if active[v] and not visited[v]:
                    visited[v] = 1
                    path_pos[v] = len(st_state)
                    st_state.append(v)
                    st_enter.append(it)
                    st_it.append(int(indptr[v]))
            else:
                if accepting[u]:
                    t, inner_edges = inner(u)
                    if t is not None:
                        p = int(path_pos[t])
                        prefix = st_enter[1:p + 1]
                        loop = st_enter[p + 1:] + inner_edges
                        return (np.asarray(prefix, dtype=np.int64),
                                np.asarray(loop, dtype=np.int64))
                path_pos[u] = -1
                st_state.pop()
                st_enter.pop()
                st_it.pop()
    return None


def _mix64(state):
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def _rand_below(state, bound):
    # rejection sampling below the largest multiple of bound
    lim = (MASK64 // bound) * bound
    while True:
        state, z = _mix64(state)
        if z < lim:
            return state, z % bound


def sample_runs(indptr, dst, label, pnum, pden, choice, start, term_mask,
                samples, cap, tau_cutoff, seed):
    """Sample runs from ``start``; returns (terminated, capped).

    A run terminates when it enters a node flagged in ``term_mask``, is
    capped after ``cap`` transitions, and is capped early when more than
    ``tau_cutoff`` transitions pass without a coin toss (the walk between
    tosses is deterministic, so that many steps prove a silent cycle).
    Coin branches use exact integer arithmetic on the edge's p/q; action
    nodes follow the positional ``choice`` offset.
    """
    state = seed & MASK64
    terminated = 0
    capped = 0
    for _ in range(samples):
        node = int(start)
        steps = 0
        since_coin = 0
        while True:
            if term_mask[node]:
                terminated += 1
                break
            if steps >= cap or since_coin > tau_cutoff:
                capped += 1
                break
            k = int(indptr[node])
            lab = int(label[k])
            if lab == TAU:
                node = int(dst[k])
                since_coin += 1
            elif lab == C0:
                state, r = _rand_below(state, int(pden[k]))
                node = int(dst[k if r < int(pnum[k]) else k + 1])
                since_coin = 0
            else:  # action node
                node = int(dst[k + int(choice[node])])
                since_coin += 1
            steps += 1
    return terminated, capped
