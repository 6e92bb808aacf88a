# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph-search and sampling kernels.

Mirrors kernels._pure loop for loop; both backends must return identical
results (same lassos, same random streams)."""

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t

TAU, C0, C1, A0, A1 = range(5)


def forward_reachable(indptr, dst, starts, active):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ds = np.ascontiguousarray(dst, dtype=np.int64)
    cdef int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef uint8_t[::1] ac = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    seen_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] seen = seen_arr
    work_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] work = work_arr
    cdef Py_ssize_t top = 0
    cdef int64_t s, u, v
    cdef int64_t k
    for i in range(st.shape[0]):
        s = st[i]
        if ac[s] and not seen[s]:
            seen[s] = 1
            work[top] = s
            top += 1
    while top > 0:
        top -= 1
        u = work[top]
        for k in range(ip[u], ip[u + 1]):
            v = ds[k]
            if ac[v] and not seen[v]:
                seen[v] = 1
                work[top] = v
                top += 1
    return seen_arr


def bfs_parents(indptr, dst, starts, active):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ds = np.ascontiguousarray(dst, dtype=np.int64)
    cdef int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef uint8_t[::1] ac = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    parent_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] parent = parent_arr
    queue_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0
    cdef int64_t s, u, v, k
    for i in range(st.shape[0]):
        s = st[i]
        if ac[s] and parent[s] == -1:
            parent[s] = -2
            queue[tail] = s
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(ip[u], ip[u + 1]):
            v = ds[k]
            if ac[v] and parent[v] == -1:
                parent[v] = k
                queue[tail] = v
                tail += 1
    return parent_arr


def tarjan_scc(indptr, dst, active):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ds = np.ascontiguousarray(dst, dtype=np.int64)
    cdef uint8_t[::1] ac = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    index_arr = np.full(n, -1, dtype=np.int64)
    low_arr = np.zeros(n, dtype=np.int64)
    comp_arr = np.full(n, -1, dtype=np.int64)
    onstack_arr = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] index = index_arr
    cdef int64_t[::1] low = low_arr
    cdef int64_t[::1] comp = comp_arr
    cdef uint8_t[::1] onstack = onstack_arr
    scc_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] scc_stack = scc_arr
    cdef Py_ssize_t scc_top = 0
    node_arr = np.empty(n, dtype=np.int64)
    iter_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] wnode = node_arr
    cdef int64_t[::1] wit = iter_arr
    cdef Py_ssize_t wtop
    cdef int64_t counter = 0, ncomp = 0
    cdef int64_t root, u, v, it, w, p
    for root in range(n):
        if not ac[root] or index[root] >= 0:
            continue
        index[root] = counter
        low[root] = counter
        counter += 1
        scc_stack[scc_top] = root
        scc_top += 1
        onstack[root] = 1
        wnode[0] = root
        wit[0] = ip[root]
        wtop = 1
        while wtop > 0:
            u = wnode[wtop - 1]
            it = wit[wtop - 1]
            if it < ip[u + 1]:
                wit[wtop - 1] = it + 1
                v = ds[it]
                if not ac[v]:
                    continue
                if index[v] < 0:
                    index[v] = counter
                    low[v] = counter
                    counter += 1
                    scc_stack[scc_top] = v
                    scc_top += 1
                    onstack[v] = 1
                    wnode[wtop] = v
                    wit[wtop] = ip[v]
                    wtop += 1
                elif onstack[v] and index[v] < low[u]:
                    low[u] = index[v]
            else:
                wtop -= 1
                if wtop > 0:
                    p = wnode[wtop - 1]
                    if low[u] < low[p]:
                        low[p] = low[u]
                if low[u] == index[u]:
                    while True:
                        scc_top -= 1
                        w = scc_stack[scc_top]
                        onstack[w] = 0
                        comp[w] = ncomp
                        if w == u:
                            break
                    ncomp += 1
    return comp_arr, index_arr


def cvwy_lasso(indptr, dst, starts, accepting, active):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ds = np.ascontiguousarray(dst, dtype=np.int64)
    cdef int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef uint8_t[::1] acc = np.ascontiguousarray(accepting, dtype=np.uint8)
    cdef uint8_t[::1] ac = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1
    visited_arr = np.zeros(n, dtype=np.uint8)
    inner_visited_arr = np.zeros(n, dtype=np.uint8)
    path_pos_arr = np.full(n, -1, dtype=np.int64)
    cdef uint8_t[::1] visited = visited_arr
    cdef uint8_t[::1] inner_visited = inner_visited_arr
    cdef int64_t[::1] path_pos = path_pos_arr
    st_state_arr = np.empty(n + 1, dtype=np.int64)
    st_enter_arr = np.empty(n + 1, dtype=np.int64)
    st_it_arr = np.empty(n + 1, dtype=np.int64)
    cdef int64_t[::1] st_state = st_state_arr
    cdef int64_t[::1] st_enter = st_enter_arr
    cdef int64_t[::1] st_it = st_it_arr
    in_state_arr = np.empty(n + 1, dtype=np.int64)
    in_enter_arr = np.empty(n + 1, dtype=np.int64)
    in_it_arr = np.empty(n + 1, dtype=np.int64)
    cdef int64_t[::1] in_state = in_state_arr
    cdef int64_t[::1] in_enter = in_enter_arr
    cdef int64_t[::1] in_it = in_it_arr
    cdef Py_ssize_t top, in_top
    cdef int64_t s0, u, v, it, t, p, u2, it2
    cdef Py_ssize_t i, j

    for i in range(st.shape[0]):
        s0 = st[i]
        if not ac[s0] or visited[s0]:
            continue
        visited[s0] = 1
        path_pos[s0] = 0
        st_state[0] = s0
        st_enter[0] = -1
        st_it[0] = ip[s0]
        top = 1
        while top > 0:
            u = st_state[top - 1]
            it = st_it[top - 1]
            if it < ip[u + 1]:
                st_it[top - 1] = it + 1
                v = ds[it]
                if ac[v] and not visited[v]:
                    visited[v] = 1
                    path_pos[v] = top
                    st_state[top] = v
                    st_enter[top] = it
                    st_it[top] = ip[v]
                    top += 1
            else:
                if acc[u]:
                    # inner search for a cycle back to the outer path
                    t = -1
                    if not inner_visited[u]:
                        inner_visited[u] = 1
                    in_state[0] = u
                    in_enter[0] = -1
                    in_it[0] = ip[u]
                    in_top = 1
                    while in_top > 0 and t < 0:
                        u2 = in_state[in_top - 1]
                        it2 = in_it[in_top - 1]
                        if it2 < ip[u2 + 1]:
                            in_it[in_top - 1] = it2 + 1
                            v = ds[it2]
                            if not ac[v]:
                                continue
                            if path_pos[v] >= 0:
                                t = v
                                in_enter[in_top] = it2
                                in_top += 1
                                break
                            if not inner_visited[v]:
                                inner_visited[v] = 1
                                in_state[in_top] = v
                                in_enter[in_top] = it2
                                in_it[in_top] = ip[v]
                                in_top += 1
                        else:
                            in_top -= 1
                    if t >= 0:
                        p = path_pos[t]
                        prefix = [st_enter[j] for j in range(1, p + 1)]
                        loop = [st_enter[j] for j in range(p + 1, top)]
                        loop += [in_enter[j] for j in range(1, in_top)]
                        return (np.asarray(prefix, dtype=np.int64),
                                np.asarray(loop, dtype=np.int64))
                path_pos[u] = -1
                top -= 1
    return None


cdef inline void _mix64(uint64_t* state, uint64_t* out) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    z = z ^ (z >> 31)
    out[0] = z


def sample_runs(indptr, dst, label, pnum, pden, choice, start, term_mask,
                samples, cap, tau_cutoff, seed):
    cdef int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int64_t[::1] ds = np.ascontiguousarray(dst, dtype=np.int64)
    cdef int64_t[::1] lab = np.ascontiguousarray(label, dtype=np.int64)
    cdef int64_t[::1] pn = np.ascontiguousarray(pnum, dtype=np.int64)
    cdef int64_t[::1] pd = np.ascontiguousarray(pden, dtype=np.int64)
    cdef int64_t[::1] ch = np.ascontiguousarray(choice, dtype=np.int64)
    cdef uint8_t[::1] term = np.ascontiguousarray(term_mask, dtype=np.uint8)
    py_seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    cdef uint64_t state = py_seed
    cdef int64_t terminated = 0, capped = 0
    cdef int64_t node, steps, since_coin
    cdef int64_t k, lb, den, num
    cdef uint64_t z, lim
    cdef int64_t n_samples = samples, step_cap = cap, cutoff = tau_cutoff
    cdef int64_t start_node = start
    cdef Py_ssize_t i
    for i in range(n_samples):
        node = start_node
        steps = 0
        since_coin = 0
        while True:
            if term[node]:
                terminated += 1
                break
            if steps >= step_cap or since_coin > cutoff:
                capped += 1
                break
            k = ip[node]
            lb = lab[k]
            if lb == 0:  # TAU
                node = ds[k]
                since_coin += 1
            elif lb == 1:  # C0
                den = pd[k]
                num = pn[k]
                lim = (<uint64_t>0xFFFFFFFFFFFFFFFF // <uint64_t>den) * <uint64_t>den
                while True:
                    _mix64(&state, &z)
                    if z < lim:
                        break
                z = z % <uint64_t>den
                if <int64_t>z < num:
                    node = ds[k]
                else:
                    node = ds[k + 1]
                since_coin = 0
            else:
                node = ds[k + ch[node]]
                since_coin += 1
            steps += 1
    return int(terminated), int(capped)
