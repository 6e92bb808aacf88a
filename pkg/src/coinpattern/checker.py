"""Pattern checkers.

A pattern check builds the synchronous product of the state space
(terminal region removed) with a small Büchi automaton and searches it for
an accepting lasso by nested depth-first search.  The word automaton for w
has |w|+1 states: a sink that waits for the match to start, one state per
matched prefix (silent and action labels do not disturb a partial match),
and one accepting state that jumps back to the sink on any label.

All exploration follows the state space's canonical transition order, and
automaton matches advance before they stay, so the first counterexample
found is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .semantics import (A0, A1, C0, C1, COIN_LABELS, TAU, Lasso,
                        ResourceError, StateSpace, edge_transitions)

DEFAULT_PRODUCT_BUDGET = 20_000_000

N_LABELS = 5
ALL_LABELS = (TAU, C0, C1, A0, A1)
SILENT_OR_ACTION = (TAU, A0, A1)


@dataclass
class Automaton:
    """Nondeterministic Büchi automaton over transition labels.

    ``table[s, l]`` lists successor states of s under label l in
    exploration order (-1 padded, at most two entries)."""

    n_states: int
    initial: int
    accepting: np.ndarray  # uint8 per state
    table: np.ndarray      # int64 (n_states, N_LABELS, 2)

    @staticmethod
    def empty(n_states, initial=0):
        return Automaton(n_states, initial,
                         np.zeros(n_states, dtype=np.uint8),
                         np.full((n_states, N_LABELS, 2), -1, dtype=np.int64))

    def add(self, state, label, succ):
        row = self.table[state, label]
        if row[0] == -1:
            row[0] = succ
        elif row[1] == -1:
            row[1] = succ
        else:
            raise ValueError("at most two successors per state and label")


def trivial_automaton() -> Automaton:
    """Accepts every infinite label sequence."""
    aut = Automaton.empty(1)
    aut.accepting[0] = 1
    for lab in ALL_LABELS:
        aut.add(0, lab, 0)
    return aut


def _coin(ch: str) -> int:
    return C0 if ch == "0" else C1


def word_automaton(word: str) -> Automaton:
    """Büchi automaton accepting label sequences whose coin projection
    contains ``word`` infinitely often."""
    if not word:
        return trivial_automaton()
    n = len(word)
    aut = Automaton.empty(n + 1)
    aut.accepting[n] = 1
    aut.add(0, _coin(word[0]), 1)  # match advances before it stays
    for lab in ALL_LABELS:
        aut.add(0, lab, 0)
    for j in range(1, n):
        aut.add(j, _coin(word[j]), j + 1)
        for lab in SILENT_OR_ACTION:
            aut.add(j, lab, j)
    for lab in ALL_LABELS:
        aut.add(n, lab, 0)
    return aut


def sequence_automaton(words, tail: str = "repeat") -> Automaton:
    """Automaton for the pattern C* w_1 C* w_2 ... C* w_m with the given
    tail: ``repeat`` keeps demanding the final word, ``free`` accepts any
    continuation after it."""
    if tail not in ("repeat", "free"):
        raise ValueError(f"unknown tail {tail!r}")
    if not words or any(not w for w in words):
        raise ValueError("sequence patterns need nonempty words")
    offsets = []
    total = 0
    for w in words:
        offsets.append(total)
        total += len(w)
    acc = total
    aut = Automaton.empty(total + 1)
    aut.accepting[acc] = 1
    m = len(words)
    for i, w in enumerate(words):
        base = offsets[i]
        done = offsets[i + 1] if i + 1 < m else acc
        for j, ch in enumerate(w):
            state = base + j
            aut.add(state, _coin(ch), base + j + 1 if j + 1 < len(w) else done)
            if j == 0:
                for lab in ALL_LABELS:
                    aut.add(state, lab, state)
            else:
                for lab in SILENT_OR_ACTION:
                    aut.add(state, lab, state)
    if tail == "repeat":
        for lab in ALL_LABELS:
            aut.add(acc, lab, offsets[m - 1])
    else:
        for lab in ALL_LABELS:
            aut.add(acc, lab, acc)
    return aut


def response_automaton(response) -> Automaton:
    """Automaton for (AC)* R (AC)^omega: a prefix trie of the interleaved
    response words hanging off a waiting sink, with an absorbing accepting
    state once any word of R has been observed."""
    words = sorted(response.words)
    if not words or words == [()]:
        return trivial_automaton()
    # trie over label tuples; node 0 is the sink, -1 marks completion
    children = [{}]
    for w in words:
        cur = 0
        for lab in w[:-1]:
            nxt = children[cur].get(lab)
            if nxt is None:
                nxt = len(children)
                children.append({})
                children[cur][lab] = nxt
            cur = nxt
        children[cur][w[-1]] = -1

    n = len(children) + 1
    acc = n - 1
    aut = Automaton.empty(n)
    aut.accepting[acc] = 1
    for node, kids in enumerate(children):
        for lab, nxt in sorted(kids.items()):
            aut.add(node, lab, acc if nxt == -1 else nxt)
        if node == 0:
            for lab in ALL_LABELS:
                aut.add(node, lab, node)
        else:
            aut.add(node, TAU, node)
    for lab in ALL_LABELS:
        aut.add(acc, lab, acc)
    return aut


# ---------------------------------------------------------------------------
# Product and emptiness

@dataclass
class Product:
    space: StateSpace
    n_astates: int
    indptr: np.ndarray
    dst: np.ndarray
    edge_orig: np.ndarray  # product edge -> space CSR edge
    starts: np.ndarray
    accepting: np.ndarray
    active: np.ndarray


def build_product(space: StateSpace, aut: Automaton,
                  budget: int = DEFAULT_PRODUCT_BUDGET) -> Product:
    n = space.n_nodes
    A = aut.n_states
    if n * A > budget:
        raise ResourceError(f"product of {n} nodes and {A} automaton states "
                            f"exceeds the budget of {budget}")
    node_active = space.non_top_mask
    esrc = np.repeat(np.arange(n, dtype=np.int64), np.diff(space.indptr))
    live = (node_active[esrc] == 1) & (node_active[space.dst] == 1)
    eidx = np.nonzero(live)[0].astype(np.int64)
    esrc = esrc[eidx]
    edst = space.dst[eidx]
    elabel = space.label[eidx]

    seg_src, seg_dst, seg_eidx, seg_rank = [], [], [], []
    for a in range(A):
        succ = aut.table[a, elabel]  # (k, 2)
        for rank in (0, 1):
            anext = succ[:, rank]
            ok = anext >= 0
            if not ok.any():
                continue
            seg_src.append(esrc[ok] * A + a)
            seg_dst.append(edst[ok] * A + anext[ok])
            seg_eidx.append(eidx[ok])
            seg_rank.append(np.full(int(ok.sum()), rank, dtype=np.int64))
    if seg_src:
        psrc = np.concatenate(seg_src)
        pdst = np.concatenate(seg_dst)
        peidx = np.concatenate(seg_eidx)
        prank = np.concatenate(seg_rank)
        order = np.lexsort((prank, peidx, psrc))
        psrc, pdst, peidx = psrc[order], pdst[order], peidx[order]
    else:
        psrc = pdst = peidx = np.zeros(0, dtype=np.int64)

    np_states = n * A
    indptr = np.zeros(np_states + 1, dtype=np.int64)
    np.cumsum(np.bincount(psrc, minlength=np_states), out=indptr[1:])
    starts = space.init.astype(np.int64) * A + aut.initial
    accepting = np.tile(aut.accepting.astype(np.uint8), n)
    active = np.repeat(node_active.astype(np.uint8), A)
    return Product(space, A, indptr, pdst, peidx, starts, accepting, active)


def find_accepting_lasso(product: Product) -> Optional[Lasso]:
    found = kernels.cvwy_lasso(product.indptr, product.dst, product.starts,
                               product.accepting, product.active)
    if found is None:
        return None
    prefix_edges, loop_edges = found
    space = product.space
    prefix = edge_transitions(space, product.edge_orig[prefix_edges])
    loop = edge_transitions(space, product.edge_orig[loop_edges])
    return Lasso(prefix, loop).validate(space)


# ---------------------------------------------------------------------------
# Checks

@dataclass
class CheckVerdict:
    status: str  # "terminating" | "lasso" | "not-as-terminating"
    lasso: Optional[Lasso] = None

    @property
    def terminating(self) -> bool:
        return self.status == "terminating"


def _edge_subgraph(space: StateSpace, keep_labels) -> tuple:
    """CSR restricted to non-terminal nodes and the given labels, plus the
    mapping back to original edge indices and the edge source array."""
    n = space.n_nodes
    node_active = space.non_top_mask
    esrc = np.repeat(np.arange(n, dtype=np.int64), np.diff(space.indptr))
    keep = np.isin(space.label, keep_labels)
    keep &= (node_active[esrc] == 1) & (node_active[space.dst] == 1)
    eidx = np.nonzero(keep)[0].astype(np.int64)
    hsrc = esrc[eidx]
    hdst = space.dst[eidx].astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(hsrc, minlength=n), out=indptr[1:])
    return indptr, hdst, eidx, hsrc


def _silent_cycle_lasso(space: StateSpace, keep_labels) -> Optional[Lasso]:
    """A lasso whose loop uses only the given labels, or None."""
    h_indptr, h_dst, h_eidx, h_src = _edge_subgraph(space, keep_labels)
    node_active = space.non_top_mask
    comp, _ = kernels.tarjan_scc(h_indptr, h_dst, node_active)
    sizes = np.bincount(comp[comp >= 0], minlength=int(comp.max() + 1) if (comp >= 0).any() else 0)
    in_cycle = np.zeros(space.n_nodes, dtype=np.uint8)
    for i in range(space.n_nodes):
        c = comp[i]
        if c < 0:
            continue
        if sizes[c] > 1:
            in_cycle[i] = 1
        else:
            for k in range(int(h_indptr[i]), int(h_indptr[i + 1])):
                if int(h_dst[k]) == i:
                    in_cycle[i] = 1
                    break
    if not in_cycle.any():
        return None
    # first cycle node in BFS order from the initial nodes (full graph)
    v = None
    for i in _bfs_order(space, node_active):
        if in_cycle[i]:
            v = i
            break
    if v is None:
        return None
    prefix_edges = kernels.bfs_edge_path(space.indptr, space.dst,
                                         space.init, v, node_active)
    same_comp = (comp == comp[v]).astype(np.uint8)
    loop_edges = _cycle_through(h_indptr, h_dst, h_src, same_comp, v)
    prefix = edge_transitions(space, np.asarray(prefix_edges, dtype=np.int64))
    loop = edge_transitions(space, h_eidx[np.asarray(loop_edges, dtype=np.int64)])
    return Lasso(prefix, loop).validate(space)


def _bfs_order(space: StateSpace, active):
    order = []
    seen = set()
    queue = [int(s) for s in space.init if active[s]]
    for s in queue:
        if s not in seen:
            seen.add(s)
            order.append(s)
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for k in range(int(space.indptr[u]), int(space.indptr[u + 1])):
            v = int(space.dst[k])
            if active[v] and v not in seen:
                seen.add(v)
                order.append(v)
    return order


def _cycle_through(indptr, dst, src_of, active, v):
    """Shortest edge cycle from v back to v inside the active set."""
    parents = {}
    queue = []
    for k in range(int(indptr[v]), int(indptr[v + 1])):
        u = int(dst[k])
        if not active[u]:
            continue
        if u == v:
            return [k]
        if u not in parents:
            parents[u] = k
            queue.append(u)
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        for k in range(int(indptr[u]), int(indptr[u + 1])):
            w = int(dst[k])
            if not active[w]:
                continue
            if w == v:
                path = [k]
                node = u
                while node != v:
                    pk = parents[node]
                    path.append(pk)
                    node = int(src_of[pk])
                return list(reversed(path))
            if w not in parents:
                parents[w] = k
                queue.append(w)
    raise AssertionError("no cycle through a node reported to lie on one")


def check_coinless_nontermination(space: StateSpace) -> Optional[Lasso]:
    """A lasso witnessing a nonterminating run with finitely many coin
    tosses (its loop carries no coin labels), or None."""
    return _silent_cycle_lasso(space, SILENT_OR_ACTION)


def check_nontermination(space: StateSpace,
                         budget: int = DEFAULT_PRODUCT_BUDGET) -> Optional[Lasso]:
    """Any nonterminating run at all, as a lasso."""
    return find_accepting_lasso(build_product(space, trivial_automaton(), budget))


def check_simple_pattern(space: StateSpace, word: str,
                         budget: int = DEFAULT_PRODUCT_BUDGET) -> CheckVerdict:
    """Decide whether repeating ``word`` forever is a terminating pattern.

    Callers must rule out coinless nontermination first (or treat a lasso
    verdict here as subsuming it)."""
    if not word:
        raise ValueError("simple pattern checks need a nonempty word")
    lasso = find_accepting_lasso(build_product(space, word_automaton(word), budget))
    if lasso is None:
        return CheckVerdict("terminating")
    return CheckVerdict("lasso", lasso)


def check_sequence_pattern(space: StateSpace, words, tail: str = "repeat",
                           budget: int = DEFAULT_PRODUCT_BUDGET) -> CheckVerdict:
    lasso = find_accepting_lasso(
        build_product(space, sequence_automaton(words, tail), budget))
    if lasso is None:
        return CheckVerdict("terminating")
    return CheckVerdict("lasso", lasso)


def is_alternating(space: StateSpace) -> bool:
    """Every run's projection onto coins and actions lies in (AC)^infinity,
    action first, with a consistent phase at every node."""
    EXPECT_A, EXPECT_C = 0, 1
    phase = {}
    queue = []
    for s in space.init:
        phase[int(s)] = EXPECT_A
        queue.append(int(s))
    head = 0
    while head < len(queue):
        u = queue[head]
        head += 1
        pu = phase[u]
        for lab, _, _, v in space.out(u):
            if lab == TAU:
                pv = pu
            elif lab in COIN_LABELS:
                if pu != EXPECT_C:
                    return False
                pv = EXPECT_A
            else:
                if pu != EXPECT_A:
                    return False
                pv = EXPECT_C
            if space.is_top_node(v):
                continue  # the projection ends here; phase is moot
            if v not in phase:
                phase[v] = pv
                queue.append(v)
            elif phase[v] != pv:
                return False
    return True


def check_response_pattern(space: StateSpace, response,
                           budget: int = DEFAULT_PRODUCT_BUDGET) -> CheckVerdict:
    """Decide whether (AC)* R (AC)^omega is a terminating response pattern
    for a program in alternating normal form, under every resolution of the
    action choices."""
    if not is_alternating(space):
        raise ValueError("response checks need the alternating normal form")
    silent = _silent_cycle_lasso(space, (TAU,))
    if silent is not None:
        return CheckVerdict("not-as-terminating", silent)
    lasso = find_accepting_lasso(
        build_product(space, response_automaton(response), budget))
    if lasso is None:
        return CheckVerdict("terminating")
    return CheckVerdict("lasso", lasso)


def format_lasso(space: StateSpace, lasso: Lasso) -> str:
    """PREFIX/LOOP lines in the dump format plus the extracted coin word."""
    lines = []
    for tag, part in (("PREFIX", lasso.prefix), ("LOOP", lasso.loop)):
        for t in part:
            if t.pden:
                lines.append(f"{tag}: {space.node_str(t.src)} "
                             f"{_label_str(t.label)} [{t.pnum}/{t.pden}] "
                             f"{space.node_str(t.dst)}")
            else:
                lines.append(f"{tag}: {space.node_str(t.src)} "
                             f"{_label_str(t.label)} {space.node_str(t.dst)}")
    lines.append(f"COINWORD: {lasso.coinword}")
    return "\n".join(lines)


def _label_str(lab):
    from .semantics import LABEL_STR
    return LABEL_STR[lab]
