"""Explicit state space of a program instance.

Nodes are pairs of a location and a valuation, interned in BFS discovery
order so the graph is canonical.  Transitions follow the usual rules: a
guard or deterministic assignment steps with the silent label ``tau`` and
probability 1, ``x := coin(p)`` branches with labels ``0`` (probability p)
and ``1`` (probability 1-p), ``x := nondet()`` branches with action labels
``a0``/``a1``, and every node at the end location steps to the single
distinguished terminal node, which loops on ``tau``.

Per-node transition order is fixed (tau, coin 0, coin 1, a0, a1), which
pins counterexample search order everywhere downstream.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .lang import Assign, CoinAssign, Guard, NondetAssign, Program

TAU, C0, C1, A0, A1 = range(5)
LABEL_STR = ("tau", "0", "1", "a0", "a1")
COIN_LABELS = (C0, C1)
ACTION_LABELS = (A0, A1)

KIND_PROB, KIND_ACTION, KIND_TERMINAL = 0, 1, 2

DEFAULT_NODE_CAP = 10_000_000


class ModelingError(Exception):
    """The program model is broken at a reachable state."""


class ResourceError(Exception):
    """A configurable exploration budget was exceeded."""


@dataclass(frozen=True)
class Transition:
    src: int
    label: int
    pnum: int  # 0/0 for action transitions
    pden: int
    dst: int

    @property
    def prob(self) -> Optional[Fraction]:
        return None if self.pden == 0 else Fraction(self.pnum, self.pden)


@dataclass
class Lasso:
    """A finite prefix from an initial node plus a loop closing on its own
    first node; the loop's projection onto coin labels is the loop word."""

    prefix: list
    loop: list

    @property
    def coinword(self) -> str:
        return "".join(LABEL_STR[t.label] for t in self.loop
                       if t.label in COIN_LABELS)

    @property
    def actionword(self) -> tuple:
        return tuple(LABEL_STR[t.label] for t in self.loop
                     if t.label in ACTION_LABELS)

    def validate(self, space: "StateSpace"):
        assert self.loop, "lasso loop must be nonempty"
        start = self.prefix[0].src if self.prefix else self.loop[0].src
        assert start in set(space.init.tolist()), "lasso must start initial"
        walk = list(self.prefix) + list(self.loop)
        for a, b in zip(walk, walk[1:]):
            assert a.dst == b.src, "lasso transitions must be contiguous"
        assert self.loop[-1].dst == self.loop[0].src, "loop must close"
        for t in walk:
            assert space.has_edge(t.src, t.label, t.dst), \
                f"transition {t} not in the state space"
        return self


class StateSpace:
    """Immutable explicit graph of a program instance."""

    def __init__(self, prog, instance, var_names, nodes, init, kind,
                 indptr, dst, label, pnum, pden, terminal):
        self.prog = prog
        self.instance = dict(instance)
        self.var_names = var_names
        self.nodes = nodes            # list of (loc, vals)
        self.init = init              # np.ndarray of node indices
        self.kind = kind              # np.int8 per node
        self.indptr = indptr          # CSR over transitions
        self.dst = dst
        self.label = label
        self.pnum = pnum
        self.pden = pden
        self.terminal = terminal      # index of the distinguished end node, or -1

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_transitions(self) -> int:
        return len(self.dst)

    def out(self, i):
        s, e = self.indptr[i], self.indptr[i + 1]
        return [(int(self.label[k]), int(self.pnum[k]), int(self.pden[k]),
                 int(self.dst[k])) for k in range(s, e)]

    def transition(self, edge_index: int) -> Transition:
        k = int(edge_index)
        src = int(np.searchsorted(self.indptr, k, side="right") - 1)
        return Transition(src, int(self.label[k]), int(self.pnum[k]),
                          int(self.pden[k]), int(self.dst[k]))

    def has_edge(self, src, label, dst) -> bool:
        s, e = self.indptr[src], self.indptr[src + 1]
        return any(int(self.label[k]) == label and int(self.dst[k]) == dst
                   for k in range(s, e))

    def is_top_node(self, i) -> bool:
        loc = self.nodes[i][0]
        return i == self.terminal or loc == self.prog.top

    @property
    def non_top_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=np.uint8)
        for i in range(self.n_nodes):
            if self.is_top_node(i):
                mask[i] = 0
        return mask

    @property
    def has_actions(self) -> bool:
        return bool((self.kind == KIND_ACTION).any())

    # -- printing -----------------------------------------------------------

    def node_str(self, i) -> str:
        loc, vals = self.nodes[i]
        if loc == -1:
            return "END"
        name = "top" if loc == self.prog.top else f"l{loc}"
        inner = ",".join(f"{n}={v}" for n, v in zip(self.var_names, vals))
        return f"{name}{{{inner}}}"

    def dump(self) -> str:
        lines = []
        for i in range(self.n_nodes):
            for lab, num, den, d in self.out(i):
                if den:
                    lines.append(f"{self.node_str(i)} {LABEL_STR[lab]} "
                                 f"[{num}/{den}] {self.node_str(d)}")
                else:
                    lines.append(f"{self.node_str(i)} {LABEL_STR[lab]} "
                                 f"{self.node_str(d)}")
        return "\n".join(lines) + "\n"


def _compile_expr(e, vidx, consts):
    from .lang import BinOp, Const, VarRef
    if isinstance(e, Const):
        v = e.value
        return lambda vals: v
    if isinstance(e, VarRef):
        if e.name in consts:
            v = consts[e.name]
            return lambda vals: v
        i = vidx[e.name]
        return lambda vals: vals[i]
    left = _compile_expr(e.left, vidx, consts)
    right = _compile_expr(e.right, vidx, consts)
    if isinstance(e, BinOp):
        if e.op == "+":
            return lambda vals: left(vals) + right(vals)
        if e.op == "-":
            return lambda vals: left(vals) - right(vals)
        return lambda vals: left(vals) * right(vals)
    raise TypeError(e)


def _compile_cond(c, vidx, consts):
    from .lang import And, Cmp, Or
    if isinstance(c, Cmp):
        left = _compile_expr(c.left, vidx, consts)
        right = _compile_expr(c.right, vidx, consts)
        op = c.op
        if op == "<=":
            return lambda vals: left(vals) <= right(vals)
        if op == "<":
            return lambda vals: left(vals) < right(vals)
        if op == "==":
            return lambda vals: left(vals) == right(vals)
        if op == "!=":
            return lambda vals: left(vals) != right(vals)
        if op == ">":
            return lambda vals: left(vals) > right(vals)
        return lambda vals: left(vals) >= right(vals)
    if isinstance(c, And):
        a = _compile_cond(c.left, vidx, consts)
        b = _compile_cond(c.right, vidx, consts)
        return lambda vals: a(vals) and b(vals)
    if isinstance(c, Or):
        a = _compile_cond(c.left, vidx, consts)
        b = _compile_cond(c.right, vidx, consts)
        return lambda vals: a(vals) or b(vals)
    a = _compile_cond(c.operand, vidx, consts)
    return lambda vals: not a(vals)


def build(prog: Program, instance=None, node_cap: int = DEFAULT_NODE_CAP) -> StateSpace:
    """Explore the reachable state space of ``prog`` with the given
    parameter instantiation.

    Parameters without an upper bound must all be fixed by ``instance``;
    bounded parameters left open contribute one initial node per value.
    """
    instance = dict(instance or {})
    declared = {p.name for p in prog.params}
    for name in instance:
        if name not in declared:
            raise ValueError(f"unknown parameter {name!r}")
    open_params = []
    consts = {}
    for p in prog.params:
        if p.name in instance:
            v = instance[p.name]
            if v < p.lo or (p.hi is not None and v > p.hi):
                raise ValueError(f"value {v} outside the range of {p.name!r}")
            consts[p.name] = v
        elif p.hi is None:
            raise ValueError(f"unbounded parameter {p.name!r} must be fixed")
        else:
            open_params.append(p)

    var_names = tuple(v.name for v in prog.vars) + tuple(p.name for p in open_params)
    ranges = {v.name: (v.lo, v.hi) for v in prog.vars}
    vidx = {n: i for i, n in enumerate(var_names)}

    # per-location compiled successor rules
    loc_rule = []
    for loc in range(prog.n_locations):
        outs = prog.out(loc)
        cmd0 = outs[0][1]
        if loc == prog.top:
            loc_rule.append(("top", None))
        elif isinstance(cmd0, Guard):
            loc_rule.append(("guard", [(_compile_cond(c.cond, vidx, consts), dst)
                                       for dst, c in outs]))
        elif isinstance(cmd0, Assign):
            dst, cmd = outs[0]
            loc_rule.append(("assign", (vidx[cmd.var], cmd.var,
                                        _compile_expr(cmd.expr, vidx, consts), dst)))
        elif isinstance(cmd0, CoinAssign):
            dst, cmd = outs[0]
            loc_rule.append(("coin", (vidx[cmd.var], cmd.var,
                                      cmd.prob.numerator, cmd.prob.denominator, dst)))
        elif isinstance(cmd0, NondetAssign):
            dst, cmd = outs[0]
            loc_rule.append(("nondet", (vidx[cmd.var], cmd.var, dst)))
        else:
            raise TypeError(cmd0)

    nodes = []
    index = {}
    trans = []
    kind = []
    terminal = -1

    def intern(loc, vals):
        key = (loc, vals)
        i = index.get(key)
        if i is None:
            if len(nodes) >= node_cap:
                raise ResourceError(f"node cap of {node_cap} exceeded")
            i = len(nodes)
            index[key] = i
            nodes.append(key)
            trans.append(None)
            kind.append(KIND_PROB)
        return i

    def check_range(name, value, loc, vals):
        lo, hi = ranges[name]
        if not lo <= value <= hi:
            raise ModelingError(
                f"assignment to {name!r} at location l{loc} leaves its range "
                f"{lo}..{hi} (value {value}, valuation "
                f"{dict(zip(var_names, vals))})")

    init_vals = tuple(v.init for v in prog.vars)
    spans = [range(p.lo, p.hi + 1) for p in open_params]
    init = []
    for extra in itertools.product(*spans):
        init.append(intern(prog.bot, init_vals + extra))

    work = deque(init)
    seen_in_work = set(init)
    while work:
        i = work.popleft()
        loc, vals = nodes[i]
        rk, payload = loc_rule[loc] if loc >= 0 else ("terminal", None)
        succs = []
        if rk == "terminal":
            kind[i] = KIND_TERMINAL
            succs = [(TAU, 1, 1, i)]
        elif rk == "top":
            t = terminal = intern(-1, ()) if terminal == -1 else terminal
            succs = [(TAU, 1, 1, t)]
        elif rk == "guard":
            holds = [dst for f, dst in payload if f(vals)]
            if len(holds) != 1:
                raise ModelingError(
                    f"guards at location l{loc} hold {len(holds)} times for "
                    f"valuation {dict(zip(var_names, vals))}")
            succs = [(TAU, 1, 1, intern(holds[0], vals))]
        elif rk == "assign":
            xi, name, f, dst = payload
            v = f(vals)
            check_range(name, v, loc, vals)
            nv = vals[:xi] + (v,) + vals[xi + 1:]
            succs = [(TAU, 1, 1, intern(dst, nv))]
        elif rk == "coin":
            xi, name, num, den, dst = payload
            for value in (0, 1):
                check_range(name, value, loc, vals)
            n0 = intern(dst, vals[:xi] + (0,) + vals[xi + 1:])
            n1 = intern(dst, vals[:xi] + (1,) + vals[xi + 1:])
            succs = [(C0, num, den, n0), (C1, den - num, den, n1)]
        elif rk == "nondet":
            xi, name, dst = payload
            kind[i] = KIND_ACTION
            for value in (0, 1):
                check_range(name, value, loc, vals)
            n0 = intern(dst, vals[:xi] + (0,) + vals[xi + 1:])
            n1 = intern(dst, vals[:xi] + (1,) + vals[xi + 1:])
            succs = [(A0, 0, 0, n0), (A1, 0, 0, n1)]
        trans[i] = succs
        for _, _, _, d in succs:
            if d not in seen_in_work:
                seen_in_work.add(d)
                work.append(d)

    n = len(nodes)
    counts = np.fromiter((len(t) for t in trans), dtype=np.int64, count=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    m = int(indptr[-1])
    dst = np.empty(m, dtype=np.int64)
    label = np.empty(m, dtype=np.int64)
    pnum = np.empty(m, dtype=np.int64)
    pden = np.empty(m, dtype=np.int64)
    k = 0
    for t in trans:
        for lab, num, den, d in t:
            label[k], pnum[k], pden[k], dst[k] = lab, num, den, d
            k += 1

    return StateSpace(prog, instance, var_names, nodes,
                      np.asarray(init, dtype=np.int64),
                      np.asarray(kind, dtype=np.int8),
                      indptr, dst, label, pnum, pden, terminal)


# ---------------------------------------------------------------------------
# Path utilities

def node_sort(space: StateSpace, i: int) -> str:
    """First outgoing label classifies a node: tau step, coin, or action."""
    if space.kind[i] == KIND_TERMINAL:
        return "terminal"
    lab = int(space.label[space.indptr[i]])
    if lab == TAU:
        return "tau"
    return "coin" if lab in COIN_LABELS else "action"


def tau_closure(space: StateSpace, i: int):
    """Follow tau steps to the next coin, action, or terminal node.
    Returns None if a silent cycle is entered."""
    steps = 0
    while node_sort(space, i) == "tau":
        i = int(space.dst[space.indptr[i]])
        steps += 1
        if steps > space.n_nodes:
            return None
    return i


def ends_up_in(space: StateSpace, node: int, word: str):
    """Deterministic closure over ``tau* c1 tau* ... cm tau*``.

    Returns ``("node", i)`` for the unique coin-or-terminal node reached,
    ``("terminated", k)`` if the end is reached after only ``k < len(word)``
    letters, or ``("undefined", None)`` if a coinless cycle is entered.
    """
    if space.has_actions:
        raise ValueError("ends_up_in requires a deterministic program")
    cur = tau_closure(space, node)
    for k, ch in enumerate(word):
        if cur is None:
            return ("undefined", None)
        if space.kind[cur] == KIND_TERMINAL:
            return ("terminated", k)
        want = C0 if ch == "0" else C1
        s, e = space.indptr[cur], space.indptr[cur + 1]
        nxt = None
        for j in range(s, e):
            if int(space.label[j]) == want:
                nxt = int(space.dst[j])
                break
        cur = tau_closure(space, nxt)
    if cur is None:
        return ("undefined", None)
    return ("node", cur)


def trace_projection(labels, alphabet: str) -> str:
    """Project a label sequence onto C, A, or G, order-preserving.

    ``labels`` may be label ints or Transition objects.  Coin projections
    come back as a compact word like ``"01"``; action and mixed
    projections are space-joined tokens.
    """
    ls = [t.label if isinstance(t, Transition) else t for t in labels]
    if alphabet == "C":
        return "".join(LABEL_STR[l] for l in ls if l in COIN_LABELS)
    if alphabet == "A":
        return " ".join(LABEL_STR[l] for l in ls if l in ACTION_LABELS)
    if alphabet == "G":
        return " ".join(LABEL_STR[l] for l in ls
                        if l in COIN_LABELS or l in ACTION_LABELS)
    raise ValueError(f"unknown alphabet {alphabet!r}")


def edge_transitions(space: StateSpace, edge_indices) -> list:
    return [space.transition(k) for k in edge_indices]
