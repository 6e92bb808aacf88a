"""Responses for nondeterministic programs.

A response of length n is a set of 2^n interleaved action/coin words of
symbol length 2n whose action projections are pairwise distinct: a coin
reply for every possible adversarial action sequence.  Programs are first
brought into an alternating normal form (action and coin labels strictly
alternate along every run, action first) by inserting dummy assignments
to a reserved scratch variable; the transformed program terminates
almost surely exactly when the original does.

The constructive builder composes per-node responses: each action node
gets a minimal-length response leading it to the end, and the global set
is refined until every action node terminates along a prefix of every
matching word, then padded to uniform length with all-zero coin answers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .checker import is_alternating
from .lang import (Assign, CoinAssign, Guard, NondetAssign, Program, VarDecl)
from .patterns import Refuted
from .semantics import (A0, A1, C0, C1, KIND_ACTION, KIND_TERMINAL,
                        LABEL_STR, StateSpace, node_sort, tau_closure)

PAD_VAR = "__pad"

_ACTIONS = (A0, A1)
_COIN_OF = {0: C0, 1: C1}


@dataclass(frozen=True)
class Response:
    """Set of interleaved words in (A C)^n, one per action sequence."""

    n: int
    words: frozenset  # of tuples of labels

    def __post_init__(self):
        if len(self.words) != 1 << self.n:
            raise ValueError(f"a response of length {self.n} needs "
                             f"{1 << self.n} words, got {len(self.words)}")
        projections = set()
        for w in self.words:
            if len(w) != 2 * self.n:
                raise ValueError("all response words must have length 2n")
            for j, lab in enumerate(w):
                expected = _ACTIONS if j % 2 == 0 else (C0, C1)
                if lab not in expected:
                    raise ValueError("response words must alternate "
                                     "action and coin labels")
            projections.add(tuple(w[::2]))
        if len(projections) != len(self.words):
            raise ValueError("action projections must be pairwise distinct")


def response_of_length_zero() -> Response:
    return Response(0, frozenset({()}))


def compose(r1: Response, r2: Response) -> Response:
    """All concatenations of an r1 word with an r2 continuation."""
    return Response(r1.n + r2.n,
                    frozenset(a + b for a in r1.words for b in r2.words))


def all_zero_response(n: int) -> Response:
    """Every action sequence answered by coin outcome 0."""
    words = set()
    for acts in itertools.product(_ACTIONS, repeat=n):
        word = []
        for a in acts:
            word += [a, C0]
        words.add(tuple(word))
    return Response(n, frozenset(words))


def enumerate_response(index: int) -> Response:
    """i-th response (1-based) in a fixed enumeration: lengths ascending,
    reply tables in lexicographic order (coin 0 before 1).  Feeding these
    in order induces the universal response pattern, which is terminating
    for every almost-surely terminating weakly finite program in normal
    form; no driver uses it and no checker consumes the infinite sequence,
    it exists as a value only."""
    if index < 1:
        raise ValueError("enumeration is 1-based")
    index -= 1
    n = 0
    while True:
        count = 2 ** (n * (1 << n))  # |C^n| ** |A^n| reply tables
        if index < count:
            break
        index -= count
        n += 1
    if n == 0:
        return response_of_length_zero()
    acts = list(itertools.product(_ACTIONS, repeat=n))
    words = set()
    for pos, a_seq in enumerate(acts):
        shift = (len(acts) - 1 - pos) * n
        reply = (index >> shift) & ((1 << n) - 1)
        word = []
        for j, a in enumerate(a_seq):
            bit = (reply >> (n - 1 - j)) & 1
            word += [a, _COIN_OF[bit]]
        words.add(tuple(word))
    return Response(n, frozenset(words))


def serialize_response(r: Response) -> str:
    """One word per line, space-separated letters; the empty word of the
    length-zero response prints as '-'."""
    return "\n".join(" ".join(LABEL_STR[lab] for lab in w) if w else "-"
                     for w in sorted(r.words)) + "\n"


def parse_response(text: str) -> Response:
    rev = {s: lab for lab, s in enumerate(LABEL_STR)}
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line == "-":
            words.add(())
            continue
        words.add(tuple(rev[tok] for tok in line.split()))
    n = max((len(w) for w in words), default=0) // 2
    return Response(n, frozenset(words))


# ---------------------------------------------------------------------------
# Normal form

def _location_phases(prog: Program):
    """Expected next visible label per location (0 = action, 1 = coin),
    or None when phases conflict or a command arrives in the wrong phase.
    The end location is left out: runs stop there."""
    A_NEXT, C_NEXT = 0, 1
    phase = {prog.bot: A_NEXT}
    queue = [prog.bot]
    head = 0
    while head < len(queue):
        loc = queue[head]
        head += 1
        if loc == prog.top:
            continue
        p = phase[loc]
        for dst, cmd in prog.out(loc):
            if isinstance(cmd, (Guard, Assign)):
                q = p
            elif isinstance(cmd, CoinAssign):
                if p != C_NEXT:
                    return None
                q = A_NEXT
            else:
                if p != A_NEXT:
                    return None
                q = C_NEXT
            if dst == prog.top:
                continue
            if dst not in phase:
                phase[dst] = q
                queue.append(dst)
            elif phase[dst] != q:
                return None
    return phase


def normalize(prog: Program) -> Program:
    """Insert dummy coin/nondet assignments to the scratch variable so that
    action and coin labels strictly alternate (action first) on every run.
    Locations reachable in both phases are split.  Already-normal programs
    come back unchanged."""
    if _location_phases(prog) is not None:
        return prog
    A_NEXT, C_NEXT = 0, 1
    index = {}
    edges = []

    def loc_of(loc, p):
        if loc == prog.top:
            p = A_NEXT  # runs end here; collapse the phases
        key = (loc, p)
        if key not in index:
            index[key] = len(edges)
            edges.append(None)
        return index[key]

    bot = loc_of(prog.bot, A_NEXT)
    work = [(prog.bot, A_NEXT)]
    done = set()
    while work:
        loc, p = work.pop()
        if loc == prog.top:
            p = A_NEXT
        if (loc, p) in done:
            continue
        done.add((loc, p))
        i = loc_of(loc, p)
        resolved = []
        for dst, cmd in prog.out(loc):
            if isinstance(cmd, (Guard, Assign)):
                q = p
                dummy = None
            elif isinstance(cmd, CoinAssign):
                q = A_NEXT
                dummy = None if p == C_NEXT else NondetAssign(PAD_VAR)
            else:
                q = C_NEXT
                dummy = None if p == A_NEXT else CoinAssign(PAD_VAR, Fraction(1, 2))
            j = loc_of(dst, q)
            work.append((dst, q))
            if dummy is None:
                resolved.append((j, cmd))
            else:
                edges.append([(j, cmd)])
                resolved.append((len(edges) - 1, dummy))
        edges[i] = resolved
    top = loc_of(prog.top, A_NEXT)
    vars_ = prog.vars
    if not any(v.name == PAD_VAR for v in vars_):
        vars_ = vars_ + (VarDecl(PAD_VAR, 0, 1, 0),)
    out = Program(prog.name, prog.params, vars_, len(edges), bot, top, edges)
    return _renumber(out)


def _renumber(prog: Program) -> Program:
    order = [prog.bot]
    pos = {prog.bot: 0}
    head = 0
    while head < len(order):
        loc = order[head]
        head += 1
        for dst, _ in prog.edges[loc]:
            if dst not in pos:
                pos[dst] = len(order)
                order.append(dst)
    edges = [[(pos[d], cmd) for d, cmd in prog.edges[loc]] for loc in order]
    out = Program(prog.name, prog.params, prog.vars, len(order), 0,
                  pos[prog.top], edges)
    return out.validate()


def count_locations_with(prog: Program, command_type) -> int:
    return sum(1 for outs in prog.edges
               if outs and isinstance(outs[0][1], command_type))


# ---------------------------------------------------------------------------
# Constructive response builder

def _follow_pair(space: StateSpace, node: int, action: int, coin: int):
    """From an action node, take one action and one coin and close under
    silent steps.  Returns the next action node, -1 for the end, or None
    when a coinless cycle is entered."""
    s = int(space.indptr[node])
    mid = tau_closure(space, int(space.dst[s + (0 if action == A0 else 1)]))
    if mid is None:
        return None
    if space.kind[mid] == KIND_TERMINAL:
        return -1
    assert node_sort(space, mid) == "coin", "normal form violated"
    s = int(space.indptr[mid])
    nxt = tau_closure(space, int(space.dst[s + (0 if coin == C0 else 1)]))
    if nxt is None:
        return None
    if space.kind[nxt] == KIND_TERMINAL:
        return -1
    assert node_sort(space, nxt) == "action", "normal form violated"
    return nxt


def _reply(space: StateSpace, q: int, acts) -> tuple | None:
    """Lexicographically least shortest-terminating coin reply to the
    action sequence, padded with zeros, or None if none terminates."""
    frontier = [(q, ())]
    for j, a in enumerate(acts):
        nxt = []
        seen = set()
        for node, rep in frontier:
            s = int(space.indptr[node])
            mid = tau_closure(space, int(space.dst[s + (0 if a == A0 else 1)]))
            if mid is None:
                continue
            if space.kind[mid] == KIND_TERMINAL:
                return rep + (C0,) * (len(acts) - len(rep))
            ms = int(space.indptr[mid])
            for coin in (C0, C1):
                tgt = tau_closure(space, int(space.dst[ms + (0 if coin == C0 else 1)]))
                if tgt is None:
                    continue
                if space.kind[tgt] == KIND_TERMINAL:
                    return rep + (coin,) + (C0,) * (len(acts) - len(rep) - 1)
                if tgt not in seen:
                    seen.add(tgt)
                    nxt.append((tgt, rep + (coin,)))
        frontier = nxt
    return None


def _node_response(space: StateSpace, q: int, max_n: int):
    """Minimal-length response leading q to the end."""
    for m in range(1, max_n + 1):
        words = {}
        feasible = True
        for acts in itertools.product(_ACTIONS, repeat=m):
            rep = _reply(space, q, acts)
            if rep is None:
                feasible = False
                if m == max_n:
                    raise Refuted(
                        "an action sequence admits no terminating coin "
                        "reply", (q, acts))
                break
            word = []
            for a, c in zip(acts, rep):
                word += [a, c]
            words[acts] = tuple(word)
        if feasible:
            return Response(m, frozenset(words.values()))
    raise Refuted("no per-node response within the node bound", q)


def _end_following(space: StateSpace, q: int, word) -> int | None:
    """Unique node q ends up in following the interleaved word: an action
    node, -1 for the end (possibly early), or None for a coinless cycle."""
    cur = q
    for j in range(0, len(word), 2):
        if cur == -1:
            return -1
        cur = _follow_pair(space, cur, word[j], word[j + 1])
        if cur is None:
            return None
    return cur


def construct_response(space: StateSpace, word_budget: int = 14) -> Response:
    """Response R of length at most n^2 (n reachable nodes) such that
    every reachable action node terminates along a prefix of every
    matching word of R; verified downstream by the response checker."""
    if not is_alternating(space):
        raise ValueError("construct_response needs the alternating normal form")
    action_nodes = [i for i in range(space.n_nodes)
                    if space.kind[i] == KIND_ACTION]
    if not action_nodes:
        return response_of_length_zero()
    n = space.n_nodes
    node_resp = {}

    def resp_of(q):
        if q not in node_resp:
            node_resp[q] = _node_response(space, q, n)
        return node_resp[q]

    words = {()}
    while True:
        pick = None
        for q in action_nodes:
            for w in sorted(words):
                end = _end_following(space, q, w)
                if end is None:
                    raise Refuted("a matching word enters a coinless cycle",
                                  (q, w))
                if end != -1:
                    pick = (end, w)
                    break
            if pick:
                break
        if pick is None:
            break
        end, w = pick
        r = resp_of(end)
        if len(w) // 2 + r.n > word_budget:
            from .semantics import ResourceError
            raise ResourceError("response length budget exceeded")
        words.remove(w)
        for suffix in r.words:
            words.add(w + suffix)
    length = max(len(w) for w in words) // 2
    padded = set()
    for w in words:
        deficit = length - len(w) // 2
        if deficit == 0:
            padded.add(w)
        else:
            for suffix in all_zero_response(deficit).words:
                padded.add(w + suffix)
    result = Response(length, frozenset(padded))
    assert result.n <= n * n, "response exceeded the quadratic length bound"
    return result
