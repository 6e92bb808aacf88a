"""Guarded-transition documents for external termination provers.

The export format is plain text, one transition per line:

    program: NAME
    start: L0
    end: L9
    vars: k:0..1000000 N:1.. ctr:nat next:nat pos:nat
    init: k=1 N=? ctr=? next=1 pos=1
    from: L0 guard: (0 < k && k < N) update: - to: L2
    from: L2 guard: true update: k:=k+1 to: L0

Variable specs are ``lo..hi`` (bounded), ``lo..`` (a parameter fixed
nondeterministically at start), or ``nat`` (synthetic unbounded counter);
``?`` in an init or update denotes an unbounded nonnegative
nondeterministic assignment.  Updates on one line apply simultaneously;
unnamed variables keep their values.  Lines starting with ``#`` are
comments (used for advisory hints such as loop invariants).

``export_nondet`` turns every coin assignment into ``nondet()``; its
output parses back into an isomorphic flowgraph.  ``instrument_pattern``
additionally restricts the nondeterministic tosses to the runs that
conform to a word-family pattern, using counters ctr/next/pos (and bpos
for the cyclic part) with all guards and updates kept integer-linear.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .lang import (Assign, BinOp, CoinAssign, Cond, Const, Guard,
                   NondetAssign, ParamDecl, Program, TRUE_COND, VarDecl,
                   VarRef, cond_to_str, eval_cond, eval_expr, expr_to_str,
                   parse_cond_text, parse_expr_text)
from .patterns import Pattern

NONDET_RHS = "nondet()"
FREE_RHS = "?"


@dataclass
class TSTransition:
    src: str
    guard: Optional[Cond]  # None = true
    updates: list          # [(var, rhs)] with rhs an Expr or NONDET_RHS/FREE_RHS
    dst: str


@dataclass
class TSDocument:
    name: str
    start: str
    end: str
    vars: list    # [(name, spec)] spec in {"lo..hi", "lo..", "nat"}
    init: list    # [(name, "int" | "?")]
    transitions: list = field(default_factory=list)
    comments: list = field(default_factory=list)

    def render(self) -> str:
        lines = [f"# transition system for {self.name}"]
        lines += self.comments
        lines.append(f"program: {self.name}")
        lines.append(f"start: {self.start}")
        lines.append(f"end: {self.end}")
        lines.append("vars: " + " ".join(f"{n}:{s}" for n, s in self.vars))
        lines.append("init: " + " ".join(f"{n}={v}" for n, v in self.init))
        for t in self.transitions:
            guard = "true" if t.guard is None else cond_to_str(t.guard)
            if t.updates:
                ups = ",".join(
                    f"{v}:={rhs if isinstance(rhs, str) else expr_to_str(rhs)}"
                    for v, rhs in t.updates)
            else:
                ups = "-"
            lines.append(f"from: {t.src} guard: {guard} update: {ups} "
                         f"to: {t.dst}")
        return "\n".join(lines) + "\n"


_LINE_RE = re.compile(
    r"from:\s*(\S+)\s+guard:\s*(.*?)\s+update:\s*(.*?)\s+to:\s*(\S+)\s*$")


def parse_document(text: str) -> TSDocument:
    name = start = end = None
    vars_ = []
    init = []
    transitions = []
    comments = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        if line.startswith("program:"):
            name = line.split(":", 1)[1].strip()
        elif line.startswith("start:"):
            start = line.split(":", 1)[1].strip()
        elif line.startswith("end:"):
            end = line.split(":", 1)[1].strip()
        elif line.startswith("vars:"):
            for item in line.split(":", 1)[1].split():
                n, _, spec = item.partition(":")
                vars_.append((n, spec))
        elif line.startswith("init:"):
            for item in line.split(":", 1)[1].split():
                n, _, v = item.partition("=")
                init.append((n, v))
        elif line.startswith("from:"):
            m = _LINE_RE.match(line)
            if not m:
                raise ValueError(f"malformed transition line: {line!r}")
            src, guard_s, ups_s, dst = m.groups()
            guard = None if guard_s == "true" else parse_cond_text(guard_s)
            updates = []
            if ups_s != "-":
                for item in ups_s.split(","):
                    v, _, rhs = item.partition(":=")
                    rhs = rhs.strip()
                    if rhs in (NONDET_RHS, FREE_RHS):
                        updates.append((v.strip(), rhs))
                    else:
                        updates.append((v.strip(), parse_expr_text(rhs)))
            transitions.append(TSTransition(src, guard, updates, dst))
        else:
            raise ValueError(f"unrecognized line: {line!r}")
    if name is None or start is None or end is None:
        raise ValueError("document misses program/start/end headers")
    return TSDocument(name, start, end, vars_, init, transitions, comments)


# ---------------------------------------------------------------------------
# Plain nondeterministic export

def _loc(i: int) -> str:
    return f"L{i}"


def _doc_header(prog: Program, extra_vars=(), extra_init=()):
    vars_ = []
    init = []
    for v in prog.vars:
        vars_.append((v.name, f"{v.lo}..{v.hi}"))
        init.append((v.name, str(v.init)))
    for p in prog.params:
        hi = "" if p.hi is None else str(p.hi)
        vars_.append((p.name, f"{p.lo}..{hi}"))
        init.append((p.name, "?"))
    vars_ += list(extra_vars)
    init += list(extra_init)
    return vars_, init


def export_nondet(prog: Program) -> TSDocument:
    """The program with every coin toss replaced by a nondeterministic
    assignment; round-trips through parse_document/document_to_program."""
    vars_, init = _doc_header(prog)
    doc = TSDocument(prog.name, _loc(prog.bot), _loc(prog.top), vars_, init)
    for loc in range(prog.n_locations):
        for dst, cmd in prog.out(loc):
            if isinstance(cmd, Guard):
                doc.transitions.append(
                    TSTransition(_loc(loc), _true_or(cmd.cond), [], _loc(dst)))
            elif isinstance(cmd, Assign):
                doc.transitions.append(
                    TSTransition(_loc(loc), None, [(cmd.var, cmd.expr)], _loc(dst)))
            else:  # coin or nondet both export as nondet()
                doc.transitions.append(
                    TSTransition(_loc(loc), None, [(cmd.var, NONDET_RHS)], _loc(dst)))
    return doc


def _true_or(cond):
    return None if cond == TRUE_COND else cond


def document_to_program(doc: TSDocument) -> Program:
    """Rebuild a flowgraph from a plain exported document."""
    ids = {}

    def loc_id(label):
        if label not in ids:
            ids[label] = len(ids)
        return ids[label]

    loc_id(doc.start)
    init_map = dict(doc.init)
    params = []
    vars_ = []
    for name, spec in doc.vars:
        if spec == "nat":
            raise ValueError("synthetic counters cannot rebuild a flowgraph")
        lo_s, _, hi_s = spec.partition("..")
        if hi_s == "" or init_map.get(name) == "?":
            params.append(ParamDecl(name, int(lo_s),
                                    None if hi_s == "" else int(hi_s)))
        else:
            vars_.append(VarDecl(name, int(lo_s), int(hi_s),
                                 int(init_map[name])))
    edges_map = {}
    for t in doc.transitions:
        edges_map.setdefault(loc_id(t.src), [])
        loc_id(t.dst)
    for t in doc.transitions:
        src, dst = ids[t.src], ids[t.dst]
        if t.guard is None and not t.updates:
            cmd = Guard(TRUE_COND)
        elif t.guard is not None and not t.updates:
            cmd = Guard(t.guard)
        elif t.guard is None and len(t.updates) == 1:
            var, rhs = t.updates[0]
            if rhs == NONDET_RHS:
                cmd = NondetAssign(var)
            elif rhs == FREE_RHS:
                raise ValueError("unbounded assignments cannot rebuild "
                                 "a flowgraph")
            else:
                cmd = Assign(var, rhs)
        else:
            raise ValueError("flowgraph edges carry either a guard or one "
                             "assignment")
        edges_map.setdefault(src, []).append((dst, cmd))
    n = len(ids)
    edges = [edges_map.get(i, []) for i in range(n)]
    prog = Program(doc.name, tuple(params), tuple(vars_), n,
                   ids[doc.start], ids[doc.end], edges)
    return prog.validate()


def program_fingerprint(prog: Program):
    """Canonical structure under breadth-first renumbering from the start
    location; equal fingerprints mean isomorphic flowgraphs."""
    order = [prog.bot]
    pos = {prog.bot: 0}
    head = 0
    while head < len(order):
        loc = order[head]
        head += 1
        for dst, _ in prog.out(loc):
            if dst not in pos:
                pos[dst] = len(order)
                order.append(dst)

    def cmd_str(cmd):
        if isinstance(cmd, Guard):
            return f"guard {cond_to_str(cmd.cond)}"
        if isinstance(cmd, Assign):
            return f"{cmd.var}:={expr_to_str(cmd.expr)}"
        if isinstance(cmd, CoinAssign):
            return f"{cmd.var}:=coin({cmd.prob})"
        return f"{cmd.var}:=nondet()"

    body = tuple(tuple((pos[d], cmd_str(c)) for d, c in prog.out(loc))
                 for loc in order)
    return (tuple(prog.params), tuple(prog.vars), pos[prog.top], body)


# ---------------------------------------------------------------------------
# Pattern instrumentation

def _e(v) -> VarRef:
    return VarRef(v)


def _plus(a, b):
    return BinOp("+", a, b)


def _times(k: int, e):
    return BinOp("*", Const(k), e)


def _cmp(op, a, b):
    from .lang import Cmp
    return Cmp(op, a, b)


def _and(*cs):
    from .lang import And
    out = cs[0]
    for c in cs[1:]:
        out = And(out, c)
    return out


def _shifted_next(delta: int):
    """next - delta as a nonnegative-friendly expression."""
    if delta == 0:
        return _e("next")
    if delta > 0:
        return BinOp("-", _e("next"), Const(delta))
    return BinOp("+", _e("next"), Const(-delta))


def instrument_pattern(prog: Program, pattern: Pattern) -> TSDocument:
    """Restrict the exported nondeterministic program to pattern-conforming
    runs.

    Each coin toss either burns one letter of the current gap (ctr > 0),
    emits the forced letter w[next][pos], or, once the word is spent,
    opens the next gap (ctr := ?).  For a template family the word length
    and letter positions are integer-linear in ``next``; the cyclic part
    is tracked by the helper counter bpos.
    """
    if pattern.kind == "simple":
        raise ValueError("simple patterns are checked natively, not exported")
    if pattern.kind == "universal":
        raise ValueError("the universal pattern is not instrumentable")
    if pattern.kind == "sequence":
        if not pattern.words or any(w == "" for w in pattern.words):
            raise ValueError("pattern words must be nonempty")
        if pattern.tail != "repeat":
            raise ValueError("only the repeating tail can be exported")
    else:
        empty_somewhere = (pattern.alpha == "" and pattern.gamma == ""
                           and (pattern.beta == "" or pattern.delta >= 1))
        if empty_somewhere:
            raise ValueError("pattern words must be nonempty")

    beta_len = len(pattern.beta) if pattern.kind == "template" else 0
    extra_vars = [("ctr", "nat"), ("next", "nat"), ("pos", "nat")]
    extra_init = [("ctr", "?"), ("next", "1"), ("pos", "1")]
    if beta_len > 1:
        extra_vars.append(("bpos", f"0..{beta_len - 1}"))
        extra_init.append(("bpos", "0"))
    elif beta_len == 1:
        pass  # a single-letter cycle needs no position tracking
    vars_, init = _doc_header(prog, extra_vars, extra_init)
    doc = TSDocument(prog.name, _loc(prog.bot), _loc(prog.top), vars_, init)
    unbounded = [p.name for p in prog.params if p.hi is None]
    if pattern.kind == "template" and pattern.beta and unbounded:
        doc.comments.append(f"# hint: invariant next <= {unbounded[0]}")

    for loc in range(prog.n_locations):
        for dst, cmd in prog.out(loc):
            if isinstance(cmd, Guard):
                doc.transitions.append(
                    TSTransition(_loc(loc), _true_or(cmd.cond), [], _loc(dst)))
            elif isinstance(cmd, Assign):
                doc.transitions.append(
                    TSTransition(_loc(loc), None, [(cmd.var, cmd.expr)], _loc(dst)))
            elif isinstance(cmd, NondetAssign):
                doc.transitions.append(
                    TSTransition(_loc(loc), None, [(cmd.var, NONDET_RHS)], _loc(dst)))
            else:
                _emit_toss_block(doc, pattern, _loc(loc), cmd.var, _loc(dst))
    return doc


def _emit_toss_block(doc, pattern, src, var, dst):
    ctr, nxt, pos = _e("ctr"), _e("next"), _e("pos")
    gap_free = _cmp(">", ctr, Const(0))
    in_word = _cmp("<=", ctr, Const(0))
    doc.transitions.append(TSTransition(
        src, gap_free,
        [(var, NONDET_RHS), ("ctr", BinOp("-", ctr, Const(1)))], dst))

    def reset_updates(extra_next):
        ups = [(var, NONDET_RHS), ("ctr", FREE_RHS), ("pos", Const(1))]
        ups.append(("next", extra_next))
        if pattern.kind == "template" and len(pattern.beta) > 1:
            ups.append(("bpos", Const(0)))
        return ups

    if pattern.kind == "sequence":
        words = pattern.words
        m = len(words)
        for i, w in enumerate(words, start=1):
            sel = (_cmp("==", nxt, Const(i)) if i < m
                   else _cmp(">=", nxt, Const(m)))
            doc.transitions.append(TSTransition(
                src, _and(in_word, sel, _cmp(">", pos, Const(len(w)))),
                reset_updates(_plus(nxt, Const(1)) if i < m else nxt), dst))
            for p, ch in enumerate(w, start=1):
                doc.transitions.append(TSTransition(
                    src, _and(in_word, sel, _cmp("==", pos, Const(p))),
                    [(var, Const(int(ch))),
                     ("pos", _plus(pos, Const(1)))], dst))
        return

    alpha, beta, gamma, delta = (pattern.alpha, pattern.beta,
                                 pattern.gamma, pattern.delta)
    a_len, b_len, g_len = len(alpha), len(beta), len(gamma)
    grown = _shifted_next(delta)  # next - delta, positive in the long case

    def const_cases():
        """(guard-extra, length-expr) pairs covering every value of next."""
        if b_len == 0:
            return [(None, Const(a_len + g_len))]
        long_len = _plus(Const(a_len + g_len), _times(b_len, grown))
        if delta >= 1:
            return [(_cmp("<=", nxt, Const(delta)), Const(a_len + g_len)),
                    (_cmp(">=", nxt, Const(delta + 1)), long_len)]
        return [(None, long_len)]

    for extra, length in const_cases():
        guard = _and(in_word, _cmp(">", pos, length))
        if extra is not None:
            guard = _and(extra, guard)
        doc.transitions.append(TSTransition(
            src, guard, reset_updates(_plus(nxt, Const(1))), dst))
        # trailing letters sit right after the repeated block
        for k, ch in enumerate(gamma, start=1):
            at = BinOp("-", length, Const(g_len - k))
            letter_guard = _and(in_word, _cmp("==", pos, at))
            if extra is not None:
                letter_guard = _and(extra, letter_guard)
            doc.transitions.append(TSTransition(
                src, letter_guard,
                [(var, Const(int(ch))), ("pos", _plus(pos, Const(1)))], dst))
    for k, ch in enumerate(alpha, start=1):
        doc.transitions.append(TSTransition(
            src, _and(in_word, _cmp("==", pos, Const(k))),
            [(var, Const(int(ch))), ("pos", _plus(pos, Const(1)))], dst))
    if b_len:
        region = _and(_cmp(">=", nxt, Const(delta + 1)) if delta >= 1
                      else _cmp(">=", nxt, Const(1)),
                      _cmp(">", pos, Const(a_len)),
                      _cmp("<=", pos, _plus(Const(a_len), _times(b_len, grown))))
        if b_len == 1:
            doc.transitions.append(TSTransition(
                src, _and(in_word, region),
                [(var, Const(int(beta[0]))), ("pos", _plus(pos, Const(1)))],
                dst))
        else:
            for b, ch in enumerate(beta):
                doc.transitions.append(TSTransition(
                    src, _and(in_word, region, _cmp("==", _e("bpos"), Const(b))),
                    [(var, Const(int(ch))), ("pos", _plus(pos, Const(1))),
                     ("bpos", Const((b + 1) % b_len))], dst))


# ---------------------------------------------------------------------------
# Bounded interpretation (for cross-checking against the native checkers)

def interpret_nonterminating(doc: TSDocument, params: dict, ctr_cap: int = 8,
                             next_cap: int = 8, state_cap: int = 500_000) -> bool:
    """Does the document admit a nonterminating run when ``?`` draws from
    0..ctr_cap and the word index saturates at next_cap?

    The saturation mirrors a truncated pattern whose last word repeats,
    so existence of a cycle here matches the native sequence checker on
    the same truncation.
    """
    specs = dict(doc.vars)
    init_env = {}
    free_init = []
    for name, v in doc.init:
        if name in params:
            init_env[name] = int(params[name])
        elif v == "?":
            free_init.append(name)
            init_env[name] = 0
        else:
            init_env[name] = int(v)
    order = sorted(init_env)

    def clamp(name, value):
        if name == "next":
            return min(value, next_cap)
        spec = specs.get(name, "nat")
        if spec != "nat" and spec.partition("..")[2]:
            lo = int(spec.partition("..")[0])
            if value < lo:
                raise AssertionError(f"{name} fell below its range")
        return value

    by_src = {}
    for t in doc.transitions:
        by_src.setdefault(t.src, []).append(t)

    def successors(state):
        loc, vals = state
        env = dict(zip(order, vals))
        out = []
        for t in by_src.get(loc, []):
            if t.guard is not None and not eval_cond(t.guard, env):
                continue
            choices = [{}]
            updates = []
            for var, rhs in t.updates:
                if rhs == NONDET_RHS:
                    choices = [dict(c, **{var: b}) for c in choices
                               for b in (0, 1)]
                elif rhs == FREE_RHS:
                    choices = [dict(c, **{var: b}) for c in choices
                               for b in range(ctr_cap + 1)]
                else:
                    updates.append((var, eval_expr(rhs, env)))
            for choice in choices:
                env2 = dict(env)
                env2.update(choice)
                for var, value in updates:
                    env2[var] = value
                for var in env2:
                    env2[var] = clamp(var, env2[var])
                out.append((t.dst, tuple(env2[n] for n in order)))
        return out

    start = (doc.start, tuple(init_env[n] for n in order))
    starts = [start]
    for name in free_init:
        i = order.index(name)
        starts = [(l, v[:i] + (b,) + v[i + 1:]) for l, v in starts
                  for b in range(ctr_cap + 1)]

    # cycle detection among non-end states by iterative coloring
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {}
    for s0 in starts:
        if color.get(s0, WHITE) != WHITE:
            continue
        stack = [(s0, None)]
        while stack:
            state, it = stack[-1]
            if it is None:
                color[state] = GRAY
                if len(color) > state_cap:
                    raise MemoryError("interpretation state cap exceeded")
                succ = [] if state[0] == doc.end else successors(state)
                stack[-1] = (state, iter(succ))
                continue
            advanced = False
            for nxt in it:
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    return True
                if c == WHITE:
                    stack.append((nxt, None))
                    advanced = True
                    break
            if not advanced:
                color[state] = BLACK
                stack.pop()
    return False
