"""Textual probabilistic guarded-command language and its flowgraph form.

A program declares integer parameters (possibly unbounded above), bounded
integer variables with initial values, and a body built from deterministic
assignments, fair-or-biased coin assignments ``x := coin(a/b)``, binary
nondeterministic assignments ``x := nondet()``, ``if``/``else`` and
``while``.  Source programs are lowered to a flowgraph with a start
location ``bot``, an end location ``top``, and edges labeled by commands:

* the only outgoing edge of ``top`` is the self-loop ``top -> top``;
* a location either carries only conditional out-edges whose guards
  partition the valuation space, or exactly one assignment out-edge;
* every location is reachable from ``bot``.

Lowering emits the true branch of every guard first, which pins the
exploration order used everywhere downstream.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


class SourceError(Exception):
    """Parse or semantic error with a source position."""

    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


class ParseError(SourceError):
    pass


class SemanticError(SourceError):
    pass


RESERVED_PREFIX = "__"

# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    left: "Expr"
    right: "Expr"


Expr = Union[Const, VarRef, BinOp]


@dataclass(frozen=True)
class Cmp:
    op: str  # <= < == != > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Or:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Not:
    operand: "Cond"


Cond = Union[Cmp, And, Or, Not]


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr


@dataclass(frozen=True)
class CoinAssign:
    var: str
    prob: Fraction  # probability of outcome 0


@dataclass(frozen=True)
class NondetAssign:
    var: str


@dataclass(frozen=True)
class If:
    cond: Cond
    then: tuple
    els: tuple


@dataclass(frozen=True)
class While:
    cond: Cond
    body: tuple


Stmt = Union[Assign, CoinAssign, NondetAssign, If, While]


@dataclass(frozen=True)
class ParamDecl:
    name: str
    lo: int
    hi: Optional[int]  # None = unbounded above


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class SourceProgram:
    name: str
    params: tuple
    vars: tuple
    body: tuple

    def param(self, name):
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def is_weakly_finite(self) -> bool:
        """At least one parameter without an upper bound."""
        return any(p.hi is None for p in self.params)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|\.\.|<=|>=|==|!=|&&|\|\||[;:=(){}<>!+\-*/,])
""", re.VERBOSE)

KEYWORDS = {"program", "param", "var", "begin", "end",
            "if", "else", "while", "coin", "nondet"}


@dataclass
class Token:
    kind: str  # 'num' | 'ident' | keyword | operator | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str):
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(lexeme)
        elif kind == "num":
            toks.append(Token("num", lexeme, line, col))
            col += len(lexeme)
        elif kind == "ident":
            k = lexeme if lexeme in KEYWORDS else "ident"
            toks.append(Token(k, lexeme, line, col))
            col += len(lexeme)
        else:
            toks.append(Token(lexeme, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser (recursive descent, one token of lookahead plus backtracking for
# parenthesized conditions vs. expressions)

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.next()

    def accept(self, kind: str) -> Optional[Token]:
        if self.peek().kind == kind:
            return self.next()
        return None

    # -- toplevel ----------------------------------------------------------

    def program(self) -> SourceProgram:
        self.expect("program")
        name = self.expect("ident").text
        self.expect(";")
        params = []
        while self.peek().kind == "param":
            params.append(self.param_decl())
        vars_ = []
        while self.peek().kind == "var":
            vars_.append(self.var_decl())
        self.expect("begin")
        body = []
        while self.peek().kind != "end":
            body.append(self.stmt())
        self.expect("end")
        self.expect("eof")
        return SourceProgram(name, tuple(params), tuple(vars_), tuple(body))

    def param_decl(self) -> ParamDecl:
        self.expect("param")
        name = self.expect("ident").text
        self.expect(":")
        lo = self.int_lit()
        self.expect("..")
        hi = self.int_lit() if self.peek().kind in ("num", "-") else None
        self.expect(";")
        return ParamDecl(name, lo, hi)

    def var_decl(self) -> VarDecl:
        self.expect("var")
        name = self.expect("ident").text
        self.expect(":")
        lo = self.int_lit()
        self.expect("..")
        hi = self.int_lit()
        self.expect("=")
        init = self.int_lit()
        self.expect(";")
        return VarDecl(name, lo, hi, init)

    def int_lit(self) -> int:
        neg = self.accept("-") is not None
        t = self.expect("num")
        v = int(t.text)
        return -v if neg else v

    # -- statements --------------------------------------------------------

    def stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "if":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            then = self.block()
            els = self.block() if self.accept("else") else ()
            return If(c, then, els)
        if t.kind == "while":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            return While(c, self.block())
        if t.kind == "ident":
            name = self.next().text
            self.expect(":=")
            nxt = self.peek()
            if nxt.kind == "coin":
                self.next()
                self.expect("(")
                num = self.int_lit()
                self.expect("/")
                den = self.int_lit()
                self.expect(")")
                self.expect(";")
                if den <= 0 or not 0 < Fraction(num, den) < 1:
                    raise SemanticError(
                        f"probability {num}/{den} not in (0,1)", nxt.line, nxt.col)
                return CoinAssign(name, Fraction(num, den))
            if nxt.kind == "nondet":
                self.next()
                self.expect("(")
                self.expect(")")
                self.expect(";")
                return NondetAssign(name)
            e = self.expr()
            self.expect(";")
            return Assign(name, e)
        raise ParseError(f"expected statement, found {t.text or 'end of input'!r}",
                         t.line, t.col)

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while self.peek().kind != "}":
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    # -- conditions / expressions ------------------------------------------

    def cond(self) -> Cond:
        c = self.cond_and()
        while self.accept("||"):
            c = Or(c, self.cond_and())
        return c

    def cond_and(self) -> Cond:
        c = self.cond_not()
        while self.accept("&&"):
            c = And(c, self.cond_not())
        return c

    def cond_not(self) -> Cond:
        if self.accept("!"):
            return Not(self.cond_not())
        return self.cond_atom()

    def cond_atom(self) -> Cond:
        # '(' may open a nested condition or a parenthesized arithmetic
        # operand; try the condition reading first and backtrack.
        if self.peek().kind == "(":
            save = self.pos
            try:
                self.next()
                c = self.cond()
                self.expect(")")
                return c
            except SourceError:
                self.pos = save
        return self.cmp()

    def cmp(self) -> Cmp:
        left = self.expr()
        t = self.peek()
        if t.kind not in ("<=", "<", "==", "!=", ">", ">="):
            raise ParseError(f"expected comparison operator, found {t.text!r}",
                             t.line, t.col)
        self.next()
        return Cmp(t.kind, left, self.expr())

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind == "*":
            self.next()
            e = BinOp("*", e, self.factor())
        return e

    def factor(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Const(int(t.text))
        if t.kind == "-":
            self.next()
            return BinOp("-", Const(0), self.factor())
        if t.kind == "ident":
            self.next()
            return VarRef(t.text)
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"expected expression, found {t.text or 'end of input'!r}",
                         t.line, t.col)


def _check_source(src: SourceProgram):
    names = {}
    for d in list(src.params) + list(src.vars):
        if d.name.startswith(RESERVED_PREFIX):
            raise SemanticError(f"identifier {d.name!r} uses the reserved prefix "
                                f"{RESERVED_PREFIX!r}", 0, 0)
        if d.name in names:
            raise SemanticError(f"{d.name!r} declared twice", 0, 0)
        names[d.name] = d
    for p in src.params:
        if p.hi is not None and p.hi < p.lo:
            raise SemanticError(f"empty range for parameter {p.name!r}", 0, 0)
    for v in src.vars:
        if v.hi < v.lo:
            raise SemanticError(f"empty range for variable {v.name!r}", 0, 0)
        if not v.lo <= v.init <= v.hi:
            raise SemanticError(f"initial value of {v.name!r} outside its range", 0, 0)
    var_names = {v.name for v in src.vars}

    def check_expr(e):
        if isinstance(e, VarRef) and e.name not in names:
            raise SemanticError(f"undeclared variable {e.name!r}", 0, 0)
        if isinstance(e, BinOp):
            check_expr(e.left)
            check_expr(e.right)

    def check_cond(c):
        if isinstance(c, Cmp):
            check_expr(c.left)
            check_expr(c.right)
        elif isinstance(c, (And, Or)):
            check_cond(c.left)
            check_cond(c.right)
        else:
            check_cond(c.operand)

    def check_stmt(s):
        if isinstance(s, (Assign, CoinAssign, NondetAssign)):
            if s.var not in var_names:
                kind = "parameter" if s.var in names else "undeclared variable"
                raise SemanticError(f"assignment to {kind} {s.var!r}", 0, 0)
            if isinstance(s, Assign):
                check_expr(s.expr)
        elif isinstance(s, If):
            check_cond(s.cond)
            for t in s.then + s.els:
                check_stmt(t)
        elif isinstance(s, While):
            check_cond(s.cond)
            for t in s.body:
                check_stmt(t)

    for s in src.body:
        check_stmt(s)


def parse(text: str) -> SourceProgram:
    """Parse and validate a source program."""
    src = _Parser(text).program()
    _check_source(src)
    return src


def parse_file(path) -> SourceProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def parse_cond_text(text: str) -> Cond:
    p = _Parser(text)
    c = p.cond()
    p.expect("eof")
    return c


def parse_expr_text(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.expect("eof")
    return e


# ---------------------------------------------------------------------------
# Pretty printer (parse . print . parse is a fixpoint)

def _expr_str(e: Expr, parent: int = 0) -> str:
    # precedence: 1 = additive, 2 = multiplicative
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, VarRef):
        return e.name
    prec = 2 if e.op == "*" else 1
    s = f"{_expr_str(e.left, prec)} {e.op} {_expr_str(e.right, prec + (e.op == '-'))}"
    return f"({s})" if prec < parent else s


def _cond_str(c: Cond, parent: int = 0) -> str:
    # precedence: 1 = ||, 2 = &&, 3 = !
    if isinstance(c, Cmp):
        return f"{_expr_str(c.left)} {c.op} {_expr_str(c.right)}"
    if isinstance(c, Or):
        s = f"{_cond_str(c.left, 1)} || {_cond_str(c.right, 2)}"
        return f"({s})" if parent > 1 else s
    if isinstance(c, And):
        s = f"{_cond_str(c.left, 2)} && {_cond_str(c.right, 3)}"
        return f"({s})" if parent > 2 else s
    return f"!({_cond_str(c.operand, 0)})"


def expr_to_str(e: Expr) -> str:
    return _expr_str(e)


def cond_to_str(c: Cond) -> str:
    return _cond_str(c)


def pretty(src: SourceProgram) -> str:
    out = [f"program {src.name};"]
    for p in src.params:
        hi = "" if p.hi is None else str(p.hi)
        out.append(f"param {p.name} : {p.lo}..{hi};")
    for v in src.vars:
        out.append(f"var {v.name} : {v.lo}..{v.hi} = {v.init};")
    out.append("begin")

    def emit(stmts, depth):
        ind = "  " * depth
        for s in stmts:
            if isinstance(s, Assign):
                out.append(f"{ind}{s.var} := {_expr_str(s.expr)};")
            elif isinstance(s, CoinAssign):
                out.append(f"{ind}{s.var} := coin({s.prob.numerator}/{s.prob.denominator});")
            elif isinstance(s, NondetAssign):
                out.append(f"{ind}{s.var} := nondet();")
            elif isinstance(s, If):
                out.append(f"{ind}if ({_cond_str(s.cond)}) {{")
                emit(s.then, depth + 1)
                if s.els:
                    out.append(f"{ind}}} else {{")
                    emit(s.els, depth + 1)
                out.append(f"{ind}}}")
            elif isinstance(s, While):
                out.append(f"{ind}while ({_cond_str(s.cond)}) {{")
                emit(s.body, depth + 1)
                out.append(f"{ind}}}")

    emit(src.body, 1)
    out.append("end")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Expression evaluation

def eval_expr(e: Expr, env) -> int:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, VarRef):
        return env[e.name]
    a = eval_expr(e.left, env)
    b = eval_expr(e.right, env)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    return a * b


_CMP = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_cond(c: Cond, env) -> bool:
    if isinstance(c, Cmp):
        return _CMP[c.op](eval_expr(c.left, env), eval_expr(c.right, env))
    if isinstance(c, And):
        return eval_cond(c.left, env) and eval_cond(c.right, env)
    if isinstance(c, Or):
        return eval_cond(c.left, env) or eval_cond(c.right, env)
    return not eval_cond(c.operand, env)


TRUE_COND = Cmp("==", Const(0), Const(0))


# ---------------------------------------------------------------------------
# Flowgraph

@dataclass(frozen=True)
class Guard:
    cond: Cond


Command = Union[Guard, Assign, CoinAssign, NondetAssign]


@dataclass
class Program:
    """Flowgraph form.  Locations are integers, bot = 0, edges per location
    are ordered (true branch first)."""

    name: str
    params: tuple  # ParamDecl
    vars: tuple    # VarDecl
    n_locations: int
    bot: int
    top: int
    edges: list = field(default_factory=list)  # per loc: [(dst, Command)]

    def out(self, loc):
        return self.edges[loc]

    @property
    def is_deterministic(self) -> bool:
        return not any(isinstance(cmd, NondetAssign)
                       for outs in self.edges for _, cmd in outs)

    @property
    def is_weakly_finite(self) -> bool:
        return any(p.hi is None for p in self.params)

    def var_decl(self, name):
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def validate(self, domain_cap: int = 1 << 16):
        """Check the flowgraph well-formedness conditions.

        Guard partitions are verified exhaustively when the combined domain
        of variables and bounded parameters is at most ``domain_cap``
        valuations; larger (or unbounded) domains are re-checked per
        reachable valuation during state-space construction.
        """
        outs = self.edges[self.top]
        if len(outs) != 1 or outs[0][0] != self.top:
            raise ValueError("end location must carry exactly its self-loop")
        for loc in range(self.n_locations):
            kinds = [isinstance(cmd, Guard) for _, cmd in self.edges[loc]]
            if not kinds:
                raise ValueError(f"location {loc} has no outgoing edge")
            if any(kinds) != all(kinds):
                raise ValueError(f"location {loc} mixes guards and assignments")
            if not kinds[0] and len(kinds) != 1:
                raise ValueError(f"assignment at location {loc} is not the only edge")
        # reachability from bot
        seen = {self.bot}
        work = [self.bot]
        while work:
            l = work.pop()
            for dst, _ in self.edges[l]:
                if dst not in seen:
                    seen.add(dst)
                    work.append(dst)
        if len(seen) != self.n_locations:
            raise ValueError("unreachable locations in flowgraph")
        # guard partition, exhaustively on small bounded domains
        domain = 1
        ranges = [(v.name, v.lo, v.hi) for v in self.vars]
        for p in self.params:
            if p.hi is None:
                domain = None
                break
            ranges.append((p.name, p.lo, p.hi))
        if domain is not None:
            for _, lo, hi in ranges:
                domain *= hi - lo + 1
                if domain > domain_cap:
                    domain = None
                    break
        if domain is not None:
            import itertools
            names = [r[0] for r in ranges]
            spans = [range(r[1], r[2] + 1) for r in ranges]
            guard_locs = [loc for loc in range(self.n_locations)
                          if isinstance(self.edges[loc][0][1], Guard)]
            for vals in itertools.product(*spans):
                env = dict(zip(names, vals))
                for loc in guard_locs:
                    holds = sum(eval_cond(cmd.cond, env)
                                for _, cmd in self.edges[loc])
                    if holds != 1:
                        raise ValueError(
                            f"guards at location {loc} do not partition "
                            f"the valuation space (valuation {env})")
        return self


def _neg(c: Cond) -> Cond:
    return c.operand if isinstance(c, Not) else Not(c)


class _Lowerer:
    def __init__(self, src: SourceProgram):
        self.src = src
        self.edges = [[]]  # bot pre-allocated
        self.n = 1

    def new_loc(self) -> int:
        self.edges.append([])
        self.n += 1
        return self.n - 1

    def add(self, frm, cmd, dst):
        self.edges[frm].append((dst, cmd))

    def lower_branch(self, stmts, exit_loc) -> int:
        """Entry location of a block ending at exit_loc (exit_loc itself if
        the block is empty)."""
        if not stmts:
            return exit_loc
        entry = self.new_loc()
        self.lower_block(stmts, entry, exit_loc)
        return entry

    def lower_block(self, stmts, entry, exit_loc):
        if not stmts:
            self.add(entry, Guard(TRUE_COND), exit_loc)
            return
        cur = entry
        for i, s in enumerate(stmts):
            nxt = exit_loc if i == len(stmts) - 1 else self.new_loc()
            self.lower_stmt(s, cur, nxt)
            cur = nxt

    def lower_stmt(self, s, entry, exit_loc):
        if isinstance(s, (Assign, CoinAssign, NondetAssign)):
            self.add(entry, s, exit_loc)
        elif isinstance(s, If):
            then_entry = self.lower_branch(s.then, exit_loc)
            else_entry = self.lower_branch(s.els, exit_loc)
            self.add(entry, Guard(s.cond), then_entry)
            self.add(entry, Guard(_neg(s.cond)), else_entry)
        elif isinstance(s, While):
            body_entry = self.lower_branch(s.body, entry)
            self.add(entry, Guard(s.cond), body_entry)
            self.add(entry, Guard(_neg(s.cond)), exit_loc)
        else:
            raise TypeError(s)


def lower(src: SourceProgram) -> Program:
    """Desugar a source program into its flowgraph."""
    lw = _Lowerer(src)
    pre_top = lw.new_loc()
    lw.lower_block(list(src.body), 0, pre_top)
    top = lw.new_loc()
    lw.add(pre_top, Guard(TRUE_COND), top)
    lw.add(top, Guard(TRUE_COND), top)
    prog = Program(src.name, src.params, src.vars, lw.n, 0, top, lw.edges)
    return prog.validate()
