"""Pattern synthesis.

The refinement loop repeatedly checks a candidate word, extracts the coin
word of the returned lasso loop, and replaces the candidate by a shortest
extension of the base word that is an infix of none of the collected loop
words repeated forever.  A greedy variant halves the set of loop-word
suffixes letter by letter, which bounds spoiler length by
|base| + 1 + log2 of the total loop length.

For parameterized programs the driver runs the loop instance by instance,
chaining each proven word as the next base word (so the word list is
monotone under prefixes), then tries to fit the trailing words to a
template alpha . beta^(i - offset) . gamma and re-verifies the expanded
template on every supplied instance.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

from . import checker, oracle
from .semantics import ResourceError, StateSpace, node_sort, tau_closure


class Refuted(Exception):
    """The program is not almost-surely terminating; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# Pattern values

@dataclass(frozen=True)
class Pattern:
    kind: str  # "simple" | "sequence" | "template" | "universal"
    word: str = ""
    words: tuple = ()
    tail: str = "repeat"
    alpha: str = ""
    beta: str = ""
    gamma: str = ""
    delta: int = 0
    order: str = "lenlex"

    def expand(self, i: int) -> str:
        """The i-th word (1-based) of the induced pattern."""
        if self.kind == "simple":
            return self.word
        if self.kind == "sequence":
            if i <= len(self.words):
                return self.words[i - 1]
            return self.words[-1] if self.tail == "repeat" else ""
        if self.kind == "template":
            return self.alpha + self.beta * max(0, i - self.delta) + self.gamma
        return universal_word(i)


def simple_pattern(word: str) -> Pattern:
    return Pattern("simple", word=word)


def sequence_pattern(words, tail: str = "repeat") -> Pattern:
    return Pattern("sequence", words=tuple(words), tail=tail)


def template_pattern(alpha: str, beta: str, gamma: str, delta: int) -> Pattern:
    return Pattern("template", alpha=alpha, beta=beta, gamma=gamma, delta=delta)


def universal_pattern() -> Pattern:
    return Pattern("universal")


def universal_word(i: int) -> str:
    """i-th word (1-based) of the length-then-lexicographic enumeration of
    all coin words: "", "0", "1", "00", "01", ..."""
    if i < 1:
        raise ValueError("enumeration is 1-based")
    i -= 1
    length = 0
    count = 1
    while i >= count:
        i -= count
        length += 1
        count = 1 << length
    return format(i, f"0{length}b") if length else ""


def serialize_pattern(p: Pattern) -> str:
    if p.kind == "simple":
        return f"simple:{p.word}"
    if p.kind == "sequence":
        return f"seq:{','.join(p.words)};tail={p.tail}"
    if p.kind == "template":
        return f"template:a={p.alpha};b={p.beta};c={p.gamma};d={p.delta}"
    return f"universal:{p.order}"


def parse_pattern(text: str) -> Pattern:
    kind, _, rest = text.partition(":")
    if kind == "simple":
        _check_word(rest)
        return simple_pattern(rest)
    if kind == "seq":
        body, _, tail = rest.partition(";")
        tail = tail.removeprefix("tail=") if tail else "repeat"
        words = tuple(body.split(",")) if body else ()
        for w in words:
            _check_word(w)
        return sequence_pattern(words, tail)
    if kind == "template":
        fields = dict(kv.split("=", 1) for kv in rest.split(";"))
        for key in ("a", "b", "c"):
            _check_word(fields.get(key, ""))
        return template_pattern(fields.get("a", ""), fields.get("b", ""),
                                fields.get("c", ""), int(fields.get("d", "0")))
    if kind == "universal":
        return universal_pattern()
    raise ValueError(f"unknown pattern spec {text!r}")


def _check_word(w: str):
    if any(ch not in "01" for ch in w):
        raise ValueError(f"coin words use letters 0 and 1 only: {w!r}")


# ---------------------------------------------------------------------------
# Spoilers

def is_infix_of_power(word: str, loop: str) -> bool:
    """Is ``word`` an infix of loop repeated forever?  Searching in
    ceil(|word|/|loop|) + 1 copies suffices: any occurrence starts within
    the first copy."""
    if not loop:
        raise ValueError("loop word must be nonempty")
    if not word:
        return True
    reps = -(-len(word) // len(loop)) + 1
    return word in loop * reps


def spoiler_shortest(base: str, loops) -> str:
    """Shortest extension of ``base`` that is an infix of none of the
    repeated loop words; ties break toward letter 0."""
    loops = list(loops)
    if not loops:
        return base
    if any(not u for u in loops):
        raise ValueError("loop words must be nonempty")
    total = sum(len(u) for u in loops)
    max_extra = 2 + int(math.log2(total)) if total else 1
    for extra in range(0, max_extra + 1):
        for bits in itertools.product("01", repeat=extra):
            cand = base + "".join(bits)
            if not any(is_infix_of_power(cand, u) for u in loops):
                return cand
    raise AssertionError("no spoiler within the guaranteed length bound")


def spoiler_greedy(base: str, loops) -> str:
    """Suffix-halving spoiler: extend letter by letter, always picking the
    letter matched by fewer suffixes of the repeated loop words (ties
    toward 0).  The extension length is at most 1 + log2 of the total loop
    length."""
    loops = list(loops)
    if not loops:
        return base
    if any(not u for u in loops):
        raise ValueError("loop words must be nonempty")
    # suffixes of u^omega are its rotations, one per offset
    suffixes = [(u, off) for u in loops for off in range(len(u))]
    total = len(suffixes)
    word = ""
    while suffixes:
        survivors = {}
        for c in "01":
            pos = len(word)
            survivors[c] = [(u, off) for u, off in suffixes
                            if u[(off + pos) % len(u)] == c]
        c = "0" if len(survivors["0"]) <= len(survivors["1"]) else "1"
        word += c
        suffixes = survivors[c]
    assert len(word) <= 1 + math.floor(math.log2(total)), \
        "greedy spoiler exceeded its length bound"
    return base + word


# ---------------------------------------------------------------------------
# Finite refinement

@dataclass
class RefinementRound:
    candidate: str
    verdict: str  # "lasso" | "terminating" | "refuted"
    loop_word: Optional[str] = None
    lasso: object = None


@dataclass
class RefinementTrace:
    rounds: list = field(default_factory=list)
    status: str = "budget-exhausted"  # "proven" | "refuted" | "budget-exhausted"
    witness: object = None

    @property
    def loop_words(self):
        return [r.loop_word for r in self.rounds if r.loop_word is not None]


def refine_finite(space: StateSpace, base: str = "", max_rounds: int = 64,
                  product_budget: int = checker.DEFAULT_PRODUCT_BUDGET):
    """Counterexample-driven search for a word whose simple pattern is
    terminating; returns (trace, pattern-or-None).

    Round 0 rules out nonterminating runs with finitely many coin tosses;
    afterwards every lasso loop carries at least one coin.  Each round's
    candidate extends ``base`` and spoils every loop word collected so
    far; candidates are pairwise distinct, so on a finite space the loop
    ends in a proof, a refutation, or the round budget.
    """
    if space.has_actions:
        raise ValueError("refinement runs on deterministic programs")
    trace = RefinementTrace()
    silent = checker.check_coinless_nontermination(space)
    if silent is not None:
        trace.rounds.append(RefinementRound(base, "refuted", None, silent))
        trace.status = "refuted"
        trace.witness = silent
        return trace, None
    cand = base
    seen = set()
    loops = []
    for _ in range(max_rounds):
        assert cand not in seen, "refinement revisited a candidate"
        seen.add(cand)
        try:
            if cand == "":
                lasso = checker.check_nontermination(space, product_budget)
            else:
                verdict = checker.check_simple_pattern(space, cand, product_budget)
                lasso = verdict.lasso
        except ResourceError:
            trace.status = "budget-exhausted"
            return trace, None
        if lasso is None:
            trace.rounds.append(RefinementRound(cand, "terminating"))
            trace.status = "proven"
            return trace, simple_pattern(cand)
        word = lasso.coinword
        assert word, "coinless loop after the round-0 check"
        trace.rounds.append(RefinementRound(cand, "lasso", word, lasso))
        loops.append(word)
        cand = spoiler_shortest(base, loops)
    trace.status = "budget-exhausted"
    return trace, None


# ---------------------------------------------------------------------------
# Direct construction for finite instances

def _coin_abstraction(space: StateSpace):
    """Deterministic word graph over coin nodes plus the terminal: from a
    coin node, each letter leads to the next coin node or the terminal."""
    if space.has_actions:
        raise ValueError("the word abstraction needs a deterministic program")
    coins = [i for i in range(space.n_nodes) if node_sort(space, i) == "coin"]
    delta = {}
    for q in coins:
        s = int(space.indptr[q])
        for offset, letter in ((0, "0"), (1, "1")):
            target = int(space.dst[s + offset])
            end = tau_closure(space, target)
            if end is None:
                raise Refuted("a coin outcome enters a coinless cycle")
            delta[(q, letter)] = end if node_sort(space, end) == "coin" else -1
    return coins, delta


def construct_pattern_direct(space: StateSpace) -> str:
    """Build one word after which every node has terminated.

    Repeatedly picks a node that has not yet been driven to the end and
    appends that node's shortest escape word; each round retires at least
    one node, so the result has at most (n-1)^2 letters for n abstraction
    nodes.  Requires an almost-surely terminating deterministic instance.
    """
    ok, witness = oracle.as_terminating_deterministic(space)
    if not ok:
        raise Refuted("a reachable node cannot reach the end", witness)
    coins, delta = _coin_abstraction(space)
    if not coins:
        return ""
    n_abs = len(coins) + 1  # plus the terminal

    # shortest escape words by backward layering; forward walk prefers 0
    dist = {-1: 0}
    level = 0
    while True:
        level += 1
        newly = [q for q in coins
                 if q not in dist and (delta[(q, "0")] in dist
                                       or delta[(q, "1")] in dist)]
        if not newly:
            break
        for q in newly:
            dist[q] = level
    if len(dist) != n_abs:
        raise Refuted("a coin node cannot reach the end by any word")

    def escape(q):
        word = []
        while q != -1:
            for letter in "01":
                t = delta[(q, letter)]
                if dist.get(t, 10 ** 9) == dist[q] - 1:
                    word.append(letter)
                    q = t
                    break
            else:
                raise AssertionError("inconsistent escape distances")
        return "".join(word)

    def step(q, letter):
        return -1 if q == -1 else delta[(q, letter)]

    ends = {q: q for q in coins}
    word = ""
    while True:
        pending = [q for q in coins if ends[q] != -1]
        if not pending:
            break
        piece = escape(ends[pending[0]])
        word += piece
        for q in coins:
            e = ends[q]
            for letter in piece:
                e = step(e, letter)
            ends[q] = e
    assert len(word) <= (n_abs - 1) ** 2, "escape word exceeded its bound"
    return word


# ---------------------------------------------------------------------------
# Weakly finite driver

@dataclass
class InstanceResult:
    instance: dict
    space: StateSpace
    trace: RefinementTrace
    word: Optional[str]


@dataclass
class DriveResult:
    status: str  # "proven-with-guess" | "no-guess" | "refuted" | "budget-exhausted"
    per_instance: list
    template: Optional[Pattern] = None
    verification: list = field(default_factory=list)  # (instance, word, ok)

    @property
    def words(self):
        return [r.word for r in self.per_instance]


def fit_template(words) -> Optional[Pattern]:
    """Fit trailing words to alpha . beta^(i-delta) . gamma, exactly.

    Tries a constant first, then aligns the last three words; the fit with
    the shortest alpha, then the shortest gamma, wins.
    """
    words = list(words)
    if len(words) >= 1 and all(w == words[0] for w in words):
        return template_pattern(words[0], "", "", 0)
    if len(words) < 3:
        return None
    ia = len(words) - 2  # 1-based ordinal of the antepenultimate word
    wa, wb, wc = words[-3], words[-2], words[-1]
    if wa == wb == wc:
        return template_pattern(wc, "", "", 0)
    d = len(wb) - len(wa)
    if d <= 0 or len(wc) - len(wb) != d:
        return None
    for a in range(len(wa) + 1):
        alpha = wc[:a]
        if not (wa.startswith(alpha) and wb.startswith(alpha)):
            continue
        for g in range(len(wa) - a + 1):
            rem = len(wa) - a - g
            if rem % d:
                continue
            gamma = wa[len(wa) - g:] if g else ""
            beta = wb[a:a + d]
            k_a = rem // d
            delta = ia - k_a
            cand = template_pattern(alpha, beta, gamma, delta)
            if all(cand.expand(ia + off) == w
                   for off, w in enumerate((wa, wb, wc))):
                return cand
    return None


def drive_weakly_finite(prog, instances, max_rounds: int = 64,
                        node_cap: int = 10_000_000,
                        product_budget: int = checker.DEFAULT_PRODUCT_BUDGET,
                        base: str = "", jobs: int = 1) -> DriveResult:
    """Refine each instance in order, chaining proven words as base words,
    then guess and re-verify a template for the word family.

    The refinement chain is inherently sequential; ``jobs`` parallelizes
    only the independent per-instance re-verification of the guess."""
    from .semantics import build
    results = []
    for inst in instances:
        space = build(prog, inst, node_cap)
        trace, pattern = refine_finite(space, base, max_rounds, product_budget)
        if trace.status == "refuted":
            results.append(InstanceResult(dict(inst), space, trace, None))
            return DriveResult("refuted", results)
        if trace.status == "budget-exhausted":
            results.append(InstanceResult(dict(inst), space, trace, None))
            return DriveResult("budget-exhausted", results)
        word = pattern.word
        assert word.startswith(base), "instance word must extend its base"
        results.append(InstanceResult(dict(inst), space, trace, word))
        base = word
    words = [r.word for r in results]
    for earlier, later in zip(words, words[1:]):
        assert later.startswith(earlier), "word list must be prefix-monotone"
    template = fit_template(words)
    if template is None:
        return DriveResult("no-guess", results)

    def verify(item):
        i, r = item
        w = template.expand(i)
        if w == "":
            ok = checker.check_nontermination(r.space, product_budget) is None
        else:
            ok = checker.check_simple_pattern(r.space, w, product_budget).terminating
        ok = ok and checker.check_coinless_nontermination(r.space) is None
        return dict(r.instance), w, ok

    items = list(enumerate(results, start=1))
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verification = list(pool.map(verify, items))
    else:
        verification = [verify(item) for item in items]
    if not all(ok for _, _, ok in verification):
        return DriveResult("no-guess", results, template, verification)
    return DriveResult("proven-with-guess", results, template, verification)
