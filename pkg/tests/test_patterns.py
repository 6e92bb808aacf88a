"""Spoilers, refinement, the direct constructor, driving, templates."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load, load_space
from coinpattern import checker, oracle, patterns
from coinpattern.lang import lower, parse
from coinpattern.patterns import (Refuted, construct_pattern_direct,
                                  drive_weakly_finite, fit_template,
                                  is_infix_of_power, parse_pattern,
                                  refine_finite, serialize_pattern,
                                  simple_pattern, spoiler_greedy,
                                  spoiler_shortest, template_pattern,
                                  universal_word)
from coinpattern.semantics import build
from randprog import random_spaces

words_st = st.text(alphabet="01", min_size=0, max_size=8)
loops_st = st.lists(st.text(alphabet="01", min_size=1, max_size=4),
                    min_size=1, max_size=3)


# ---------------------------------------------------------------------------
# Infix-of-power

def test_infix_examples():
    assert is_infix_of_power("010", "01")
    assert not is_infix_of_power("011", "01")
    assert is_infix_of_power("", "0")


@settings(max_examples=300, deadline=None)
@given(words_st, st.text(alphabet="01", min_size=1, max_size=5))
def test_infix_matches_long_repetitions(w, u):
    long = u * (len(w) + len(u) + 3)
    assert is_infix_of_power(w, u) == (w in long)


# ---------------------------------------------------------------------------
# Spoilers

def test_spoiler_shortest_examples():
    assert spoiler_shortest("", ["0"]) == "1"
    assert spoiler_shortest("", ["0", "1"]) == "01"
    assert spoiler_shortest("01", ["01"]) == "011"
    assert spoiler_shortest("", []) == ""


def brute_force_minimal(base, loops, found):
    """No strictly shorter extension of base spoils every loop."""
    import itertools
    for extra in range(len(found) - len(base)):
        for bits in itertools.product("01", repeat=extra):
            cand = base + "".join(bits)
            if not any(is_infix_of_power(cand, u) for u in loops):
                return False
    return True


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="01", max_size=3), loops_st)
def test_spoiler_shortest_is_minimal_and_valid(base, loops):
    s = spoiler_shortest(base, loops)
    assert s.startswith(base)
    assert not any(is_infix_of_power(s, u) for u in loops)
    assert brute_force_minimal(base, loops, s)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="01", max_size=3), loops_st)
def test_spoiler_greedy_respects_logarithmic_bound(base, loops):
    s = spoiler_greedy(base, loops)
    assert s.startswith(base)
    assert not any(is_infix_of_power(s, u) for u in loops)
    total = sum(len(u) for u in loops)
    assert len(s) <= len(base) + 1 + math.log2(total)


def test_spoiler_greedy_examples():
    assert spoiler_greedy("", ["0"]) == "1"
    two = spoiler_greedy("", ["01"])
    assert len(two) <= 2 and not is_infix_of_power(two, "01")
    mixed = spoiler_greedy("", ["0", "1"])
    assert len(mixed) <= 2 and mixed in ("01", "10")


# ---------------------------------------------------------------------------
# Refinement

def test_fw_golden_trace():
    trace, pattern = refine_finite(load_space("fw.ppg"))
    assert trace.status == "proven"
    assert [(r.candidate, r.verdict, r.loop_word) for r in trace.rounds] == [
        ("", "lasso", "0"),
        ("1", "lasso", "1"),
        ("01", "terminating", None),
    ]
    assert pattern == simple_pattern("01")


def test_coin_free_loop_refuted_in_round_zero():
    trace, pattern = refine_finite(load_space("diverge.ppg"))
    assert trace.status == "refuted" and pattern is None
    assert trace.witness.coinword == ""
    trace.witness.validate(load_space("diverge.ppg"))


def test_straight_line_proven_with_empty_word():
    space = build(lower(parse(
        "program t; var x : 0..1 = 0; begin x := coin(1/2); end")))
    trace, pattern = refine_finite(space)
    assert trace.status == "proven" and pattern == simple_pattern("")


def test_round_budget():
    trace, pattern = refine_finite(load_space("fw.ppg"), max_rounds=1)
    assert trace.status == "budget-exhausted" and pattern is None


def test_base_word_is_a_prefix_of_the_result():
    trace, pattern = refine_finite(load_space("fw.ppg"), base="0")
    assert trace.status == "proven"
    assert pattern.word.startswith("0")
    assert checker.check_simple_pattern(load_space("fw.ppg"), pattern.word).terminating


# ---------------------------------------------------------------------------
# Direct constructor

def test_direct_word_on_simple_loop():
    space = build(lower(parse(
        "program t; var x : 0..1 = 0; "
        "begin while (x == 0) { x := coin(1/2); } end")))
    assert construct_pattern_direct(space) == "1"


def test_direct_word_on_straight_line():
    space = build(lower(parse("program t; var x : 0..1 = 0; begin x := 1; end")))
    assert construct_pattern_direct(space) == ""


def test_direct_word_on_fw_is_bounded_and_terminating():
    space = load_space("fw.ppg")
    w = construct_pattern_direct(space)
    coins = sum(1 for i in range(space.n_nodes)
                if space.kind[i] == 0 and space.out(i)[0][0] in (1, 2))
    assert w and len(w) <= (coins + 1 - 1) ** 2
    assert checker.check_simple_pattern(space, w).terminating


def test_direct_word_requires_termination():
    with pytest.raises(Refuted):
        construct_pattern_direct(load_space("diverge.ppg"))


# ---------------------------------------------------------------------------
# Driver + template fitting

def test_template_fitting_families():
    assert fit_template(["010", "010", "010"]) == template_pattern("010", "", "", 0)
    t = fit_template(["", "00", "000", "0000"])
    assert t is not None and [t.expand(i) for i in (2, 3, 4)] == ["00", "000", "0000"]
    t = fit_template(["000", "0000", "00000", "000000"])
    assert [t.expand(i) for i in range(1, 5)] == ["000", "0000", "00000", "000000"]
    t = fit_template(["010", "01010", "0101010"])
    assert [t.expand(i) for i in (1, 2, 3)] == ["010", "01010", "0101010"]
    assert fit_template(["0", "1"]) is None
    assert fit_template(["0", "11", "0"]) is None


def test_drive_rw_words_are_monotone_verified():
    prog = load("rw.ppg")
    res = drive_weakly_finite(prog, [{"N": i} for i in range(1, 6)])
    assert res.status == "proven-with-guess"
    assert res.words == ["", "", "00", "000", "0000"]
    for earlier, later in zip(res.words, res.words[1:]):
        assert later.startswith(earlier)
    assert all(ok for _, _, ok in res.verification)
    # all-zero power family
    t = res.template
    assert t.beta == "0" and set(t.alpha + t.gamma) <= {"0"}


def test_drive_refutes_on_any_bad_instance():
    prog = lower(parse("""
program bad;
param N : 1..;
var x : 0..3 = 0;
begin
  while (x < N) {
    x := coin(1/2);
    while (x == 1) { x := x; }
  }
end
"""))
    res = drive_weakly_finite(prog, [{"N": 1}, {"N": 2}])
    assert res.status == "refuted"
    assert res.per_instance[-1].trace.status == "refuted"


def test_drive_budget_propagates():
    res = drive_weakly_finite(load("firewire.ppg"), [{"N": 1}], max_rounds=1)
    assert res.status == "budget-exhausted"
    assert res.per_instance[-1].trace.status == "budget-exhausted"


def test_drive_firewire_constant():
    res = drive_weakly_finite(load("firewire.ppg"),
                              [{"N": i} for i in (1, 2, 3)])
    assert res.status == "proven-with-guess"
    assert res.words == ["010", "010", "010"]
    assert all(res.template.expand(i) == "010" for i in range(1, 6))


# ---------------------------------------------------------------------------
# Pattern values and serialization

def test_universal_word_enumeration():
    assert [universal_word(i) for i in range(1, 9)] == \
        ["", "0", "1", "00", "01", "10", "11", "000"]


def test_pattern_serialization_roundtrip():
    cases = [
        simple_pattern("01"),
        patterns.sequence_pattern(("00", "000", "0000"), "repeat"),
        patterns.sequence_pattern(("0",), "free"),
        template_pattern("", "0", "", 0),
        template_pattern("0", "10", "", -2),
        patterns.universal_pattern(),
    ]
    for p in cases:
        assert parse_pattern(serialize_pattern(p)) == p
    assert serialize_pattern(cases[1]) == "seq:00,000,0000;tail=repeat"
    assert serialize_pattern(cases[3]) == "template:a=;b=0;c=;d=0"


def test_template_expansion_clamps_at_zero():
    t = template_pattern("", "0", "", 2)
    assert [t.expand(i) for i in (1, 2, 3, 4)] == ["", "", "0", "00"]


# ---------------------------------------------------------------------------
# Completeness on random programs (smoke version of the acceptance run)

def test_refinement_agrees_with_oracle_on_random_programs():
    """Proven exactly when the reachability oracle says terminating.

    Divergence that keeps tossing (and discarding) coins admits no
    refutation certificate in the pattern framework, so such programs end
    in budget exhaustion, never in a proof."""
    proven = refuted = 0
    for seed, space in random_spaces(60, start_seed=9000):
        trace, pattern = refine_finite(space, max_rounds=64)
        ok, _ = oracle.as_terminating_deterministic(space)
        assert (trace.status == "proven") == ok, f"seed {seed}"
        if trace.status == "proven":
            proven += 1
        elif trace.status == "refuted":
            refuted += 1
            trace.witness.validate(space)
            assert trace.witness.coinword == ""
    assert proven >= 10 and refuted >= 5
