"""Ground-truth oracles: reachability, safe sets, sampling, infix bounds."""
import math

import pytest

from conftest import load_space
from coinpattern import oracle
from coinpattern.lang import lower, parse
from coinpattern.semantics import KIND_ACTION, build
from randprog import random_spaces


def space_of(text, instance=None):
    return build(lower(parse(text)), instance)


def test_fw_terminates():
    ok, witness = oracle.as_terminating_deterministic(load_space("fw.ppg"))
    assert ok and witness is None


def test_always_true_guard_coin_loop_diverges():
    space = space_of("program t; var x : 0..1 = 0; "
                     "begin while (x == x) { x := coin(1/2); } end")
    ok, witness = oracle.as_terminating_deterministic(space)
    assert not ok
    assert witness.node == int(space.init[0])  # the loop head itself


def test_straight_line_terminates():
    ok, _ = oracle.as_terminating_deterministic(
        space_of("program t; var x : 0..1 = 0; begin x := 1; end"))
    assert ok


def test_mdp_oracle_on_echo():
    ok, witness = oracle.as_terminating_mdp(load_space("nondet_echo.ppg"))
    assert ok and witness is None


def test_mdp_oracle_strategy_witness():
    space = space_of("program t; var x : 0..1 = 0; var y : 0..1 = 0; "
                     "begin while (x == x) { x := nondet(); y := coin(1/2); } end")
    ok, witness = oracle.as_terminating_mdp(space)
    assert not ok
    closed = set(witness.closed_set)
    assert closed
    for q in closed:
        outs = space.out(q)
        if space.kind[q] == KIND_ACTION:
            lab = witness.strategy[q]
            chosen = [d for l, _, _, d in outs if l == lab]
            assert chosen and all(d in closed for d in chosen)
        else:
            assert all(d in closed for _, _, _, d in outs)


def test_mdp_agrees_with_deterministic_oracle():
    agree = 0
    for seed, space in random_spaces(200, start_seed=2000):
        det, _ = oracle.as_terminating_deterministic(space)
        mdp, _ = oracle.as_terminating_mdp(space)
        assert det == mdp, f"seed {seed}"
        agree += 1
    assert agree == 200


def test_monte_carlo_fw():
    space = load_space("fw.ppg")
    result = oracle.monte_carlo(space, 10_000, 100_000, seed=0)
    assert result.terminated_fraction >= 0.999
    assert result.terminated + result.capped == result.samples


def test_monte_carlo_coinless_divergence():
    space = load_space("diverge.ppg")
    result = oracle.monte_carlo(space, 1000, 100_000, seed=0)
    assert result.terminated == 0 and result.capped == 1000


def test_monte_carlo_straight_line():
    space = space_of("program t; var x : 0..1 = 0; begin x := coin(1/2); end")
    result = oracle.monte_carlo(space, 1000, 100, seed=3)
    assert result.terminated == 1000


def test_monte_carlo_reproducible_and_seed_sensitive():
    space = load_space("rw.ppg", {"N": 4})
    a = oracle.monte_carlo(space, 3000, 1000, seed=11)
    b = oracle.monte_carlo(space, 3000, 1000, seed=11)
    assert (a.terminated, a.capped) == (b.terminated, b.capped)
    c = oracle.monte_carlo(space, 3000, 7, seed=12)
    d = oracle.monte_carlo(space, 3000, 7, seed=13)
    assert (c.terminated, c.capped) != (d.terminated, d.capped)


def test_monte_carlo_nondet_needs_strategy():
    space = load_space("nondet_echo.ppg")
    with pytest.raises(ValueError, match="strategy"):
        oracle.monte_carlo(space, 10, 10, seed=0)
    from coinpattern.semantics import A0
    strategy = {i: A0 for i in range(space.n_nodes)
                if space.kind[i] == KIND_ACTION}
    result = oracle.monte_carlo(space, 2000, 100_000, seed=5,
                                strategy=strategy)
    assert result.terminated_fraction >= 0.999


def test_monte_carlo_jobs_merge_deterministically():
    space = load_space("rw.ppg", {"N": 4})
    a = oracle.monte_carlo(space, 999, 500, seed=2, jobs=3)
    b = oracle.monte_carlo(space, 999, 500, seed=2, jobs=3)
    assert (a.terminated, a.capped) == (b.terminated, b.capped)


def test_infix_statistics_single_toss():
    p = oracle.coin_infix_statistics("0", 1, 40_000, seed=1)
    sigma = math.sqrt(0.25 / 40_000)
    assert abs(p - 0.5) <= 3 * sigma


def test_infix_statistics_two_tosses():
    p = oracle.coin_infix_statistics("00", 2, 40_000, seed=2)
    sigma = math.sqrt(0.25 * 0.75 / 40_000)
    assert abs(p - 0.25) <= 3 * sigma


def test_infix_statistics_respects_block_bound():
    p = oracle.coin_infix_statistics("01", 200, 20_000, seed=3)
    bound = oracle.infix_probability_lower_bound("01", 200)
    sigma = math.sqrt(0.25 / 20_000)
    assert p >= bound - 3 * sigma
