"""Independent ground-truth checks.

These never share a code path with the pattern checkers: almost-sure
termination of a deterministic instance is decided by plain backward
reachability (from every reachable node the end must be reachable), the
nondeterministic case by the standard greatest-fixpoint safe-set
computation, and the statistical routines estimate run and infix
probabilities by direct sampling with exact rational branching.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .semantics import (A0, KIND_ACTION, StateSpace, edge_transitions)


@dataclass
class ReachWitness:
    """A reachable node from which the end location cannot be reached."""

    node: int
    path: list  # transitions from an initial node


@dataclass
class StrategyWitness:
    """A positional strategy and a nonempty node set closed under it that
    avoids the end with positive probability."""

    strategy: dict  # action node -> chosen label
    closed_set: list
    path: list      # transitions from an initial node into the set


def as_terminating_deterministic(space: StateSpace):
    """True iff the end is reachable from every reachable node."""
    if space.has_actions:
        raise ValueError("deterministic oracle on a nondeterministic space")
    return _universally_reaches_top(space)


def _universally_reaches_top(space: StateSpace):
    n = space.n_nodes
    everything = np.ones(n, dtype=np.uint8)
    if space.terminal == -1:
        can_reach = np.zeros(n, dtype=np.uint8)
    else:
        can_reach = kernels.backward_reachable(
            space.indptr, space.dst,
            np.asarray([space.terminal], dtype=np.int64), everything)
    if can_reach.all():
        return True, None
    bad = int(np.nonzero(can_reach == 0)[0][0])
    path = kernels.bfs_edge_path(space.indptr, space.dst, space.init,
                                 bad, everything)
    return False, ReachWitness(bad, edge_transitions(space, path))


def as_terminating_mdp(space: StateSpace):
    """True iff every strategy reaches the end with probability 1.

    False exactly when some reachable end component avoids the end, i.e.
    when the greatest set in which the adversary can stay forever is
    nonempty; the witness strategy simply stays inside it.
    """
    n = space.n_nodes
    in_s = space.non_top_mask.copy()
    out_deg = np.diff(space.indptr).astype(np.int64)
    esrc = np.repeat(np.arange(n, dtype=np.int64), out_deg)
    succ_in = np.bincount(esrc[in_s[space.dst] == 1], minlength=n).astype(np.int64)

    is_action = space.kind == KIND_ACTION

    def violated(i):
        if not in_s[i]:
            return False
        if is_action[i]:
            return succ_in[i] == 0
        return succ_in[i] < out_deg[i]

    rindptr, rdst, _ = kernels.reverse_csr(space.indptr, space.dst)
    bad = in_s.astype(bool) & np.where(is_action, succ_in == 0,
                                       succ_in < out_deg)
    queue = [int(i) for i in np.nonzero(bad)[0]]
    while queue:
        v = queue.pop()
        if not in_s[v]:
            continue
        in_s[v] = 0
        for k in range(int(rindptr[v]), int(rindptr[v + 1])):
            u = int(rdst[k])
            succ_in[u] -= 1
            if violated(u):
                queue.append(u)
    if not in_s.any():
        return True, None
    strategy = {}
    for i in np.nonzero(in_s)[0]:
        i = int(i)
        if space.kind[i] == KIND_ACTION:
            for lab, _, _, d in space.out(i):
                if in_s[d]:
                    strategy[i] = lab
                    break
    first = int(np.nonzero(in_s)[0][0])
    goal = first
    path = kernels.bfs_edge_path(space.indptr, space.dst, space.init, goal,
                                 np.ones(n, dtype=np.uint8))
    transitions = edge_transitions(space, path)
    for t in transitions:
        if space.kind[t.src] == KIND_ACTION and t.src not in strategy:
            strategy[t.src] = t.label
    return False, StrategyWitness(strategy, sorted(int(i) for i in np.nonzero(in_s)[0]),
                                  transitions)


# ---------------------------------------------------------------------------
# Monte-Carlo estimation

@dataclass
class SimulationResult:
    samples: int
    terminated: int
    capped: int
    seed: int

    @property
    def terminated_fraction(self) -> Fraction:
        return Fraction(self.terminated, self.samples)

    @property
    def capped_fraction(self) -> Fraction:
        return Fraction(self.capped, self.samples)


def monte_carlo(space: StateSpace, samples: int, step_cap: int, seed: int,
                strategy: Optional[dict] = None, jobs: int = 1) -> SimulationResult:
    """Sample terminating vs. capped runs.

    Coin branches are decided by integer arithmetic on the exact edge
    probabilities (splitmix64 stream, rejection sampling); action nodes
    require a positional ``strategy``.  Runs are declared capped early
    once they provably sit in a coinless cycle.  With ``jobs`` > 1 the
    samples are split into that many independently seeded batches and
    merged in batch order.
    """
    if len(space.init) != 1:
        raise ValueError("simulation needs a single initial node; "
                         "fix the open parameters")
    n = space.n_nodes
    choice = np.full(n, -1, dtype=np.int64)
    if space.has_actions:
        if strategy is None:
            raise ValueError("nondeterministic space needs a strategy")
        for i in range(n):
            if space.kind[i] == KIND_ACTION:
                lab = strategy[i]
                choice[i] = 0 if lab == A0 else 1
    term_mask = (space.non_top_mask == 0).astype(np.uint8)
    start = int(space.init[0])
    tau_cutoff = n + 1

    def run_batch(batch_seed, count):
        return kernels.sample_runs(space.indptr, space.dst, space.label,
                                   space.pnum, space.pden, choice, start,
                                   term_mask, count, step_cap, tau_cutoff,
                                   batch_seed)

    jobs = max(1, int(jobs))
    sizes = [samples // jobs] * jobs
    for i in range(samples % jobs):
        sizes[i] += 1
    seeds = [(seed + 0x9E3779B97F4A7C15 * i) & ((1 << 64) - 1)
             for i in range(jobs)]
    if jobs == 1:
        results = [run_batch(seeds[0], sizes[0])]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda a: run_batch(*a), zip(seeds, sizes)))
    terminated = sum(r[0] for r in results)
    capped = sum(r[1] for r in results)
    return SimulationResult(samples, terminated, capped, seed)


# ---------------------------------------------------------------------------
# Infix statistics for fair coin words

def infix_probability_lower_bound(word: str, length: int) -> float:
    """Disjoint-block bound: a uniform word of the given length misses
    ``word`` in every one of its floor(L/|w|) aligned blocks with
    probability at most (1 - 2^-|w|) each."""
    blocks = length // len(word)
    return 1.0 - (1.0 - 2.0 ** (-len(word))) ** blocks


def coin_infix_statistics(word: str, length: int, samples: int,
                          seed: int) -> float:
    """Empirical probability that ``word`` occurs in a uniformly random
    coin word of the given length."""
    if not word or length < len(word):
        raise ValueError("need a nonempty word no longer than the sample")
    rng = np.random.Generator(np.random.PCG64(seed))
    needle = word.encode()
    hits = 0
    done = 0
    chunk = max(1, min(20000, samples))
    while done < samples:
        count = min(chunk, samples - done)
        bits = rng.integers(0, 2, size=(count, length), dtype=np.uint8)
        data = (bits + ord("0")).astype(np.uint8).tobytes()
        for i in range(count):
            if data.find(needle, i * length, (i + 1) * length) != -1:
                hits += 1
        done += count
    return hits / samples
