"""Almost-sure termination proofs for probabilistic programs via
terminating coin-toss patterns: a guarded-command frontend, explicit
state-space semantics, Büchi-product pattern checkers, a
counterexample-driven refinement loop with word-family extrapolation for
parameterized programs, response patterns for nondeterministic programs,
and prover-ready instrumented exports."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
