"""Command-line frontend.

Three subcommands: ``check`` proves or refutes almost-sure termination
(exit 0 proven, 1 refuted with a witness, 2 inconclusive, 3 bad input),
``instrument`` exports a guarded-transition document restricted to a
pattern, and ``simulate`` estimates the termination probability by
sampling.  Reports are line-oriented key/value text with VERDICT,
PATTERN, TRACE, WITNESS, and ORACLE sections and are byte-stable for
fixed inputs, flags, and seed.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

from . import checker, instrument, oracle, patterns, responses, semantics
from .lang import SourceError, lower, parse_file
from .semantics import ModelingError, ResourceError, build


def parse_instances(spec: str):
    """"N=1..4" or "N=3" or "N=1..4,M=2": one ranged parameter allowed."""
    fixed = {}
    ranged = None
    for part in spec.split(","):
        name, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"bad instance spec {part!r}")
        if ".." in val:
            if ranged is not None:
                raise ValueError("only one parameter may carry a range")
            lo, _, hi = val.partition("..")
            ranged = (name.strip(), int(lo), int(hi))
        else:
            fixed[name.strip()] = int(val)
    if ranged is None:
        return [dict(fixed)]
    name, lo, hi = ranged
    return [dict(fixed, **{name: v}) for v in range(lo, hi + 1)]


def _fmt_instance(inst: dict) -> str:
    if not inst:
        return "-"
    return ",".join(f"{k}={v}" for k, v in sorted(inst.items()))


def _trace_lines(out, trace):
    for i, r in enumerate(trace.rounds, start=1):
        line = f'round {i}: candidate="{r.candidate}" verdict={r.verdict}'
        if r.loop_word is not None:
            line += f' loop="{r.loop_word}"'
        out.append(line)


def _witness_lines(out, space, witness):
    out.append("WITNESS")
    if isinstance(witness, semantics.Lasso):
        out.append(checker.format_lasso(space, witness))
    elif isinstance(witness, oracle.ReachWitness):
        out.append(f"stuck-node: {space.node_str(witness.node)}")
    elif isinstance(witness, oracle.StrategyWitness):
        strat = " ".join(f"{space.node_str(q)}->{semantics.LABEL_STR[l]}"
                         for q, l in sorted(witness.strategy.items()))
        out.append(f"strategy: {strat}")
        out.append("closed-set: " +
                   " ".join(space.node_str(q) for q in witness.closed_set))
    else:
        out.append(f"witness: {witness}")


def _oracle_lines(out, items, jobs):
    """items: list of (instance-str, callable returning (kind, ok, agree))."""
    out.append("ORACLE")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda kv: (kv[0], kv[1]()), items))
    else:
        results = [(tag, fn()) for tag, fn in items]
    for tag, (kind, ok, agree) in results:
        verdict = "terminating" if ok else "not-terminating"
        out.append(f"instance: {tag} check={kind} result={verdict} "
                   f"agreement={'yes' if agree else 'no'}")


def cmd_check(args) -> int:
    src = parse_file(args.file)
    prog = lower(src)
    out = []
    exit_code = 2

    if not prog.is_deterministic:
        return _check_nondet(args, prog, out)

    if prog.is_weakly_finite:
        if not args.instances:
            print("error: parameterized program needs --instances", file=sys.stderr)
            return 3
        instances = parse_instances(args.instances)
        result = patterns.drive_weakly_finite(
            prog, instances, max_rounds=args.rounds, node_cap=args.node_cap,
            base=args.base_word, jobs=args.jobs)
        out.append("VERDICT")
        out.append(f"program: {prog.name}")
        out.append("mode: weakly-finite")
        status = {"proven-with-guess": "proven",
                  "refuted": "refuted"}.get(result.status, "inconclusive")
        out.append(f"status: {status}")
        out.append(f"detail: {result.status}")
        out.append("PATTERN")
        out.append(patterns.serialize_pattern(result.template)
                   if result.template else "-")
        out.append("TRACE")
        for r in result.per_instance:
            out.append(f"instance: {_fmt_instance(r.instance)}")
            _trace_lines(out, r.trace)
        if result.verification:
            out.append("VERIFY")
            for inst, word, ok in result.verification:
                out.append(f'instance: {_fmt_instance(inst)} word="{word}" '
                           f"check={'terminating' if ok else 'failed'}")
        if result.status == "proven-with-guess" and len(result.words) > 1:
            last = result.per_instance[-1]
            words = [w for w in result.words if w]
            if words:
                seq = checker.check_sequence_pattern(last.space, words,
                                                     tail=args.tail)
                out.append(f"sequence: tail={args.tail} "
                           f"verdict={seq.status}")
        if result.status == "refuted":
            bad = result.per_instance[-1]
            _witness_lines(out, bad.space, bad.trace.witness)
            exit_code = 1
        elif result.status == "proven-with-guess":
            exit_code = 0
        if args.oracle:
            items = [(_fmt_instance(r.instance),
                      _det_oracle_item(r.space, r.trace.status == "proven"))
                     for r in result.per_instance]
            _oracle_lines(out, items, args.jobs)
        print("\n".join(out))
        return exit_code

    # finite deterministic program
    instances = parse_instances(args.instances) if args.instances else [{}]
    if len(instances) > 1:
        print("error: this program is finite; open bounded parameters "
              "already range over all values, so pass at most one "
              "assignment per parameter", file=sys.stderr)
        return 3
    instance = instances[0]
    space = build(prog, instance, args.node_cap)
    trace, pattern = patterns.refine_finite(space, args.base_word,
                                            max_rounds=args.rounds)
    out.append("VERDICT")
    out.append(f"program: {prog.name}")
    out.append("mode: finite")
    status = {"proven": "proven", "refuted": "refuted"}.get(
        trace.status, "inconclusive")
    out.append(f"status: {status}")
    out.append(f"detail: {trace.status}")
    out.append("PATTERN")
    out.append(patterns.serialize_pattern(pattern) if pattern else "-")
    out.append("TRACE")
    out.append(f"instance: {_fmt_instance(instance)}")
    _trace_lines(out, trace)
    if trace.status == "refuted":
        _witness_lines(out, space, trace.witness)
        exit_code = 1
    elif trace.status == "proven":
        exit_code = 0
    if args.oracle:
        items = [(_fmt_instance(instance),
                  _det_oracle_item(space, trace.status == "proven"))]
        _oracle_lines(out, items, args.jobs)
    print("\n".join(out))
    return exit_code


def _det_oracle_item(space, prover_terminating):
    def run():
        ok, _ = oracle.as_terminating_deterministic(space)
        return ("deterministic-reachability", ok, ok == prover_terminating)
    return run


def _check_nondet(args, prog, out) -> int:
    if prog.is_weakly_finite:
        print("error: nondeterministic parameterized programs are not "
              "supported; fix the parameters", file=sys.stderr)
        return 3
    instance = parse_instances(args.instances)[0] if args.instances else {}
    normal = responses.normalize(prog)
    space = build(normal, instance, args.node_cap)
    out.append("VERDICT")
    out.append(f"program: {prog.name}")
    out.append("mode: nondeterministic")

    def oracle_section(prover_terminating):
        if not args.oracle:
            return
        def run():
            good, _ = oracle.as_terminating_mdp(space)
            return ("mdp-qualitative-reachability", good,
                    good == prover_terminating)
        _oracle_lines(out, [(_fmt_instance(instance), run)], args.jobs)

    try:
        resp = responses.construct_response(space)
        verdict = checker.check_response_pattern(space, resp)
        ok = verdict.terminating
    except patterns.Refuted as exc:
        out.append("status: refuted")
        out.append(f"detail: {exc}")
        out.append("PATTERN")
        out.append("-")
        out.append("WITNESS")
        if isinstance(exc.witness, tuple) and len(exc.witness) == 2:
            q, word = exc.witness
            labels = " ".join(semantics.LABEL_STR[l] for l in word) or "-"
            out.append(f"node: {space.node_str(q)} actions: {labels}")
        else:
            out.append(f"witness: {exc.witness}")
        oracle_section(False)
        print("\n".join(out))
        return 1
    except ResourceError as exc:
        out.append("status: inconclusive")
        out.append(f"detail: {exc}")
        print("\n".join(out))
        return 2
    out.append(f"status: {'proven' if ok else 'refuted'}")
    out.append(f"detail: response of length {resp.n}")
    out.append("PATTERN")
    out.append(responses.serialize_response(resp).rstrip("\n"))
    exit_code = 0
    if not ok:
        _witness_lines(out, space, verdict.lasso)
        exit_code = 1
    oracle_section(ok)
    print("\n".join(out))
    return exit_code


def cmd_instrument(args) -> int:
    src = parse_file(args.file)
    prog = lower(src)
    pattern = patterns.parse_pattern(args.pattern)
    if pattern.kind == "sequence" and args.tail:
        pattern = patterns.sequence_pattern(pattern.words, args.tail)
    doc = (instrument.export_nondet(prog) if pattern.kind == "simple"
           and args.plain else instrument.instrument_pattern(prog, pattern))
    text = doc.render()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {args.out} ({len(doc.transitions)} transitions)")
    return 0


def cmd_simulate(args) -> int:
    src = parse_file(args.file)
    prog = lower(src)
    instance = parse_instances(args.instances)[0] if args.instances else {}
    space = build(prog, instance, args.node_cap)
    strategy = None
    if space.has_actions:
        # resolve choices adversarially if a bad strategy exists, else a0
        ok, witness = oracle.as_terminating_mdp(space)
        strategy = witness.strategy if not ok else {
            i: semantics.A0 for i in range(space.n_nodes)
            if space.kind[i] == semantics.KIND_ACTION}
    result = oracle.monte_carlo(space, args.samples, args.cap, args.seed,
                                strategy=strategy, jobs=args.jobs)
    out = [
        "SIMULATION",
        f"program: {prog.name}",
        f"instance: {_fmt_instance(instance)}",
        f"samples: {result.samples}",
        f"cap: {args.cap}",
        f"seed: {args.seed}",
        f"terminated: {result.terminated}",
        f"capped: {result.capped}",
        f"terminated_fraction: {float(result.terminated_fraction):.6f}",
        f"capped_fraction: {float(result.capped_fraction):.6f}",
    ]
    print("\n".join(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coinpattern",
        description="prove almost-sure termination of probabilistic "
                    "programs by synthesizing terminating coin-toss patterns")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="program file (.ppg)")
        p.add_argument("--instances", default="",
                       help="parameter assignments, e.g. N=1..4")
        p.add_argument("--node-cap", type=int, default=semantics.DEFAULT_NODE_CAP)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("check", help="prove or refute a.s. termination")
    common(p)
    p.add_argument("--base-word", default="")
    p.add_argument("--rounds", type=int, default=64)
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with the reachability oracle")
    p.add_argument("--tail", choices=("repeat", "free"), default="repeat")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("instrument", help="export a prover-ready document")
    common(p)
    p.add_argument("--pattern", required=True,
                   help="pattern spec, e.g. template:a=;b=0;c=;d=0")
    p.add_argument("--out", required=True)
    p.add_argument("--tail", choices=("repeat", "free"), default="")
    p.add_argument("--plain", action="store_true",
                   help="plain nondeterministic export")
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("simulate", help="Monte-Carlo termination estimate")
    common(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--cap", type=int, default=100_000)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SourceError, OSError, ModelingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
