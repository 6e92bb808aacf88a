"""Seeded random program generator for agreement and property tests.

Programs are deterministic by default (no nondet()) and built so that no
assignment can leave its declared range: increments and decrements are
guarded, copies only flow into variables with at least the source range.
A healthy fraction of the generated programs diverges (coin-free loops or
loops no coin word can leave), which is what the refinement/oracle
agreement tests need.
"""
import random


def random_source(seed: int, nondet: bool = False) -> str:
    rng = random.Random(seed)
    n_vars = rng.randint(2, 3)
    his = [rng.choice((1, 2, 3, 3, 3, 7)) for _ in range(n_vars)]
    names = [f"v{i}" for i in range(n_vars)]
    lines = [f"program r{seed};"]
    for name, hi in zip(names, his):
        lines.append(f"var {name} : 0..{hi} = {rng.randint(0, hi)};")
    lines.append("begin")

    def var(): return rng.randrange(n_vars)

    def cmp_text():
        i = var()
        op = rng.choice(("<", "<=", "==", "!=", ">", ">="))
        if rng.random() < 0.6:
            return f"{names[i]} {op} {rng.randint(0, his[i])}"
        j = var()
        return f"{names[i]} {op} {names[j]}"

    budget = rng.randint(4, 14)

    def emit_stmt(depth, indent):
        nonlocal budget
        budget -= 1
        pad = "  " * indent
        kind = rng.random()
        if depth >= 3:
            kind = rng.random() * 0.6  # leaves only
        if kind < 0.22:
            i = var()
            lines.append(f"{pad}{names[i]} := {rng.randint(0, his[i])};")
        elif kind < 0.38:
            i = var()
            p = rng.choice(("1/2", "1/3", "2/5"))
            lines.append(f"{pad}{names[i]} := coin({p});")
        elif kind < 0.46 and nondet:
            i = var()
            lines.append(f"{pad}{names[i]} := nondet();")
        elif kind < 0.52:
            i, j = var(), var()
            if his[j] <= his[i]:
                lines.append(f"{pad}{names[i]} := {names[j]};")
            else:
                lines.append(f"{pad}{names[i]} := {rng.randint(0, his[i])};")
        elif kind < 0.62:
            i = var()
            lines.append(f"{pad}if ({names[i]} < {his[i]}) {{")
            lines.append(f"{pad}  {names[i]} := {names[i]} + 1;")
            lines.append(f"{pad}}}")
        elif kind < 0.70:
            i = var()
            lines.append(f"{pad}if ({names[i]} > 0) {{")
            lines.append(f"{pad}  {names[i]} := {names[i]} - 1;")
            lines.append(f"{pad}}}")
        elif kind < 0.85:
            lines.append(f"{pad}if ({cmp_text()}) {{")
            emit_block(depth + 1, indent + 1)
            if rng.random() < 0.5:
                lines.append(f"{pad}}} else {{")
                emit_block(depth + 1, indent + 1)
            lines.append(f"{pad}}}")
        else:
            lines.append(f"{pad}while ({cmp_text()}) {{")
            emit_block(depth + 1, indent + 1)
            lines.append(f"{pad}}}")

    def emit_block(depth, indent):
        nonlocal budget
        count = rng.randint(1, 3)
        for _ in range(count):
            if budget <= 0:
                i = var()
                lines.append("  " * indent + f"{names[i]} := {rng.randint(0, his[i])};")
                return
            emit_stmt(depth, indent)

    emit_block(0, 1)
    lines.append("end")
    return "\n".join(lines) + "\n"


def random_spaces(count: int, start_seed: int = 0, nondet: bool = False,
                  node_cap: int = 50_000):
    """Yield (seed, space) pairs for `count` random programs."""
    from coinpattern.lang import lower, parse
    from coinpattern.semantics import ResourceError, build

    seed = start_seed
    produced = 0
    while produced < count:
        seed += 1
        try:
            space = build(lower(parse(random_source(seed, nondet=nondet))),
                          node_cap=node_cap)
        except ResourceError:
            continue
        yield seed, space
        produced += 1
