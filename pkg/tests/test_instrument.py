"""Export format, round trips, instrumentation, cross-interpretation."""
import pytest

from conftest import load
from coinpattern import checker, patterns
from coinpattern.instrument import (document_to_program, export_nondet,
                                    instrument_pattern,
                                    interpret_nonterminating, parse_document,
                                    program_fingerprint)
from coinpattern.lang import CoinAssign, lower, parse
from coinpattern.patterns import sequence_pattern, template_pattern
from coinpattern.semantics import build


def test_export_fw_round_trips_isomorphically():
    prog = load("fw.ppg")
    doc = export_nondet(prog)
    back = document_to_program(parse_document(doc.render()))
    assert back.n_locations == prog.n_locations
    fp_back = program_fingerprint(back)
    fp_orig = program_fingerprint(prog)
    # identical up to coin -> nondet on the single coin edge
    diff = [(a, b) for a, b in zip(fp_orig[3], fp_back[3]) if a != b]
    assert len(diff) == 1
    assert "coin" in str(diff[0][0]) and "nondet" in str(diff[0][1])


def test_export_no_coins_is_identity_modulo_format():
    prog = lower(parse("program t; var x : 0..3 = 0; "
                       "begin while (x < 3) { x := x + 1; } end"))
    back = document_to_program(parse_document(export_nondet(prog).render()))
    assert program_fingerprint(back) == program_fingerprint(prog)


def test_export_preserves_parameters():
    prog = load("rw.ppg")
    back = document_to_program(parse_document(export_nondet(prog).render()))
    assert back.params == prog.params
    assert back.vars == prog.vars


def test_document_render_golden():
    prog = lower(parse("program tiny; var x : 0..1 = 0; "
                       "begin x := coin(1/2); end"))
    text = export_nondet(prog).render()
    assert text == (
        "# transition system for tiny\n"
        "program: tiny\n"
        "start: L0\n"
        "end: L2\n"
        "vars: x:0..1\n"
        "init: x=0\n"
        "from: L0 guard: true update: x:=nondet() to: L1\n"
        "from: L1 guard: true update: - to: L2\n"
        "from: L2 guard: true update: - to: L2\n"
    )


def test_instrument_rejects_bad_patterns():
    prog = load("randomwalk.ppg")
    with pytest.raises(ValueError, match="natively"):
        instrument_pattern(prog, patterns.simple_pattern("01"))
    with pytest.raises(ValueError, match="universal"):
        instrument_pattern(prog, patterns.universal_pattern())
    with pytest.raises(ValueError, match="nonempty"):
        instrument_pattern(prog, sequence_pattern(("00", ""), "repeat"))
    with pytest.raises(ValueError, match="nonempty"):
        # expands to the empty word at index 1
        instrument_pattern(prog, template_pattern("", "0", "", 1))


def test_instrumented_rw_structure():
    prog = load("randomwalk.ppg")
    doc = instrument_pattern(prog, template_pattern("", "0", "", 0))
    assert "# hint: invariant next <= N" in doc.comments
    text = doc.render()
    assert "ctr:=?" in text and "pos:=1" in text and "next:=next + 1" in text
    # the forced branch assigns the letter 0
    assert "c:=0" in text
    reparsed = parse_document(text)
    assert len(reparsed.transitions) == len(doc.transitions)


def test_instrument_constant_word_three_letters():
    prog = load("firewire.ppg")
    doc = instrument_pattern(prog, template_pattern("010", "", "", 0))
    text = doc.render()
    assert "x:=0" in text and "x:=1" in text and "y:=0" in text
    assert "bpos" not in text  # no cyclic part for a constant


def test_instrument_herman_template_uses_bpos():
    prog = load("herman.ppg")
    doc = instrument_pattern(prog, template_pattern("0", "10", "", 0))
    text = doc.render()
    assert "bpos:0..1" in text and "bpos:=0" in text and "bpos:=1" in text


@pytest.mark.parametrize("name,tpl,insts", [
    ("randomwalk.ppg", template_pattern("", "0", "", 0), (1, 2, 3)),
    ("rw.ppg", template_pattern("", "0", "", 1), (2, 3)),
    ("brp.ppg", template_pattern("00", "", "", 0), (1, 2)),
    ("firewire.ppg", template_pattern("010", "", "", 0), (1, 2)),
    ("zeroconf.ppg", template_pattern("", "0", "", -2), (1, 2)),
    ("herman.ppg", template_pattern("0", "10", "", 0), (1, 2)),
])
def test_cross_interpretation_matches_sequence_checker(name, tpl, insts):
    """Bounded runs of the instrumented document and the native checker
    agree on the truncated pattern, instance by instance."""
    prog = load(name)
    try:
        doc = instrument_pattern(prog, tpl)
    except ValueError:
        pytest.skip("template not instrumentable")
    next_cap = 5
    words = [tpl.expand(i) for i in range(1, next_cap + 1)]
    words = [w for w in words if w] or [tpl.expand(next_cap)]
    for n in insts:
        doc_nonterm = interpret_nonterminating(doc, {"N": n}, ctr_cap=5,
                                               next_cap=next_cap)
        space = build(prog, {"N": n})
        native = checker.check_sequence_pattern(space, words).status == "lasso"
        silent = checker.check_coinless_nontermination(space) is not None
        assert doc_nonterm == (native or silent), (name, n)


def test_cross_interpretation_detects_weak_patterns():
    prog = load("randomwalk.ppg")
    weak = template_pattern("0", "", "", 0)  # constant 0 is too weak
    doc = instrument_pattern(prog, weak)
    assert interpret_nonterminating(doc, {"N": 2}, ctr_cap=5, next_cap=4)
    space = build(prog, {"N": 2})
    assert checker.check_sequence_pattern(space, ["0"] * 4).status == "lasso"


def test_sequence_pattern_instrumentation():
    prog = load("rw.ppg")
    doc = instrument_pattern(prog, sequence_pattern(("00", "000"), "repeat"))
    for n in (3, 4):
        nonterm = interpret_nonterminating(doc, {"N": n}, ctr_cap=5, next_cap=2)
        space = build(prog, {"N": n})
        native = checker.check_sequence_pattern(space, ["00", "000"]).status
        assert nonterm == (native == "lasso"), n
