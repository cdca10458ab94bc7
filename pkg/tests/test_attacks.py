import pytest

from zkpc.attacks import (
    COMPILER, KINDS, OUTPUT, REPLAY, SOURCE, SuiteConfig, attack_compiler, attack_output, attack_replay,
    attack_replay_output, attack_source, compiler_mutations, make_baseline, receipt_output, rename_first_variable,
    replace_output, run_suite,
)
from zkpc.exprlang import gen_program
from zkpc.verifier import FailureClass as F


@pytest.fixture(scope="module")
def seven(exprcc):
    return make_baseline(exprcc, b"print 7;", 16)


@pytest.fixture(scope="module")
def pair(exprcc):
    return [make_baseline(exprcc, gen_program(s, 3), 16) for s in (1, 2)]


def test_push7_to_push8_rejected(seven):
    out = receipt_output(seven.receipt_bytes)
    assert out == b"PUSH 7\nPRINT\nHALT\n"
    o = attack_output(seven, out.replace(b"PUSH 7", b"PUSH 8"), "PUSH 7 -> PUSH 8", full=True)
    assert o.got == "REJECT" and o.report.failure_class is F.TRANSCRIPT_MISMATCH
    assert o.passed and "scenario=OutputManipulation expected=REJECT got=REJECT" in o.line()


def test_identity_edits_are_controls(seven):
    for o in (
        attack_output(seven, receipt_output(seven.receipt_bytes), full=True),
        attack_source(seven, seven.source, full=True),
        attack_compiler(seven, 5, 0, full=True),
        attack_replay(seven, seven, full=True),
    ):
        assert o.scenario.control and o.report.accepted and o.passed, o.line()


def test_single_bit_compiler_change(seven):
    o = attack_compiler(seven, 0, 1)
    assert not o.scenario.control and o.report.failure_class is F.IMAGE_BINDING_FAILURE and o.passed


def test_source_edits(seven):
    renamed = rename_first_variable(b"let ab = 1; let abc = ab; print ab + abc;")
    assert renamed == b"let ab_ = 1; let abc = ab_; print ab_ + abc;"
    o = attack_source(seven, b"print 7; ", "space")
    assert o.report.failure_class is F.SOURCE_DIGEST_MISMATCH


def test_rename_respects_length_limit():
    src = b"let abcdefghijklmnop = 1; print abcdefghijklmnop;"
    out = rename_first_variable(src)
    assert out != src and b"abcdefghijklmnoa" in out


def test_replay(pair):
    a, b = pair
    o = attack_replay(a, b, full=True)
    assert o.report.failure_class is F.SOURCE_DIGEST_MISMATCH and o.passed
    o = attack_replay_output(a, b, full=True)
    assert o.report.failure_class is F.TRANSCRIPT_MISMATCH and o.passed


def test_replace_output_keeps_rest(seven):
    data = replace_output(seven.receipt_bytes, b"XY")
    assert receipt_output(data) == b"XY"
    assert replace_output(data, receipt_output(seven.receipt_bytes)) == seven.receipt_bytes


def test_mutations_distinct():
    m = compiler_mutations(1249, 20, 3)
    assert m[0] == (0, 1) and len({i for i, _ in m}) == 20
    assert all(mask and mask & (mask - 1) == 0 for _, mask in m)


def test_small_suite(pair):
    cfg = SuiteConfig(corpus_seeds=(1, 2), program_size=3, compiler_mutations=3, samples=16, full=True)
    outcomes = run_suite(pair, cfg)
    assert all(o.passed for o in outcomes), [o.line() for o in outcomes if not o.passed]
    kinds = {o.scenario.kind for o in outcomes}
    assert kinds == set(KINDS)
    counts = {k: sum(1 for o in outcomes if o.scenario.kind == k and not o.scenario.control) for k in KINDS}
    assert counts == {COMPILER: 3, SOURCE: 4, OUTPUT: 4, REPLAY: 4}
