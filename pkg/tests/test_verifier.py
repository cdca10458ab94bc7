import dataclasses

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from zkpc.commit import MemWitness, MerklePath, MerkleTree, hash_leaf
from zkpc.isa import Op, compute_image_id, predecode
from zkpc.prover import claim_for, execute_traced, prove, receipt_from_trace
from zkpc.receipt import MalformedReceipt, TraceRow, deserialize_receipt, serialize_receipt
from zkpc.minilang import assemble_text
from zkpc.soundness import fixed_image, forge
from zkpc.verifier import FailureClass as F, check_transition, verify, verify_full

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


def both(receipt, image_id, source, image):
    return verify(receipt, image_id, source, image), verify_full(receipt, image_id, source, image)


def test_honest_receipts_accept(exprcc, exprcc_id, small_receipt, corpus_receipt):
    for src, r in (small_receipt, corpus_receipt):
        fast, full = both(r, exprcc_id, src, exprcc)
        assert fast.accepted and full.accepted
        assert fast.line() == "ACCEPT"


def test_accepts_any_sample_count(exprcc, exprcc_id):
    src = b"print 1 + 2;"
    for k in (1, 2, 17, 200):
        assert verify(prove(exprcc, src, k), exprcc_id, src, exprcc).accepted


def test_wrong_source(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    for other in (src + b" ", src.replace(b"x", b"y"), b""):
        fast, full = both(r, exprcc_id, other, exprcc)
        assert fast.failure_class is full.failure_class is F.SOURCE_DIGEST_MISMATCH


def test_image_binding(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    other = exprcc.with_word(3, exprcc.code[3] ^ 4)
    # agreed ID differs from the receipt's
    assert verify(r, compute_image_id(other), src, other).failure_class is F.IMAGE_BINDING_FAILURE
    # image does not hash to the agreed ID
    assert verify(r, exprcc_id, src, other).failure_class is F.IMAGE_BINDING_FAILURE
    assert verify_full(r, exprcc_id, src, other).failure_class is F.IMAGE_BINDING_FAILURE


def test_source_checked_before_image(exprcc, small_receipt):
    src, r = small_receipt
    assert verify(r, b"\x00" * 32, b"zzz", exprcc).failure_class is F.SOURCE_DIGEST_MISMATCH


def _with_claim(r, **kw):
    return dataclasses.replace(r, claim=dataclasses.replace(r.claim, **kw))


def test_claim_edits(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    c = r.claim
    cases = {
        "trace_root": (dict(trace_root=bytes(32)), F.TRANSCRIPT_MISMATCH),
        "trace_len": (dict(trace_len=c.trace_len + 1), F.TRANSCRIPT_MISMATCH),
        "output": (dict(output_bytes=c.output_bytes[:-1]), F.TRANSCRIPT_MISMATCH),
        "exit": (dict(exit_code=1), F.BOUNDARY_VIOLATION),
    }
    for name, (kw, fc) in cases.items():
        fast, full = both(_with_claim(r, **kw), exprcc_id, src, exprcc)
        assert fast.failure_class is fc, name
        assert not full.accepted, name


def test_reordered_openings(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    o = list(r.openings)
    o[0], o[1] = o[1], o[0]
    rep = verify(dataclasses.replace(r, openings=tuple(o)), exprcc_id, src, exprcc)
    assert rep.failure_class is F.TRANSCRIPT_MISMATCH


def test_missing_opening(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    rep = verify(dataclasses.replace(r, openings=r.openings[:-1]), exprcc_id, src, exprcc)
    assert rep.failure_class is F.MALFORMED_RECEIPT


def test_corrupted_sibling_is_path_failure(exprcc, exprcc_id, small_receipt):
    src, r = small_receipt
    o = r.openings[5]
    sib = list(o.path_i1.siblings)
    sib[0] = bytes(32)
    bad = dataclasses.replace(o, path_i1=MerklePath(tuple(sib), o.path_i1.leaf_index))
    rep = verify(dataclasses.replace(r, openings=r.openings[:5] + (bad,) + r.openings[6:]), exprcc_id, src, exprcc)
    assert rep.failure_class is F.PATH_FAILURE


def test_forged_boundary_row_is_transition_violation():
    image = fixed_image()
    iid = compute_image_id(image)
    honest = execute_traced(image, b"")
    forged = forge(honest, 1, 0x55)  # breaks step 0, which is always opened
    r = receipt_from_trace(forged, 8, claim_for(forged, iid))
    fast, full = both(r, iid, b"", image)
    assert fast.failure_class is F.TRANSITION_VIOLATION
    assert not full.accepted


def test_lying_about_output_rejects(exprcc, exprcc_id):
    """A prover that rewrites output and recommits every row still gets caught."""
    src = b"print 3;"
    t = execute_traced(exprcc, src)
    claim = dataclasses.replace(claim_for(t), output_bytes=t.output_bytes + b"X")
    fast, full = both(receipt_from_trace(t, 16, claim), exprcc_id, src, exprcc)
    assert fast.failure_class is F.OUTPUT_CHAIN_MISMATCH
    assert full.failure_class is F.OUTPUT_CHAIN_MISMATCH


def test_unhalted_claim_rejects():
    image = assemble_text("ADDI r1, r0, 3\nADDI r1, r1, -1\nBNE r1, r0, -2\nHALT r0\n")
    iid = compute_image_id(image)
    t = execute_traced(image, b"")
    # drop the final halted row and recommit
    cut = execute_traced(image, b"")
    cut.rows = cut.rows[:-1]
    cut.tree = MerkleTree([hash_leaf(x) for x in cut.rows])
    r = receipt_from_trace(cut, 4, claim_for(cut, iid))
    assert verify(r, iid, b"", image).failure_class is F.BOUNDARY_VIOLATION
    assert verify(receipt_from_trace(t, 4), iid, b"", image).accepted


# --- check_transition: every single-field change of the successor breaks it


def _perturbations(row: TraceRow):
    yield dataclasses.replace(row, pc=row.pc ^ 1)
    for r in range(8):
        regs = list(row.regs)
        regs[r] ^= 1 << r
        yield dataclasses.replace(row, regs=tuple(regs))
    yield dataclasses.replace(row, mem_root=bytes(32))
    yield dataclasses.replace(row, out_acc=bytes(32))
    yield dataclasses.replace(row, halted=row.halted ^ 1)
    yield dataclasses.replace(row, exit_code=row.exit_code ^ 1)


def _representative_steps(trace):
    prog = predecode(trace.image.code)
    first: dict[int, int] = {}
    for i in range(trace.trace_len - 1):
        first.setdefault(prog[trace.row(i).pc][0], i)
    return sorted(first.values())


def test_check_transition_field_perturbations(exprcc):
    t = execute_traced(exprcc, b"let a = 9; print a / 2 - -a;")
    steps = _representative_steps(t)
    seen = {predecode(exprcc.code)[t.row(s).pc][0] for s in steps}
    assert {Op.LW, Op.SW, Op.ADDI, Op.WRITE, Op.HALT, Op.JAL, Op.JALR} <= seen
    for s in steps:
        (o,) = t.open_steps([s])
        assert check_transition(o, exprcc, t.root, t.trace_len)
        for bad in _perturbations(o.row_i1):
            ft = t.with_row(s + 1, bad)
            (fo,) = ft.open_steps([s])
            fo = dataclasses.replace(fo, mem_kind=o.mem_kind, mem_witness=o.mem_witness)
            assert not check_transition(fo, exprcc, ft.root, ft.trace_len), (s, bad)


def test_check_transition_witness_tampering(exprcc):
    t = execute_traced(exprcc, b"let b = 1; print b;")
    prog = predecode(exprcc.code)
    mem_steps = [s for s in range(t.trace_len - 1) if prog[t.row(s).pc][0] in (Op.LW, Op.SW)][:20]
    for o in t.open_steps(mem_steps):
        w = o.mem_witness
        assert check_transition(o, exprcc, t.root, t.trace_len)
        for bad in (
            MemWitness(w.address ^ 1, w.old_value, w.siblings),
            MemWitness(w.address, w.old_value ^ 1, w.siblings),
            MemWitness(w.address, w.old_value, (bytes(32),) + w.siblings[1:]),
            None,
        ):
            assert not check_transition(dataclasses.replace(o, mem_witness=bad), exprcc, t.root, t.trace_len)
        assert not check_transition(dataclasses.replace(o, mem_kind=3 - o.mem_kind), exprcc, t.root, t.trace_len)


def test_check_transition_wrong_root(exprcc):
    t = execute_traced(exprcc, b"print 0;")
    (o,) = t.open_steps([3])
    assert not check_transition(o, exprcc, bytes(32), t.trace_len)


# --- byte-level tampering never yields an accept


@SETTINGS
@given(st.data())
def test_any_byte_edit_rejects(exprcc, exprcc_id, small_receipt, data):
    src, r = small_receipt
    blob = bytearray(serialize_receipt(r))
    i = data.draw(st.integers(0, len(blob) - 1))
    blob[i] ^= data.draw(st.integers(1, 255))
    try:
        tampered = deserialize_receipt(bytes(blob))
    except MalformedReceipt:
        return
    fast, full = both(tampered, exprcc_id, src, exprcc)
    assert not fast.accepted
    # full mode only checks the claim, so edits inside openings can pass it
    if tampered.claim != r.claim:
        assert not full.accepted


def test_fast_and_full_agree_on_honest_corpus(exprcc, exprcc_id):
    from zkpc.exprlang import gen_program

    for seed in range(5):
        src = gen_program(seed, 4)
        r = prove(exprcc, src, 16)
        fast, full = both(r, exprcc_id, src, exprcc)
        assert fast.accepted and full.accepted


def test_check_transition_perturbing_either_row_in_place(exprcc):
    """Every single-field edit of either row, with the original paths, is caught."""
    t = execute_traced(exprcc, b"let c = 2; print c;")
    for s in _representative_steps(t)[:12]:
        (o,) = t.open_steps([s])
        for bad in _perturbations(o.row_i):
            assert not check_transition(dataclasses.replace(o, row_i=bad), exprcc, t.root, t.trace_len)
        for bad in _perturbations(o.row_i1):
            assert not check_transition(dataclasses.replace(o, row_i1=bad), exprcc, t.root, t.trace_len)
        assert not check_transition(dataclasses.replace(o, step_index=s + 1), exprcc, t.root, t.trace_len)
