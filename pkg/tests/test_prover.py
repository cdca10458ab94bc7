import dataclasses
import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from zkpc.commit import CHAIN_INIT, chain, derive_samples, sparse_memory_root
from zkpc.exprlang import gen_program
from zkpc.isa import GuestImage, Instruction, Op, encode, init_memory, predecode
from zkpc.prover import ProverError, execute_traced, prove, receipt_from_trace
from zkpc.receipt import (
    MalformedReceipt, TraceRow, boundary_steps, deserialize_receipt, serialize_receipt,
)


def test_halt_trace_has_two_rows():
    t = execute_traced(GuestImage((0,)), b"xy")
    assert t.trace_len == 2
    r0, r1 = t.row(0), t.row(1)
    assert r0.pc == r1.pc == 0
    assert dataclasses.replace(r0, halted=1) == r1
    assert r0.out_acc == CHAIN_INIT and r0.mem_root == sparse_memory_root(init_memory(b"xy"))


def test_incremental_roots_match_recomputation(exprcc):
    src = b"let a = 1; let b = a + 2; print b;"
    t = execute_traced(exprcc, src)
    rng = random.Random(5)
    for i in sorted(rng.sample(range(t.trace_len), 10)):
        mem = dict(init_memory(src))
        for s, a, v in t.stores:
            if s >= i:
                break
            mem[a] = v
        assert t.row(i).mem_root == sparse_memory_root({a: v for a, v in mem.items() if v})


def test_final_row(exprcc):
    t = execute_traced(exprcc, b"print 1;")
    last = t.row(t.trace_len - 1)
    assert last.halted == 1 and last.exit_code == 0
    assert last.out_acc == chain(t.output_bytes)
    assert all(not t.row(i).halted for i in range(t.trace_len - 1))


def test_refuses_failed_runs(exprcc):
    with pytest.raises(ProverError) as e:
        prove(exprcc, b"let = ;")
    assert e.value.exit_code == 1
    with pytest.raises(ProverError) as e:
        prove(GuestImage((0xFF000000,)), b"")
    assert e.value.trap is not None
    with pytest.raises(ProverError):
        prove(exprcc, b"print 1;", max_steps=10)
    with pytest.raises(ValueError):
        prove(exprcc, b"print 1;", k=0)


def test_opening_layout(small_receipt):
    _, r = small_receipt
    c = r.claim
    assert [o.step_index for o in r.openings] == derive_samples(c, 64) + boundary_steps(c.trace_len)
    assert len(r.sampled) == 64 and [o.step_index for o in r.boundary] == [0, c.trace_len - 2]
    for o in r.openings:
        assert (o.mem_witness is not None) == (o.mem_kind != 0)


def test_memory_witness_iff_load_store(exprcc):
    t = execute_traced(exprcc, b"print 2;")
    prog = predecode(exprcc.code)
    steps = list(range(0, t.trace_len - 1, 7))
    for o in t.open_steps(steps):
        op = prog[o.row_i.pc][0]
        assert o.mem_kind == {Op.LW: 1, Op.SW: 2}.get(op, 0)
        if o.mem_kind:
            assert o.mem_witness.verify(o.row_i.mem_root)


def test_journal_and_replay_witnesses_agree(exprcc):
    t = execute_traced(exprcc, b"let q = 3; print q * q;")
    steps = list(range(0, t.trace_len - 1, 3))
    assert t.mem_witnesses(steps) == dataclasses.replace(t, journal=None).mem_witnesses(steps)


def test_k_changes_openings_not_claim(exprcc):
    src = b"print 5 - 9;"
    r1, r64 = prove(exprcc, src, k=1), prove(exprcc, src, k=64)
    assert r1.claim == r64.claim
    assert len(r1.openings) == 1 + 2 and len(r64.openings) == 64 + 2
    assert len(serialize_receipt(r1)) < len(serialize_receipt(r64))


def test_reproving_is_identical(exprcc):
    src = b"let z = 4; print -z;"
    assert serialize_receipt(prove(exprcc, src)) == serialize_receipt(prove(exprcc, src))


def test_roundtrip_50_programs(exprcc):
    for seed in range(50):
        src = gen_program(seed, 2)
        data = serialize_receipt(prove(exprcc, src, k=8))
        assert serialize_receipt(deserialize_receipt(data)) == data


def test_size_contains_output(small_receipt):
    _, r = small_receipt
    data = serialize_receipt(r)
    assert len(data) > len(r.claim.output_bytes) + 2 * 32 + 126


def test_truncations_name_the_section(small_receipt):
    data = serialize_receipt(small_receipt[1])
    seen = set()
    for cut in list(range(0, 200)) + list(range(200, len(data), 97)):
        with pytest.raises(MalformedReceipt) as e:
            deserialize_receipt(data[:cut])
        seen.add(str(e.value).split(" at ")[0].split(":")[0])
    assert any("header" in s for s in seen) and any("output" in s for s in seen)
    assert any("opening" in s for s in seen)


@pytest.mark.parametrize("patch,msg", [
    (lambda d: b"ZKPX" + d[4:], "magic"),
    (lambda d: d[:4] + b"\x02\x00" + d[6:], "version"),
    (lambda d: d + b"\x00", "trailing"),
])
def test_header_validation(small_receipt, patch, msg):
    data = serialize_receipt(small_receipt[1])
    with pytest.raises(MalformedReceipt, match=msg):
        deserialize_receipt(patch(data))


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.data())
def test_fuzzed_bytes_never_crash(small_receipt, data):
    blob = bytearray(serialize_receipt(small_receipt[1]))
    for _ in range(data.draw(st.integers(1, 4))):
        i = data.draw(st.integers(0, len(blob) - 1))
        blob[i] = data.draw(st.integers(0, 255))
    try:
        deserialize_receipt(bytes(blob))
    except MalformedReceipt:
        pass


def test_trace_row_is_105_bytes():
    row = TraceRow(1, tuple(range(8)), b"\x01" * 32, b"\x02" * 32, 1, 7)
    packed = row.pack()
    assert len(packed) == 105 and TraceRow.unpack(packed) == row
    assert packed[:4] == b"\x01\x00\x00\x00" and packed[-5] == 1


def test_forged_copy_recommits(exprcc):
    t = execute_traced(exprcc, b"print 3;")
    row = t.row(5)
    forged = t.with_row(5, dataclasses.replace(row, pc=row.pc + 1))
    assert forged.root != t.root and t.row(5) == row
    r = receipt_from_trace(forged, 4)
    assert r.claim.trace_root == forged.root


def test_encode_used_in_fixture_programs():
    assert encode(Instruction(Op.HALT)) == 0
