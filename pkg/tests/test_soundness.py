import math

from zkpc.commit import derive_samples
from zkpc.isa import compute_image_id
from zkpc.prover import claim_for, execute_traced, receipt_from_trace
from zkpc.receipt import boundary_steps
from zkpc.soundness import (
    FIXED_STEPS, SoundnessConfig, dead_register, expected_detection, fixed_image, forge, forgeable_rows,
    run_soundness,
)
from zkpc.verifier import verify, verify_full


def test_fixed_program_shape():
    t = execute_traced(fixed_image(), b"")
    assert t.trace_len == FIXED_STEPS + 1 == 1025
    assert t.output_bytes == b"O"
    rows = forgeable_rows(t)
    assert len(rows) > 300 and all(j - 1 not in boundary_steps(t.trace_len) for j in rows)


def test_expected_rate():
    assert math.isclose(expected_detection(1024, 64), 1 - (1023 / 1024) ** 64)
    assert math.isclose(expected_detection(1024, 64), 0.0606, abs_tol=5e-4)
    assert expected_detection(1, 1) == 1.0


def test_detection_iff_forged_transition_sampled():
    """Oracle: sampled mode catches a forgery exactly when step j-1 is opened."""
    image = fixed_image()
    iid = compute_image_id(image)
    honest = execute_traced(image, b"")
    rows = forgeable_rows(honest)
    for j in rows[::25]:
        forged = forge(honest, j, 0x80000000)
        claim = claim_for(forged, iid)
        r = receipt_from_trace(forged, 64, claim)
        sampled = j - 1 in derive_samples(claim, 64)
        assert (not verify(r, iid, b"", image).accepted) == sampled
        assert not verify_full(r, iid, b"", image).accepted


def test_dead_register():
    from zkpc.isa import Instruction, Op, encode

    assert dead_register(encode(Instruction(Op.ADDI, rd=2, rs1=0, imm=7))) == 2
    assert dead_register(encode(Instruction(Op.ADDI, rd=1, rs1=1, imm=-1))) is None
    assert dead_register(encode(Instruction(Op.SW, rs1=1, rs2=3))) is None
    assert dead_register(encode(Instruction(Op.LUI, rd=4, imm=1))) == 4


def test_small_monte_carlo():
    res = run_soundness(SoundnessConfig(trials=150, seed=7))
    assert res.full_detected == 150
    assert res.transition_failures == res.detected
    assert abs(res.z) < 4
    assert "expected=0.0606" in res.summary()
