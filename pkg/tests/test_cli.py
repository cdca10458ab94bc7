import pytest

from zkpc.bench import CSV_HEADER, least_squares, read_csv
from zkpc.cli import main


@pytest.fixture
def proved(tmp_path, capsys):
    src = tmp_path / "p.expr"
    src.write_bytes(b"let x = 2;\nprint x * 21;\n")
    rec = tmp_path / "p.zkpc"
    assert main(["prove", "--source", str(src), "--out", str(rec), "--samples", "8"]) == 0
    capsys.readouterr()
    main(["handshake"])
    iid = capsys.readouterr().out.strip()
    return src, rec, iid


def test_prove_writes_receipt_and_asm(proved):
    src, rec, _ = proved
    assert rec.exists()
    assert rec.with_suffix(".s").read_bytes() == b"PUSH 2\nSTORE 0\nLOAD 0\nPUSH 21\nMUL\nPRINT\nHALT\n"


def test_verify_accept_and_reject(proved, tmp_path, capsys):
    src, rec, iid = proved
    assert main(["verify", "--receipt", str(rec), "--source", str(src), "--image-id", iid]) == 0
    assert capsys.readouterr().out.strip() == "ACCEPT"
    assert main(["verify", "--receipt", str(rec), "--source", str(src), "--image-id", iid, "--full",
                 "--expect-output", str(rec.with_suffix(".s"))]) == 0
    capsys.readouterr()
    other = tmp_path / "q.expr"
    other.write_bytes(b"print 42;")
    assert main(["verify", "--receipt", str(rec), "--source", str(other), "--image-id", iid]) == 1
    assert capsys.readouterr().out.startswith("REJECT SourceDigestMismatch")
    assert main(["verify", "--receipt", str(rec), "--source", str(src), "--image-id", "00" * 32]) == 1
    assert "ImageBindingFailure" in capsys.readouterr().out


def test_truncated_receipt_is_malformed(proved, capsys):
    src, rec, iid = proved
    rec.write_bytes(rec.read_bytes()[:150])
    assert main(["verify", "--receipt", str(rec), "--source", str(src), "--image-id", iid]) == 1
    out = capsys.readouterr().out
    assert out.startswith("REJECT MalformedReceipt") and "in output" in out


@pytest.mark.parametrize("argv,code", [
    (["verify", "--receipt", "r", "--source", "s", "--image-id", "zz"], 2),
    (["verify", "--receipt", "r", "--source", "s", "--image-id", "00"], 2),
    (["verify", "--receipt", "/nonexistent", "--source", "/nonexistent", "--image-id", "00" * 32], 4),
    (["prove", "--source", "/nonexistent", "--out", "x"], 4),
    (["handshake", "--image", "/nonexistent"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["prove"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["prove", "--source", "a", "--out", "b", "--samples", "0"])
    assert e.value.code == 2


def test_prove_bad_source_exits_3(tmp_path, capsys):
    src = tmp_path / "bad.expr"
    src.write_bytes(b"print (1+;")
    assert main(["prove", "--source", str(src), "--out", str(tmp_path / "r")]) == 3
    assert "error: line 1" in capsys.readouterr().err
    assert not (tmp_path / "r").exists()


def test_bad_image_file_exits_4(tmp_path):
    img = tmp_path / "x.img"
    img.write_bytes(b"junk")
    assert main(["handshake", "--image", str(img)]) == 4


def test_build_guest_matches_handshake(tmp_path, capsys):
    out = tmp_path / "exprcc.img"
    assert main(["build-guest", "--out", str(out)]) == 0
    built = capsys.readouterr().out.strip()
    main(["handshake", "--image", str(out)])
    assert capsys.readouterr().out.strip() == built
    bad = tmp_path / "bad.mini"
    bad.write_bytes(b"func main() { x = 1; }")
    assert main(["build-guest", "--source", str(bad), "--out", str(tmp_path / "b.img")]) == 2


def test_run_and_gen(tmp_path, capsys):
    asm = tmp_path / "a.s"
    asm.write_bytes(b"PUSH 1\nPUSH 2\nADD\nPRINT\nHALT\n")
    assert main(["run", "--asm", str(asm)]) == 0
    assert capsys.readouterr().out == "3\n"
    asm.write_bytes(b"ADD\nHALT\n")
    assert main(["run", "--asm", str(asm)]) == 3
    capsys.readouterr()
    assert main(["gen", "--seed", "4", "--size", "3"]) == 0
    from zkpc.exprlang import gen_program

    assert capsys.readouterr().out.encode() == gen_program(4, 3)


def test_attack_command(capsys):
    assert main(["attack", "--scenario", "output", "--count", "1", "--samples", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all(l.startswith("scenario=OutputManipulation") for l in lines)


def test_bench_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--count", "2", "--size", "2", "--samples", "4", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == CSV_HEADER
    recs = read_csv(text)
    assert len(recs) == 2 and all(r.verify_seconds > 0 and r.trace_len > 1 for r in recs)


def test_least_squares():
    slope, icept, r = least_squares([1, 2, 3, 4], [3, 5, 7, 9])
    assert (slope, icept) == pytest.approx((2, 1)) and r == pytest.approx(1)
