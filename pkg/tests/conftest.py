import pytest

from zkpc.exprlang import exprcc_image, gen_program
from zkpc.isa import compute_image_id
from zkpc.prover import prove


@pytest.fixture(scope="session")
def exprcc():
    return exprcc_image()


@pytest.fixture(scope="session")
def exprcc_id(exprcc):
    return compute_image_id(exprcc)


@pytest.fixture(scope="session")
def small_receipt(exprcc):
    """Honest receipt for a short program (cheap to build, reused widely)."""
    src = b"let x = 6;\nprint x * 7;\n"
    return src, prove(exprcc, src)


@pytest.fixture(scope="session")
def corpus_receipt(exprcc):
    src = gen_program(0, 20)
    return src, prove(exprcc, src)


# acceptance criteria append (number, passed, detail) here; printed after the run
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
