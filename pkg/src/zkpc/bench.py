"""Timing and size measurements over generated ExprLang programs."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Iterator

from .exprlang import exprcc_image, gen_program, reference_compile
from .isa import GuestImage, compute_image_id
from .prover import DEFAULT_SAMPLES, prove
from .receipt import Receipt, serialize_receipt
from .verifier import verify

CSV_HEADER = (
    "program_id,source_size_bytes,standard_compile_seconds,prove_seconds,"
    "verify_seconds,receipt_size_bytes,trace_len"
)


class BenchFailure(RuntimeError):
    def __init__(self, seed: int, why: str):
        super().__init__(f"seed {seed}: {why}")
        self.seed = seed


@dataclass(frozen=True)
class BenchRecord:
    program_id: str
    source_size_bytes: int
    standard_compile_seconds: float
    prove_seconds: float
    verify_seconds: float
    receipt_size_bytes: int
    trace_len: int


@dataclass
class BenchConfig:
    count: int = 10
    seed_base: int = 0
    size: int = 20
    samples: int = DEFAULT_SAMPLES
    # if set, program i gets size sizes[i % len(sizes)] instead of ``size``
    sizes: tuple[int, ...] = ()


def sweep_sizes(n: int = 30, lo: int = 5, step: int = 5) -> tuple[int, ...]:
    return tuple(lo + step * i for i in range(n))


def bench_one(seed: int, size: int, image: GuestImage, image_id: bytes, samples: int) -> BenchRecord:
    return measure(seed, size, image, image_id, samples)[0]


def measure(seed: int, size: int, image: GuestImage, image_id: bytes, samples: int) -> tuple[BenchRecord, Receipt]:
    """Time one program through reference compile, prove and verify; also hand back the receipt."""
    src = gen_program(seed, size)
    t0 = time.perf_counter()
    ref = reference_compile(src)
    t1 = time.perf_counter()
    try:
        receipt = prove(image, src, samples)
    except Exception as e:  # noqa: BLE001 - any pipeline failure names the seed
        raise BenchFailure(seed, f"prove failed: {e}") from e
    t2 = time.perf_counter()
    report = verify(receipt, image_id, src, image)
    t3 = time.perf_counter()
    if not report.accepted:
        raise BenchFailure(seed, report.line())
    if receipt.claim.output_bytes != ref:
        raise BenchFailure(seed, "guest output differs from the reference compiler")
    record = BenchRecord(
        program_id=f"seed{seed}-size{size}",
        source_size_bytes=len(src),
        standard_compile_seconds=t1 - t0,
        prove_seconds=t2 - t1,
        verify_seconds=t3 - t2,
        receipt_size_bytes=len(serialize_receipt(receipt)),
        trace_len=receipt.claim.trace_len,
    )
    return record, receipt


def run_bench(cfg: BenchConfig, image: GuestImage | None = None) -> Iterator[BenchRecord]:
    image = image or exprcc_image()
    image_id = compute_image_id(image)
    for i in range(cfg.count):
        size = cfg.sizes[i % len(cfg.sizes)] if cfg.sizes else cfg.size
        yield bench_one(cfg.seed_base + i, size, image, image_id, cfg.samples)


def _fmt(v: object) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def write_csv(records: Iterable[BenchRecord], out: io.TextIOBase) -> None:
    out.write(CSV_HEADER + "\n")
    for r in records:
        out.write(",".join(_fmt(v) for v in astuple(r)) + "\n")
        out.flush()


def read_csv(text: str) -> list[BenchRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    types = {f.name: f.type for f in fields(BenchRecord)}
    conv = {"str": str, "int": int, "float": float}
    return [BenchRecord(**{k: conv[types[k]](v) for k, v in row.items()}) for row in rows]


def least_squares(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    """(slope, intercept, Pearson r)."""
    fit = statistics.linear_regression(xs, ys)
    return fit.slope, fit.intercept, statistics.correlation(xs, ys)
