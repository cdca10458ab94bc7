"""Receipt data model and the ZKPC wire format.

Layout (little-endian)::

    "ZKPC" version:u16 image_id:32 input_digest:32 exit_code:u32
    trace_len:u64 trace_root:32 k:u32 output_len:u64 output
    openings: k sampled, then one per boundary step (0 and trace_len-2)

    opening := step_index:u64
               row_i:105 path_len:u16 digests
               row_i1:105 path_len:u16 digests
               mem_flag:u8 [address:u32 old_value:u32 16 x digest]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .commit import MEMORY_DEPTH, Digest, MemWitness, MerklePath

RECEIPT_MAGIC = b"ZKPC"
RECEIPT_VERSION = 1
ROW_SIZE = 105
MAX_PATH_LEN = 64

_ROW = struct.Struct("<9I32s32sBI")
assert _ROW.size == ROW_SIZE
# offset of output_len; the output bytes follow it
OUTPUT_LEN_OFFSET = 4 + 2 + 32 + 32 + 4 + 8 + 32 + 4


class MalformedReceipt(ValueError):
    """Bytes that do not parse as a well-formed receipt."""


@dataclass(frozen=True)
class TraceRow:
    pc: int
    regs: tuple[int, ...]
    mem_root: Digest
    out_acc: Digest
    halted: int
    exit_code: int

    def pack(self) -> bytes:
        return _ROW.pack(self.pc, *self.regs, self.mem_root, self.out_acc, self.halted, self.exit_code)

    @classmethod
    def unpack(cls, data: bytes) -> "TraceRow":
        if len(data) != ROW_SIZE:
            raise MalformedReceipt(f"trace row must be {ROW_SIZE} bytes, got {len(data)}")
        f = _ROW.unpack(data)
        return cls(f[0], tuple(f[1:9]), f[9], f[10], f[11], f[12])


@dataclass(frozen=True)
class ReceiptClaim:
    image_id: Digest
    input_digest: Digest
    output_bytes: bytes
    exit_code: int
    trace_len: int
    trace_root: Digest


@dataclass(frozen=True)
class StepOpening:
    step_index: int
    row_i: TraceRow
    path_i: MerklePath
    row_i1: TraceRow
    path_i1: MerklePath
    mem_kind: int = 0  # 0 none, 1 load, 2 store
    mem_witness: MemWitness | None = None


@dataclass(frozen=True)
class Receipt:
    claim: ReceiptClaim
    sample_count: int
    openings: tuple[StepOpening, ...] = field(default_factory=tuple)

    @property
    def sampled(self) -> tuple[StepOpening, ...]:
        return self.openings[: self.sample_count]

    @property
    def boundary(self) -> tuple[StepOpening, ...]:
        return self.openings[self.sample_count:]


def boundary_steps(trace_len: int) -> list[int]:
    """Steps opened on every receipt: the first and the last."""
    last = trace_len - 2
    return [0] if last == 0 else [0, last]


# ---------------------------------------------------------------------------
# serialization


def _path_bytes(path: MerklePath) -> bytes:
    return struct.pack("<H", len(path.siblings)) + b"".join(path.siblings)


def serialize_receipt(r: Receipt) -> bytes:
    c = r.claim
    out = [
        RECEIPT_MAGIC,
        struct.pack("<H", RECEIPT_VERSION),
        c.image_id,
        c.input_digest,
        struct.pack("<IQ", c.exit_code, c.trace_len),
        c.trace_root,
        struct.pack("<IQ", r.sample_count, len(c.output_bytes)),
        c.output_bytes,
    ]
    for o in r.openings:
        out.append(struct.pack("<Q", o.step_index))
        out.append(o.row_i.pack())
        out.append(_path_bytes(o.path_i))
        out.append(o.row_i1.pack())
        out.append(_path_bytes(o.path_i1))
        out.append(bytes((o.mem_kind,)))
        if o.mem_kind:
            w = o.mem_witness
            out.append(struct.pack("<II", w.address, w.old_value))
            out.append(b"".join(w.siblings))
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0
        self.section = "header"

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise MalformedReceipt(
                f"truncated receipt in {self.section} at offset {self.pos} (wanted {n} bytes)"
            )
        b = bytes(self.data[self.pos:self.pos + n])
        self.pos += n
        return b

    def unpack(self, fmt: str):
        s = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(s))

    def path(self, index: int) -> MerklePath:
        (n,) = self.unpack("<H")
        if n > MAX_PATH_LEN:
            raise MalformedReceipt(f"path length {n} exceeds {MAX_PATH_LEN}")
        raw = self.take(32 * n)
        return MerklePath(tuple(raw[i:i + 32] for i in range(0, len(raw), 32)), index)


def deserialize_receipt(data: bytes) -> Receipt:
    rd = _Reader(data)
    if rd.take(4) != RECEIPT_MAGIC:
        raise MalformedReceipt("bad magic")
    (version,) = rd.unpack("<H")
    if version != RECEIPT_VERSION:
        raise MalformedReceipt(f"unsupported receipt version {version}")
    image_id = rd.take(32)
    input_digest = rd.take(32)
    exit_code, trace_len = rd.unpack("<IQ")
    trace_root = rd.take(32)
    k, out_len = rd.unpack("<IQ")
    if trace_len < 2:
        raise MalformedReceipt("trace_len below 2")
    if k < 1:
        raise MalformedReceipt("sample count must be positive")
    if out_len > len(data):
        raise MalformedReceipt("truncated receipt in output: length exceeds receipt size")
    rd.section = "output"
    output = rd.take(out_len)
    claim = ReceiptClaim(image_id, input_digest, output, exit_code, trace_len, trace_root)
    n_open = k + len(boundary_steps(trace_len))
    # each opening is at least 8 + 2 * (105 + 2) + 1 bytes
    if n_open * 223 > len(data) - rd.pos:
        raise MalformedReceipt("truncated receipt in openings: too short for the opening count")
    openings = []
    for j in range(n_open):
        rd.section = f"opening {j}"
        (idx,) = rd.unpack("<Q")
        row_i = TraceRow.unpack(rd.take(ROW_SIZE))
        path_i = rd.path(idx)
        row_i1 = TraceRow.unpack(rd.take(ROW_SIZE))
        path_i1 = rd.path(idx + 1)
        (kind,) = rd.unpack("<B")
        wit = None
        if kind not in (0, 1, 2):
            raise MalformedReceipt(f"bad memory flag {kind}")
        if kind:
            addr, old = rd.unpack("<II")
            raw = rd.take(32 * MEMORY_DEPTH)
            wit = MemWitness(addr, old, tuple(raw[i:i + 32] for i in range(0, len(raw), 32)))
        openings.append(StepOpening(idx, row_i, path_i, row_i1, path_i1, kind, wit))
    if rd.pos != len(data):
        raise MalformedReceipt(f"{len(data) - rd.pos} trailing bytes")
    return Receipt(claim, k, tuple(openings))
