"""Adversarial harness: four tampering scenarios against honest receipts.

Every scenario starts from an honest :class:`Baseline`, changes exactly one
serialized artifact (image file, source file or receipt file) and runs the
verifier on the result. Controls apply the identity change and must accept.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

from .exprlang.gen import SplitMix64
from .isa import GuestImage, compute_image_id
from .prover import DEFAULT_SAMPLES, prove
from .receipt import OUTPUT_LEN_OFFSET, deserialize_receipt, serialize_receipt, MalformedReceipt
from .verifier import FailureClass, VerifyReport, verify, verify_full

COMPILER = "CompilerSubstitution"
SOURCE = "SourceTampering"
OUTPUT = "OutputManipulation"
REPLAY = "Replay"
KINDS = (COMPILER, SOURCE, OUTPUT, REPLAY)

# class each non-control scenario must report
EXPECTED_CLASS = {
    COMPILER: FailureClass.IMAGE_BINDING_FAILURE,
    SOURCE: FailureClass.SOURCE_DIGEST_MISMATCH,
    # the output is hashed into the sample seed, so the transcript check
    # (which runs before the boundary checks) is what trips
    OUTPUT: FailureClass.TRANSCRIPT_MISMATCH,
    REPLAY: FailureClass.SOURCE_DIGEST_MISMATCH,
}


@dataclass(frozen=True)
class AttackScenario:
    kind: str
    mutation: str
    control: bool = False


@dataclass(frozen=True)
class Baseline:
    """What an honest prover hands out, in serialized form."""

    image_bytes: bytes
    source: bytes
    receipt_bytes: bytes

    @property
    def image(self) -> GuestImage:
        return GuestImage.from_bytes(self.image_bytes)

    @property
    def image_id(self) -> bytes:
        return compute_image_id(self.image)


def make_baseline(image: GuestImage, source: bytes, k: int = DEFAULT_SAMPLES) -> Baseline:
    return Baseline(image.to_bytes(), bytes(source), serialize_receipt(prove(image, source, k)))


@dataclass
class AttackOutcome:
    scenario: AttackScenario
    report: VerifyReport
    full_report: VerifyReport | None = None
    expected_class: FailureClass | None = field(default=None)

    @property
    def expected(self) -> str:
        return "ACCEPT" if self.scenario.control else "REJECT"

    @property
    def got(self) -> str:
        return "ACCEPT" if self.report.accepted else "REJECT"

    @property
    def passed(self) -> bool:
        """Outcome and (for attacks) failure class are as documented, in both modes."""
        if self.scenario.control:
            ok = self.report.accepted
            return ok and (self.full_report is None or self.full_report.accepted)
        ok = not self.report.accepted and self.report.failure_class == self.expected_class
        return ok and (self.full_report is None or not self.full_report.accepted)

    def line(self) -> str:
        s = (f"scenario={self.scenario.kind} expected={self.expected} got={self.got} "
             f"class={self.report.failure_class.value} mutation={self.scenario.mutation!r}")
        if self.full_report is not None:
            s += f" full={'ACCEPT' if self.full_report.accepted else 'REJECT'}"
        return s


def _check(
    scenario: AttackScenario,
    receipt_bytes: bytes,
    image_bytes: bytes,
    source: bytes,
    expected_id: bytes,
    full: bool,
) -> AttackOutcome:
    try:
        receipt = deserialize_receipt(receipt_bytes)
    except MalformedReceipt as e:
        rep = VerifyReport.reject(FailureClass.MALFORMED_RECEIPT, str(e))
        return AttackOutcome(scenario, rep, rep if full else None, EXPECTED_CLASS[scenario.kind])
    image = GuestImage.from_bytes(image_bytes)
    rep = verify(receipt, expected_id, source, image)
    full_rep = verify_full(receipt, expected_id, source, image) if full else None
    return AttackOutcome(scenario, rep, full_rep, EXPECTED_CLASS[scenario.kind])


# ---------------------------------------------------------------------------
# scenario builders


def attack_compiler(base: Baseline, word_index: int = 0, xor_mask: int = 1, full: bool = False) -> AttackOutcome:
    """Swap in a compiler image with one code word changed and verify the old receipt against it."""
    image = base.image
    word_index %= len(image.code)
    xor_mask &= 0xFFFFFFFF
    mutated = image.with_word(word_index, image.code[word_index] ^ xor_mask).to_bytes()
    desc = f"code[{word_index}] ^= {xor_mask:#x}"
    scenario = AttackScenario(COMPILER, desc, control=xor_mask == 0)
    new_id = compute_image_id(GuestImage.from_bytes(mutated))
    return _check(scenario, base.receipt_bytes, mutated, base.source, new_id, full)


def compiler_mutations(image_words: int, count: int, seed: int = 0) -> list[tuple[int, int]]:
    """``count`` distinct (word index, nonzero xor mask) pairs, the first flipping bit 0 of word 0."""
    rng = SplitMix64(seed)
    out = [(0, 1)]
    seen = {0}
    while len(out) < count:
        i = rng.below(image_words)
        if i in seen:
            continue
        seen.add(i)
        out.append((i, 1 << rng.below(32)))
    return out[:count]


_IDENT = re.compile(rb"\blet\s+([a-z][a-z0-9_]*)")


def rename_first_variable(source: bytes) -> bytes:
    """Rename the first ``let``-bound variable everywhere it appears."""
    m = _IDENT.search(source)
    if m is None:
        raise ValueError("source defines no variable")
    old = m.group(1)
    new = old + b"_"
    if len(new) > 16:
        new = old[:-1] + (b"a" if old[-1:] != b"a" else b"b")
    return re.sub(rb"(?<![a-z0-9_])" + re.escape(old) + rb"(?![a-z0-9_])", new, source)


def attack_source(base: Baseline, tampered: bytes, mutation: str = "", full: bool = False) -> AttackOutcome:
    """Present ``tampered`` instead of the source the receipt was made for."""
    scenario = AttackScenario(SOURCE, mutation or "custom", control=tampered == base.source)
    return _check(scenario, base.receipt_bytes, base.image_bytes, tampered, base.image_id, full)


def replace_output(receipt_bytes: bytes, output: bytes) -> bytes:
    """Rewrite the output section of a serialized receipt, keeping everything else."""
    (n,) = struct.unpack_from("<Q", receipt_bytes, OUTPUT_LEN_OFFSET)
    start = OUTPUT_LEN_OFFSET + 8
    return (receipt_bytes[:OUTPUT_LEN_OFFSET] + struct.pack("<Q", len(output)) + output
            + receipt_bytes[start + n:])


def receipt_output(receipt_bytes: bytes) -> bytes:
    (n,) = struct.unpack_from("<Q", receipt_bytes, OUTPUT_LEN_OFFSET)
    start = OUTPUT_LEN_OFFSET + 8
    return receipt_bytes[start:start + n]


def attack_output(base: Baseline, output: bytes, mutation: str = "", full: bool = False) -> AttackOutcome:
    """Edit the compiled output inside the receipt file."""
    tampered = replace_output(base.receipt_bytes, output)
    scenario = AttackScenario(OUTPUT, mutation or "custom", control=tampered == base.receipt_bytes)
    return _check(scenario, tampered, base.image_bytes, base.source, base.image_id, full)


def flip_output_byte(output: bytes, rng: SplitMix64) -> tuple[bytes, str]:
    i = rng.below(len(output))
    b = output[i] ^ (1 + rng.below(255))
    return output[:i] + bytes((b,)) + output[i + 1:], f"output[{i}] {output[i]:#04x}->{b:#04x}"


def attack_replay(a: Baseline, b: Baseline, full: bool = False) -> AttackOutcome:
    """Present A's receipt together with B's source."""
    same = a.source == b.source
    scenario = AttackScenario(REPLAY, "receipt A, source A" if same else "receipt A, source B", control=same)
    return _check(scenario, a.receipt_bytes, a.image_bytes, b.source, a.image_id, full)


def attack_replay_output(a: Baseline, b: Baseline, full: bool = False) -> AttackOutcome:
    """Keep A's receipt and source but splice in B's compiled output."""
    out_b = receipt_output(b.receipt_bytes)
    tampered = replace_output(a.receipt_bytes, out_b)
    scenario = AttackScenario(REPLAY, "receipt A with output B", control=tampered == a.receipt_bytes)
    out = _check(scenario, tampered, a.image_bytes, a.source, a.image_id, full)
    out.expected_class = FailureClass.TRANSCRIPT_MISMATCH
    return out


# ---------------------------------------------------------------------------
# suites


@dataclass
class SuiteConfig:
    corpus_seeds: tuple[int, ...] = tuple(range(20))
    program_size: int = 20
    compiler_mutations: int = 20
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    full: bool = False  # also run verify_full on every case


def run_suite(baselines: list[Baseline], cfg: SuiteConfig, kinds: tuple[str, ...] = KINDS) -> list[AttackOutcome]:
    """All scenarios over a corpus of baselines, controls included."""
    rng = SplitMix64(cfg.seed)
    out: list[AttackOutcome] = []
    b0 = baselines[0]
    if COMPILER in kinds:
        out.append(attack_compiler(b0, 0, 0, cfg.full))
        for i, mask in compiler_mutations(len(b0.image.code), cfg.compiler_mutations, cfg.seed):
            out.append(attack_compiler(b0, i, mask, cfg.full))
    if SOURCE in kinds:
        out.append(attack_source(b0, b0.source, "unmodified", cfg.full))
        for b in baselines:
            out.append(attack_source(b, rename_first_variable(b.source), "rename first variable", cfg.full))
            out.append(attack_source(b, b.source + b" ", "append one space", cfg.full))
    if OUTPUT in kinds:
        rewritten = serialize_receipt(deserialize_receipt(b0.receipt_bytes))
        out.append(attack_output(b0, receipt_output(rewritten), "byte-identical rewrite", cfg.full))
        for b in baselines:
            o = receipt_output(b.receipt_bytes)
            out.append(attack_output(b, *flip_output_byte(o, rng), full=cfg.full))
            out.append(attack_output(b, o + b"\n", "append one byte", cfg.full))
    if REPLAY in kinds:
        out.append(attack_replay(b0, b0, cfg.full))
        for a in baselines:
            for b in baselines:
                if a is b:
                    continue
                out.append(attack_replay(a, b, cfg.full))
        for a, b in zip(baselines, baselines[1:] + baselines[:1]):
            out.append(attack_replay_output(a, b, cfg.full))
    return out
