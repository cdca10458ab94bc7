"""Proof-carrying compilation: run a compiler inside a traced VM and ship a checkable receipt."""

from .isa import GuestImage, compute_image_id, run
from .prover import prove
from .receipt import deserialize_receipt, serialize_receipt
from .verifier import FailureClass, VerifyReport, verify, verify_full

__all__ = [
    "GuestImage", "compute_image_id", "run", "prove", "deserialize_receipt",
    "serialize_receipt", "FailureClass", "VerifyReport", "verify", "verify_full",
]
