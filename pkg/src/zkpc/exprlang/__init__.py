"""ExprLang: the language compiled under proof, its oracles and its corpus generator."""

from .gen import SplitMix64, gen_program
from .guest import exprcc_image, exprcc_image_id, exprcc_source
from .refcc import is_error_output, reference_compile
from .stackvm import StackVMTrap, stackvm_run

__all__ = [
    "SplitMix64", "gen_program", "exprcc_image", "exprcc_image_id", "exprcc_source",
    "is_error_output", "reference_compile", "StackVMTrap", "stackvm_run",
]
