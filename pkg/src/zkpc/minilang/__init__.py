"""MiniLang: the host toolchain that builds guest images from readable source."""

from .asm import AsmError, AsmInstr, AsmUnit, Label, assemble, assemble_text, parse_asm
from .codegen import compile_minilang, compile_to_asm
from .interp import InterpResult, MiniLangRuntimeError, interpret_minilang
from .syntax import MiniLangError, parse

__all__ = [
    "AsmError", "AsmInstr", "AsmUnit", "Label", "assemble", "assemble_text", "parse_asm",
    "compile_minilang", "compile_to_asm", "InterpResult", "MiniLangRuntimeError",
    "interpret_minilang", "MiniLangError", "parse",
]
