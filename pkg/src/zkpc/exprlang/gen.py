"""Seeded random ExprLang program generator (SplitMix64)."""

from __future__ import annotations

from .refcc import KEYWORDS, MAX_LITERAL

MAX_DEPTH = 6
MAX_FINAL_PRINTS = 5
_M64 = (1 << 64) - 1
_FIRST = "abcdefghijklmnopqrstuvwxyz"
_REST = _FIRST + "0123456789_"


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _M64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _M64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


class _Gen:
    def __init__(self, seed: int):
        self.rng = SplitMix64(seed)
        self.vars: list[str] = []

    def fresh_name(self) -> str:
        r = self.rng
        while True:
            name = _FIRST[r.below(26)] + "".join(_REST[r.below(37)] for _ in range(r.below(8)))
            if name.encode() not in KEYWORDS and name not in self.vars:
                return name

    def leaf(self) -> str:
        r = self.rng
        if self.vars and r.below(2):
            return self.vars[r.below(len(self.vars))]
        if r.below(5) == 0:
            return str(r.below(MAX_LITERAL + 1))
        return str(r.below(100))

    def expr(self, depth: int = 1) -> str:
        r = self.rng
        if depth >= MAX_DEPTH or (depth > 1 and r.below(3) == 0):
            return self.leaf()
        c = r.below(10)
        if c < 7:
            op = "+-*/"[r.below(4) if r.below(4) else r.below(3)]
            return f"{self.expr(depth + 1)} {op} {self.expr(depth + 1)}"
        if c < 8:
            return "-" + self.expr(depth + 1)
        return "(" + self.expr(depth + 1) + ")"

    def program(self, size: int) -> str:
        r = self.rng
        stmts = []
        for _ in range(size):
            c = r.below(10)
            if not self.vars or c < 3:
                e = self.expr()
                name = self.fresh_name()
                self.vars.append(name)
                stmts.append(f"let {name} = {e};")
            elif c < 5:
                stmts.append(f"print {self.expr()};")
            elif c < 6:
                name = self.vars[r.below(len(self.vars))]
                stmts.append(f"let {name} = {self.expr()};")
            else:
                name = self.vars[r.below(len(self.vars))]
                stmts.append(f"{name} = {self.expr()};")
        for name in self.vars[-MAX_FINAL_PRINTS:]:
            stmts.append(f"print {name};")
        parts = []
        for s in stmts:
            parts.append(s)
            parts.append("\n" if r.below(4) else " ")
        return "".join(parts)


def gen_program(seed: int, size: int = 20) -> bytes:
    """ExprLang source with ``size`` random statements plus closing prints."""
    if size < 1:
        raise ValueError("size must be at least 1")
    return _Gen(seed).program(size).encode("ascii")
