"""Host reference compiler for ExprLang.

This is the byte-exact oracle for the guest compiler (``exprcc.mini``), so
the error behaviour is part of the contract: tokens are read one at a time as
the parser demands them, and the first lexical, syntactic or semantic problem
produces exactly ``error: line L\\n`` and nothing else.

Lexical rules: whitespace is space, tab, CR, LF; identifiers are
``[a-z][a-z0-9_]*`` of at most 16 characters; ``let`` and ``print`` are
reserved; literals are decimal below 2^31; punctuation is ``+ - * / ( ) = ;``.
Nesting of ``(`` and unary ``-`` is capped at 64 and the program may define
at most 256 distinct variables.
"""

from __future__ import annotations

MAX_IDENT = 16
MAX_NEST = 64
MAX_VARS = 256
MAX_LITERAL = (1 << 31) - 1

KEYWORDS = (b"let", b"print")
_PUNCT = frozenset(b"+-*/()=;")
_WS = frozenset(b" \t\r\n")


class ExprCompileError(Exception):
    def __init__(self, line: int):
        super().__init__(f"line {line}")
        self.line = line


class _Lexer:
    def __init__(self, src: bytes):
        self.src = src
        self.pos = 0
        self.line = 1

    def next(self) -> tuple[str, object, int]:
        src, n = self.src, len(self.src)
        while self.pos < n and src[self.pos] in _WS:
            if src[self.pos] == 0x0A:
                self.line += 1
            self.pos += 1
        line = self.line
        if self.pos >= n:
            return "eof", None, line
        c = src[self.pos]
        if 0x61 <= c <= 0x7A:
            j = self.pos
            while j < n and (0x61 <= src[j] <= 0x7A or 0x30 <= src[j] <= 0x39 or src[j] == 0x5F):
                j += 1
            word = src[self.pos:j]
            self.pos = j
            if len(word) > MAX_IDENT:
                raise ExprCompileError(line)
            if word in KEYWORDS:
                return word.decode(), None, line
            return "ident", word, line
        if 0x30 <= c <= 0x39:
            j = self.pos
            while j < n and 0x30 <= src[j] <= 0x39:
                j += 1
            value = int(src[self.pos:j])
            self.pos = j
            if value > MAX_LITERAL:
                raise ExprCompileError(line)
            return "num", value, line
        if c in _PUNCT:
            self.pos += 1
            return chr(c), None, line
        raise ExprCompileError(line)


class _Compiler:
    def __init__(self, src: bytes):
        self.lex = _Lexer(src)
        self.slots: dict[bytes, int] = {}
        self.out: list[str] = []
        self.depth = 0
        self.advance()

    def advance(self) -> None:
        self.kind, self.val, self.line = self.lex.next()

    def expect(self, kind: str) -> None:
        if self.kind != kind:
            raise ExprCompileError(self.line)

    def slot(self, name: bytes, line: int) -> int:
        if name not in self.slots:
            raise ExprCompileError(line)
        return self.slots[name]

    def program(self) -> str:
        while self.kind != "eof":
            self.statement()
        self.out.append("HALT")
        return "\n".join(self.out) + "\n"

    def statement(self) -> None:
        if self.kind == "let":
            self.advance()
            self.expect("ident")
            name, line = self.val, self.line
            self.advance()
            self.expect("=")
            self.advance()
            self.expr()
            self.expect(";")
            if name not in self.slots:
                if len(self.slots) >= MAX_VARS:
                    raise ExprCompileError(line)
                self.slots[name] = len(self.slots)
            self.out.append(f"STORE {self.slots[name]}")
            self.advance()
        elif self.kind == "print":
            self.advance()
            self.expr()
            self.expect(";")
            self.out.append("PRINT")
            self.advance()
        elif self.kind == "ident":
            k = self.slot(self.val, self.line)
            self.advance()
            self.expect("=")
            self.advance()
            self.expr()
            self.expect(";")
            self.out.append(f"STORE {k}")
            self.advance()
        else:
            raise ExprCompileError(self.line)

    def expr(self) -> None:
        self.term()
        while self.kind in ("+", "-"):
            op = "ADD" if self.kind == "+" else "SUB"
            self.advance()
            self.term()
            self.out.append(op)

    def term(self) -> None:
        self.unary()
        while self.kind in ("*", "/"):
            op = "MUL" if self.kind == "*" else "DIV"
            self.advance()
            self.unary()
            self.out.append(op)

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_NEST:
            raise ExprCompileError(self.line)

    def unary(self) -> None:
        if self.kind == "-":
            self.enter()
            self.advance()
            self.unary()
            self.out.append("NEG")
            self.depth -= 1
        else:
            self.primary()

    def primary(self) -> None:
        if self.kind == "num":
            self.out.append(f"PUSH {self.val}")
            self.advance()
        elif self.kind == "ident":
            self.out.append(f"LOAD {self.slot(self.val, self.line)}")
            self.advance()
        elif self.kind == "(":
            self.enter()
            self.advance()
            self.expr()
            self.expect(")")
            self.advance()
            self.depth -= 1
        else:
            raise ExprCompileError(self.line)


def reference_compile(source: bytes) -> bytes:
    """Compile ExprLang source to StackAsm text, or ``error: line L`` on failure."""
    try:
        return _Compiler(bytes(source)).program().encode("ascii")
    except ExprCompileError as e:
        return f"error: line {e.line}\n".encode("ascii")


def is_error_output(asm: bytes) -> bool:
    return asm.startswith(b"error: line ")
