"""MiniLang lexer, AST and recursive-descent parser.

Grammar::

    program   := ( "var" names ";" | "const" NAME "=" ["-"] literal ";" | func )*
    func      := "func" NAME "(" [NAME ("," NAME)*] ")" block
    block     := "{" stmt* "}"
    stmt      := "var" NAME ["=" expr] ("," NAME ["=" expr])* ";"
               | NAME "=" expr ";"
               | "if" "(" expr ")" block ["else" (block | if-stmt)]
               | "while" "(" expr ")" block
               | "return" [expr] ";"
               | expr ";"
    expr      := C precedence over || && | ^ & (== !=) (< <= > >=) (<< >>) (+ -) (* / %),
                 unary - and !, calls, parentheses, decimal and 'c' literals

Comments run from ``//`` to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


class MiniLangError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


# ---------------------------------------------------------------------------
# AST


@dataclass
class Num:
    value: int
    line: int = 0


@dataclass
class Name:
    name: str
    line: int = 0


@dataclass
class Unary:
    op: str
    operand: "Expr"
    line: int = 0


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = 0


@dataclass
class Call:
    name: str
    args: list["Expr"]
    line: int = 0


Expr = Union[Num, Name, Unary, Binary, Call]


@dataclass
class VarDecl:
    name: str
    init: Optional[Expr]
    line: int = 0


@dataclass
class Assign:
    name: str
    value: Expr
    line: int = 0


@dataclass
class If:
    cond: Expr
    then: list["Stmt"]
    orelse: list["Stmt"]
    line: int = 0


@dataclass
class While:
    cond: Expr
    body: list["Stmt"]
    line: int = 0


@dataclass
class Return:
    value: Optional[Expr]
    line: int = 0


@dataclass
class ExprStmt:
    expr: Expr
    line: int = 0


Stmt = Union[VarDecl, Assign, If, While, Return, ExprStmt]


@dataclass
class Func:
    name: str
    params: list[str]
    body: list[Stmt]
    line: int = 0
    locals: list[str] = field(default_factory=list)


@dataclass
class Program:
    globals: list[tuple[str, int]] = field(default_factory=list)  # (name, line)
    consts: dict[str, int] = field(default_factory=dict)
    funcs: list[Func] = field(default_factory=list)


# ---------------------------------------------------------------------------
# lexer

KEYWORDS = {"func", "var", "const", "if", "else", "while", "return"}
_TWO = {"==", "!=", "<=", ">=", "<<", ">>", "&&", "||"}
_ONE = set("(){},;=<>+-*/%!&|^")
_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39}


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "num", "kw", "op", "eof"
    text: str
    value: int
    line: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, n = 0, 1, len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
        elif c.isascii() and (c.isalpha() or c == "_"):
            j = i
            while j < n and src[j].isascii() and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "name", word, 0, line))
            i = j
        elif c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            v = int(src[i:j])
            if v >= 1 << 32:
                raise MiniLangError(f"literal {src[i:j]} does not fit in 32 bits", line)
            toks.append(Token("num", src[i:j], v, line))
            i = j
        elif c == "'":
            if i + 2 < n and src[i + 1] == "\\" and src[i + 3:i + 4] == "'":
                esc = src[i + 2]
                if esc not in _ESCAPES:
                    raise MiniLangError(f"unknown escape \\{esc}", line)
                toks.append(Token("num", src[i:i + 4], _ESCAPES[esc], line))
                i += 4
            elif i + 2 < n and src[i + 2] == "'" and src[i + 1] not in "\\\n":
                toks.append(Token("num", src[i:i + 3], ord(src[i + 1]) & 0xFF, line))
                i += 3
            else:
                raise MiniLangError("malformed character literal", line)
        elif src[i:i + 2] in _TWO:
            toks.append(Token("op", src[i:i + 2], 0, line))
            i += 2
        elif c in _ONE:
            toks.append(Token("op", c, 0, line))
            i += 1
        else:
            raise MiniLangError(f"unexpected character {c!r}", line)
    toks.append(Token("eof", "", 0, line))
    return toks


# ---------------------------------------------------------------------------
# parser

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            self.fail("expected identifier")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        raise MiniLangError(f"{msg}, got {got}", t.line)

    # top level

    def program(self) -> Program:
        prog = Program()
        while self.tok.kind != "eof":
            if self.at("func"):
                prog.funcs.append(self.func())
            elif self.at("var"):
                self.advance()
                while True:
                    t = self.expect_name()
                    prog.globals.append((t.text, t.line))
                    if not self.at(","):
                        break
                    self.advance()
                self.expect(";")
            elif self.at("const"):
                self.advance()
                t = self.expect_name()
                self.expect("=")
                neg = False
                if self.at("-"):
                    self.advance()
                    neg = True
                if self.tok.kind != "num":
                    self.fail("expected literal")
                v = self.advance().value
                if t.text in prog.consts:
                    raise MiniLangError(f"duplicate const {t.text!r}", t.line)
                prog.consts[t.text] = (-v if neg else v) & 0xFFFFFFFF
                self.expect(";")
            else:
                self.fail("expected 'func', 'var' or 'const'")
        return prog

    def func(self) -> Func:
        line = self.expect("func").line
        name = self.expect_name().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                params.append(self.expect_name().text)
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        return Func(name, params, self.block(), line)

    def block(self) -> list[Stmt]:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("expected '}'")
            body.extend(self.stmt())
        self.advance()
        return body

    def stmt(self) -> list[Stmt]:
        t = self.tok
        if self.at("var"):
            self.advance()
            out = []
            while True:
                nt = self.expect_name()
                init = None
                if self.at("="):
                    self.advance()
                    init = self.expr()
                out.append(VarDecl(nt.text, init, nt.line))
                if not self.at(","):
                    break
                self.advance()
            self.expect(";")
            return out
        if self.at("if"):
            return [self.if_stmt()]
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return [While(cond, self.block(), t.line)]
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return [Return(value, t.line)]
        if t.kind == "name" and self.toks[self.i + 1].text == "=" and self.toks[self.i + 1].kind == "op":
            self.advance()
            self.advance()
            value = self.expr()
            self.expect(";")
            return [Assign(t.text, value, t.line)]
        e = self.expr()
        self.expect(";")
        return [ExprStmt(e, t.line)]

    def if_stmt(self) -> If:
        line = self.expect("if").line
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse: list[Stmt] = []
        if self.at("else"):
            self.advance()
            orelse = [self.if_stmt()] if self.at("if") else self.block()
        return If(cond, then, orelse, line)

    # expressions

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        ops = _BINARY_LEVELS[level]
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.advance()
            right = self.expr(level + 1)
            left = Binary(t.text, left, right, t.line)
        return left

    def unary(self) -> Expr:
        if self.at("-") or self.at("!"):
            t = self.advance()
            return Unary(t.text, self.unary(), t.line)
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(t.value, t.line)
        if t.kind == "name":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.expr())
                        if not self.at(","):
                            break
                        self.advance()
                self.expect(")")
                return Call(t.text, args, t.line)
            return Name(t.text, t.line)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("expected expression")


def parse(src: str) -> Program:
    return Parser(src).program()
