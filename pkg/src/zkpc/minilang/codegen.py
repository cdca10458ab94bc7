"""Name resolution and code generation from MiniLang to the guest ISA.

Calling convention:
  r7 stack pointer (grows down from 0xFFFF), r6 frame pointer,
  r5 return address (JAL), r1 return value, r1-r4 expression temporaries,
  r5 doubles as spill scratch inside a function body (it is saved in the frame).
  Arguments are pushed right to left. Frame: fp+0 saved fp, fp+1 return
  address, fp+2+i argument i, fp-1-j local j.

``main`` is the entry point: its prologue sets up the stack and its return
halts the machine with the returned value as exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..isa import GuestImage, Op
from .asm import AsmInstr, AsmUnit, assemble
from .syntax import (
    Assign,
    Binary,
    Call,
    Expr,
    ExprStmt,
    Func,
    If,
    MiniLangError,
    Name,
    Num,
    Program,
    Return,
    Stmt,
    Unary,
    VarDecl,
    While,
    parse,
)

GLOBAL_BASE = 1
MAX_GLOBALS = 0xFF
INPUT_BASE = 0x100
BUILTINS = {"mload": 1, "mstore": 2, "write": 1, "halt": 1, "input_len": 0, "input_byte": 1}

SP, FP, RA = 7, 6, 5
SCRATCH = 5
MAX_TEMP = 4

_ALU = {
    "+": Op.ADD, "-": Op.SUB, "*": Op.MUL, "/": Op.DIVU, "%": Op.REMU,
    "&": Op.AND, "|": Op.OR, "^": Op.XOR, "<<": Op.SLL, ">>": Op.SRA,
}
_COMPARE = {"==", "!=", "<", "<=", ">", ">="}


def _small(e: Expr) -> int | None:
    """Value of ``e`` if it is a literal that fits a signed 16-bit immediate."""
    if isinstance(e, Num):
        v = _signed(e.value)
        if -0x8000 <= v <= 0x7FFF:
            return v
    return None


@dataclass
class _Sym:
    kind: str  # "frame", "global", "const"
    value: int  # fp offset, absolute address, or constant


def _collect_locals(body: list[Stmt], out: list[VarDecl]) -> None:
    for s in body:
        if isinstance(s, VarDecl):
            out.append(s)
        elif isinstance(s, If):
            _collect_locals(s.then, out)
            _collect_locals(s.orelse, out)
        elif isinstance(s, While):
            _collect_locals(s.body, out)


class _Resolver:
    """Checks the whole program and fixes global addresses and frame layouts."""

    def __init__(self, prog: Program):
        self.prog = prog
        self.globals: dict[str, _Sym] = {}
        self.funcs: dict[str, Func] = {}
        taken: set[str] = set(BUILTINS)
        if len(prog.globals) > MAX_GLOBALS:
            raise MiniLangError(f"more than {MAX_GLOBALS} globals", prog.globals[MAX_GLOBALS][1])
        for i, (name, line) in enumerate(prog.globals):
            if name in taken:
                raise MiniLangError(f"duplicate name {name!r}", line)
            taken.add(name)
            self.globals[name] = _Sym("global", GLOBAL_BASE + i)
        for name, v in prog.consts.items():
            if name in taken:
                raise MiniLangError(f"duplicate name {name!r}", 0)
            taken.add(name)
            self.globals[name] = _Sym("const", v)
        for f in prog.funcs:
            if f.name in taken:
                raise MiniLangError(f"duplicate name {f.name!r}", f.line)
            taken.add(f.name)
            self.funcs[f.name] = f
        main = self.funcs.get("main")
        if main is None:
            raise MiniLangError("no 'main' function", 1)
        if main.params:
            raise MiniLangError("'main' takes no parameters", main.line)

    def frame(self, f: Func) -> dict[str, _Sym]:
        scope: dict[str, _Sym] = {}
        for i, p in enumerate(f.params):
            if p in scope:
                raise MiniLangError(f"duplicate parameter {p!r}", f.line)
            scope[p] = _Sym("frame", 2 + i)
        decls: list[VarDecl] = []
        _collect_locals(f.body, decls)
        f.locals = []
        for d in decls:
            if d.name in scope:
                raise MiniLangError(f"duplicate local {d.name!r}", d.line)
            f.locals.append(d.name)
            scope[d.name] = _Sym("frame", -1 - (len(f.locals) - 1))
        self._check_body(f, f.body, scope, set(f.params))
        return scope

    def _check_body(self, f: Func, body: list[Stmt], scope, declared: set[str]) -> None:
        for s in body:
            if isinstance(s, VarDecl):
                if s.init is not None:
                    self._check_expr(s.init, scope, declared)
                declared.add(s.name)
            elif isinstance(s, Assign):
                sym = self._lookup(s.name, s.line, scope, declared)
                if sym.kind == "const":
                    raise MiniLangError(f"cannot assign to const {s.name!r}", s.line)
                self._check_expr(s.value, scope, declared)
            elif isinstance(s, If):
                self._check_expr(s.cond, scope, declared)
                self._check_body(f, s.then, scope, declared)
                self._check_body(f, s.orelse, scope, declared)
            elif isinstance(s, While):
                self._check_expr(s.cond, scope, declared)
                self._check_body(f, s.body, scope, declared)
            elif isinstance(s, Return):
                if s.value is not None:
                    self._check_expr(s.value, scope, declared)
            else:
                self._check_expr(s.expr, scope, declared)

    def _lookup(self, name: str, line: int, scope, declared) -> _Sym:
        if name in scope:
            if name not in declared:
                raise MiniLangError(f"{name!r} used before its declaration", line)
            return scope[name]
        if name in self.globals:
            return self.globals[name]
        raise MiniLangError(f"undefined name {name!r}", line)

    def _check_expr(self, e: Expr, scope, declared) -> None:
        if isinstance(e, Num):
            return
        if isinstance(e, Name):
            self._lookup(e.name, e.line, scope, declared)
        elif isinstance(e, Unary):
            self._check_expr(e.operand, scope, declared)
        elif isinstance(e, Binary):
            self._check_expr(e.left, scope, declared)
            self._check_expr(e.right, scope, declared)
        else:
            if e.name in BUILTINS:
                arity = BUILTINS[e.name]
            elif e.name in self.funcs:
                if e.name == "main":
                    raise MiniLangError("'main' cannot be called", e.line)
                arity = len(self.funcs[e.name].params)
            else:
                raise MiniLangError(f"call to undefined function {e.name!r}", e.line)
            if len(e.args) != arity:
                raise MiniLangError(f"{e.name} takes {arity} arguments, got {len(e.args)}", e.line)
            for a in e.args:
                self._check_expr(a, scope, declared)


def _signed(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v >> 31 else v


class _Gen:
    def __init__(self, resolver: _Resolver):
        self.r = resolver
        self.unit = AsmUnit(entry="main")
        self.n_labels = 0

    def new_label(self, hint: str) -> str:
        self.n_labels += 1
        return f".L{self.n_labels}_{hint}"

    def emit(self, op, rd=0, rs1=0, rs2=0, imm=0):
        self.unit.emit(op, rd, rs1, rs2, imm)

    def load_const(self, rd: int, v: int) -> None:
        s = _signed(v)
        if -0x8000 <= s <= 0x7FFF:
            self.emit(Op.ADDI, rd, 0, imm=s)
            return
        v &= 0xFFFFFFFF
        hi = ((v + 0x8000) >> 16) & 0xFFFF
        lo = _signed((v - (hi << 16)) & 0xFFFFFFFF)
        self.emit(Op.LUI, rd, imm=hi - 0x10000 if hi >= 0x8000 else hi)
        if lo:
            self.emit(Op.ADDI, rd, rd, imm=lo)

    def push(self, reg: int) -> None:
        self.emit(Op.ADDI, SP, SP, imm=-1)
        self.emit(Op.SW, rs1=SP, rs2=reg, imm=0)

    def pop(self, reg: int) -> None:
        self.emit(Op.LW, reg, SP, imm=0)
        self.emit(Op.ADDI, SP, SP, imm=1)

    def not_(self, t: int) -> None:
        self.emit(Op.SUB, t, 0, t)
        self.emit(Op.ADDI, t, t, imm=1)

    # functions

    def function(self, f: Func) -> None:
        self.scope = self.r.frame(f)
        self.is_main = f.name == "main"
        self.ret_label = self.new_label(f"ret_{f.name}")
        self.unit.label(f.name)
        head = len(self.unit.items)
        self.body(f.body)
        self.emit(Op.ADDI, 1, 0, imm=0)
        # a leaf never touches r5, so its return address need not be saved;
        # the frame keeps the same shape either way
        leaf = not any(
            isinstance(it, AsmInstr) and RA in (it.rd, it.rs2) and it.op != Op.SW or
            isinstance(it, AsmInstr) and it.op == Op.SW and it.rs2 == RA
            for it in self.unit.items[head:]
        )
        frameless = leaf and not f.params and not f.locals and not self.is_main
        prologue = AsmUnit()
        if frameless:
            pass
        elif self.is_main:
            prologue.emit(Op.LUI, SP, imm=1)
            prologue.emit(Op.ADDI, FP, SP, imm=0)
        else:
            prologue.emit(Op.ADDI, SP, SP, imm=-2)
            if not leaf:
                prologue.emit(Op.SW, rs1=SP, rs2=RA, imm=1)
            prologue.emit(Op.SW, rs1=SP, rs2=FP, imm=0)
            prologue.emit(Op.ADDI, FP, SP, imm=0)
        if f.locals:
            prologue.emit(Op.ADDI, SP, SP, imm=-len(f.locals))
        self.unit.items[head:head] = prologue.items
        self.unit.label(self.ret_label)
        if self.is_main:
            self.emit(Op.HALT, rs1=1)
        elif frameless:
            self.emit(Op.JALR, 0, RA, imm=0)
        else:
            if f.locals:
                self.emit(Op.ADDI, SP, FP, imm=0)
            self.emit(Op.LW, FP, SP, imm=0)
            if not leaf:
                self.emit(Op.LW, RA, SP, imm=1)
            self.emit(Op.ADDI, SP, SP, imm=2)
            self.emit(Op.JALR, 0, RA, imm=0)

    def body(self, stmts: list[Stmt]) -> None:
        for s in stmts:
            self.stmt(s)

    def store_var(self, name: str, reg: int) -> None:
        sym = self.scope.get(name) or self.r.globals[name]
        if sym.kind == "frame":
            self.emit(Op.SW, rs1=FP, rs2=reg, imm=sym.value)
        else:
            self.emit(Op.SW, rs1=0, rs2=reg, imm=sym.value)

    def stmt(self, s: Stmt) -> None:
        if isinstance(s, VarDecl):
            if s.init is None:
                self.store_var(s.name, 0)
            else:
                self.expr(s.init, 1)
                self.store_var(s.name, 1)
        elif isinstance(s, Assign):
            self.expr(s.value, 1)
            self.store_var(s.name, 1)
        elif isinstance(s, If):
            l_else = self.new_label("else")
            self.cond(s.cond, l_else)
            self.body(s.then)
            if s.orelse:
                l_end = self.new_label("endif")
                self.emit(Op.JAL, 0, imm=l_end)
                self.unit.label(l_else)
                self.body(s.orelse)
                self.unit.label(l_end)
            else:
                self.unit.label(l_else)
        elif isinstance(s, While):
            l_top, l_end = self.new_label("while"), self.new_label("wend")
            self.unit.label(l_top)
            self.cond(s.cond, l_end)
            self.body(s.body)
            self.emit(Op.JAL, 0, imm=l_top)
            self.unit.label(l_end)
        elif isinstance(s, Return):
            if s.value is None:
                self.emit(Op.ADDI, 1, 0, imm=0)
            else:
                self.expr(s.value, 1)
            self.emit(Op.JAL, 0, imm=self.ret_label)
        else:
            self.expr(s.expr, 1, discard=True)

    def cond(self, e: Expr, l_false: str) -> None:
        """Branch to ``l_false`` when ``e`` evaluates to zero."""
        self.jump(e, l_false, False)

    def jump(self, e: Expr, label: str, when: bool) -> None:
        """Branch to ``label`` iff the truth of ``e`` equals ``when``; fall through otherwise."""
        if isinstance(e, Unary) and e.op == "!":
            self.jump(e.operand, label, not when)
        elif isinstance(e, Binary) and e.op in ("&&", "||"):
            # && jumping on false and || jumping on true just chain; the other
            # two cases need a skip label for the short-circuit exit
            chain = (e.op == "&&") != when
            if chain:
                self.jump(e.left, label, when)
                self.jump(e.right, label, when)
            else:
                skip = self.new_label("skip")
                self.jump(e.left, skip, not when)
                self.jump(e.right, label, when)
                self.unit.label(skip)
        elif isinstance(e, Binary) and e.op in _COMPARE:
            x, y = self.pair(e.left, e.right, 1)
            if e.op in ("==", "!="):
                op = Op.BEQ if (e.op == "==") == when else Op.BNE
                self.emit(op, rs1=x, rs2=y, imm=label)
                return
            # a < b, possibly negated
            a, b, neg = {"<": (x, y, False), ">": (y, x, False),
                         ">=": (x, y, True), "<=": (y, x, True)}[e.op]
            if when != neg:
                self.emit(Op.BLT, rs1=a, rs2=b, imm=label)
            else:
                self.emit(Op.SLT, 1, a, b)
                self.emit(Op.BEQ, rs1=1, rs2=0, imm=label)
        elif isinstance(e, Num):
            if bool(e.value) == when:
                self.emit(Op.JAL, 0, imm=label)
        else:
            self.expr(e, 1)
            self.emit(Op.BNE if when else Op.BEQ, rs1=1, rs2=0, imm=label)

    # expressions

    def pair(self, a: Expr, b: Expr, t: int) -> tuple[int, int]:
        """Evaluate ``a`` then ``b``; return the registers holding each."""
        self.expr(a, t)
        if isinstance(b, Num) and b.value == 0:
            return t, 0
        if t < MAX_TEMP:
            self.expr(b, t + 1)
            return t, t + 1
        self.push(t)
        self.expr(b, t)
        self.pop(SCRATCH)
        return SCRATCH, t

    def small(self, e: Expr) -> int | None:
        if isinstance(e, Name):
            sym = self.scope.get(e.name) or self.r.globals.get(e.name)
            if sym is not None and sym.kind == "const":
                e = Num(sym.value)
        return _small(e)

    def address(self, a: Expr, t: int, base: int) -> tuple[int, int]:
        """Register and offset addressing ``base + a``, folding constants."""
        k = self.small(a)
        if k is not None and _small(Num(k + base, 0)) is not None:
            return 0, k + base
        if isinstance(a, Binary) and a.op == "+":
            k = self.small(a.right)
            if k is not None and _small(Num(k + base, 0)) is not None:
                self.expr(a.left, t)
                return t, k + base
        self.expr(a, t)
        return t, base

    def expr(self, e: Expr, t: int, discard: bool = False) -> None:
        if isinstance(e, Num):
            self.load_const(t, e.value)
        elif isinstance(e, Name):
            sym = self.scope.get(e.name) or self.r.globals[e.name]
            if sym.kind == "frame":
                self.emit(Op.LW, t, FP, imm=sym.value)
            elif sym.kind == "global":
                self.emit(Op.LW, t, 0, imm=sym.value)
            else:
                self.load_const(t, sym.value)
        elif isinstance(e, Unary):
            self.expr(e.operand, t)
            if e.op == "-":
                self.emit(Op.SUB, t, 0, t)
            else:
                self.emit(Op.SLTU, t, 0, t)
                self.not_(t)
        elif isinstance(e, Binary):
            self.binary(e, t)
        else:
            self.call(e, t, discard)

    def binary(self, e: Binary, t: int) -> None:
        if e.op in ("&&", "||"):
            l_end = self.new_label("sc")
            self.expr(e.left, t)
            if e.op == "&&":
                self.emit(Op.BEQ, rs1=t, rs2=0, imm=l_end)
                self.expr(e.right, t)
                self.emit(Op.SLTU, t, 0, t)
            else:
                l_true = self.new_label("sctrue")
                self.emit(Op.BNE, rs1=t, rs2=0, imm=l_true)
                self.expr(e.right, t)
                self.emit(Op.SLTU, t, 0, t)
                self.emit(Op.JAL, 0, imm=l_end)
                self.unit.label(l_true)
                self.emit(Op.ADDI, t, 0, imm=1)
            self.unit.label(l_end)
            return
        k = self.small(e.right)
        if k is not None and (e.op == "+" or k > -0x8000) and e.op in ("+", "-"):
            self.expr(e.left, t)
            self.emit(Op.ADDI, t, t, imm=k if e.op == "+" else -k)
            return
        x, y = self.pair(e.left, e.right, t)
        op = e.op
        if op in _ALU:
            self.emit(_ALU[op], t, x, y)
        elif op == "<":
            self.emit(Op.SLT, t, x, y)
        elif op == ">":
            self.emit(Op.SLT, t, y, x)
        elif op == "<=":
            self.emit(Op.SLT, t, y, x)
            self.not_(t)
        elif op == ">=":
            self.emit(Op.SLT, t, x, y)
            self.not_(t)
        elif op == "!=":
            self.emit(Op.SUB, t, x, y)
            self.emit(Op.SLTU, t, 0, t)
        elif op == "==":
            self.emit(Op.SUB, t, x, y)
            self.emit(Op.SLTU, t, 0, t)
            self.not_(t)
        else:  # pragma: no cover - parser only produces the operators above
            raise MiniLangError(f"unknown operator {op}", e.line)

    def call(self, e: Call, t: int, discard: bool) -> None:
        name = e.name
        if name == "mload":
            r, off = self.address(e.args[0], t, 0)
            self.emit(Op.LW, t, r, imm=off)
            return
        if name == "input_byte":
            r, off = self.address(e.args[0], t, INPUT_BASE)
            self.emit(Op.LW, t, r, imm=off)
            return
        if name == "input_len":
            self.emit(Op.LW, t, 0, imm=0)
            return
        if name == "mstore":
            a, v = e.args
            k = self.small(a)
            if k is not None:
                self.expr(v, t)
                self.emit(Op.SW, rs1=0, rs2=t, imm=k)
            else:
                off = 0
                if isinstance(a, Binary) and a.op == "+" and self.small(a.right) is not None:
                    a, off = a.left, self.small(a.right)
                x, y = self.pair(a, v, t)
                self.emit(Op.SW, rs1=x, rs2=y, imm=off)
        elif name == "write":
            self.expr(e.args[0], t)
            self.emit(Op.WRITE, rs1=t)
        elif name == "halt":
            self.expr(e.args[0], t)
            self.emit(Op.HALT, rs1=t)
        else:
            saved = t - 1
            if saved:
                self.emit(Op.ADDI, SP, SP, imm=-saved)
                for r in range(1, t):
                    self.emit(Op.SW, rs1=SP, rs2=r, imm=r - 1)
            for a in reversed(e.args):
                self.expr(a, 1)
                self.push(1)
            self.emit(Op.JAL, RA, imm=name)
            if e.args:
                self.emit(Op.ADDI, SP, SP, imm=len(e.args))
            if t != 1:
                self.emit(Op.ADDI, t, 1, imm=0)
            if saved:
                for r in range(1, t):
                    self.emit(Op.LW, r, SP, imm=r - 1)
                self.emit(Op.ADDI, SP, SP, imm=saved)
            return
        if not discard:
            self.emit(Op.ADDI, t, 0, imm=0)


def generate(prog: Program) -> AsmUnit:
    res = _Resolver(prog)
    gen = _Gen(res)
    for f in prog.funcs:
        gen.function(f)
    return gen.unit


def compile_to_asm(source: bytes | str) -> AsmUnit:
    if isinstance(source, (bytes, bytearray)):
        try:
            source = source.decode("ascii")
        except UnicodeDecodeError as e:
            line = source[: e.start].count(b"\n") + 1
            raise MiniLangError("source is not ASCII", line) from None
    return generate(parse(source))


def compile_minilang(source: bytes | str) -> GuestImage:
    return assemble(compile_to_asm(source))
