"""AST for the kernel-language subset.

Nodes are frozen dataclasses so structural equality and hashing come for
free.  Source spans and line numbers are carried with ``compare=False`` so two
parses of differently-formatted text still compare equal.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

PARALLEL_MARKERS = frozenset(
    {"gang", "worker", "vector", "parallel-for", "simd", "teams", "distribute", "kernels", "parallel"}
)

_ACC_MARKERS = {"gang", "worker", "vector", "parallel", "kernels"}
_OMP_MARKERS = {"teams", "distribute", "simd", "parallel"}


@dataclass(frozen=True)
class Directive:
    raw_text: str
    kind: str = field(default="other", compare=False)
    markers: frozenset = field(default=frozenset(), compare=False)
    line: int = field(default=0, compare=False)

    @classmethod
    def from_text(cls, raw_text: str, line: int = 0) -> "Directive":
        text = raw_text.replace("\\\n", " ")
        # drop clause arguments so num_gangs(vector) style text cannot fake markers
        prev = None
        while prev != text:
            prev = text
            text = re.sub(r"\([^()]*\)", " ", text)
        words = re.findall(r"[A-Za-z_]\w*", text)
        kind = "other"
        markers: set[str] = set()
        if len(words) >= 2 and words[0] == "pragma":
            if words[1] == "acc":
                kind = "acc"
                markers = {w for w in words[2:] if w in _ACC_MARKERS}
            elif words[1] == "omp":
                kind = "omp"
                rest = words[2:]
                markers = {w for w in rest if w in _OMP_MARKERS}
                for a, b in zip(rest, rest[1:]):
                    if a == "parallel" and b == "for":
                        markers.add("parallel-for")
        return cls(raw_text, kind, frozenset(markers), line)

    @property
    def is_parallel(self) -> bool:
        return bool(self.markers)


# ---------------------------------------------------------------- expressions

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class IntConst(Expr):
    value: int
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", str(self.value))


@dataclass(frozen=True)
class FloatConst(Expr):
    value: float
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", repr(float(self.value)))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class ArrayRef(Expr):
    base: str
    indices: tuple


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # '-', '+', '!'
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


@dataclass(frozen=True)
class Fma(Expr):
    """``addend + factor1 * factor2``; only produced by code generation."""
    addend: Expr
    factor1: Expr
    factor2: Expr


LValue = Union[Var, ArrayRef]

# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Stmt:
    pragmas: tuple = field(default=(), kw_only=True)
    line: int = field(default=0, kw_only=True, compare=False)
    span: Optional[tuple] = field(default=None, kw_only=True, compare=False)


@dataclass(frozen=True)
class Declarator:
    name: str
    dims: tuple = ()  # Expr or None (unsized leading parameter dimension)
    init: Optional[Expr] = None


@dataclass(frozen=True)
class Decl(Stmt):
    type: str
    declarators: tuple


@dataclass(frozen=True)
class Assign(Stmt):
    target: LValue
    op: str  # '=', '+=', '-=', '*=', '/=', '%=', '++', '--'
    value: Optional[Expr] = None

    def desugared(self) -> Expr:
        """Right-hand side with compound operators expanded."""
        if self.op == "=":
            return self.value
        if self.op == "++":
            return Binary("+", self.target, IntConst(1))
        if self.op == "--":
            return Binary("-", self.target, IntConst(1))
        return Binary(self.op[:-1], self.target, self.value)


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass(frozen=True)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    step: Optional[Assign]
    body: Stmt

    @property
    def directive(self) -> Optional[Directive]:
        return self.pragmas[-1] if self.pragmas else None

    @property
    def is_parallel(self) -> bool:
        return any(d.is_parallel for d in self.pragmas)


@dataclass(frozen=True)
class Block(Stmt):
    stmts: tuple = ()


@dataclass(frozen=True)
class CallStmt(Stmt):
    call: Call


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr] = None


# ------------------------------------------------------------------ top level


@dataclass(frozen=True)
class Param:
    type: str
    name: str
    dims: tuple = ()


@dataclass(frozen=True)
class FunctionDef:
    ret_type: str
    name: str
    params: tuple
    body: Optional[Block]
    pragmas: tuple = ()


@dataclass(frozen=True)
class Preproc:
    raw_text: str


@dataclass(frozen=True)
class DirectiveItem:
    directive: Directive


@dataclass(frozen=True)
class KernelModule:
    items: tuple = ()
    source_name: str = field(default="<string>", compare=False)
    source: str = field(default="", compare=False, repr=False)

    def functions(self):
        return [it for it in self.items if isinstance(it, FunctionDef)]

    def directives(self) -> list:
        out = []

        def walk_stmt(s):
            out.extend(s.pragmas)
            if isinstance(s, Block):
                for c in s.stmts:
                    walk_stmt(c)
            elif isinstance(s, If):
                walk_stmt(s.then)
                if s.orelse is not None:
                    walk_stmt(s.orelse)
            elif isinstance(s, For):
                walk_stmt(s.body)

        for it in self.items:
            if isinstance(it, DirectiveItem):
                out.append(it.directive)
            elif isinstance(it, FunctionDef):
                out.extend(it.pragmas)
                if it.body is not None:
                    walk_stmt(it.body)
            elif isinstance(it, Stmt):
                walk_stmt(it)
        return out


def child_exprs(e: Expr) -> tuple:
    if isinstance(e, ArrayRef):
        return e.indices
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    if isinstance(e, Fma):
        return (e.addend, e.factor1, e.factor2)
    return ()


def walk_expr(e: Expr):
    yield e
    for c in child_exprs(e):
        yield from walk_expr(c)
