"""Gated-SSA construction for the body of a parallel loop region.

Every scalar assignment, array store and merge point gets an integer id in
textual order.  Reads are rewritten to value-refs: the defining id, a free
input (value flowing in from outside the region), a constant, or an array
load tagged with the memory state it observes.

Memory states are tracked per array binding.  A load is forwarded from a
preceding store with a syntactically identical index tuple; otherwise it is
tagged with the latest store that may alias it (or the state at region entry,
the start of a loop, or after a merge), which is what keeps loads from being
shared or hoisted across conflicting stores.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import UnsupportedConstructError
from .frontend.ast import (
    ArrayRef, Assign, Binary, Block, Call, CallStmt, Decl, FloatConst, Fma, For, If,
    IntConst, Return, Stmt, Unary, Var,
)
from .frontend.printer import print_expr
from .frontend.regions import Region, VarInfo, body_stmts, const_dim

log = logging.getLogger(__name__)

OUTER = "outer"

# ----------------------------------------------------------------- value refs


@dataclass(frozen=True)
class SConst:
    value: Union[int, float]
    type: str  # 'int' | 'double'
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class SFree:
    """Scalar value flowing into the region (parameter, loop index, bound...)."""
    name: str
    binding: tuple


@dataclass(frozen=True)
class SRef:
    id: int


@dataclass(frozen=True)
class SLoad:
    name: str
    base: tuple  # binding key of the array
    token: tuple  # memory state observed by the load
    indices: tuple

    @property
    def is_free_input(self) -> bool:
        return self.token[0] == "init"


@dataclass(frozen=True)
class SOp:
    op: str  # + - * / % neg fma ! < <= > >= == != && ||
    args: tuple


@dataclass(frozen=True)
class SCall:
    name: str
    args: tuple


SsaExpr = Union[SConst, SFree, SRef, SLoad, SOp, SCall]


@dataclass(frozen=True)
class LoopAnchor:
    """Abstract condition of a loop merge: names the loop, not a value."""
    path: tuple


@dataclass(frozen=True)
class ScalarTarget:
    name: str
    binding: tuple


@dataclass(frozen=True)
class StoreTarget:
    name: str
    base: tuple
    indices: tuple


@dataclass
class SsaDef:
    id: int
    target: Union[ScalarTarget, StoreTarget]
    value: SsaExpr
    path: tuple
    kind: str  # 'assign' | 'init' | 'store' | 'header'
    slot: object = None

    @property
    def scope_path(self) -> tuple:
        return self.path[:-1]


@dataclass
class PhiNode:
    id: int
    kind: str  # 'if' | 'loop' | 'exit'
    name: str
    binding: tuple
    condition: Union[SsaExpr, LoopAnchor]
    branches: tuple
    path: tuple  # the if/for statement


@dataclass(frozen=True)
class StoreEvent:
    def_id: int
    sequence_no: int


@dataclass(frozen=True)
class Root:
    path: tuple
    part: object  # 'value' | 'cond' | ('index', i) | ('decl', i)
    ssa_id: Optional[int]
    expr: SsaExpr


@dataclass
class LoopInfo:
    path: tuple
    phis: list = field(default_factory=list)
    exits: list = field(default_factory=list)
    cond: Optional[SsaExpr] = None
    init_defs: list = field(default_factory=list)
    step_defs: list = field(default_factory=list)


@dataclass
class IfInfo:
    path: tuple
    cond: SsaExpr
    phis: list = field(default_factory=list)


@dataclass(frozen=True)
class MemState:
    token: tuple
    stores: tuple = ()  # (def_id, indices, value_ref) since the token


@dataclass
class SsaProgram:
    region: Region
    defs: dict = field(default_factory=dict)
    phis: dict = field(default_factory=dict)
    stores: list = field(default_factory=list)
    roots: list = field(default_factory=list)
    loops: dict = field(default_factory=dict)
    ifs: dict = field(default_factory=dict)
    bindings: dict = field(default_factory=dict)  # binding -> VarInfo
    written: set = field(default_factory=set)  # names assigned or declared in the region
    warnings: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict, repr=False)
    n_ids: int = 0

    def info(self, binding: tuple) -> VarInfo:
        return self.bindings.get(binding) or VarInfo("double")

    def dump(self) -> str:
        lines = []
        for i in range(self.n_ids):
            if i in self.defs:
                d = self.defs[i]
                t = d.target
                lhs = t.name if isinstance(t, ScalarTarget) else \
                    t.name + "".join(f"[{fmt(x)}]" for x in t.indices)
                lines.append(f"{i} := {lhs} = {fmt(d.value)} [{scope_str(d.scope_path)}]")
            else:
                p = self.phis[i]
                cond = f"loop@{scope_str(p.condition.path)}" if isinstance(p.condition, LoopAnchor) \
                    else fmt(p.condition)
                br = ", ".join(fmt(b) for b in p.branches)
                lines.append(f"{i} := {p.name} = phi-{p.kind}({cond}; {br}) [{scope_str(p.path[:-1])}]")
        return "\n".join(lines)


def scope_str(path: tuple) -> str:
    return "/".join(str(x) for x in path) or "."


def fmt(e) -> str:
    if isinstance(e, SConst):
        return repr(e.value)
    if isinstance(e, SFree):
        return e.name
    if isinstance(e, SRef):
        return f"%{e.id}"
    if isinstance(e, SLoad):
        tok = "" if e.is_free_input else "@" + ":".join(str(x) for x in e.token[:2])
        return e.name + tok + "".join(f"[{fmt(x)}]" for x in e.indices)
    if isinstance(e, SOp):
        return f"({e.op} {' '.join(fmt(a) for a in e.args)})"
    if isinstance(e, SCall):
        return f"{e.name}({', '.join(fmt(a) for a in e.args)})"
    return repr(e)


# ------------------------------------------------------------------- aliasing


def store_may_alias(store: tuple, load: tuple) -> bool:
    """``store`` and ``load`` are (base, indices) pairs.

    Distinct bases never alias; on one base the accesses are only provably
    distinct when some index position holds two different constants.
    """
    sbase, sidx = store
    lbase, lidx = load
    if sbase != lbase:
        return False
    if len(sidx) == len(lidx):
        for a, b in zip(sidx, lidx):
            if isinstance(a, (SConst, IntConst)) and isinstance(b, (SConst, IntConst)) and a.value != b.value:
                return False
    return True


# -------------------------------------------------------------------- builder

_SAFE_LOGIC = (SConst, SFree, SRef)


def _pure_scalar(e) -> bool:
    """No loads, calls or division below ``e`` (safe to evaluate eagerly)."""
    if isinstance(e, (SLoad, SCall)):
        return False
    if isinstance(e, SOp):
        return e.op not in ("/", "%") and all(_pure_scalar(a) for a in e.args)
    return True


class _Builder:
    def __init__(self, region: Region):
        self.region = region
        self.prog = SsaProgram(region)
        self.scopes: list[dict] = [{}]
        self.values: dict = {}
        self.mem: dict = {}
        self.seq = 0

    # -- names
    def new_id(self) -> int:
        i = self.prog.n_ids
        self.prog.n_ids += 1
        return i

    def resolve(self, name: str) -> tuple:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        b = (name, OUTER)
        if b not in self.prog.bindings:
            info = self.region.symbols.get(name)
            if info is None:
                self.warn(f"'{name}' has no visible declaration; assuming a double scalar")
                info = VarInfo("double")
            self.prog.bindings[b] = info
        return b

    def warn(self, msg: str):
        if msg not in self.prog.warnings:
            self.prog.warnings.append(msg)
            log.warning(msg)

    def declare(self, name: str, uid: tuple, info: VarInfo) -> tuple:
        b = (name, uid)
        self.scopes[-1][name] = b
        self.prog.bindings[b] = info
        self.prog.written.add(name)
        return b

    def read_scalar(self, b: tuple, line: int = 0):
        if b in self.values:
            return self.values[b]
        if b[1] != OUTER:
            self.warn(f"'{b[0]}' read before any definition; treated as a free input")
        return SFree(b[0], b)

    def mem_state(self, base: tuple) -> MemState:
        st = self.mem.get(base)
        if st is None:
            st = MemState(("init",))
        return st

    def visible(self) -> set:
        vis = set()
        for s in self.scopes:
            vis.update(s.values())
        return vis

    def snapshot(self, path: tuple):
        self.prog.snapshots[path] = ([dict(s) for s in self.scopes], dict(self.values), dict(self.mem))

    # -- expressions
    def expr(self, e, line: int = 0):
        if isinstance(e, IntConst):
            return SConst(e.value, "int", e.text)
        if isinstance(e, FloatConst):
            return SConst(e.value, "double", e.text)
        if isinstance(e, Var):
            b = self.resolve(e.name)
            if self.prog.info(b).is_array:
                raise UnsupportedConstructError(f"array '{e.name}' used as a value", line)
            return self.read_scalar(b, line)
        if isinstance(e, ArrayRef):
            b = self.resolve(e.base)
            info = self.prog.info(b)
            if not info.is_array:
                raise UnsupportedConstructError(f"subscript of scalar '{e.base}'", line)
            if len(e.indices) != len(info.dims):
                raise UnsupportedConstructError(f"partial array reference '{e.base}'", line)
            idx = tuple(self.expr(i, line) for i in e.indices)
            return self.load(e.base, b, idx)
        if isinstance(e, Unary):
            x = self.expr(e.operand, line)
            if e.op == "+":
                return x
            return SOp("neg" if e.op == "-" else "!", (x,))
        if isinstance(e, Binary):
            left = self.expr(e.left, line)
            right = self.expr(e.right, line)
            if e.op in ("&&", "||") and not (_pure_scalar(left) and _pure_scalar(right)):
                raise UnsupportedConstructError(
                    f"'{e.op}' with loads, calls or division in its operands", line)
            return SOp(e.op, (left, right))
        if isinstance(e, Call):
            return SCall(e.name, tuple(self.expr(a, line) for a in e.args))
        if isinstance(e, Fma):
            return SOp("fma", (self.expr(e.addend, line), self.expr(e.factor1, line),
                               self.expr(e.factor2, line)))
        raise UnsupportedConstructError(type(e).__name__, line)

    def load(self, name: str, base: tuple, idx: tuple):
        st = self.mem_state(base)
        for def_id, sidx, value in reversed(st.stores):
            if sidx == idx:
                return value
            if store_may_alias((base, sidx), (base, idx)):
                return SLoad(name, base, ("store", def_id), idx)
        return SLoad(name, base, st.token, idx)

    # -- statements
    def stmts(self, stmts: tuple, scope: tuple):
        for k, s in enumerate(stmts):
            self.stmt(s, scope + (k,))
        self.snapshot(scope + (len(stmts),))

    def stmt(self, s: Stmt, path: tuple):
        self.snapshot(path)
        if isinstance(s, Decl):
            self.decl(s, path)
        elif isinstance(s, Assign):
            self.assign(s, path, "assign")
        elif isinstance(s, If):
            self.if_stmt(s, path)
        elif isinstance(s, For):
            self.for_stmt(s, path)
        elif isinstance(s, Block):
            self.scopes.append({})
            self.stmts(s.stmts, path + (0,))
            self.scopes.pop()
        elif isinstance(s, CallStmt):
            raise UnsupportedConstructError(f"call statement '{s.call.name}'", s.line)
        elif isinstance(s, Return):
            raise UnsupportedConstructError("return inside a parallel loop", s.line)
        else:
            raise UnsupportedConstructError(type(s).__name__, s.line)

    def decl(self, s: Decl, path: tuple, kind: str = "init"):
        for k, d in enumerate(s.declarators):
            init = None if d.init is None else self.expr(d.init, s.line)
            info = VarInfo(s.type, tuple(None if x is None else const_dim(x) for x in d.dims))
            if info.is_array and any(x is None for x in info.dims):
                raise UnsupportedConstructError(f"non-constant array dimension for '{d.name}'", s.line)
            b = self.declare(d.name, ("decl", path, k), info)
            if info.is_array:
                self.mem[b] = MemState(("decl", path, b))
                continue
            if init is not None:
                i = self.new_id()
                self.prog.defs[i] = SsaDef(i, ScalarTarget(d.name, b), init, path, kind, ("decl", k))
                self.values[b] = SRef(i)
                if kind == "init":
                    self.prog.roots.append(Root(path, ("decl", k), i, init))

    def assign(self, s: Assign, path: tuple, kind: str):
        rhs = s.desugared()
        t = s.target
        if isinstance(t, Var):
            b = self.resolve(t.name)
            if self.prog.info(b).is_array:
                raise UnsupportedConstructError(f"assignment to array '{t.name}'", s.line)
            value = self.expr(rhs, s.line)
            i = self.new_id()
            self.prog.defs[i] = SsaDef(i, ScalarTarget(t.name, b), value, path, kind)
            self.prog.written.add(t.name)
            self.values[b] = SRef(i)
            if kind == "assign":
                self.prog.roots.append(Root(path, "value", i, value))
            return i
        b = self.resolve(t.base)
        info = self.prog.info(b)
        if not info.is_array or len(t.indices) != len(info.dims):
            raise UnsupportedConstructError(f"store to '{t.base}'", s.line)
        if kind == "header":
            raise UnsupportedConstructError("array store in a loop header", s.line)
        idx = tuple(self.expr(x, s.line) for x in t.indices)
        value = self.expr(rhs, s.line)
        i = self.new_id()
        self.prog.defs[i] = SsaDef(i, StoreTarget(t.base, b, idx), value, path, "store")
        self.prog.stores.append(StoreEvent(i, self.seq))
        self.seq += 1
        for k, x in enumerate(idx):
            self.prog.roots.append(Root(path, ("index", k), None, x))
        self.prog.roots.append(Root(path, "value", i, value))
        st = self.mem_state(b)
        self.mem[b] = MemState(st.token, st.stores + ((i, idx, SRef(i)),))
        return i

    def if_stmt(self, s: If, path: tuple):
        cond = self.expr(s.cond, s.line)
        info = IfInfo(path, cond)
        self.prog.ifs[path] = info
        self.prog.roots.append(Root(path, "cond", None, cond))
        visible = self.visible()
        pre_values, pre_mem = dict(self.values), dict(self.mem)

        def branch(stmt, k):
            self.values, self.mem = dict(pre_values), dict(pre_mem)
            self.scopes.append({})
            if stmt is not None:
                self.stmts(body_stmts(stmt), path + (k,))
            self.scopes.pop()
            return self.values, self.mem

        then_values, then_mem = branch(s.then, 0)
        else_values, else_mem = branch(s.orelse, 1)
        self.values, self.mem = dict(pre_values), dict(pre_mem)

        keys = sorted({b for b in list(then_values) + list(else_values)
                       if b[1] == OUTER or b in visible}, key=_bkey)
        for b in keys:
            tv = then_values.get(b) or self.read_scalar(b)
            ev = else_values.get(b) or self.read_scalar(b)
            if tv == ev:
                self.values[b] = tv
                continue
            i = self.new_id()
            self.prog.phis[i] = PhiNode(i, "if", b[0], b, cond, (tv, ev), path)
            info.phis.append(i)
            self.values[b] = SRef(i)
        for b in sorted(set(then_mem) | set(else_mem), key=_bkey):
            default = pre_mem.get(b, MemState(("init",)))
            if then_mem.get(b, default) != default or else_mem.get(b, default) != default:
                self.mem[b] = MemState(("if", path, b))

    def for_stmt(self, s: For, path: tuple):
        loop = LoopInfo(path)
        self.prog.loops[path] = loop
        self.scopes.append({})  # header scope
        if isinstance(s.init, Decl):
            before = self.prog.n_ids
            self.decl(s.init, path, kind="header")
            loop.init_defs.extend(range(before, self.prog.n_ids))
        elif isinstance(s.init, Assign):
            loop.init_defs.append(self.assign(s.init, path, "header"))
        elif s.init is not None:
            raise UnsupportedConstructError("loop initializer", s.line)

        assigned, stored = set(), set()
        self._scan(body_stmts(s.body), assigned, stored)
        if s.step is not None:
            self._scan((s.step,), assigned, stored)
        visible = self.visible()
        carried = sorted((b for b in assigned if b[1] == OUTER or b in visible), key=_bkey)
        anchor = LoopAnchor(path)
        for b in carried:
            i = self.new_id()
            self.prog.phis[i] = PhiNode(i, "loop", b[0], b, anchor, (self.read_scalar(b),), path)
            loop.phis.append(i)
            self.values[b] = SRef(i)
        for b in sorted(stored, key=_bkey):
            self.mem[b] = MemState(("loop", path, b))
        if s.cond is not None:
            loop.cond = self.expr(s.cond, s.line)

        self.scopes.append({})
        self.stmts(body_stmts(s.body), path + (0,))
        self.scopes.pop()
        if s.step is not None:
            loop.step_defs.append(self.assign(s.step, path, "header"))
        for i in loop.phis:
            phi = self.prog.phis[i]
            phi.branches = (phi.branches[0], self.values[phi.binding])
        header = self.scopes.pop()
        header_bindings = set(header.values())
        for i in loop.phis:
            phi = self.prog.phis[i]
            if phi.binding in header_bindings:
                continue
            j = self.new_id()
            self.prog.phis[j] = PhiNode(j, "exit", phi.name, phi.binding, anchor, (SRef(i),), path)
            loop.exits.append(j)
            self.values[phi.binding] = SRef(j)
        for b in sorted(stored, key=_bkey):
            self.mem[b] = MemState(("exit", path, b))

    def _scan(self, stmts, assigned: set, stored: set):
        """Bindings assigned / arrays stored anywhere under ``stmts``."""
        self.scopes.append({})
        try:
            for s in stmts:
                if isinstance(s, Decl):
                    for d in s.declarators:
                        self.scopes[-1][d.name] = ("<local>", d.name)
                elif isinstance(s, Assign):
                    if isinstance(s.target, Var):
                        b = self.resolve(s.target.name)
                        if b[0] != "<local>":
                            assigned.add(b)
                    else:
                        b = self.resolve(s.target.base)
                        if b[0] != "<local>":
                            stored.add(b)
                elif isinstance(s, Block):
                    self._scan(s.stmts, assigned, stored)
                elif isinstance(s, If):
                    self._scan((s.then,), assigned, stored)
                    if s.orelse is not None:
                        self._scan((s.orelse,), assigned, stored)
                elif isinstance(s, For):
                    inner = [x for x in (s.init,) if x is not None]
                    self.scopes.append({})
                    if isinstance(s.init, Decl):
                        self._scan(tuple(inner), assigned, stored)
                        for d in s.init.declarators:
                            self.scopes[-1][d.name] = ("<local>", d.name)
                    else:
                        self._scan(tuple(inner), assigned, stored)
                    self._scan(body_stmts(s.body) + ((s.step,) if s.step else ()), assigned, stored)
                    self.scopes.pop()
        finally:
            self.scopes.pop()


def _bkey(b: tuple):
    return (b[0], repr(b[1]))


def build_ssa(region: Region) -> SsaProgram:
    b = _Builder(region)
    b.stmts(region.body, ())
    return b.prog


def reaching_def(prog: SsaProgram, name: str, point: tuple, indices: Optional[tuple] = None):
    """Value-ref of ``name`` (or ``name[indices]``) just before statement ``point``."""
    if point not in prog.snapshots:
        raise KeyError(f"no statement at {point}")
    scopes, values, mem = prog.snapshots[point]
    binding = None
    for scope in reversed(scopes):
        if name in scope:
            binding = scope[name]
            break
    if binding is None:
        binding = (name, OUTER)
    if indices is None:
        return values.get(binding, SFree(name, binding))
    st = mem.get(binding, MemState(("init",)))
    b = _Builder(prog.region)
    b.mem = {binding: st}
    idx = tuple(i if not isinstance(i, str) else SFree(i, (i, OUTER)) for i in indices)
    return b.load(name, binding, idx)


def ssa_text(e) -> str:
    """Human-readable rendering used by the debug dump and tests."""
    return fmt(e)


__all__ = [
    "SConst", "SFree", "SRef", "SLoad", "SOp", "SCall", "LoopAnchor", "ScalarTarget",
    "StoreTarget", "SsaDef", "PhiNode", "StoreEvent", "Root", "SsaProgram", "MemState",
    "build_ssa", "reaching_def", "store_may_alias", "print_expr",
]
