from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ast import Block, Decl, For, FunctionDef, If, IntConst, KernelModule, Stmt, Assign, Var


@dataclass(frozen=True)
class VarInfo:
    type: str
    dims: tuple = ()  # int per dimension, None when not a compile-time constant

    @property
    def is_array(self) -> bool:
        return bool(self.dims)

    @property
    def is_float(self) -> bool:
        return "double" in self.type or "float" in self.type


@dataclass
class Region:
    anchor: For
    body: tuple
    enclosing_loop_vars: tuple
    symbols: dict = field(repr=False)
    function: Optional[str] = None
    item_index: int = 0
    path: tuple = ()  # statement path from the item's body to the anchor
    call_types: dict = field(default_factory=dict, repr=False)  # module function -> return type


def const_dim(e) -> Optional[int]:
    return e.value if isinstance(e, IntConst) else None


def decl_infos(d: Decl):
    for dd in d.declarators:
        yield dd.name, VarInfo(d.type, tuple(None if x is None else const_dim(x) for x in dd.dims))


def loop_var(f: For) -> Optional[str]:
    if isinstance(f.init, Decl) and f.init.declarators:
        return f.init.declarators[0].name
    if isinstance(f.init, Assign) and isinstance(f.init.target, Var):
        return f.init.target.name
    return None


def body_stmts(s: Stmt) -> tuple:
    return s.stmts if isinstance(s, Block) and not s.pragmas else (s,)


def _has_parallel_loop(s: Stmt) -> bool:
    if isinstance(s, For):
        return s.is_parallel or _has_parallel_loop(s.body)
    if isinstance(s, Block):
        return any(_has_parallel_loop(c) for c in s.stmts)
    if isinstance(s, If):
        return _has_parallel_loop(s.then) or (s.orelse is not None and _has_parallel_loop(s.orelse))
    return False


def find_regions(m: KernelModule) -> list[Region]:
    """One region per deepest parallel-marked loop, in source order."""
    regions: list[Region] = []
    globals_: dict = {}
    call_types = {f.name: f.ret_type for f in m.functions()}

    def walk(s: Stmt, symbols: dict, loops: tuple, fname, item_index, path):
        if isinstance(s, Decl):
            symbols.update(decl_infos(s))
        elif isinstance(s, Block):
            inner = dict(symbols)
            for k, c in enumerate(s.stmts):
                walk(c, inner, loops, fname, item_index, path + (k,))
        elif isinstance(s, If):
            walk(s.then, dict(symbols), loops, fname, item_index, path + (0,))
            if s.orelse is not None:
                walk(s.orelse, dict(symbols), loops, fname, item_index, path + (1,))
        elif isinstance(s, For):
            inner = dict(symbols)
            if isinstance(s.init, Decl):
                inner.update(decl_infos(s.init))
            lv = loop_var(s)
            inner_loops = loops + ((lv,) if lv else ())
            if s.is_parallel and not _has_parallel_loop(s.body):
                regions.append(Region(s, body_stmts(s.body), inner_loops, inner, fname, item_index, path,
                                      call_types))
            else:
                walk(s.body, inner, inner_loops, fname, item_index, path + (0,))

    for idx, it in enumerate(m.items):
        if isinstance(it, FunctionDef):
            if it.body is None:
                continue
            symbols = dict(globals_)
            for p in it.params:
                symbols[p.name] = VarInfo(p.type, tuple(None if x is None else const_dim(x) for x in p.dims))
            walk(it.body, symbols, (), it.name, idx, ())
        elif isinstance(it, Decl):
            globals_.update(decl_infos(it))
        elif isinstance(it, Stmt):
            walk(it, globals_, (), None, idx, ())
    return regions
