"""E-graph with union-find, hash-consing and deferred congruence repair.

Besides congruence the graph maintains one analysis: the constant value of a
class, when its value is fully determined by constant operands.  A class with
a known constant always holds a ``const`` node.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from . import semantics
from .errors import CapacityExceeded, EvalError
from .ssa import LoopAnchor, SCall, SConst, SFree, SLoad, SOp, SRef, SsaProgram

LEAF_OPS = ("const", "var", "phi")
FOLDABLE = ("+", "-", "*", "/", "%", "neg", "fma", "!", "<", "<=", ">", ">=", "==", "!=", "&&", "||")
ARITY = {"+": 2, "-": 2, "*": 2, "/": 2, "%": 2, "neg": 1, "fma": 3, "!": 1,
         "<": 2, "<=": 2, ">": 2, ">=": 2, "==": 2, "!=": 2, "&&": 2, "||": 2}

INT_MIN, INT_MAX = -2 ** 31, 2 ** 31 - 1


@dataclass(frozen=True)
class ENode:
    op: str
    data: object = None
    children: tuple = ()

    def __post_init__(self):
        n = ARITY.get(self.op)
        if n is not None and len(self.children) != n:
            raise ValueError(f"{self.op} expects {n} children, got {len(self.children)}")
        if self.op in LEAF_OPS and self.children:
            raise ValueError(f"{self.op} is a leaf")

    def map_children(self, f) -> "ENode":
        if not self.children:
            return self
        return ENode(self.op, self.data, tuple(f(c) for c in self.children))

    def label(self) -> str:
        if self.op == "const":
            return repr(self.data[1])
        if self.op == "var":
            return self.data[0]
        if self.op == "load":
            return f"load:{self.data[1]}"
        if self.op == "call":
            return f"call:{self.data}"
        if self.op == "phi":
            return f"phi-{self.data[0]}:{self.data[1]}"
        return self.op


def const_node(type_: str, value) -> ENode:
    return ENode("const", (type_, value))


@dataclass
class EClass:
    id: int
    nodes: dict = field(default_factory=dict)  # ENode -> creation rank
    parents: list = field(default_factory=list)  # (ENode, class id)
    ssa_ids: set = field(default_factory=set)
    const: Optional[tuple] = None  # (type, value)


@dataclass(frozen=True)
class EGraphStats:
    n_classes: int
    n_nodes: int
    n_unions: int
    rebuild_count: int


@dataclass(frozen=True)
class RootRef:
    slot: tuple  # (path, part) of the statement slot the root fills
    ssa_id: Optional[int]
    cls: int


def fold(op: str, vals: list):
    """Constant value of ``op`` over constant operands, or None when unfoldable."""
    try:
        if op == "fma":
            r = semantics.fma(*vals)
        elif op in ("neg", "!"):
            r = semantics.unary(op, vals[0])
        else:
            r = semantics.binary(op, vals[0], vals[1])
    except (EvalError, OverflowError, ZeroDivisionError):
        return None
    if semantics.is_int(r):
        if not INT_MIN <= r <= INT_MAX:
            return None
        return ("int", r)
    if not math.isfinite(r):
        return None
    if op in ("/", "%") and float(vals[1]) == 0.0:
        return None
    return ("double", float(r))


class EGraph:
    def __init__(self, max_nodes: Optional[int] = None, fold_constants: bool = True):
        self.uf: list[int] = []
        self.classes: dict[int, EClass] = {}
        self.memo: dict[ENode, int] = {}
        self.pending: list[int] = []
        self.max_nodes = max_nodes
        self.fold_constants = fold_constants
        self.fold_budget: Optional[int] = None  # no folding-created nodes past this count
        self.n_unions = 0
        self.rebuild_count = 0
        self.next_rank = 0
        self.ssa_class: dict[int, int] = {}
        self.const_text: dict[tuple, str] = {}

    # -- union-find
    def find(self, a: int) -> int:
        uf = self.uf
        root = a
        while uf[root] != root:
            root = uf[root]
        while uf[a] != root:
            uf[a], a = root, uf[a]
        return root

    def canon(self, n: ENode) -> ENode:
        return n.map_children(self.find)

    # -- size
    @property
    def n_nodes(self) -> int:
        return self.next_rank

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def stats(self) -> EGraphStats:
        return EGraphStats(self.n_classes, sum(len(c.nodes) for c in self.classes.values()),
                           self.n_unions, self.rebuild_count)

    # -- mutation
    def lookup(self, n: ENode) -> Optional[int]:
        c = self.memo.get(self.canon(n))
        return None if c is None else self.find(c)

    def add(self, n: ENode) -> int:
        n = self.canon(n)
        existing = self.memo.get(n)
        if existing is not None:
            return self.find(existing)
        if self.max_nodes is not None and self.next_rank >= self.max_nodes:
            raise CapacityExceeded(f"e-graph node capacity {self.max_nodes} reached")
        cid = len(self.uf)
        self.uf.append(cid)
        cls = EClass(cid, {n: self.next_rank})
        self.next_rank += 1
        self.classes[cid] = cls
        self.memo[n] = cid
        for c in n.children:
            self.classes[self.find(c)].parents.append((n, cid))
        if n.op == "const":
            cls.const = n.data
        elif self.fold_constants:
            value = self._fold(n)
            if value is not None:
                cls.const = value
                k = self.add(const_node(*value))
                self.union(cid, k)
                return self.find(cid)
        return cid

    def _fold(self, n: ENode):
        if n.op not in FOLDABLE:
            return None
        vals = []
        for c in n.children:
            k = self.classes[self.find(c)].const
            if k is None:
                return None
            vals.append(k[1])
        return fold(n.op, vals)

    def union(self, a: int, b: int) -> int:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        if b < a:
            a, b = b, a
        self.n_unions += 1
        ca, cb = self.classes[a], self.classes.pop(b)
        self.uf[b] = a
        for n, r in cb.nodes.items():
            if n not in ca.nodes or r < ca.nodes[n]:
                ca.nodes[n] = r
        ca.parents.extend(cb.parents)
        ca.ssa_ids |= cb.ssa_ids
        if ca.const is None:
            ca.const = cb.const
        # repairing re-canonicalizes parents and retries folding them
        self.pending.append(a)
        return a

    def rebuild(self) -> int:
        """Restore congruence; returns the number of repair passes."""
        passes = 0
        while self.pending:
            todo = sorted({self.find(c) for c in self.pending})
            self.pending = []
            for c in todo:
                self._repair(self.find(c))
            passes += 1
        for cls in self.classes.values():
            nodes: dict = {}
            for n, r in cls.nodes.items():
                cn = self.canon(n)
                if cn not in nodes or r < nodes[cn]:
                    nodes[cn] = r
            cls.nodes = nodes
        self.rebuild_count += 1
        return passes

    def _repair(self, cid: int):
        cls = self.classes[cid]
        for pn, _ in cls.parents:
            self.memo.pop(pn, None)
        seen: dict = {}
        for pn, pc in cls.parents:
            pn = self.canon(pn)
            pc = self.find(pc)
            if pn in seen:
                pc = self.union(pc, seen[pn])
            prev = self.memo.get(pn)
            if prev is not None and self.find(prev) != pc:
                pc = self.union(pc, prev)
            self.memo[pn] = pc
            seen[pn] = self.find(pc)
        cls = self.classes[self.find(cid)]
        cls.parents = list(seen.items())
        if self.fold_constants:
            for pn, pc in list(seen.items()):
                pcls = self.classes[self.find(pc)]
                if pcls.const is None and (self.fold_budget is None or self.next_rank < self.fold_budget):
                    value = self._fold(pn)
                    if value is not None:
                        pcls.const = value
                        k = self.add(const_node(*value))
                        self.union(pc, k)

    # -- queries
    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    def nodes(self, cid: int) -> list[ENode]:
        cls = self.classes[self.find(cid)]
        return sorted(cls.nodes, key=cls.nodes.get)

    def rank(self, cid: int, n: ENode) -> int:
        return self.classes[self.find(cid)].nodes[n]

    def const_of(self, cid: int):
        return self.classes[self.find(cid)].const

    def class_of_ssa(self, ssa_id: int) -> int:
        return self.find(self.ssa_class[ssa_id])

    def tag(self, cid: int, ssa_id: int):
        cid = self.find(cid)
        prev = self.ssa_class.get(ssa_id)
        if prev is not None and self.find(prev) != cid:
            raise ValueError(f"ssa id {ssa_id} already tagged on class {prev}")
        self.classes[cid].ssa_ids.add(ssa_id)
        self.ssa_class[ssa_id] = cid

    def iter_nodes(self):
        for cid in self.class_ids():
            for n in self.nodes(cid):
                yield cid, n

    # -- debugging
    def to_json(self) -> dict:
        out = []
        for cid in self.class_ids():
            cls = self.classes[cid]
            out.append({
                "id": cid,
                "ssa_ids": sorted(cls.ssa_ids),
                "const": None if cls.const is None else list(cls.const),
                "nodes": [{"op": n.op, "data": _jsonable(n.data), "children": list(n.children)}
                          for n in self.nodes(cid)],
            })
        return {"classes": out}

    def dump(self) -> str:
        lines = []
        for cid in self.class_ids():
            cls = self.classes[cid]
            tags = f" ssa={sorted(cls.ssa_ids)}" if cls.ssa_ids else ""
            alts = " | ".join(
                n.label() + ("(" + ", ".join(f"c{self.find(c)}" for c in n.children) + ")" if n.children else "")
                for n in self.nodes(cid))
            lines.append(f"c{cid}{tags}: {alts}")
        return "\n".join(lines)

    def json_dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, (int, float, str)) or x is None:
        return x
    return repr(x)


# ------------------------------------------------------------- SSA -> e-graph

def add_expr(g: EGraph, e, ssa_classes: dict) -> int:
    if isinstance(e, SConst):
        if e.text:
            g.const_text.setdefault((e.type, e.value), e.text)
        return g.add(const_node(e.type, e.value))
    if isinstance(e, SFree):
        return g.add(ENode("var", (e.name, e.binding)))
    if isinstance(e, SRef):
        return g.find(ssa_classes[e.id])
    if isinstance(e, SLoad):
        kids = tuple(add_expr(g, i, ssa_classes) for i in e.indices)
        return g.add(ENode("load", (e.base, e.name, e.token), kids))
    if isinstance(e, SOp):
        kids = tuple(add_expr(g, a, ssa_classes) for a in e.args)
        return g.add(ENode(e.op, None, kids))
    if isinstance(e, SCall):
        kids = tuple(add_expr(g, a, ssa_classes) for a in e.args)
        return g.add(ENode("call", e.name, kids))
    raise TypeError(f"not an SSA expression: {e!r}")


def from_ssa(prog: SsaProgram, max_nodes: Optional[int] = None, fold_constants: bool = True):
    """Build the e-graph of a region; returns ``(graph, roots)``.

    Merge nodes are opaque leaves keyed by their SSA id.  The roots cover
    every statement slot that an emitted program must fill: assignment and
    store right-hand sides, store indices, and branch conditions.
    """
    g = EGraph(max_nodes=max_nodes, fold_constants=fold_constants)
    ssa_classes: dict[int, int] = {}
    for i in range(prog.n_ids):
        if i in prog.defs:
            cid = add_expr(g, prog.defs[i].value, ssa_classes)
        else:
            p = prog.phis[i]
            cid = g.add(ENode("phi", (p.kind, i, p.name, p.binding)))
        ssa_classes[i] = cid
        g.tag(cid, i)
    roots = []
    for r in prog.roots:
        cid = g.find(ssa_classes[r.ssa_id]) if r.ssa_id is not None else add_expr(g, r.expr, ssa_classes)
        roots.append(RootRef((r.path, r.part), r.ssa_id, cid))
    g.rebuild()
    roots = [RootRef(r.slot, r.ssa_id, g.find(r.cls)) for r in roots]
    return g, roots


__all__ = ["ENode", "EClass", "EGraph", "EGraphStats", "RootRef", "from_ssa", "const_node", "fold",
           "LoopAnchor"]
