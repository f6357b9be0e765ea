"""From an extraction back to statements.

Every original statement keeps its slot; right-hand sides, store indices and
branch conditions are replaced by references to temporaries ``_v<class>``.
A temporary is placed just before its first use in the innermost scope that
holds all of its uses.  With bulk loading, loads (and the address arithmetic
feeding them) instead move up to the earliest point where their operands and
memory state are available, crossing loop and block boundaries but never an
if/else branch; loads that land on the same point are sorted by their static
indices.

Program points are flat tuples.  A statement path is ``scope + (k,)`` and the
scopes below statement ``p`` are ``p + (0,)`` (loop body, then-branch, block)
and ``p + (1,)`` (else-branch).  Point ``scope + (k,)`` means "before statement
k"; lexicographic order is program order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import CodegenError
from .frontend.ast import (
    ArrayRef, Assign, Binary, Block, Call, Decl, Declarator, FloatConst, Fma, For, If, IntConst,
    KernelModule, Stmt, Unary, Var, walk_expr,
)
from .frontend.printer import print_expr, print_stmt
from .frontend.regions import Region, body_stmts
from .ssa import OUTER, SFree, SRef, SsaProgram

TRAPPING = ("load", "/", "%", "call")
BINOPS = ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||")
INT_RESULT = ("<", "<=", ">", ">=", "==", "!=", "&&", "||", "!")

TIER_COPY, TIER_ADDR, TIER_LOAD, TIER_OTHER = 0, 1, 2, 3
START = (0,)


def after(path: tuple) -> tuple:
    return path[:-1] + (path[-1] + 1,)


def lca_scope(points) -> tuple:
    scopes = [p[:-1] for p in points]
    first = scopes[0]
    n = min(len(s) for s in scopes)
    i = 0
    while i < n and all(s[i] == first[i] for s in scopes):
        i += 1
    return first[: i - (i % 2)]


def natural_key(text: str) -> tuple:
    return tuple((0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.findall(r"\d+|\D+", text))


@dataclass
class TempDef:
    name: str
    cls: int
    point: tuple
    expr: object = None
    type: str = "double"
    tier: int = TIER_OTHER
    deps: list = field(default_factory=list)  # TempDefs read by this one
    sort_key: tuple = ()
    copy_of: Optional[str] = None
    id: int = 0

    @property
    def scope_path(self) -> tuple:
        return self.point[:-1]

    @property
    def is_load(self) -> bool:
        return self.tier == TIER_LOAD


@dataclass
class EmitPlan:
    region: Region
    temp_defs: list  # emission order
    load_block: list
    rewritten_assigns: dict  # (path, part) -> Expr
    body: Block
    bulk: bool = False
    planner: object = field(default=None, repr=False)


def temp_prefix(names: set) -> str:
    """A temp prefix whose ``<prefix><digits>`` names cannot collide with ``names``."""
    for prefix in ("_v", "_sv", "_satv", "_satcc_v"):
        if not any(re.fullmatch(re.escape(prefix) + r"\d+(_\d+)?", n) for n in names):
            return prefix
    raise CodegenError("cannot find a collision-free temporary prefix")


def identifiers(m: KernelModule) -> set:
    return set(re.findall(r"[A-Za-z_]\w*", m.source)) if m.source else set()


class Planner:
    def __init__(self, g, x, prog: SsaProgram, roots, prefix: str = "_v"):
        self.g, self.x, self.prog, self.roots = g, x, prog, roots
        self.prefix = prefix
        self.find = g.find
        self.stmts: dict = {}
        self._index_stmts(prog.region.body, ())

    def _index_stmts(self, stmts, scope):
        for k, s in enumerate(stmts):
            p = scope + (k,)
            self.stmts[p] = s
            if isinstance(s, If):
                self._index_stmts(body_stmts(s.then), p + (0,))
                if s.orelse is not None:
                    self._index_stmts(body_stmts(s.orelse), p + (1,))
            elif isinstance(s, For):
                self._index_stmts(body_stmts(s.body), p + (0,))
            elif isinstance(s, Block):
                self._index_stmts(s.stmts, p + (0,))

    def scope_kind(self, scope: tuple) -> str:
        if not scope:
            return "region"
        s = self.stmts[scope[:-1]]
        if isinstance(s, For):
            return "loop"
        if isinstance(s, Block):
            return "block"
        return "then" if scope[-1] == 0 else "else"

    # -- class facts
    def node(self, c):
        return self.x.choice[self.find(c)]

    def kind(self, c) -> str:
        op = self.node(c).op
        if op == "const":
            return "const"
        if op in ("var", "phi"):
            return "leaf"
        return "temp"

    def token_point(self, tok: tuple) -> tuple:
        kind = tok[0]
        if kind == "init":
            return START
        if kind == "store":
            return after(self.prog.defs[tok[1]].path)
        if kind == "loop":
            return tok[1] + (0, 0)
        return after(tok[1])  # decl / if / exit

    def leaf_def_point(self, n) -> tuple:
        if n.op == "var":
            return START
        kind, pid = n.data[0], n.data[1]
        path = self.prog.phis[pid].path
        return path + (0, 0) if kind == "loop" else after(path)

    def leaf_name_binding(self, n):
        if n.op == "var":
            name, binding = n.data
            return name, binding, SFree(name, binding)
        _, pid, name, binding = n.data
        return name, binding, SRef(pid)

    def leaf_valid_at(self, n, point: tuple) -> bool:
        snap = self.prog.snapshots.get(point)
        if snap is None:
            return False
        name, binding, expected = self.leaf_name_binding(n)
        scopes, values, _ = snap
        b = (name, OUTER)
        for scope in reversed(scopes):
            if name in scope:
                b = scope[name]
                break
        if b != binding:
            return False
        return values.get(b, SFree(name, b)) == expected

    def type_of_binding(self, binding) -> str:
        return "double" if self.prog.info(binding).is_float else "int"

    def must_execute(self, scope: tuple, point: tuple) -> bool:
        """Does reaching ``scope`` imply reaching ``point`` (assuming loops iterate)?"""
        s = point[:-1]
        i = len(scope)
        while i < len(s):
            st = self.stmts[s[: i + 1]]
            if isinstance(st, If):
                return False
            i += 2
        return True

    def earliest(self, ready: tuple, latest: tuple) -> tuple:
        scope = latest[:-1]
        while True:
            if ready[: len(scope)] == scope:
                j = ready[len(scope)]
                return scope + ((j if len(ready) == len(scope) + 1 else j + 1),)
            if self.scope_kind(scope) in ("then", "else", "region"):
                return scope + (0,)
            scope = scope[:-2]

    @staticmethod
    def reaches(ready: tuple, point: tuple) -> bool:
        """Is ``ready`` an available position at ``point``: earlier, in an enclosing scope."""
        rs = ready[:-1]
        if point[: len(rs)] != rs:
            return False
        return point[len(rs)] >= ready[-1]

    # -- planning
    def plan(self, bulk: bool) -> EmitPlan:
        find = self.find
        choice = {find(c): n for c, n in self.x.choice.items()}
        root_cls = {}
        for r in self.roots:
            root_cls[r.slot] = find(r.cls)

        # postorder over the chosen DAG
        post, seen = [], set()
        for c in dict.fromkeys(root_cls.values()):
            stack = [(c, False)]
            while stack:
                c, done = stack.pop()
                if done:
                    post.append(c)
                    continue
                if c in seen:
                    continue
                seen.add(c)
                stack.append((c, True))
                for k in reversed(choice[c].children):
                    k = find(k)
                    if k not in seen:
                        stack.append((k, False))

        ready, types, feeds_load = {}, {}, set()
        for c in post:
            n = choice[c]
            kids = [find(k) for k in n.children]
            if n.op == "const":
                ready[c] = START
                types[c] = n.data[0]
                continue
            if n.op in ("var", "phi"):
                ready[c] = self.leaf_def_point(n)
                types[c] = self.type_of_binding(self.leaf_name_binding(n)[1])
                continue
            r = START
            for k in kids:
                r = max(r, ready[k])
            if n.op == "load":
                r = max(r, self.token_point(n.data[2]))
                types[c] = self.type_of_binding(n.data[0])
            elif n.op == "call":
                ret = self.prog.region.call_types.get(n.data)
                if ret is not None:
                    types[c] = "double" if ("double" in ret or "float" in ret) else "int"
                else:
                    types[c] = "int" if n.data == "abs" and all(types[k] == "int" for k in kids) else "double"
            elif n.op in INT_RESULT:
                types[c] = "int"
            else:
                types[c] = "double" if any(types[k] == "double" for k in kids) else "int"
            ready[c] = r
        for c in reversed(post):
            n = choice[c]
            if n.op == "load" or c in feeds_load:
                for k in n.children:
                    k = find(k)
                    if choice[k].op not in ("load", "const", "var", "phi"):
                        feeds_load.add(k)

        # use sites: (point, key); key is ('root', slot) or ('temp', temp id)
        sites: dict = {c: [] for c in post}
        for slot, c in root_cls.items():
            sites[c].append((slot[0], ("root", slot)))
        temps: list[TempDef] = []
        binding_of: dict = {}  # (class, site key) -> TempDef or inline expr
        counter: dict = {}

        def new_temp(c, point, tier, copy_of=None) -> TempDef:
            i = counter.get(c, 0)
            counter[c] = i + 1
            name = f"{self.prefix}{c}" if i == 0 else f"{self.prefix}{c}_{i}"
            t = TempDef(name, c, point, type=types[c], tier=tier, copy_of=copy_of, id=len(temps))
            temps.append(t)
            return t

        def place(c, group, trapping, tier):
            points = [p for p, _ in group]
            scope = lca_scope(points)
            pos = min(p[len(scope)] for p in points)
            if trapping and not any(self.must_execute(scope, p) for p in points):
                parts: dict = {}
                for site in group:
                    parts.setdefault(site[0][: len(scope) + 2], []).append(site)
                for sub in parts.values():
                    place(c, sub, trapping, tier)
                return
            point = scope + (pos,)
            if bulk and tier in (TIER_LOAD, TIER_ADDR):
                point = self.earliest(ready[c], point)
            if not self.reaches(ready[c], point):
                raise CodegenError(f"class {c} used at {point} before it is available at {ready[c]}")
            t = new_temp(c, point, tier)
            for _, key in group:
                binding_of[(c, key)] = t

        for c in reversed(post):
            n = choice[c]
            group = sites[c]
            if not group:
                continue
            if n.op == "const":
                lit = self.literal(n)
                for _, key in group:
                    binding_of[(c, key)] = lit
            elif n.op in ("var", "phi"):
                name = self.leaf_name_binding(n)[0]
                if all(self.leaf_valid_at(n, p) for p, _ in group):
                    for _, key in group:
                        binding_of[(c, key)] = Var(name)
                else:
                    point = self.leaf_def_point(n)
                    if not all(self.reaches(point, p) for p, _ in group):
                        raise CodegenError(f"no valid copy point for '{name}'")
                    t = new_temp(c, point, TIER_COPY, copy_of=name)
                    t.expr = Var(name)
                    for _, key in group:
                        binding_of[(c, key)] = t
            else:
                tier = TIER_LOAD if n.op == "load" else TIER_ADDR if c in feeds_load else TIER_OTHER
                start = len(temps)
                place(c, group, n.op in TRAPPING, tier)
                for t in temps[start:]:
                    for k in n.children:
                        k = find(k)
                        sites[k].append((t.point, ("temp", t.id)))

        def ref(c, key):
            b = binding_of[(c, key)]
            return Var(b.name) if isinstance(b, TempDef) else b

        for t in temps:
            if t.copy_of is not None:
                continue
            n = choice[t.cls]
            key = ("temp", t.id)
            args = [ref(find(k), key) for k in n.children]
            t.deps = [binding_of[(find(k), key)] for k in n.children
                      if isinstance(binding_of[(find(k), key)], TempDef)]
            t.expr = self.build(n, args)
            if n.op == "load":
                t.sort_key = (n.data[1],) + tuple(natural_key(self.text_of(find(k), choice)) for k in n.children)

        rewritten = {slot: ref(c, ("root", slot)) for slot, c in root_cls.items()}
        at_point: dict = {}
        for t in temps:
            at_point.setdefault(t.point, []).append(t)
        ordered_at = {p: self.order(ts) for p, ts in at_point.items()}
        by_scope: dict = {}
        for p in sorted(ordered_at):
            by_scope.setdefault(p[:-1], []).extend(ordered_at[p])

        body = Block(tuple(self.build_scope((), self.prog.region.body, ordered_at, by_scope, rewritten)))
        emission = []
        for p in sorted(ordered_at):
            emission.extend(ordered_at[p])
        loads = [t for t in emission if t.is_load]
        return EmitPlan(self.prog.region, emission, loads, rewritten, body, bulk, self)

    @staticmethod
    def order(ts: list) -> list:
        """Operands first; then copies, address arithmetic, sorted loads, the rest."""
        ids = {t.id for t in ts}
        indeg = {t.id: 0 for t in ts}
        users: dict = {t.id: [] for t in ts}
        for t in ts:
            for d in t.deps:
                if d.id in ids:
                    indeg[t.id] += 1
                    users[d.id].append(t)
        by_id = {t.id: t for t in ts}

        def prio(t):
            return (t.tier, t.sort_key if t.tier == TIER_LOAD else (), t.cls, t.id)

        ready = sorted((by_id[i] for i, d in indeg.items() if d == 0), key=prio)
        out = []
        while ready:
            t = ready.pop(0)
            out.append(t)
            for u in users[t.id]:
                indeg[u.id] -= 1
                if indeg[u.id] == 0:
                    ready.append(u)
            ready.sort(key=prio)
        if len(out) != len(ts):
            raise CodegenError("cyclic temporary dependencies")
        return out

    def literal(self, n):
        t, v = n.data
        text = self.g.const_text.get((t, v))
        if t == "int":
            return IntConst(v, text or str(v))
        if not text:
            text = repr(float(v))
            if text in ("inf", "-inf", "nan"):
                raise CodegenError(f"non-finite constant {text}")
        return FloatConst(v, text)

    @staticmethod
    def build(n, args):
        op = n.op
        if op in BINOPS:
            return Binary(op, args[0], args[1])
        if op == "neg":
            return Unary("-", args[0])
        if op == "!":
            return Unary("!", args[0])
        if op == "fma":
            return Fma(args[0], args[1], args[2])
        if op == "load":
            return ArrayRef(n.data[1], tuple(args))
        if op == "call":
            return Call(n.data, tuple(args))
        raise CodegenError(f"cannot emit operator {op}")

    def text_of(self, c, choice, memo=None) -> str:
        n = choice[c]
        if n.op == "const":
            return print_expr(self.literal(n))
        if n.op in ("var", "phi"):
            return self.leaf_name_binding(n)[0]
        args = [Var(self.text_of(self.find(k), choice)) for k in n.children]
        return print_expr(self.build(n, args))

    # -- statements
    def build_scope(self, scope, stmts, ordered_at, by_scope, rewritten) -> list:
        out: list = []
        decls: dict = {}
        for t in by_scope.get(scope, ()):
            decls.setdefault(t.type, []).append(Declarator(t.name))
        for ty in ("double", "int"):
            if ty in decls:
                out.append(Decl(ty, tuple(decls[ty])))

        def emit_point(p):
            for t in ordered_at.get(p, ()):
                out.append(Assign(Var(t.name), "=", t.expr))

        for k, s in enumerate(stmts):
            p = scope + (k,)
            emit_point(p)
            out.append(self.rewrite(s, p, ordered_at, by_scope, rewritten))
        emit_point(scope + (len(stmts),))
        return out

    def rewrite(self, s: Stmt, p, ordered_at, by_scope, rewritten) -> Stmt:
        sub = lambda scope, stmts: Block(tuple(self.build_scope(scope, stmts, ordered_at, by_scope, rewritten)))
        if isinstance(s, Decl):
            ds = tuple(Declarator(d.name, d.dims, rewritten.get((p, ("decl", k)), d.init))
                       for k, d in enumerate(s.declarators))
            return Decl(s.type, ds, pragmas=s.pragmas)
        if isinstance(s, Assign):
            value = rewritten[(p, "value")]
            t = s.target
            if isinstance(t, ArrayRef):
                t = ArrayRef(t.base, tuple(rewritten[(p, ("index", k))] for k in range(len(t.indices))))
            return Assign(t, "=", value, pragmas=s.pragmas)
        if isinstance(s, If):
            orelse = None if s.orelse is None else sub(p + (1,), body_stmts(s.orelse))
            return If(rewritten[(p, "cond")], sub(p + (0,), body_stmts(s.then)), orelse, pragmas=s.pragmas)
        if isinstance(s, For):
            return For(s.init, s.cond, s.step, sub(p + (0,), body_stmts(s.body)), pragmas=s.pragmas)
        if isinstance(s, Block):
            return Block(sub(p + (0,), s.stmts).stmts, pragmas=s.pragmas)
        raise CodegenError(f"cannot rewrite {type(s).__name__}")


def plan_temporaries(x, prog: SsaProgram, g, roots, prefix: str = "_v") -> EmitPlan:
    return Planner(g, x, prog, roots, prefix).plan(bulk=False)


def bulk_load_reorder(plan: EmitPlan, prog: SsaProgram = None) -> EmitPlan:
    return plan.planner.plan(bulk=True)


# ------------------------------------------------------------------- emission


def region_has_stmt_pragmas(region: Region) -> bool:
    """Pragmas on anything but loops inside a region cannot be re-emitted in place."""
    def walk(s):
        if s.pragmas and not isinstance(s, For):
            return True
        if isinstance(s, Block):
            return any(walk(c) for c in s.stmts)
        if isinstance(s, If):
            return walk(s.then) or (s.orelse is not None and walk(s.orelse))
        if isinstance(s, For):
            return walk(s.body)
        return False
    body = region.anchor.body
    if body.pragmas:
        return True
    return any(walk(s) for s in region.body)


def render_body(body: Block, source: str, start: int) -> str:
    line_start = source.rfind("\n", 0, start) + 1
    base = re.match(r"[ \t]*", source[line_start:]).group(0)
    lines = print_stmt(body, 0)
    out = [lines[0]]
    for ln in lines[1:]:
        out.append(ln if ln.lstrip().startswith("#") else base + ln)
    return "\n".join(out)


def emit(m: KernelModule, plans: dict) -> str:
    """Original text with each planned region body replaced; everything else byte-identical."""
    src = m.source
    edits = []
    for region, plan in plans.items() if isinstance(plans, dict) else plans:
        span = region.anchor.body.span
        if span is None:
            raise CodegenError("region body has no source span")
        edits.append((span[0], span[1], render_body(plan.body, src, span[0])))
    edits.sort()
    out, pos = [], 0
    for a, b, text in edits:
        if a < pos:
            raise CodegenError("overlapping regions")
        out.append(src[pos:a])
        out.append(text)
        pos = b
    out.append(src[pos:])
    return "".join(out)


def count_loads(stmts) -> int:
    """Static number of array reads in ``stmts`` (compound stores read their target)."""
    n = 0

    def expr(e):
        nonlocal n
        if e is None:
            return
        for x in walk_expr(e):
            if isinstance(x, ArrayRef):
                n += 1

    def walk(s):
        nonlocal n
        if isinstance(s, Decl):
            for d in s.declarators:
                expr(d.init)
        elif isinstance(s, Assign):
            if isinstance(s.target, ArrayRef):
                for i in s.target.indices:
                    expr(i)
                if s.op != "=":
                    n += 1
            expr(s.value)
        elif isinstance(s, If):
            expr(s.cond)
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)
        elif isinstance(s, For):
            if s.init is not None:
                walk(s.init)
            expr(s.cond)
            if s.step is not None:
                walk(s.step)
            walk(s.body)
        elif isinstance(s, Block):
            for c in s.stmts:
                walk(c)

    for s in stmts:
        walk(s)
    return n


def count_stores(stmts) -> int:
    n = 0

    def walk(s):
        nonlocal n
        if isinstance(s, Assign) and isinstance(s.target, ArrayRef):
            n += 1
        elif isinstance(s, If):
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)
        elif isinstance(s, For):
            walk(s.body)
        elif isinstance(s, Block):
            for c in s.stmts:
                walk(c)

    for s in stmts:
        walk(s)
    return n
