"""Reference interpreter for the kernel language and the SSA form, plus the
differential tester.

The AST interpreter compiles statements into Python closures once, with
names resolved to frame slots at compile time; evaluation order is strict
left-to-right.  Integers follow C (truncating division, truncation on
assignment to an int); ``fma`` is evaluated as a separate multiply and add.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from . import semantics
from .errors import EvalError
from .frontend.ast import (
    ArrayRef, Assign, Binary, Block, Call, CallStmt, Decl, FloatConst, Fma, For, FunctionDef, If,
    IntConst, KernelModule, Return, Stmt, Unary, Var,
)
from .frontend.regions import VarInfo, body_stmts, const_dim
from .ssa import (
    LoopAnchor, SCall, SConst, SFree, SLoad, SOp, SRef, ScalarTarget, SsaProgram,
)

DEFAULT_DIM = 16
MAX_STEPS = 5_000_000


@dataclass
class ArrayValue:
    dims: tuple
    data: list
    elem: str = "double"  # 'double' | 'int'

    def copy(self) -> "ArrayValue":
        return ArrayValue(self.dims, list(self.data), self.elem)

    def flat_index(self, idx) -> int:
        if len(idx) != len(self.dims):
            raise EvalError(f"expected {len(self.dims)} indices, got {len(idx)}")
        flat = 0
        for i, d in zip(idx, self.dims):
            if not semantics.is_int(i):
                raise EvalError(f"non-integer index {i!r}")
            if not 0 <= i < d:
                raise EvalError(f"index {i} out of bounds [0, {d})")
            flat = flat * d + i
        return flat


@dataclass
class Environment:
    scalars: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)

    def copy(self) -> "Environment":
        return Environment(dict(self.scalars), {k: v.copy() for k, v in self.arrays.items()})


def _is_double(t: str) -> bool:
    return "double" in t or "float" in t


def convert(value, ty: str):
    if _is_double(ty):
        return float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise EvalError(f"cannot convert {value} to int")
        return int(math.trunc(value))
    return int(value)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0

    def tick(self):
        self.n += 1
        if self.n > MAX_STEPS:
            raise EvalError("step limit exceeded (non-terminating loop?)")


# ------------------------------------------------------------ AST compiler

class _Compiler:
    """Resolves names to slots and builds closures over a frame list."""

    def __init__(self, counter: _Counter):
        self.scopes: list[dict] = [{}]
        self.n_slots = 0
        self.counter = counter
        self.module: Optional[KernelModule] = None  # resolves calls to functions defined in it

    def declare(self, name: str, info: VarInfo, dims=None) -> int:
        slot = self.n_slots
        self.n_slots += 1
        self.scopes[-1][name] = (slot, info, dims)
        return slot

    def lookup(self, name: str):
        for s in reversed(self.scopes):
            if name in s:
                return s[name]
        raise EvalError(f"unbound name '{name}'")

    # -- expressions: return (closure, static type)
    def expr(self, e):
        if isinstance(e, IntConst):
            v = e.value
            return (lambda fr: v), "int"
        if isinstance(e, FloatConst):
            v = float(e.value)
            return (lambda fr: v), "double"
        if isinstance(e, Var):
            slot, info, _ = self.lookup(e.name)
            if info.is_array:
                raise EvalError(f"array '{e.name}' used as a scalar")
            return (lambda fr: fr[slot]), ("double" if info.is_float else "int")
        if isinstance(e, ArrayRef):
            get = self.array_index(e)
            _, info, _ = self.lookup(e.base)
            return (lambda fr: (lambda a, k: a.data[k])(*get(fr))), ("double" if info.is_float else "int")
        if isinstance(e, Unary):
            f, t = self.expr(e.operand)
            if e.op == "-":
                return (lambda fr: -f(fr)), t
            if e.op == "+":
                return f, t
            return (lambda fr: 0 if f(fr) else 1), "int"
        if isinstance(e, Binary):
            return self.binary(e.op, e.left, e.right)
        if isinstance(e, Fma):
            fa, ta = self.expr(e.addend)
            fb, tb = self.expr(e.factor1)
            fc, tc = self.expr(e.factor2)
            t = "double" if "double" in (ta, tb, tc) else "int"
            if t == "int":
                return (lambda fr: fa(fr) + fb(fr) * fc(fr)), t
            return (lambda fr: (lambda a, b, c: float(a) + float(b) * float(c))(fa(fr), fb(fr), fc(fr))), t
        if isinstance(e, Call):
            args = [self.expr(a) for a in e.args]
            fs = [f for f, _ in args]
            name = e.name
            if name not in semantics.MATH_FUNCS:
                return self.user_call(e)
            t = "int" if name in semantics.INT_FUNCS and all(t == "int" for _, t in args) else "double"
            return (lambda fr: semantics.call(name, [f(fr) for f in fs])), t
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    def user_call(self, e: Call):
        callee = None
        if self.module is not None:
            callee = next((f for f in self.module.functions() if f.name == e.name and f.body is not None), None)
        if callee is None:
            raise EvalError(f"unknown function '{e.name}'")
        if len(callee.params) != len(e.args):
            raise EvalError(f"'{e.name}' expects {len(callee.params)} arguments")
        getters = []
        for p, a in zip(callee.params, e.args):
            if p.dims:
                if not isinstance(a, Var):
                    raise EvalError(f"array argument of '{e.name}' must be an array name")
                slot = self.lookup(a.name)[0]
                getters.append((p, True, lambda fr, slot=slot: fr[slot]))
            else:
                getters.append((p, False, self.expr(a)[0]))
        module, glob = self.module, list(self.scopes[0].items())

        def call(fr):
            env = Environment()
            for gname, (slot, info, _) in glob:
                (env.arrays if info.is_array else env.scalars)[gname] = fr[slot]
            for p, is_array, get in getters:
                if is_array:
                    env.arrays[p.name] = get(fr)
                else:
                    env.scalars[p.name] = convert(get(fr), p.type)
            try:
                return run_function(module, e.name, env)
            except RecursionError:
                raise EvalError(f"recursion too deep in '{e.name}'") from None

        return call, ("double" if _is_double(callee.ret_type) else "int")

    def binary(self, op, left, right):
        fa, ta = self.expr(left)
        fb, tb = self.expr(right)
        if op == "&&":
            return (lambda fr: 1 if (fa(fr) and fb(fr)) else 0), "int"
        if op == "||":
            return (lambda fr: 1 if (fa(fr) or fb(fr)) else 0), "int"
        if op in semantics.COMPARE:
            return (lambda fr: semantics.binary(op, fa(fr), fb(fr))), "int"
        if ta == "int" and tb == "int":
            if op == "+":
                return (lambda fr: fa(fr) + fb(fr)), "int"
            if op == "-":
                return (lambda fr: fa(fr) - fb(fr)), "int"
            if op == "*":
                return (lambda fr: fa(fr) * fb(fr)), "int"
            return (lambda fr: semantics.binary(op, fa(fr), fb(fr))), "int"
        if op == "+":
            return (lambda fr: float(fa(fr)) + fb(fr)), "double"
        if op == "-":
            return (lambda fr: float(fa(fr)) - fb(fr)), "double"
        if op == "*":
            return (lambda fr: float(fa(fr)) * fb(fr)), "double"
        return (lambda fr: semantics.binary(op, float(fa(fr)), float(fb(fr)))), "double"

    def array_index(self, e: ArrayRef):
        slot, info, _ = self.lookup(e.base)
        if not info.is_array:
            raise EvalError(f"'{e.base}' is not an array")
        idx = [self.expr(i)[0] for i in e.indices]
        if len(idx) == 1:
            i0 = idx[0]
            return lambda fr: (lambda a: (a, a.flat_index((i0(fr),))))(fr[slot])
        return lambda fr: (lambda a: (a, a.flat_index(tuple(f(fr) for f in idx))))(fr[slot])

    # -- statements: return closure fr -> None
    def stmts(self, ss) -> callable:
        fs = [self.stmt(s) for s in ss]

        def run(fr):
            for f in fs:
                f(fr)
        return run

    def stmt(self, s: Stmt):
        tick = self.counter.tick
        if isinstance(s, Decl):
            acts = []
            for d in s.declarators:
                dims = tuple(const_dim(x) if x is not None else None for x in d.dims)
                info = VarInfo(s.type, dims)
                init = self.expr(d.init)[0] if d.init is not None else None
                slot = self.declare(d.name, info)
                ty = s.type
                if info.is_array:
                    if any(x is None for x in dims):
                        raise EvalError(f"non-constant dimension for '{d.name}'")
                    n = math.prod(dims)
                    zero = 0.0 if _is_double(ty) else 0
                    acts.append(lambda fr, slot=slot, dims=dims, n=n, zero=zero, ty=ty:
                                fr.__setitem__(slot, ArrayValue(dims, [zero] * n,
                                                                "double" if _is_double(ty) else "int")))
                elif init is not None:
                    acts.append(lambda fr, slot=slot, init=init, ty=ty: fr.__setitem__(slot, convert(init(fr), ty)))
                else:
                    acts.append(lambda fr, slot=slot, ty=ty: fr.__setitem__(slot, 0.0 if _is_double(ty) else 0))

            def run(fr):
                tick()
                for a in acts:
                    a(fr)
            return run
        if isinstance(s, Assign):
            value = self.expr(s.desugared())[0]
            t = s.target
            if isinstance(t, Var):
                slot, info, _ = self.lookup(t.name)
                if info.is_array:
                    raise EvalError(f"assignment to array '{t.name}'")
                ty = info.type

                def run(fr):
                    tick()
                    fr[slot] = convert(value(fr), ty)
                return run
            get = self.array_index(t)

            def run(fr):
                tick()
                a, k = get(fr)
                v = value(fr)
                a.data[k] = float(v) if a.elem == "double" else convert(v, "int")
            return run
        if isinstance(s, If):
            cond = self.expr(s.cond)[0]
            self.scopes.append({})
            then = self.stmts(body_stmts(s.then))
            self.scopes.pop()
            self.scopes.append({})
            orelse = self.stmts(body_stmts(s.orelse)) if s.orelse is not None else None
            self.scopes.pop()

            def run(fr):
                tick()
                if cond(fr):
                    then(fr)
                elif orelse is not None:
                    orelse(fr)
            return run
        if isinstance(s, For):
            self.scopes.append({})
            init = self.stmt(s.init) if s.init is not None else None
            cond = self.expr(s.cond)[0] if s.cond is not None else (lambda fr: 1)
            self.scopes.append({})
            body = self.stmts(body_stmts(s.body))
            self.scopes.pop()
            step = self.stmt(s.step) if s.step is not None else None
            self.scopes.pop()

            def run(fr):
                if init is not None:
                    init(fr)
                while cond(fr):
                    tick()
                    body(fr)
                    if step is not None:
                        step(fr)
            return run
        if isinstance(s, Block):
            self.scopes.append({})
            inner = self.stmts(s.stmts)
            self.scopes.pop()
            return inner
        if isinstance(s, CallStmt):
            f = self.expr(s.call)[0]
            return lambda fr: (tick(), f(fr))
        if isinstance(s, Return):
            f = self.expr(s.value)[0] if s.value is not None else (lambda fr: None)

            def run(fr):
                raise _Return(f(fr))
            return run
        raise EvalError(f"cannot execute {type(s).__name__}")


def _bind_env(c: _Compiler, env: Environment) -> list:
    frame_init = []
    for name, v in env.scalars.items():
        ty = "int" if semantics.is_int(v) else "double"
        slot = c.declare(name, VarInfo(ty))
        frame_init.append((slot, v))
    for name, a in env.arrays.items():
        slot = c.declare(name, VarInfo(a.elem, a.dims))
        frame_init.append((slot, a))
    return frame_init


def eval_region(body, env: Environment) -> Environment:
    """Run ``body`` on a copy of ``env``; returns the post-state (scalars and arrays)."""
    env = env.copy()
    c = _Compiler(_Counter())
    init = _bind_env(c, env)
    c.scopes.append({})
    run = c.stmts(tuple(body))
    fr = [None] * c.n_slots
    for slot, v in init:
        fr[slot] = v
    try:
        run(fr)
    except _Return:
        pass
    out = Environment()
    for name, (slot, info, _) in c.scopes[0].items():
        if info.is_array:
            out.arrays[name] = fr[slot]
        else:
            out.scalars[name] = fr[slot]
    return out


# --------------------------------------------------------- module execution

def module_globals(m: KernelModule) -> list:
    out = []
    for it in m.items:
        if isinstance(it, Decl):
            for d in it.declarators:
                dims = tuple(const_dim(x) if x is not None else None for x in d.dims)
                out.append((d.name, VarInfo(it.type, dims), d.init))
    return out


def run_function(m: KernelModule, fname: str, env: Environment):
    """Call ``fname`` with arguments and globals taken from ``env`` (mutated in place).

    Returns the function's return value (None for void).
    """
    f = next((x for x in m.functions() if x.name == fname and x.body is not None), None)
    if f is None:
        raise EvalError(f"no function '{fname}'")
    counter = _Counter()
    c = _Compiler(counter)
    c.module = m
    slots = []
    for name, info, _ in module_globals(m):
        slots.append((name, c.declare(name, info)))
    c.scopes.append({})
    for p in f.params:
        dims = tuple(const_dim(x) if x is not None else None for x in p.dims)
        slots.append((p.name, c.declare(p.name, VarInfo(p.type, dims))))
    c.scopes.append({})
    run = c.stmts(f.body.stmts)
    fr = [None] * c.n_slots
    for name, slot in slots:
        if name in env.arrays:
            fr[slot] = env.arrays[name]
        elif name in env.scalars:
            fr[slot] = env.scalars[name]
        else:
            raise EvalError(f"no value for '{name}'")
    try:
        run(fr)
        result = None
    except _Return as r:
        result = r.value
    for name, slot in slots[: len(module_globals(m))]:
        if name in env.scalars:
            env.scalars[name] = fr[slot]
    return result


# ----------------------------------------------------------- diff testing

@dataclass
class DiffReport:
    n_trials: int = 0
    max_rel_err: float = 0.0
    max_abs_err: float = 0.0
    failures: list = field(default_factory=list)  # (seed, location, got, want)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"n_trials": self.n_trials, "max_rel_err": self.max_rel_err, "max_abs_err": self.max_abs_err,
                "skipped": self.skipped, "ok": self.ok,
                "failures": [list(map(_jsonable, f)) for f in self.failures[:50]]}


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x if isinstance(x, (int, float, str)) or x is None else repr(x)


def random_env(m: KernelModule, fname: str, rng: random.Random, default_dim: int = DEFAULT_DIM) -> Environment:
    """Doubles uniform in [-10, 10]; int scalars (bounds) in 1..8; int arrays in 0..7."""
    f = next(x for x in m.functions() if x.name == fname)
    env = Environment()
    entries = [(name, info) for name, info, _ in module_globals(m)]
    entries += [(p.name, VarInfo(p.type, tuple(const_dim(x) if x is not None else None for x in p.dims)))
                for p in f.params]
    for name, info in entries:
        if info.is_array:
            dims = tuple(default_dim if d is None else d for d in info.dims)
            n = math.prod(dims)
            if info.is_float:
                data = [rng.uniform(-10.0, 10.0) for _ in range(n)]
                env.arrays[name] = ArrayValue(dims, data, "double")
            else:
                env.arrays[name] = ArrayValue(dims, [rng.randint(0, 7) for _ in range(n)], "int")
        elif info.is_float:
            env.scalars[name] = rng.uniform(-10.0, 10.0)
        else:
            env.scalars[name] = rng.randint(1, 8)
    return env


def _compare(rep: DiffReport, seed, loc, got, want, tol_rel):
    if isinstance(want, float) and math.isnan(want) or isinstance(got, float) and math.isnan(got):
        if not (isinstance(want, float) and isinstance(got, float) and math.isnan(want) and math.isnan(got)):
            rep.failures.append((seed, loc, got, want))
        return
    if want == got:
        return
    if isinstance(want, float) and math.isinf(want) or isinstance(got, float) and math.isinf(got):
        rep.failures.append((seed, loc, got, want))
        return
    d = abs(got - want)
    rel = d / abs(want) if want != 0 else (0.0 if d <= 1e-12 else math.inf)
    rep.max_abs_err = max(rep.max_abs_err, d)
    rep.max_rel_err = max(rep.max_rel_err, rel if d > 1e-12 else 0.0)
    if d > tol_rel * abs(want) and d > 1e-12:
        rep.failures.append((seed, loc, got, want))


def entry_functions(m: KernelModule) -> list[str]:
    from .frontend.regions import find_regions
    names = []
    for r in find_regions(m):
        if r.function and r.function not in names:
            names.append(r.function)
    if not names:
        names = [f.name for f in m.functions() if f.body is not None]
    return names


def diff_test(original: KernelModule, optimized: KernelModule, trials: int = 100, tol_rel: float = 1e-6,
              seed: int = 0, entry: Optional[str] = None) -> DiffReport:
    """Run both modules' entry functions on identical seeded inputs and compare
    every array element, global scalar and return value."""
    rep = DiffReport()
    names = [entry] if entry else entry_functions(original)
    for fname in names:
        for t in range(trials):
            trial_seed = seed * 1_000_003 + t
            env = random_env(original, fname, random.Random(trial_seed))
            want_env, got_env = env.copy(), env.copy()
            try:
                want_ret = run_function(original, fname, want_env)
            except EvalError:
                rep.skipped += 1
                continue
            rep.n_trials += 1
            try:
                got_ret = run_function(optimized, fname, got_env)
            except EvalError as e:
                rep.failures.append((trial_seed, f"{fname}: raised", repr(e), "no error"))
                continue
            if want_ret is not None or got_ret is not None:
                _compare(rep, trial_seed, f"{fname}: return", got_ret, want_ret, tol_rel)
            for name, s in want_env.scalars.items():
                _compare(rep, trial_seed, f"{fname}: {name}", got_env.scalars.get(name), s, tol_rel)
            for name, a in want_env.arrays.items():
                b = got_env.arrays[name]
                for k, (x, y) in enumerate(zip(a.data, b.data)):
                    _compare(rep, trial_seed, f"{fname}: {name}[{k}]", y, x, tol_rel)
    return rep


# ------------------------------------------------------------ SSA evaluator

def eval_ssa(prog: SsaProgram, env: Environment) -> Environment:
    """Evaluate a region through its SSA form.

    Scalars come only from value-refs; arrays are real memory updated by the
    store events in order.  The final value of each scalar is the SSA value
    reaching the end of the region.
    """
    env = env.copy()
    values: dict = {}
    defs_at: dict = {}
    for d in prog.defs.values():
        defs_at.setdefault(d.path, []).append(d)
    counter = _Counter()

    def ev(e):
        if isinstance(e, SConst):
            return e.value
        if isinstance(e, SFree):
            if e.name not in env.scalars:
                raise EvalError(f"unbound name '{e.name}'")
            return env.scalars[e.name]
        if isinstance(e, SRef):
            return values[e.id]
        if isinstance(e, SLoad):
            a = arrays[e.base]
            return a.data[a.flat_index(tuple(ev(i) for i in e.indices))]
        if isinstance(e, SOp):
            if e.op == "&&":
                return int(bool(ev(e.args[0])) and bool(ev(e.args[1])))
            if e.op == "||":
                return int(bool(ev(e.args[0])) or bool(ev(e.args[1])))
            args = [ev(a) for a in e.args]
            if e.op == "fma":
                return semantics.fma(*args)
            if len(args) == 1:
                return semantics.unary(e.op, args[0])
            return semantics.binary(e.op, args[0], args[1])
        if isinstance(e, SCall):
            return semantics.call(e.name, [ev(a) for a in e.args])
        raise EvalError(f"bad SSA expression {e!r}")

    arrays: dict = {}
    for b, info in prog.bindings.items():
        if info.is_array and b[1] == "outer":
            arrays[b] = env.arrays[b[0]]

    def run_def(d):
        v = ev(d.value)
        t = d.target
        if isinstance(t, ScalarTarget):
            values[d.id] = convert(v, prog.info(t.binding).type)
        else:
            idx = tuple(ev(i) for i in t.indices)
            a = arrays[t.base]
            v = float(v) if a.elem == "double" else convert(v, "int")
            a.data[a.flat_index(idx)] = v
            values[d.id] = v

    def run_stmts(stmts, scope):
        for k, s in enumerate(stmts):
            run_stmt(s, scope + (k,))

    def run_stmt(s, path):
        counter.tick()
        if isinstance(s, Decl):
            for k, dd in enumerate(s.declarators):
                info = prog.info((dd.name, ("decl", path, k)))
                if info.is_array:
                    zero = 0.0 if info.is_float else 0
                    arrays[(dd.name, ("decl", path, k))] = ArrayValue(
                        info.dims, [zero] * math.prod(info.dims), "double" if info.is_float else "int")
            for d in defs_at.get(path, ()):
                run_def(d)
        elif isinstance(s, Assign):
            for d in defs_at.get(path, ()):
                run_def(d)
        elif isinstance(s, If):
            info = prog.ifs[path]
            taken = bool(ev(info.cond))
            if taken:
                run_stmts(body_stmts(s.then), path + (0,))
            elif s.orelse is not None:
                run_stmts(body_stmts(s.orelse), path + (1,))
            for pid in info.phis:
                phi = prog.phis[pid]
                values[pid] = ev(phi.branches[0] if taken else phi.branches[1])
        elif isinstance(s, For):
            loop = prog.loops[path]
            for i in loop.init_defs:
                run_def(prog.defs[i])
            for pid in loop.phis:
                values[pid] = ev(prog.phis[pid].branches[0])
            while loop.cond is None or ev(loop.cond):
                counter.tick()
                run_stmts(body_stmts(s.body), path + (0,))
                for i in loop.step_defs:
                    run_def(prog.defs[i])
                nxt = [ev(prog.phis[pid].branches[1]) for pid in loop.phis]
                for pid, v in zip(loop.phis, nxt):
                    values[pid] = v
            for pid in loop.exits:
                values[pid] = ev(prog.phis[pid].branches[0])
        elif isinstance(s, Block):
            run_stmts(s.stmts, path + (0,))
        else:
            raise EvalError(f"cannot execute {type(s).__name__}")

    run_stmts(prog.region.body, ())
    end = (len(prog.region.body),)
    _, final, _ = prog.snapshots[end]
    out = Environment(dict(env.scalars), env.arrays)
    for b, v in final.items():
        if b[1] == "outer":
            out.scalars[b[0]] = ev(v)
    return out


__all__ = ["ArrayValue", "Environment", "DiffReport", "eval_region", "eval_ssa", "diff_test",
           "run_function", "random_env", "LoopAnchor", "FunctionDef"]
