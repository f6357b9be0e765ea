"""Scalar operator semantics shared by constant folding and the interpreters.

Integers follow C: truncating division, remainder with the sign of the
dividend, comparisons yield int 0/1.  A double operand promotes the operation
to double; doubles use the host IEEE semantics.
"""
from __future__ import annotations

import math

from .errors import EvalError

ARITH = ("+", "-", "*", "/", "%")
COMPARE = ("<", "<=", ">", ">=", "==", "!=")
LOGIC = ("&&", "||")


def c_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a: int, b: int) -> int:
    return a - c_div(a, b) * b


def is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def binary(op: str, a, b):
    if op in COMPARE:
        return int({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                    "==": a == b, "!=": a != b}[op])
    if op == "&&":
        return int(bool(a) and bool(b))
    if op == "||":
        return int(bool(a) or bool(b))
    if is_int(a) and is_int(b):
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            raise EvalError(f"integer {'division' if op == '/' else 'modulo'} by zero")
        return c_div(a, b) if op == "/" else c_mod(a, b)
    a, b = float(a), float(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            if a == 0.0 or math.isnan(a):
                return math.nan
            return math.copysign(math.inf, a) * math.copysign(1.0, b)
        return a / b
    if op == "%":
        if b == 0.0:
            return math.nan
        return math.fmod(a, b)
    raise EvalError(f"unknown operator {op}")


def unary(op: str, a):
    if op in ("-", "neg"):
        return -a
    if op == "!":
        return int(not a)
    if op == "+":
        return a
    raise EvalError(f"unknown operator {op}")


def fma(addend, f1, f2):
    """Evaluated as a separate multiply and add (fast-math reading)."""
    return binary("+", addend, binary("*", f1, f2))


def _pow(x, y):
    try:
        return math.pow(x, y)
    except (ValueError, OverflowError):
        return math.nan


def _guard(f):
    def g(*args):
        try:
            return f(*args)
        except ValueError:
            return math.nan
        except OverflowError:
            return math.inf
    return g


MATH_FUNCS = {
    "sqrt": _guard(math.sqrt), "fabs": math.fabs, "exp": _guard(math.exp), "log": _guard(math.log),
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "pow": _pow, "fmin": min, "fmax": max,
    "floor": math.floor, "ceil": math.ceil, "tanh": math.tanh, "atan": math.atan,
    "abs": abs,
}
INT_FUNCS = {"abs"}


def call(name: str, args):
    f = MATH_FUNCS.get(name)
    if f is None:
        raise EvalError(f"unknown function '{name}'")
    if name in INT_FUNCS and all(is_int(a) for a in args):
        return abs(args[0])
    r = f(*[float(a) for a in args])
    return float(r)
