from __future__ import annotations

from .ast import (
    ArrayRef, Assign, Binary, Block, Call, CallStmt, Decl, DirectiveItem, FloatConst, Fma,
    For, FunctionDef, If, IntConst, KernelModule, Preproc, Return, Stmt, Unary, Var,
)
from .parser import BINARY_PREC

INDENT = "    "
_UNARY_PREC = 7


def _prec(e) -> int:
    if isinstance(e, Binary):
        return BINARY_PREC[e.op]
    if isinstance(e, Fma):
        return BINARY_PREC["+"]
    if isinstance(e, Unary):
        return _UNARY_PREC
    if isinstance(e, (IntConst, FloatConst)) and e.text.startswith("-"):
        return _UNARY_PREC
    return 8


def print_expr(e, min_prec: int = 0) -> str:
    if isinstance(e, (IntConst, FloatConst)):
        text = e.text
    elif isinstance(e, Var):
        text = e.name
    elif isinstance(e, ArrayRef):
        text = e.base + "".join(f"[{print_expr(i)}]" for i in e.indices)
    elif isinstance(e, Call):
        text = f"{e.name}({', '.join(print_expr(a) for a in e.args)})"
    elif isinstance(e, Unary):
        inner = print_expr(e.operand, _UNARY_PREC)
        if isinstance(e.operand, Unary) or inner.startswith(("-", "+")):
            inner = f"({inner})"
        text = f"{e.op}{inner}"
    elif isinstance(e, Binary):
        p = BINARY_PREC[e.op]
        text = f"{print_expr(e.left, p)} {e.op} {print_expr(e.right, p + 1)}"
    elif isinstance(e, Fma):
        p = BINARY_PREC["+"]
        text = f"{print_expr(e.addend, p)} + ({print_expr(e.factor1, 6)} * {print_expr(e.factor2, 7)})"
    else:
        raise TypeError(f"not an expression: {e!r}")
    if _prec(e) < min_prec:
        return f"({text})"
    return text


def _declarator(d) -> str:
    s = d.name + "".join("[]" if x is None else f"[{print_expr(x)}]" for x in d.dims)
    if d.init is not None:
        s += f" = {print_expr(d.init)}"
    return s


def _simple(s: Stmt) -> str:
    """Statement text without trailing ';' (for loop headers)."""
    if isinstance(s, Decl):
        return f"{s.type} {', '.join(_declarator(d) for d in s.declarators)}"
    if isinstance(s, Assign):
        target = print_expr(s.target)
        if s.op in ("++", "--"):
            return f"{target}{s.op}"
        return f"{target} {s.op} {print_expr(s.value)}"
    if isinstance(s, CallStmt):
        return print_expr(s.call)
    raise TypeError(f"not a simple statement: {s!r}")


def print_stmt(s: Stmt, indent: int = 0) -> list[str]:
    pad = INDENT * indent
    lines = [d.raw_text for d in s.pragmas]
    if isinstance(s, (Decl, Assign, CallStmt)):
        lines.append(f"{pad}{_simple(s)};")
    elif isinstance(s, Return):
        lines.append(f"{pad}return;" if s.value is None else f"{pad}return {print_expr(s.value)};")
    elif isinstance(s, Block):
        lines.append(f"{pad}{{")
        for c in s.stmts:
            lines.extend(print_stmt(c, indent + 1))
        lines.append(f"{pad}}}")
    elif isinstance(s, If):
        lines.append(f"{pad}if ({print_expr(s.cond)})")
        then = s.then
        if s.orelse is not None and isinstance(then, If) and then.orelse is None:
            then = Block((then,))
        lines.extend(_body(then, indent))
        if s.orelse is not None:
            lines.append(f"{pad}else")
            lines.extend(_body(s.orelse, indent))
    elif isinstance(s, For):
        init = _simple(s.init) if s.init is not None else ""
        cond = print_expr(s.cond) if s.cond is not None else ""
        step = _simple(s.step) if s.step is not None else ""
        lines.append(f"{pad}for ({init}; {cond}; {step})")
        lines.extend(_body(s.body, indent))
    else:
        raise TypeError(f"not a statement: {s!r}")
    return lines


def _body(s: Stmt, indent: int) -> list[str]:
    if isinstance(s, Block) and not s.pragmas:
        return print_stmt(s, indent)
    return print_stmt(s, indent + 1)


def print_function(f: FunctionDef) -> list[str]:
    lines = [d.raw_text for d in f.pragmas]
    params = []
    for p in f.params:
        params.append(p.type + " " + p.name
                      + "".join("[]" if x is None else f"[{print_expr(x)}]" for x in p.dims))
    head = f"{f.ret_type} {f.name}({', '.join(params) if params else 'void'})"
    if f.body is None:
        return lines + [head + ";"]
    lines.append(head)
    lines.extend(print_stmt(f.body, 0))
    return lines


def print_module(m: KernelModule) -> str:
    lines: list[str] = []
    for it in m.items:
        if isinstance(it, Preproc):
            lines.append(it.raw_text)
        elif isinstance(it, DirectiveItem):
            lines.append(it.directive.raw_text)
        elif isinstance(it, FunctionDef):
            lines.extend(print_function(it))
        else:
            lines.extend(print_stmt(it, 0))
    return "\n".join(lines) + ("\n" if lines else "")
