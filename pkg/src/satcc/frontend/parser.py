"""Recursive-descent parser for the kernel language (grammar in docs/grammar.md)."""
from __future__ import annotations

import numpy as np

from ..errors import KernelSyntaxError, UnsupportedConstructError
from .ast import (
    ArrayRef, Assign, Binary, Block, Call, CallStmt, Decl, Declarator, Directive,
    DirectiveItem, FloatConst, For, FunctionDef, If, IntConst, KernelModule, Param,
    Preproc, Return, Unary, Var,
)
from .lexer import Token, tokenize

TYPE_WORDS = {"int", "double", "float", "void", "long", "short", "unsigned", "signed", "char"}
QUALIFIERS = {"const", "static", "extern", "inline", "restrict", "__restrict", "volatile", "register"}
KEYWORDS = TYPE_WORDS | QUALIFIERS | {"for", "if", "else", "return", "while", "do", "switch",
                                      "break", "continue", "struct", "union", "typedef", "goto"}

BINARY_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%="}


def parse_number(text: str):
    t = text.lower()
    if t.startswith("0x"):
        return IntConst(int(t.rstrip("ul"), 16), text)
    is_float = any(c in t for c in ".e") or t.endswith("f") and not t.startswith("0x")
    if is_float:
        core = t.rstrip("fl")
        value = float(core)
        if t.endswith("f"):
            value = float(np.float32(value))
        return FloatConst(value, text)
    return IntConst(int(t.rstrip("ul")), text)


class Parser:
    def __init__(self, src: str, source_name: str = "<string>"):
        self.src = src
        self.source_name = source_name
        self.toks = tokenize(src)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "IDENT") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        raise KernelSyntaxError(msg, t.line, t.col)

    def unsupported(self, what: str, tok: Token | None = None):
        t = tok or self.tok
        raise UnsupportedConstructError(what, t.line, t.col)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "IDENT" or t.text in KEYWORDS:
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.advance().text

    def at_type(self) -> bool:
        return self.tok.kind == "IDENT" and self.tok.text in TYPE_WORDS | QUALIFIERS

    # -- module
    def parse_module(self) -> KernelModule:
        items = []
        while self.tok.kind != "EOF":
            t = self.tok
            if t.kind == "PREPROC":
                items.append(Preproc(self.advance().text))
                continue
            pragmas = self.pragmas()
            if self.tok.kind == "EOF" or (self.tok.kind == "PREPROC"):
                items.extend(DirectiveItem(d) for d in pragmas)
                continue
            if self.at_type() and self._looks_like_function():
                items.append(self.function(pragmas))
            else:
                items.append(self.statement(pragmas))
        return KernelModule(tuple(items), self.source_name, self.src)

    def _looks_like_function(self) -> bool:
        j = self.i
        while self.toks[j].kind == "IDENT" and self.toks[j].text in TYPE_WORDS | QUALIFIERS:
            j += 1
        return (self.toks[j].kind == "IDENT" and self.toks[j].text not in KEYWORDS
                and self.toks[j + 1].text == "(")

    def pragmas(self) -> tuple:
        out = []
        while self.tok.kind == "PRAGMA":
            t = self.advance()
            out.append(Directive.from_text(t.text, t.line))
        return tuple(out)

    def type_spec(self) -> str:
        words = []
        start = self.tok
        while self.at_type():
            words.append(self.advance().text)
        if not any(w in TYPE_WORDS for w in words):
            self.error("expected a type", start)
        if self.at("*"):
            self.unsupported("pointer declaration")
        if self.at("struct") or self.at("typedef"):
            self.unsupported(self.tok.text)
        return " ".join(words)

    def function(self, pragmas) -> FunctionDef:
        ret = self.type_spec()
        name = self.ident()
        self.expect("(")
        params = []
        if self.at("void") and self.peek().text == ")":
            self.advance()
        while not self.at(")"):
            ptype = self.type_spec()
            pname = self.ident()
            dims = self.dims(allow_empty=True)
            params.append(Param(ptype, pname, dims))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        if self.at(";"):
            self.advance()
            return FunctionDef(ret, name, tuple(params), None, pragmas)
        body = self.block(())
        return FunctionDef(ret, name, tuple(params), body, pragmas)

    def dims(self, allow_empty: bool = False) -> tuple:
        dims = []
        while self.at("["):
            t = self.advance()
            if self.at("]"):
                if not allow_empty or dims:
                    self.error("array dimension required", t)
                dims.append(None)
            else:
                dims.append(self.expr())
            self.expect("]")
        return tuple(dims)

    # -- statements
    def statement(self, pragmas=None):
        if pragmas is None:
            pragmas = self.pragmas()
        start = self.tok.pos
        s = self._statement(pragmas)
        object.__setattr__(s, "span", (start, self.toks[self.i - 1].end))
        return s

    def _statement(self, pragmas):
        t = self.tok
        if t.kind == "PREPROC":
            self.unsupported(f"preprocessor line inside a statement: {t.text}")
        if t.kind == "EOF":
            self.error("expected a statement")
        if self.at("{"):
            return self.block(pragmas)
        if self.at(";"):
            self.advance()
            return Block((), pragmas=pragmas, line=t.line)
        if self.at("for"):
            return self.for_stmt(pragmas)
        if self.at("if"):
            return self.if_stmt(pragmas)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return Return(value, pragmas=pragmas, line=t.line)
        if t.kind == "IDENT" and t.text in ("while", "do", "switch", "break", "continue", "goto",
                                            "struct", "union", "typedef"):
            self.unsupported(f"'{t.text}' statement")
        if self.at_type():
            d = self.decl(pragmas)
            self.expect(";")
            return d
        s = self.simple(pragmas)
        self.expect(";")
        return s

    def block(self, pragmas) -> Block:
        t = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.error("unterminated block", t)
            stmts.append(self.statement())
        self.advance()
        return Block(tuple(stmts), pragmas=pragmas, line=t.line)

    def decl(self, pragmas) -> Decl:
        t = self.tok
        typ = self.type_spec()
        decls = []
        while True:
            if self.at("*"):
                self.unsupported("pointer declaration")
            name = self.ident()
            dims = self.dims()
            init = None
            if self.at("="):
                self.advance()
                if self.at("{"):
                    self.unsupported("initializer list")
                init = self.expr()
            decls.append(Declarator(name, dims, init))
            if not self.at(","):
                break
            self.advance()
        return Decl(typ, tuple(decls), pragmas=pragmas, line=t.line)

    def simple(self, pragmas):
        """Assignment, increment or call statement (no trailing ';')."""
        t = self.tok
        if self.at("*"):
            self.unsupported("pointer dereference")
        if self.at("++") or self.at("--"):
            op = self.advance().text
            target = self.lvalue()
            return Assign(target, op, None, pragmas=pragmas, line=t.line)
        if t.kind == "IDENT" and self.peek().text == "(":
            call = self.postfix()
            if not isinstance(call, Call):
                self.error("expected a call statement", t)
            return CallStmt(call, pragmas=pragmas, line=t.line)
        target = self.lvalue()
        if self.at("++") or self.at("--"):
            return Assign(target, self.advance().text, None, pragmas=pragmas, line=t.line)
        if self.tok.kind == "OP" and self.tok.text in ASSIGN_OPS:
            op = self.advance().text
            return Assign(target, op, self.expr(), pragmas=pragmas, line=t.line)
        self.error(f"expected assignment operator, found {self.tok.text!r}")

    def lvalue(self):
        t = self.tok
        e = self.postfix(in_expr=False)
        if not isinstance(e, (Var, ArrayRef)):
            self.error("invalid assignment target", t)
        return e

    def for_stmt(self, pragmas) -> For:
        t = self.expect("for")
        self.expect("(")
        init = None
        if not self.at(";"):
            init = self.decl(()) if self.at_type() else self.simple(())
        self.expect(";")
        cond = None if self.at(";") else self.expr()
        self.expect(";")
        step = None
        if not self.at(")"):
            step = self.simple(())
            if not isinstance(step, Assign):
                self.unsupported("call in loop step", t)
        self.expect(")")
        body = self.statement()
        return For(init, cond, step, body, pragmas=pragmas, line=t.line)

    def if_stmt(self, pragmas) -> If:
        t = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.statement()
        orelse = None
        if self.at("else"):
            self.advance()
            orelse = self.statement()
        return If(cond, then, orelse, pragmas=pragmas, line=t.line)

    # -- expressions
    def expr(self, min_prec: int = 1):
        t = self.tok
        if self.at("?"):
            self.unsupported("conditional expression")
        left = self.unary()
        while True:
            t = self.tok
            if t.kind == "OP" and t.text in ("&", "|", "^", "<<", ">>"):
                self.unsupported(f"bitwise operator '{t.text}'")
            if t.kind == "OP" and t.text == "?":
                self.unsupported("conditional expression")
            if t.kind == "OP" and t.text == ",":
                break
            prec = BINARY_PREC.get(t.text) if t.kind == "OP" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.expr(prec + 1)
            left = Binary(t.text, left, right)
        return left

    def unary(self):
        t = self.tok
        if t.kind == "OP":
            if t.text in ("-", "+", "!"):
                self.advance()
                return Unary(t.text, self.unary())
            if t.text == "*":
                self.unsupported("pointer dereference")
            if t.text == "&":
                self.unsupported("address-of")
            if t.text in ("++", "--"):
                self.unsupported("increment inside expression")
            if t.text == "~":
                self.unsupported("bitwise operator '~'")
            if t.text == "(":
                if self.peek().kind == "IDENT" and self.peek().text in TYPE_WORDS:
                    self.unsupported("cast")
        return self.postfix()

    def postfix(self, in_expr: bool = True):
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            e = parse_number(t.text)
        elif t.kind == "IDENT" and t.text not in KEYWORDS:
            name = self.advance().text
            if self.at("("):
                self.advance()
                args = []
                while not self.at(")"):
                    args.append(self.expr())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
                e = Call(name, tuple(args))
            elif self.at("["):
                idx = []
                while self.at("["):
                    self.advance()
                    idx.append(self.expr())
                    self.expect("]")
                e = ArrayRef(name, tuple(idx))
            else:
                e = Var(name)
        elif self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
        else:
            self.error(f"unexpected token {t.text or 'end of input'!r}")
        if self.at(".") or self.at("->"):
            self.unsupported("member access")
        if in_expr and (self.at("++") or self.at("--")):
            self.unsupported("increment inside expression")
        if self.at("["):
            self.unsupported("subscript of a non-identifier")
        return e


def parse(source: str, source_name: str = "<string>") -> KernelModule:
    return Parser(source, source_name).parse_module()


def parse_expr(source: str):
    p = Parser(source)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error(f"trailing input {p.tok.text!r}")
    return e
