"""Recursive-descent parser for the element expression language.

Grammar:
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' integer)?
    atom   := integer | ident | '(' expr ')' | '-' atom

Syntax errors carry the byte offset of the offending token.  The AST is
evaluated against a caller-supplied algebra, so the same parser serves
tower elements, rational functions, and plain numbers.
"""

from __future__ import annotations

from .errors import HlfError


class ExprError(HlfError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} (at offset {pos})")
        self.pos = pos


def tokenize(src: str):
    out = []
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            out.append(("int", int(src[i:j]), i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            out.append(("ident", src[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            out.append(("op", ch, i))
            i += 1
            continue
        raise ExprError(f"unexpected character {ch!r}", i)
    out.append(("end", None, n))
    return out


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, ch):
        kind, val, pos = self.take()
        if kind != "op" or val != ch:
            raise ExprError(f"expected {ch!r}", pos)

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.parse_term()
                node = ("add" if val == "+" else "sub", node, rhs)
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.parse_factor()
                node = ("mul" if val == "*" else "div", node, rhs)
            else:
                return node

    def parse_factor(self):
        node = self.parse_atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            sign = 1
            kind, val, pos = self.take()
            if kind == "op" and val == "-":
                sign = -1
                kind, val, pos = self.take()
            if kind != "int":
                raise ExprError("exponent must be an integer", pos)
            node = ("pow", node, sign * val)
        return node

    def parse_atom(self):
        kind, val, pos = self.take()
        if kind == "int":
            return ("int", val)
        if kind == "ident":
            return ("var", val, pos)
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "op" and val == "-":
            return ("neg", self.parse_atom())
        raise ExprError("expected a number, identifier or '('", pos)


def parse(src: str):
    p = _Parser(tokenize(src))
    node = p.parse_expr()
    kind, _, pos = p.peek()
    if kind != "end":
        raise ExprError("trailing input", pos)
    return node


def evaluate(ast, alg):
    """Evaluate against an algebra dict with keys int, var, add, sub, mul,
    div, pow, neg."""
    op = ast[0]
    if op == "int":
        return alg["int"](ast[1])
    if op == "var":
        return alg["var"](ast[1], ast[2])
    if op == "pow":
        return alg["pow"](evaluate(ast[1], alg), ast[2])
    if op == "neg":
        return alg["neg"](evaluate(ast[1], alg))
    lhs = evaluate(ast[1], alg)
    rhs = evaluate(ast[2], alg)
    return alg[op](lhs, rhs)
