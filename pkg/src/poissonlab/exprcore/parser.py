"""
遞迴下降解析器 (Recursive-descent Parser)

文法：
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := ("-" | "+") unary | power
    power    := base ("^" rational)?
    base     := number | ident | "(" expr ")" | func "(" expr ("," expr)? ")"
    rational := ["-"] integer | "(" ["-"] integer ["/" integer] ")"

識別字依序解析為：座標、參數、常數 pi；否則為未知識別字。
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from poissonlab.core.errors import ExpressionSyntaxError, UnknownIdentifierError

from .ast import BINARY_FUNCS, FUNCS, BinOp, Const, Coord, Func, Neg, Node, Param, Pow
from .tokenizer import Token, tokenize

CONSTANTS = {"pi": math.pi}


class Parser:
    """
    單次使用的解析器：Parser(text, coords, params).parse() -> Node
    """

    def __init__(self, text: str, coords: Sequence[str], params: Sequence[str] = ()):
        self._tokens = tokenize(text)
        self._pos = 0
        self._coords = {name: i for i, name in enumerate(coords)}
        self._params = set(params)

    # -------------------------------------------------------------------------
    # token 游標
    # -------------------------------------------------------------------------

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _expect(self, kind: str, text: str | None = None) -> Token:
        token = self._peek()
        if token.kind != kind or (text is not None and token.text != text):
            wanted = text or kind
            found = token.text or "結尾"
            raise ExpressionSyntaxError(f"預期 {wanted!r}，但遇到 {found!r}", token.offset)
        return self._advance()

    def _at_op(self, *ops: str) -> bool:
        token = self._peek()
        return token.kind == "op" and token.text in ops

    # -------------------------------------------------------------------------
    # 文法規則
    # -------------------------------------------------------------------------

    def parse(self) -> Node:
        node = self._expr()
        token = self._peek()
        if token.kind != "eof":
            raise ExpressionSyntaxError(f"多餘的內容 {token.text!r}", token.offset)
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self._at_op("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._unary()
        while self._at_op("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Node:
        if self._at_op("-"):
            self._advance()
            return Neg(self._unary())
        if self._at_op("+"):
            self._advance()
            return self._unary()
        return self._power()

    def _power(self) -> Node:
        base = self._base()
        if self._at_op("^"):
            self._advance()
            return Pow(base, self._rational())
        return base

    def _integer(self) -> int:
        token = self._peek()
        if token.kind != "number" or not token.text.isdigit():
            raise ExpressionSyntaxError("次方必須是整數或 (p/q)", token.offset)
        self._advance()
        return int(token.text)

    def _signed_integer(self) -> int:
        sign = 1
        if self._at_op("-"):
            self._advance()
            sign = -1
        return sign * self._integer()

    def _rational(self) -> Fraction:
        if self._peek().kind == "lparen":
            self._advance()
            numerator = self._signed_integer()
            denominator = 1
            if self._at_op("/"):
                self._advance()
                token = self._peek()
                denominator = self._integer()
                if denominator == 0:
                    raise ExpressionSyntaxError("次方分母為零", token.offset)
            self._expect("rparen")
            return Fraction(numerator, denominator)
        return Fraction(self._signed_integer())

    def _base(self) -> Node:
        token = self._peek()
        if token.kind == "number":
            self._advance()
            return Const(float(token.text))
        if token.kind == "lparen":
            self._advance()
            node = self._expr()
            self._expect("rparen")
            return node
        if token.kind == "ident":
            return self._identifier()
        found = token.text or "結尾"
        raise ExpressionSyntaxError(f"預期運算元，但遇到 {found!r}", token.offset)

    def _identifier(self) -> Node:
        token = self._advance()
        name = token.text
        if name in self._coords:
            return Coord(name, self._coords[name])
        if name in self._params:
            return Param(name)
        if name in FUNCS:
            return self._call(name, token)
        if name in CONSTANTS:
            return Const(CONSTANTS[name])
        raise UnknownIdentifierError(name, token.offset)

    def _call(self, name: str, token: Token) -> Node:
        if self._peek().kind != "lparen":
            raise ExpressionSyntaxError(f"函數 {name} 需要括號引數", token.offset)
        self._advance()
        args = [self._expr()]
        while self._peek().kind == "comma":
            self._advance()
            args.append(self._expr())
        closing = self._expect("rparen")
        arity = 2 if name in BINARY_FUNCS else 1
        if len(args) != arity:
            raise ExpressionSyntaxError(
                f"函數 {name} 需要 {arity} 個引數，收到 {len(args)} 個", closing.offset
            )
        return Func(name, tuple(args))


def parse_tree(text: str, coords: Sequence[str], params: Sequence[str] = ()) -> Node:
    """解析運算式為 AST（不經快取）。"""
    return Parser(text, coords, params).parse()
