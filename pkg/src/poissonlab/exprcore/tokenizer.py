"""
運算式分詞器 (Expression Tokenizer)

把運算式字串切成 Token 序列，每個 Token 帶有 byte offset，
讓語法錯誤能準確指出位置。空白不具意義。
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal

from poissonlab.core.errors import ExpressionSyntaxError

TokenKind = Literal["number", "ident", "op", "lparen", "rparen", "comma", "eof"]

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_SINGLE: dict[str, TokenKind] = {
    "+": "op",
    "-": "op",
    "*": "op",
    "/": "op",
    "^": "op",
    "(": "lparen",
    ")": "rparen",
    ",": "comma",
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    offset: int


def byte_offset(text: str, index: int) -> int:
    """字元索引轉 byte offset（UTF-8）。"""
    return len(text[:index].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    """
    分詞

    Args:
        text: 運算式字串

    Returns:
        list[Token]: 以 eof Token 結尾

    Raises:
        ExpressionSyntaxError: 出現無法辨識的字元
    """
    tokens: list[Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < len(text) and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            assert m is not None
            tokens.append(Token("number", m.group(), byte_offset(text, i)))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m is not None:
            tokens.append(Token("ident", m.group(), byte_offset(text, i)))
            i = m.end()
            continue
        kind = _SINGLE.get(ch)
        if kind is None:
            raise ExpressionSyntaxError(f"無法辨識的字元 {ch!r}", byte_offset(text, i))
        tokens.append(Token(kind, ch, byte_offset(text, i)))
        i += 1
    tokens.append(Token("eof", "", byte_offset(text, len(text))))
    return tokens
