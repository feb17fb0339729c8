from __future__ import annotations

import enum
from pathlib import PurePath
from typing import NamedTuple, Sequence

import lark
from lark.exceptions import UnexpectedCharacters

from .errors import LexError

RESERVED_WORDS = frozenset(
    """
    abort abs abstract accept access aliased all and array at begin body case constant declare delay
    delta digits do else elsif end entry exception exit for function generic goto if in interface is
    limited loop mod new not null of or others out overriding package pragma private procedure
    protected raise range record rem renames requeue return reverse select separate some subtype
    synchronized tagged task terminate then type until use when while with xor
    """.split()
)

BYTE_ORDER_MARK = "\ufeff"


def _lowercase(token: lark.Token) -> lark.Token:
    return token.update(value=token.lower())


# Lexical elements only: the structure of a unit is recovered from the token stream in `frontend`.
ADA_TOKENS = lark.Lark(
    r"""
        tokens: (IDENTIFIER | NUMBER | STRING | CHARACTER | DELIMITER)*

        IDENTIFIER: /[^\W\d_]\w*/

        NUMERAL: /\d(_?\d)*/
        EXTENDED_NUMERAL: /[0-9a-fA-F](_?[0-9a-fA-F])*/
        NUMBER: NUMERAL ("#" EXTENDED_NUMERAL ("." EXTENDED_NUMERAL)? "#" | "." NUMERAL)? (/[eE][+-]?/ NUMERAL)?

        # `""` is an embedded quote
        STRING: /"(""|[^"\n])*"/

        # a quote right after a name, a closing parenthesis or a string is an attribute tick
        CHARACTER.2: /(?<![\w)"])'[^\n]'/

        DELIMITER: /=>|\.\.|\*\*|:=|\/=|>=|<=|<<|>>|<>|[&'()*+,\-.\/:;<=>|\[\]@]/

        COMMENT.3: /--[^\n]*/
        WS: /\s+/

        %ignore COMMENT
        %ignore WS
    """,
    start="tokens",
    parser="lalr",
    lexer="basic",
    lexer_callbacks={"IDENTIFIER": _lowercase, "NUMBER": _lowercase},
)


class TokenKind(str, enum.Enum):
    IDENTIFIER = "identifier"
    NUMBER = "number"
    STRING = "string"
    CHARACTER = "character"
    DELIMITER = "delimiter"

    def __str__(self) -> str:
        return self.value


class Token(NamedTuple):
    kind: TokenKind
    # normalized value: identifiers and numbers lowercased, literals verbatim
    value: str
    line: int
    start: int
    end: int

    @classmethod
    def from_lark(cls, token: lark.Token) -> Token:
        return cls(TokenKind[token.type], str(token), token.line, token.start_pos, token.end_pos)

    @property
    def is_reserved(self) -> bool:
        return self.kind == TokenKind.IDENTIFIER and self.value in RESERVED_WORDS

    def is_word(self, *words: str) -> bool:
        return self.kind == TokenKind.IDENTIFIER and self.value in words

    def is_delimiter(self, *delimiters: str) -> bool:
        return self.kind == TokenKind.DELIMITER and self.value in delimiters


def decode_source(data: bytes, path: PurePath | str | None = None) -> str:
    """Decode a source file as UTF-8, dropping a leading byte order mark."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise LexError(f"Invalid UTF-8 byte at offset {exc.start}", line, path) from exc
    return text.removeprefix(BYTE_ORDER_MARK)


def lex(text: str | bytes, path: PurePath | str | None = None) -> list[Token]:
    """Tokenize Ada source text.

    Comments and whitespace are dropped, identifiers and numeric literals are lowercased,
    string and character literals are kept as single verbatim tokens.

    Raises:
        LexError: on non UTF-8 input, an unterminated string literal or an unexpected character.
    """
    if isinstance(text, bytes):
        text = decode_source(text, path)
    try:
        return [Token.from_lark(token) for token in ADA_TOKENS.lex(text)]
    except UnexpectedCharacters as exc:
        if exc.char == '"':
            raise LexError("Unterminated string literal", exc.line, path) from exc
        raise LexError(f"Unexpected character {exc.char!r}", exc.line, path) from exc


def normalize(tokens: Sequence[Token]) -> str:
    """Normalized text used for hashing: token values separated by single spaces."""
    return " ".join(token.value for token in tokens)
