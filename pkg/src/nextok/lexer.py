"""Scanner for the MiniDart mini-language.

Produces the token stream every other stage consumes. The scanner is total:
any input text yields a token list, unknown characters become single-character
punctuation tokens, and unterminated strings or block comments simply run to
the end of the file. Joining the emitted lexemes with the skipped
whitespace/comment spans reconstructs the source exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    [
        "class", "implements", "extends", "return", "if", "else", "for",
        "while", "var", "final", "new", "void", "bool", "int", "double",
        "String", "true", "false", "null", "import",
    ]
)

# Built-in type keywords: usable as declaration introducers ("int x = 0;").
TYPE_KEYWORDS = frozenset(["bool", "int", "double", "String", "void"])

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
LITERAL_RE = re.compile(r"(\"([^\"\\]|\\.)*\")|('([^'\\]|\\.)*')|([0-9][0-9_.]*)\Z", re.DOTALL)


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    LITERAL = "literal"
    PUNCT = "punctuation"


# Kinds that can appear as prediction labels; punctuation never does.
LABEL_KINDS = frozenset([TokenKind.KEYWORD, TokenKind.IDENTIFIER, TokenKind.LITERAL])


@dataclass(frozen=True)
class Token:
    """One lexical unit: kind, raw text, and byte position in the source."""

    kind: TokenKind
    lexeme: str
    offset: int  # byte offset into the UTF-8 encoded source, 0-based
    length: int  # byte length of the lexeme

    @property
    def end(self) -> int:
        return self.offset + self.length


# Alternatives are ordered so comments win over '/' punctuation and string
# literals win over quote punctuation. The final '.' (DOTALL) is the
# catch-all that keeps the scanner total. Unterminated strings and block
# comments are closed by end-of-input.
_SCAN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n\f\v]+)
    | (?P<linecomment>//[^\n]*)
    | (?P<blockcomment>/\*.*?(?:\*/|\Z))
    | (?P<string>"(?:[^"\\]|\\.)*(?:"|\Z)|'(?:[^'\\]|\\.)*(?:'|\Z))
    | (?P<number>[0-9][0-9_.]*)
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_SKIP_GROUPS = ("ws", "linecomment", "blockcomment")


def scan(source: str) -> list[Token]:
    """Scan source text into tokens; comments and whitespace emit nothing.

    Never raises: every character lands in exactly one match of the master
    pattern, so the output tokens are non-overlapping, sorted by offset,
    and concatenate (with the skipped spans) back to the source.
    """
    tokens: list[Token] = []
    ascii_only = source.isascii()
    byte_pos = 0
    for match in _SCAN_RE.finditer(source):
        text = match.group()
        nbytes = len(text) if ascii_only else len(text.encode("utf-8"))
        group = match.lastgroup
        if group not in _SKIP_GROUPS:
            if group == "string" or group == "number":
                kind = TokenKind.LITERAL
            elif group == "word":
                kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENTIFIER
            else:
                kind = TokenKind.PUNCT
            tokens.append(Token(kind, text, byte_pos, nbytes))
        byte_pos += nbytes
    return tokens


def is_literal_lexeme(lexeme: str) -> bool:
    """True iff the lexeme starts with a quote or a decimal digit."""
    first = lexeme[0]
    return first in "\"'" or first.isdigit()


def tokens_before(tokens: list[Token], cursor: int) -> list[Token]:
    """Tokens that end at or before the given byte cursor."""
    return [t for t in tokens if t.end <= cursor]
