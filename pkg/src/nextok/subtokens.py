"""Compound-identifier splitting, vocabularies, and context-window encoding.

Identifiers are the only compound tokens: camelCase splits between a
lowercase letter or digit and the following uppercase letter, snake_case
splits around underscores with each "_" kept as its own subtoken.
Concatenating the subtokens always restores the original lexeme.

Vocabularies map lexemes to dense integer ids with two reserved entries:
id 0 is the padding symbol and id 1 the out-of-vocabulary symbol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lexer import Token, TokenKind

PAD = "<pad>"
UNK = "<unk>"
PAD_ID = 0
UNK_ID = 1

# A split point sits between [a-z0-9] and [A-Z]. Consecutive uppercase runs
# ("HTTPServer") stay together; underscores are standalone subtokens.
_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


def split_compound(lexeme: str) -> list[str]:
    """Split an identifier into subtokens; concatenation restores the input."""
    parts: list[str] = []
    for i, chunk in enumerate(lexeme.split("_")):
        if i > 0:
            parts.append("_")
        if chunk:
            parts.extend(_CAMEL_RE.split(chunk))
    return parts if parts else [lexeme]


@dataclass
class Vocabulary:
    """Frequency-ranked lexeme<->id map with reserved <pad>/<unk> ids.

    Entries are sorted by descending count, ties broken by lexeme order.
    Ids are dense: 0 and 1 are reserved, ranked entries start at 2.
    """

    entries: list[tuple[str, int]]
    coverage: float = 1.0
    id_of: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.id_of = {PAD: PAD_ID, UNK: UNK_ID}
        for rank, (lexeme, _) in enumerate(self.entries):
            self.id_of[lexeme] = rank + 2

    def __len__(self) -> int:
        return len(self.entries) + 2

    def __contains__(self, lexeme: str) -> bool:
        return lexeme in self.id_of

    def lookup(self, lexeme: str) -> int:
        return self.id_of.get(lexeme, UNK_ID)

    def lexeme_of(self, idx: int) -> str:
        if idx == PAD_ID:
            return PAD
        if idx == UNK_ID:
            return UNK
        return self.entries[idx - 2][0]


def build_vocab(counts: dict[str, int], max_size: int) -> Vocabulary:
    """Keep the top max_size lexemes by count (ties: lexicographic order)."""
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = ranked[:max_size]
    total = sum(counts.values())
    retained = sum(c for _, c in kept)
    coverage = retained / total if total > 0 else 1.0
    return Vocabulary(entries=kept, coverage=coverage)


def _escape(lexeme: str) -> str:
    return (
        lexeme.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


_UNESCAPE_RE = re.compile(r"\\[\\tnr]")
_UNESCAPE_MAP = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


def _unescape(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _UNESCAPE_MAP[m.group()], text)


def save_vocab(vocab: Vocabulary, path: str) -> None:
    """Write one "lexeme<TAB>count" line per ranked entry (reserved ids omitted).

    Tab, newline, and backslash characters inside lexemes are backslash-escaped
    so string-literal lexemes cannot corrupt the line format.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for lexeme, count in vocab.entries:
            fh.write(f"{_escape(lexeme)}\t{count}\n")


def load_vocab(path: str) -> Vocabulary:
    entries: list[tuple[str, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            lexeme, _, count = line.rpartition("\t")
            entries.append((_unescape(lexeme), int(count)))
    return Vocabulary(entries=entries)


@dataclass
class ContextWindow:
    """Fixed-length id window ending at the cursor, oldest history first.

    Unfilled far-history positions hold the padding id. raw_lexemes carries
    the pre-<unk> text for each non-padding position (padding positions hold
    the padding symbol itself).
    """

    ids: list[int]
    raw_lexemes: list[str]
    cursor_offset: int


def window_lexemes(tokens: list[Token], window_len: int, mode: str) -> list[str]:
    """The lexeme sequence that fills a window: last window_len tokens, or
    their subtokens with the oldest subtokens truncated first."""
    tail = tokens[-window_len:] if window_len < len(tokens) else list(tokens)
    if mode == "token":
        return [t.lexeme for t in tail]
    if mode != "subtoken":
        raise ValueError(f"unknown encoding mode: {mode!r}")
    pieces: list[str] = []
    for tok in tail:
        if tok.kind is TokenKind.IDENTIFIER:
            pieces.extend(split_compound(tok.lexeme))
        else:
            pieces.append(tok.lexeme)
    return pieces[-window_len:] if len(pieces) > window_len else pieces


def window_token_span(tokens: list[Token], window_len: int, mode: str) -> list[Token]:
    """The tokens that contribute at least one item to an encoded window."""
    tail = tokens[-window_len:] if window_len < len(tokens) else list(tokens)
    if mode == "token":
        return tail
    total = 0
    start = len(tail)
    for i in range(len(tail) - 1, -1, -1):
        tok = tail[i]
        if tok.kind is TokenKind.IDENTIFIER:
            total += len(split_compound(tok.lexeme))
        else:
            total += 1
        start = i
        if total >= window_len:
            break
    return tail[start:]


def encode_context(
    tokens: list[Token],
    vocab: Vocabulary,
    window_len: int,
    mode: str = "token",
) -> ContextWindow:
    """Encode the tokens ending at the cursor into a fixed-length id window.

    The window is left-padded: padding occupies the far-history end and the
    most recent item sits at the last position. Out-of-vocabulary items map
    to the <unk> id but keep their raw lexeme.
    """
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    lexemes = window_lexemes(tokens, window_len, mode)
    pad_count = window_len - len(lexemes)
    ids = [PAD_ID] * pad_count + [vocab.lookup(lex) for lex in lexemes]
    raw = [PAD] * pad_count + lexemes
    cursor = tokens[-1].end if tokens else 0
    return ContextWindow(ids=ids, raw_lexemes=raw, cursor_offset=cursor)
