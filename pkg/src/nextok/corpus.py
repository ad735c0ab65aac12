"""Corpus ingestion: source files to deduplicated training examples and stats.

Every keyword, identifier, or literal token becomes a label for the window
of items preceding it; punctuation is context only, never a label. Windows
never span file boundaries. Duplicate (window ids + label id) records are
removed before the train/test split so no example appears on both sides.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .lexer import LABEL_KINDS, Token, TokenKind, scan
from .subtokens import (
    UNK_ID,
    ContextWindow,
    Vocabulary,
    encode_context,
    split_compound,
)

SOURCE_SUFFIX = ".dart"


@dataclass
class Example:
    """One prediction example: an encoded window and its label token.

    repeats is true when the label lexeme occurs among the whole tokens
    covered by the window (whole tokens in both encoding modes, since
    repetition is defined over tokens, not subtokens). source/offset record
    provenance for canonical ordering and debugging.
    """

    window: ContextWindow
    label_lexeme: str
    label_id: int
    label_kind: TokenKind
    repeats: bool
    source: str = ""
    offset: int = 0


@dataclass
class CorpusStats:
    file_count: int
    token_count: int
    unique_example_count: int
    vocab_coverage: float
    repetition_rate: float
    oov_repeat_rate: float
    invocab_nonrepeat_rate: float

    def as_lines(self) -> list[str]:
        return [f"{key}: {value}" for key, value in vars(self).items()]


def extract_examples(
    tokens: list[Token],
    in_vocab: Vocabulary,
    out_vocab: Vocabulary,
    window_len: int,
    mode: str = "token",
    source: str = "",
) -> list[Example]:
    """One example per keyword/identifier/literal token in the stream.

    The first labeled token of a file gets an all-padding window. The window
    is encoded with the input vocabulary; the label id comes from the output
    vocabulary.
    """
    examples: list[Example] = []
    recent: list[str] = []  # lexemes of the last window_len whole tokens
    for i, tok in enumerate(tokens):
        if tok.kind in LABEL_KINDS:
            window = encode_context(tokens[:i], in_vocab, window_len, mode)
            examples.append(
                Example(
                    window=window,
                    label_lexeme=tok.lexeme,
                    label_id=out_vocab.lookup(tok.lexeme),
                    label_kind=tok.kind,
                    repeats=tok.lexeme in recent,
                    source=source,
                    offset=tok.offset,
                )
            )
        recent.append(tok.lexeme)
        if len(recent) > window_len:
            del recent[0]
    return examples


def dedup(examples: list[Example]) -> list[Example]:
    """Drop examples whose window ids and label id all match an earlier one."""
    seen: set[tuple[int, ...]] = set()
    kept: list[Example] = []
    for ex in examples:
        key = (*ex.window.ids, ex.label_id)
        if key not in seen:
            seen.add(key)
            kept.append(ex)
    return kept


def split_train_test(
    examples: list[Example], test_fraction: float, seed: int
) -> tuple[list[Example], list[Example]]:
    """Deterministic example-level split; at least one test example.

    Examples are canonically ordered by (source, offset) before the seeded
    shuffle, so membership is stable under input permutation.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    ordered = sorted(examples, key=lambda ex: (ex.source, ex.offset))
    indices = list(range(len(ordered)))
    random.Random(seed).shuffle(indices)
    n = len(ordered)
    if n == 0:
        return [], []
    n_test = max(1, round(n * test_fraction))
    if n > 1:
        n_test = min(n_test, n - 1)
    test_idx = set(indices[:n_test])
    train = [ex for i, ex in enumerate(ordered) if i not in test_idx]
    test = [ex for i, ex in enumerate(ordered) if i in test_idx]
    return train, test


def compute_stats(
    examples: list[Example],
    out_vocab: Vocabulary,
    file_count: int = 0,
    token_count: int = 0,
) -> CorpusStats:
    """Repetition and vocabulary-coverage statistics over deduplicated examples."""
    n = len(examples)
    repeats = sum(1 for ex in examples if ex.repeats)
    oov_repeats = sum(1 for ex in examples if ex.repeats and ex.label_id == UNK_ID)
    invocab_nonrepeat = sum(
        1 for ex in examples if not ex.repeats and ex.label_id != UNK_ID
    )
    return CorpusStats(
        file_count=file_count,
        token_count=token_count,
        unique_example_count=n,
        vocab_coverage=out_vocab.coverage,
        repetition_rate=repeats / n if n else 0.0,
        oov_repeat_rate=oov_repeats / n if n else 0.0,
        invocab_nonrepeat_rate=invocab_nonrepeat / n if n else 0.0,
    )


def vocab_overlap(vocabs: list[Vocabulary]) -> dict[tuple[int, ...], int]:
    """Exact cardinality of every region of the vocabulary intersection diagram.

    Keys are sorted tuples of vocabulary indices; the value for key T counts
    lexemes present in exactly the vocabularies listed in T.
    """
    if not 2 <= len(vocabs) <= 3:
        raise ValueError("vocab_overlap expects 2 or 3 vocabularies")
    sets = [set(lex for lex, _ in v.entries) for v in vocabs]
    regions: Counter[tuple[int, ...]] = Counter()
    for lexeme in set().union(*sets):
        members = tuple(i for i, s in enumerate(sets) if lexeme in s)
        regions[members] += 1
    n = len(vocabs)
    all_keys = [
        tuple(i for i in range(n) if mask >> i & 1) for mask in range(1, 1 << n)
    ]
    return {key: regions.get(key, 0) for key in sorted(all_keys)}


def corpus_files(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).rglob(f"*{SOURCE_SUFFIX}"))


def scan_directory(directory: str | Path) -> list[tuple[str, list[Token]]]:
    """Scan every source file under the directory, sorted for determinism."""
    out = []
    for path in corpus_files(directory):
        text = path.read_text(encoding="utf-8")
        out.append((str(path), scan(text)))
    return out


def count_lexemes(
    token_streams: list[tuple[str, list[Token]]],
) -> tuple[Counter[str], Counter[str], Counter[str]]:
    """Count (all-token, subtoken, label) lexeme frequencies over a corpus.

    Token counts feed the token-mode input vocabulary, subtoken counts the
    subtoken-mode input vocabulary, and label counts (keywords, identifiers,
    literals only) the shared output vocabulary.
    """
    token_counts: Counter[str] = Counter()
    subtoken_counts: Counter[str] = Counter()
    label_counts: Counter[str] = Counter()
    for _, tokens in token_streams:
        for tok in tokens:
            token_counts[tok.lexeme] += 1
            if tok.kind is TokenKind.IDENTIFIER:
                subtoken_counts.update(split_compound(tok.lexeme))
            else:
                subtoken_counts[tok.lexeme] += 1
            if tok.kind in LABEL_KINDS:
                label_counts[tok.lexeme] += 1
    return token_counts, subtoken_counts, label_counts


def extract_directory(
    directory: str | Path,
    in_vocab: Vocabulary,
    out_vocab: Vocabulary,
    window_len: int,
    mode: str = "token",
) -> tuple[list[Example], int, int]:
    """Extract deduplicated examples from every file under the directory.

    Returns (examples, file_count, token_count).
    """
    streams = scan_directory(directory)
    examples: list[Example] = []
    token_count = 0
    for path, tokens in streams:
        token_count += len(tokens)
        examples.extend(
            extract_examples(tokens, in_vocab, out_vocab, window_len, mode, source=path)
        )
    return dedup(examples), len(streams), token_count


def _escape_field(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def save_examples(examples: list[Example], path: str | Path) -> None:
    """One tab-separated record per line: window ids, label id, lexeme, repeats."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            ids = ",".join(str(i) for i in ex.window.ids)
            fh.write(
                f"{ids}\t{ex.label_id}\t{_escape_field(ex.label_lexeme)}"
                f"\t{int(ex.repeats)}\n"
            )
