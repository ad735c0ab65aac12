"""Accuracy metrics and the serial prediction-latency benchmark.

Top-k accuracy ranks the raw model distribution (no repetition
redistribution), matching labels by lexeme so out-of-vocabulary labels
always count as misses. A separate repetition-aware mode applies the full
redistribution first and can credit in-window OOV labels. The latency
benchmark times complete() calls strictly serially after an uncounted
warm-up, on (source, cursor) inputs sampled from real corpus files.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .corpus import Example
from .engine import CompletionEngine, redistribute
from .lexer import IDENTIFIER_RE, KEYWORDS, LABEL_KINDS, is_literal_lexeme
from .models import TrainedModel
from .subtokens import PAD_ID, Vocabulary


def _label_like(lexeme: str) -> bool:
    return (
        lexeme in KEYWORDS
        or is_literal_lexeme(lexeme)
        or IDENTIFIER_RE.match(lexeme) is not None
    )

HISTOGRAM_EDGES_MS = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]


@dataclass
class PrecisionRecall:
    precision: float
    recall: float
    predicted_positives: int
    actual_positives: int
    zero_support: bool  # no predicted positives: precision reported as 1.0


@dataclass
class LatencyReport:
    request_count: int
    mean_ms: float
    p50_ms: float
    p75_ms: float
    p90_ms: float
    p99_ms: float
    threshold_ms: float
    fraction_under_threshold: float
    histogram: list[tuple[float, int]] = field(default_factory=list)  # (upper edge, count)

    def as_lines(self) -> list[str]:
        lines = [
            f"requests: {self.request_count}",
            f"mean_ms: {self.mean_ms:.3f}",
            f"p50_ms: {self.p50_ms:.3f}",
            f"p75_ms: {self.p75_ms:.3f}",
            f"p90_ms: {self.p90_ms:.3f}",
            f"p99_ms: {self.p99_ms:.3f}",
            f"under_{self.threshold_ms:g}ms: {self.fraction_under_threshold:.4f}",
        ]
        for edge, count in self.histogram:
            label = f"<={edge:g}ms" if edge != float("inf") else f">{HISTOGRAM_EDGES_MS[-1]}ms"
            lines.append(f"bucket {label}: {count}")
        return lines


def _batched_dist(model: TrainedModel, examples: list[Example], batch: int = 256):
    ids = np.array([ex.window.ids for ex in examples], dtype=np.int64)
    for start in range(0, len(ids), batch):
        dist, _ = nn.forward(ids[start : start + batch], model.params, train_mode=False)
        yield start, dist


def topk_accuracy(
    model: TrainedModel,
    examples: list[Example],
    k: int,
    out_vocab: Vocabulary,
) -> float:
    """Fraction of examples whose label lexeme is among the top-k predictions."""
    if not examples:
        raise ValueError("empty test set")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = 0
    for start, dist in _batched_dist(model, examples):
        # stable ranking: probability descending, vocabulary rank breaking ties
        top = np.argsort(-dist, axis=1, kind="stable")[:, :k]
        for row, ex in enumerate(examples[start : start + dist.shape[0]]):
            lexemes = {out_vocab.lexeme_of(int(i)) for i in top[row]}
            if ex.label_lexeme in lexemes:
                hits += 1
    return hits / len(examples)


def topk_accuracy_with_repetition(
    lm: TrainedModel,
    rep: TrainedModel,
    examples: list[Example],
    k: int,
    out_vocab: Vocabulary,
) -> float:
    """Top-k accuracy after theta-redistribution; in-window OOV labels can hit.

    The window lexeme set is recovered from each example's raw window text,
    keeping only items that look like keywords, identifiers, or literals.
    In subtoken mode that includes identifier fragments, so this mode is an
    auxiliary report, not the primary table metric.
    """
    if not examples:
        raise ValueError("empty test set")
    hits = 0
    ids = np.array([ex.window.ids for ex in examples], dtype=np.int64)
    dists, _ = nn.forward(ids, lm.params, train_mode=False)
    thetas, _ = nn.forward(ids, rep.params, train_mode=False)
    for i, ex in enumerate(examples):
        window_lexemes = [
            lex
            for lex, idx in zip(ex.window.raw_lexemes, ex.window.ids)
            if idx != PAD_ID and _label_like(lex)
        ]
        adjusted, oov_mass = redistribute(
            dists[i], float(thetas[i]), window_lexemes, out_vocab
        )
        scored = [(float(adjusted[j]), out_vocab.lexeme_of(j)) for j in range(2, len(adjusted))]
        scored.extend((mass, lex) for lex, mass in oov_mass.items())
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        if ex.label_lexeme in {lex for _, lex in scored[:k]}:
            hits += 1
    return hits / len(examples)


def unigram_topk_accuracy(
    train_examples: list[Example], test_examples: list[Example], k: int
) -> float:
    """Baseline: always predict the k most frequent training labels."""
    if not test_examples:
        raise ValueError("empty test set")
    counts = Counter(ex.label_lexeme for ex in train_examples)
    top = {lex for lex, _ in counts.most_common(k)}
    hits = sum(1 for ex in test_examples if ex.label_lexeme in top)
    return hits / len(test_examples)


def precision_recall(
    rep: TrainedModel,
    examples: list[Example],
    threshold: float = 0.5,
) -> PrecisionRecall:
    """Confusion-matrix precision and recall of the repetition detector."""
    ids = np.array([ex.window.ids for ex in examples], dtype=np.int64)
    probs, _ = nn.forward(ids, rep.params, train_mode=False)
    predicted = probs >= threshold
    actual = np.array([ex.repeats for ex in examples], dtype=bool)
    tp = int((predicted & actual).sum())
    fp = int((predicted & ~actual).sum())
    fn = int((~predicted & actual).sum())
    zero_support = (tp + fp) == 0
    precision = 1.0 if zero_support else tp / (tp + fp)
    recall = 1.0 if (tp + fn) == 0 else tp / (tp + fn)
    return PrecisionRecall(
        precision=precision,
        recall=recall,
        predicted_positives=tp + fp,
        actual_positives=tp + fn,
        zero_support=zero_support,
    )


def sample_completion_requests(
    sources: list[str], count: int, seed: int = 0, k: int = 5
) -> list[tuple[str, int]]:
    """(source, cursor) pairs at label-token boundaries, cycled to count."""
    from .lexer import scan  # local import to keep module import light

    rng = np.random.default_rng(seed)
    pairs: list[tuple[str, int]] = []
    for text in sources:
        tokens = [t for t in scan(text) if t.kind in LABEL_KINDS]
        if not tokens:
            continue
        picks = rng.choice(len(tokens), size=min(8, len(tokens)), replace=False)
        for idx in picks:
            pairs.append((text, tokens[int(idx)].offset))
    if not pairs:
        raise ValueError("no usable completion positions in the sampled sources")
    order = rng.permutation(len(pairs))
    shuffled = [pairs[int(i)] for i in order]
    return [shuffled[i % len(shuffled)] for i in range(count)]


def latency_benchmark(
    engine: CompletionEngine,
    requests: list[tuple[str, int]],
    n: int = 10_000,
    k: int = 5,
    threshold_ms: float = 100.0,
    warmup: int = 100,
) -> LatencyReport:
    """Serial wall-clock timing of complete(); warm-up calls are uncounted."""
    if not requests:
        raise ValueError("need at least one request")
    cycled = [requests[i % len(requests)] for i in range(n + warmup)]
    for source, cursor in cycled[:warmup]:
        engine.complete(source, cursor, k)
    durations = np.empty(n, dtype=np.float64)
    for i, (source, cursor) in enumerate(cycled[warmup:]):
        started = time.perf_counter()
        engine.complete(source, cursor, k)
        durations[i] = (time.perf_counter() - started) * 1000.0
    return build_latency_report(durations, threshold_ms)


def build_latency_report(durations_ms: np.ndarray, threshold_ms: float = 100.0) -> LatencyReport:
    durations_ms = np.asarray(durations_ms, dtype=np.float64)
    edges = [float(e) for e in HISTOGRAM_EDGES_MS] + [float("inf")]
    histogram = []
    lower = 0.0
    for edge in edges:
        count = int(((durations_ms > lower) & (durations_ms <= edge)).sum())
        if lower == 0.0:
            count += int((durations_ms == 0.0).sum())
        histogram.append((edge, count))
        lower = edge
    return LatencyReport(
        request_count=len(durations_ms),
        mean_ms=float(durations_ms.mean()),
        p50_ms=float(np.percentile(durations_ms, 50)),
        p75_ms=float(np.percentile(durations_ms, 75)),
        p90_ms=float(np.percentile(durations_ms, 90)),
        p99_ms=float(np.percentile(durations_ms, 99)),
        threshold_ms=threshold_ms,
        fraction_under_threshold=float((durations_ms < threshold_ms).mean()),
        histogram=histogram,
    )
