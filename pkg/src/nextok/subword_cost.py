"""Cost analysis of assembling whole-token suggestions from per-subword decoding.

Under a geometric per-step model where the rank-i subword has probability
(1/2)^i, a length-m sequence of ranks (r_1..r_m) has probability
(1/2)^(r_1+...+r_m). Probabilities are carried as the integer exponent sum,
so comparisons and reported values stay exact dyadic rationals. Every
distinct proper prefix of an emitted sequence costs one network invocation,
which is what makes per-subword decoding blow the interactive latency budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

ENUMERATION_BOUND = 10**6


@dataclass(frozen=True)
class CostScenario:
    """m subwords per whole token (end-of-token symbol included), k suggestions."""

    m: int
    k: int
    latency_budget_ms: float = 100.0

    def __post_init__(self) -> None:
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be >= 1")


def _compositions(total: int, parts: int):
    """All tuples of `parts` positive integers summing to `total`, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def enumerate_topk(scenario: CostScenario) -> list[tuple[tuple[int, ...], Fraction]]:
    """Exact top-k rank sequences by product probability.

    Sequences are emitted in decreasing probability (increasing rank sum);
    within one probability level the order is lexicographic on rank tuples.
    """
    if scenario.k > ENUMERATION_BOUND:
        raise ValueError(f"k={scenario.k} exceeds enumeration bound {ENUMERATION_BOUND}")
    out: list[tuple[tuple[int, ...], Fraction]] = []
    exponent = scenario.m
    while len(out) < scenario.k:
        prob = Fraction(1, 2**exponent)
        for ranks in _compositions(exponent, scenario.m):
            out.append((ranks, prob))
            if len(out) == scenario.k:
                return out
        exponent += 1
    return out


def count_requests(sequences: list[tuple[tuple[int, ...], Fraction]]) -> int:
    """Distinct proper prefixes (the empty prefix included) across all sequences.

    Each prefix is one network invocation: the model is queried once per
    distinct partial sequence to rank its continuations.
    """
    prefixes: set[tuple[int, ...]] = set()
    for ranks, _ in sequences:
        for cut in range(len(ranks)):
            prefixes.add(ranks[:cut])
    return len(prefixes)


def per_request_budget(scenario: CostScenario, requests: int) -> float:
    """Milliseconds available per prediction request inside the latency budget."""
    if requests < 1:
        raise ValueError("requests must be >= 1")
    return scenario.latency_budget_ms / requests


def level_multiplicities(
    sequences: list[tuple[tuple[int, ...], Fraction]],
) -> list[tuple[Fraction, int]]:
    """(probability, count) per probability level, highest probability first."""
    levels: list[tuple[Fraction, int]] = []
    for _, prob in sequences:
        if levels and levels[-1][0] == prob:
            levels[-1] = (prob, levels[-1][1] + 1)
        else:
            levels.append((prob, 1))
    return levels


def report_lines(scenario: CostScenario) -> list[str]:
    """The analysis table emitted by the CLI subcommand."""
    sequences = enumerate_topk(scenario)
    requests = count_requests(sequences)
    budget = per_request_budget(scenario, requests)
    lines = ["level probability\tmultiplicity\tcumulative"]
    cumulative = 0
    for prob, count in level_multiplicities(sequences):
        cumulative += count
        lines.append(f"{prob}\t{count}\t{cumulative}")
    lines.append(f"sequences: {len(sequences)}")
    lines.append(f"requests: {requests}, per-request budget: {budget:.2f}ms")
    return lines
