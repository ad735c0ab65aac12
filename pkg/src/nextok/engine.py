"""End-to-end completion: model prediction, repetition-driven probability
redistribution, merge with static scope analysis, and top-k ranking.

The repetition probability theta rescales the model's distribution so the
lexemes present in the context window carry exactly theta of the mass and
everything else carries 1 - theta. The <unk> mass seeds window lexemes the
output vocabulary cannot represent, which is how out-of-vocabulary local
names become suggestible at all.

Scope suggestions are scored by their adjusted model probability (score 0
when the model never produced them); model-only suggestions are filtered by
cursor context: only non-literals survive in a declaration context, only
literals elsewhere, and none at all after a member access.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lexer import LABEL_KINDS, is_literal_lexeme, scan, tokens_before
from .models import PredictionOutput, TrainedModel, predict
from .scope import ScopeSet, enumerate_scope, match_concatenation
from .subtokens import PAD_ID, UNK_ID, Vocabulary, encode_context, window_token_span

IDENT_ALPHABET = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_"
)


@dataclass
class RankedCompletion:
    """One suggestion with its final probability mass and origin flags.

    from_repetition marks window lexemes outside the output vocabulary:
    their entire mass came from the repetition redistribution. theta records
    the repetition probability used for the request.
    """

    text: str
    score: float
    from_scope: bool
    from_model_vocab: bool
    from_repetition: bool
    concatenated: bool = False
    theta: float = 0.0


def redistribute(
    p: np.ndarray,
    theta: float,
    window_lexemes: list[str],
    vocab: Vocabulary,
) -> tuple[np.ndarray, dict[str, float]]:
    """Scale the in-window partition of p to theta, the rest to 1 - theta.

    window_lexemes are the keyword/identifier/literal lexemes of the context
    window (with multiplicity). Returns the adjusted distribution over the
    output vocabulary plus masses for in-window lexemes the vocabulary lacks;
    the two parts sum to 1.

    Out-of-vocabulary window lexemes are seeded from the <unk> mass in
    proportion to their window occurrence counts (the <unk> entry is then
    emptied); in-vocabulary window entries keep their model mass as seeds.
    Degenerate cases: an empty window set ignores theta entirely; if the
    out-partition has no mass the in-partition is normalized to 1; a zero
    in-seed with positive theta spreads theta uniformly over the window set.
    """
    adjusted = np.array(p, dtype=np.float64)
    if not window_lexemes:
        return adjusted, {}

    counts: dict[str, int] = {}
    for lex in window_lexemes:
        counts[lex] = counts.get(lex, 0) + 1
    in_vocab_ids = {}
    oov_counts = {}
    for lex, count in counts.items():
        if lex in vocab:
            in_vocab_ids[lex] = vocab.id_of[lex]
        else:
            oov_counts[lex] = count

    oov_mass: dict[str, float] = {}
    if oov_counts:
        unk_mass = float(adjusted[UNK_ID])
        total = sum(oov_counts.values())
        for lex, count in oov_counts.items():
            oov_mass[lex] = unk_mass * count / total
        adjusted[UNK_ID] = 0.0

    id_list = list(in_vocab_ids.values())
    in_mass = float(adjusted[id_list].sum()) + sum(oov_mass.values())
    out_mass = float(adjusted.sum()) - float(adjusted[id_list].sum())

    if out_mass <= 0.0:
        # nothing outside the window set: normalize the window partition
        if in_mass > 0.0:
            factor = 1.0 / in_mass
            adjusted[id_list] *= factor
            for lex in oov_mass:
                oov_mass[lex] *= factor
        return adjusted, oov_mass

    if in_mass > 0.0:
        in_factor = theta / in_mass
        adjusted[id_list] *= in_factor
        for lex in oov_mass:
            oov_mass[lex] *= in_factor
    elif theta > 0.0:
        # zero seeds: spread theta uniformly over the window set
        share = theta / len(counts)
        for lex in counts:
            if lex in in_vocab_ids:
                adjusted[in_vocab_ids[lex]] = share
            else:
                oov_mass[lex] = share

    out_factor = (1.0 - theta) / out_mass
    out_ids = np.ones(len(adjusted), dtype=bool)
    out_ids[id_list] = False
    adjusted[out_ids] *= out_factor
    return adjusted, oov_mass


def _leading_identifier(text: str) -> str:
    for i, ch in enumerate(text):
        if ch not in IDENT_ALPHABET:
            return text[:i]
    return text


class CompletionEngine:
    """Immutable after construction; complete() is safe to call concurrently."""

    def __init__(
        self,
        lm: TrainedModel,
        rep: TrainedModel,
        in_vocab: Vocabulary,
        out_vocab: Vocabulary,
    ):
        if len(in_vocab) != lm.in_vocab_size:
            raise ValueError("input vocabulary size does not match the checkpoint")
        if len(out_vocab) != lm.out_vocab_size:
            raise ValueError("output vocabulary size does not match the checkpoint")
        self.lm = lm
        self.rep = rep
        self.in_vocab = in_vocab
        self.out_vocab = out_vocab
        self._pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="nextok-model")

    def config_summary(self) -> dict[str, object]:
        cfg = self.lm.config
        return {
            "mode": cfg.mode,
            "window_len": cfg.window_len,
            "embed_dim": cfg.embed_dim,
            "hidden_dim": cfg.hidden_dim,
            "proj_dim": cfg.proj_dim,
            "in_vocab_size": self.lm.in_vocab_size,
            "out_vocab_size": self.lm.out_vocab_size,
        }

    def _predict(self, context_tokens) -> PredictionOutput:
        window = encode_context(
            context_tokens, self.in_vocab, self.lm.config.window_len, self.lm.config.mode
        )
        return predict(window.ids, self.lm, self.rep)

    def complete_request(
        self, source: str, cursor: int, k: int
    ) -> tuple[list[RankedCompletion], float]:
        """Ranked completions plus the repetition probability used."""
        if k < 1:
            raise ValueError("k must be >= 1")
        source_len = len(source) if source.isascii() else len(source.encode("utf-8"))
        if not 0 <= cursor <= source_len:
            raise ValueError(f"cursor {cursor} out of range [0, {source_len}]")

        tokens = scan(source)
        context = tokens_before(tokens, cursor)

        # model inference and scope enumeration run as independent tasks
        prediction_future = self._pool.submit(self._predict, context)
        scope = enumerate_scope(source, cursor)
        prediction = prediction_future.result()

        window_span = window_token_span(
            context, self.lm.config.window_len, self.lm.config.mode
        )
        window_lexemes = [t.lexeme for t in window_span if t.kind in LABEL_KINDS]
        adjusted, oov_mass = redistribute(
            prediction.dist, prediction.theta, window_lexemes, self.out_vocab
        )
        items = self._rank(scope, adjusted, oov_mass, prediction.theta, k)
        return items, prediction.theta

    def complete(self, source: str, cursor: int, k: int) -> list[RankedCompletion]:
        items, _ = self.complete_request(source, cursor, k)
        return items

    def _rank(
        self,
        scope: ScopeSet,
        adjusted: np.ndarray,
        oov_mass: dict[str, float],
        theta: float,
        k: int,
    ) -> list[RankedCompletion]:
        def mass_of(text: str) -> float:
            if text in oov_mass:
                return oov_mass[text]
            idx = self.out_vocab.id_of.get(text)
            return float(adjusted[idx]) if idx is not None else 0.0

        items: list[RankedCompletion] = []
        plain_scope_texts = set(scope.identifiers) | set(scope.keywords)
        for text in sorted(plain_scope_texts):
            items.append(
                RankedCompletion(
                    text=text,
                    score=mass_of(text),
                    from_scope=True,
                    from_model_vocab=text in self.out_vocab,
                    from_repetition=text in oov_mass,
                    theta=theta,
                )
            )
        for text in sorted(scope.concatenated):
            prefix = _leading_identifier(text)
            score = 0.0
            if prefix and match_concatenation(text, prefix):
                score = mass_of(prefix)
            items.append(
                RankedCompletion(
                    text=text,
                    score=score,
                    from_scope=True,
                    from_model_vocab=prefix in self.out_vocab,
                    from_repetition=prefix in oov_mass,
                    concatenated=True,
                    theta=theta,
                )
            )

        # model-only candidates, filtered by cursor context
        if not scope.member_access_context:
            want_literals = not scope.declaration_context
            candidates: list[tuple[str, float, bool]] = []
            order = np.argsort(-adjusted, kind="stable")
            taken = 0
            for idx in order:
                if taken >= k:
                    break
                if idx in (PAD_ID, UNK_ID):
                    continue
                text = self.out_vocab.lexeme_of(int(idx))
                if text in plain_scope_texts:
                    continue
                if is_literal_lexeme(text) != want_literals:
                    continue
                score = float(adjusted[idx])
                if score <= 0.0:
                    break
                candidates.append((text, score, False))
                taken += 1
            for text, score in oov_mass.items():
                if text in plain_scope_texts or score <= 0.0:
                    continue
                if is_literal_lexeme(text) != want_literals:
                    continue
                candidates.append((text, score, True))
            for text, score, from_rep in candidates:
                items.append(
                    RankedCompletion(
                        text=text,
                        score=score,
                        from_scope=False,
                        from_model_vocab=not from_rep,
                        from_repetition=from_rep,
                        theta=theta,
                    )
                )

        items.sort(key=lambda it: (-it.score, not it.from_scope, it.text))
        return items[:k]
