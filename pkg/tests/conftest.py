"""Shared fixtures. The desk bundle trains the real desk-scale models once
per session; only the tests that need them (acceptance, mostly) pay for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from nextok import bench, corpus, models, subtokens
from nextok.engine import CompletionEngine

ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = ROOT / "data" / "corpus"

DESK_SEED = 0
DESK_WINDOW = 40
DESK_VOCAB_CAP = 2000
LM_EPOCHS = 4
REP_EPOCHS = 2


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    assert CORPUS_DIR.exists(), "bundled corpus missing; run python -m nextok.datagen data/corpus --files 500 --seed 7"
    return CORPUS_DIR


@dataclass
class DeskBundle:
    in_vocab: subtokens.Vocabulary
    out_vocab: subtokens.Vocabulary
    examples: list
    train: list
    test: list
    lm: models.TrainedModel
    rep: models.TrainedModel
    engine: CompletionEngine
    sources: list[str]
    file_count: int
    token_count: int
    build_seconds: float = 0.0


@pytest.fixture(scope="session")
def desk_bundle(corpus_dir) -> DeskBundle:
    """Subtoken-mode desk models trained on the bundled corpus."""
    import time

    build_started = time.perf_counter()
    streams = corpus.scan_directory(corpus_dir)
    _, subtoken_counts, label_counts = corpus.count_lexemes(streams)
    in_vocab = subtokens.build_vocab(subtoken_counts, DESK_VOCAB_CAP)
    out_vocab = subtokens.build_vocab(label_counts, DESK_VOCAB_CAP)
    examples, file_count, token_count = corpus.extract_directory(
        corpus_dir, in_vocab, out_vocab, DESK_WINDOW, "subtoken"
    )
    train, test = corpus.split_train_test(examples, 0.1, DESK_SEED)

    lm_config = models.ModelConfig.desk("subtoken", epochs=LM_EPOCHS, seed=DESK_SEED)
    lm = models.train_lm(train, lm_config, len(in_vocab), len(out_vocab))
    rep_config = models.ModelConfig.desk("subtoken", epochs=REP_EPOCHS, seed=DESK_SEED)
    rep = models.train_repetition(train, rep_config, len(in_vocab), len(out_vocab))

    engine = CompletionEngine(lm, rep, in_vocab, out_vocab)
    sources = [p.read_text(encoding="utf-8") for p in corpus.corpus_files(corpus_dir)]
    return DeskBundle(
        in_vocab=in_vocab,
        out_vocab=out_vocab,
        examples=examples,
        train=train,
        test=test,
        lm=lm,
        rep=rep,
        engine=engine,
        sources=sources,
        file_count=file_count,
        token_count=token_count,
        build_seconds=time.perf_counter() - build_started,
    )
