import numpy as np
import pytest

from icdkit.errors import DataError
from icdkit.features import PAD_ID, UNK_ID
from icdkit.word2vec import EmbeddingMatrix, Word2VecConfig, train_word2vec


def tiny_corpus():
    return ["alpha beta gamma delta"] * 12 + ["beta gamma epsilon zeta"] * 12


def quick_config(**kw):
    defaults = dict(size=8, window=2, negatives=3, epochs=1, min_sample_count=1, seed=0)
    defaults.update(kw)
    return Word2VecConfig(**defaults)


def test_embedding_dimensions_follow_config():
    emb = train_word2vec(tiny_corpus(), quick_config(size=300))
    assert emb.vectors.shape[1] == 300


def test_min_sample_count_excludes_rare_tokens():
    texts = ["rare stable"] + ["stable other"] * 11
    emb = train_word2vec(texts, quick_config(min_sample_count=10))
    assert "rare" not in emb.vocabulary.token_to_id
    assert "stable" in emb.vocabulary.token_to_id
    assert emb.vocabulary.lookup("rare") == UNK_ID


def test_pad_row_stays_zero_and_no_reserved_surface_tokens():
    emb = train_word2vec(tiny_corpus(), quick_config(epochs=3))
    assert np.all(emb.vectors[PAD_ID] == 0.0)
    assert np.all(np.isfinite(emb.vectors))
    assert "<pad>" not in emb.vocabulary.token_to_id
    assert "<unk>" not in emb.vocabulary.token_to_id


def test_training_is_deterministic_for_fixed_seed():
    a = train_word2vec(tiny_corpus(), quick_config(seed=7))
    b = train_word2vec(tiny_corpus(), quick_config(seed=7))
    assert np.array_equal(a.vectors, b.vectors)


def test_metadata_records_algorithm():
    emb = train_word2vec(tiny_corpus(), quick_config(algorithm="cbow"))
    assert emb.metadata["algorithm"] == "cbow"


def test_empty_corpus_errors():
    with pytest.raises(DataError):
        train_word2vec([], quick_config())


def test_unknown_algorithm_rejected():
    with pytest.raises(DataError):
        Word2VecConfig(algorithm="glove")


def _cooccurrence_corpus(rng):
    """p and q always share a window; r lives in disjoint contexts."""
    ctx_a = [f"a{i}" for i in range(5)]
    ctx_b = [f"b{i}" for i in range(5)]
    sentences = []
    for i in range(5000):
        if i % 2 == 0:
            sentences.append(" ".join(["p", "q"] + list(rng.choice(ctx_a, 2))))
        else:
            sentences.append(" ".join(["r"] + list(rng.choice(ctx_b, 2))))
    return sentences


@pytest.mark.slow
def test_skipgram_brings_cooccurring_tokens_together():
    wins = 0
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        corpus = _cooccurrence_corpus(rng)
        emb = train_word2vec(
            corpus,
            Word2VecConfig(
                algorithm="skip_gram", size=24, window=5, negatives=5,
                epochs=2, min_sample_count=10, seed=seed,
            ),
        )
        if emb.cosine("p", "q") > emb.cosine("p", "r"):
            wins += 1
    assert wins >= 3


def _shared_context_corpus(rng):
    """p and q never co-occur but draw contexts from the same pool."""
    ctx_a = [f"a{i}" for i in range(5)]
    ctx_b = [f"b{i}" for i in range(5)]
    sentences = []
    for i in range(5000):
        if i % 3 == 0:
            sentences.append(" ".join(["p"] + list(rng.choice(ctx_a, 3))))
        elif i % 3 == 1:
            sentences.append(" ".join(["q"] + list(rng.choice(ctx_a, 3))))
        else:
            sentences.append(" ".join(["r"] + list(rng.choice(ctx_b, 3))))
    return sentences


@pytest.mark.slow
def test_cbow_groups_tokens_with_shared_contexts():
    # CBoW predicts centers from context bags, so similarity comes from
    # sharing contexts rather than from direct co-occurrence.
    wins = 0
    for seed in range(5):
        rng = np.random.default_rng(200 + seed)
        corpus = _shared_context_corpus(rng)
        emb = train_word2vec(
            corpus,
            Word2VecConfig(
                algorithm="cbow", size=24, window=5, negatives=5,
                epochs=2, min_sample_count=10, seed=seed,
            ),
        )
        if emb.cosine("p", "q") > emb.cosine("p", "r"):
            wins += 1
    assert wins >= 3


def test_text_export_round_trip(tmp_path):
    emb = train_word2vec(tiny_corpus(), quick_config(epochs=2))
    path = tmp_path / "vectors.txt"
    emb.save_text(path)
    header = path.read_text(encoding="utf-8").splitlines()[0].split()
    assert [int(header[0]), int(header[1])] == list(emb.vectors.shape)
    loaded = EmbeddingMatrix.load_text(path)
    assert np.array_equal(loaded.vectors, emb.vectors)
    assert loaded.vocabulary.id_to_token == emb.vocabulary.id_to_token


def test_pad_row_must_be_zero_invariant():
    vecs = np.ones((3, 4))
    from icdkit.features import Vocabulary

    vocab = Vocabulary(
        id_to_token=["<pad>", "<unk>", "tok"],
        token_to_id={"tok": 2},
        sample_freq={},
        total_count={},
    )
    with pytest.raises(DataError, match="padding row"):
        EmbeddingMatrix(vectors=vecs, vocabulary=vocab)
