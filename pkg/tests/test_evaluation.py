import numpy as np
import pytest

from icdkit.corpus import assemble_sample
from icdkit.errors import DataError, NumericError
from icdkit.evaluation import (
    DEFAULT_GRID,
    DataSplit,
    TrainConfig,
    best_epoch_index,
    binarize,
    evaluate,
    micro_metrics,
    pad_unseen,
    sweep_threshold,
    train,
)
from icdkit.features import fit_tfidf
from icdkit.models import LabelSpace, ModelSpec, build_model, constant_fit
from icdkit.synth import SynthConfig, generate_synthetic_corpus


def brute_force_micro(y, y_pred):
    """Independent confusion-count oracle: explicit loops, no pooling."""
    tp = fp = fn = 0
    for n in range(y.shape[0]):
        for c in range(y.shape[1]):
            if y_pred[n, c] == 1 and y[n, c] == 1:
                tp += 1
            elif y_pred[n, c] == 1:
                fp += 1
            elif y[n, c] == 1:
                fn += 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


# -- micro_metrics -----------------------------------------------------------


def test_micro_perfect_prediction():
    y = np.array([[1.0, 0, 1], [0, 1, 0]])
    rep = micro_metrics(y, y.copy())
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)


def test_micro_hand_enumerated_case():
    y = np.array([[1.0, 1, 0], [0, 1, 0]])
    y_pred = np.array([[1.0, 0, 0], [0, 1, 1]])
    rep = micro_metrics(y, y_pred)
    assert rep.precision == pytest.approx(2 / 3)
    assert rep.recall == pytest.approx(2 / 3)
    assert rep.f1 == pytest.approx(2 / 3)


def test_micro_all_zero_predictions():
    y = np.array([[1.0, 0], [1, 1]])
    rep = micro_metrics(y, np.zeros_like(y))
    assert (rep.precision, rep.recall, rep.f1) == (0.0, 0.0, 0.0)


def test_micro_shape_mismatch():
    with pytest.raises(DataError):
        micro_metrics(np.zeros((2, 3)), np.zeros((3, 2)))


def test_micro_matches_brute_force_oracle():
    rng = np.random.default_rng(11)
    for _ in range(60):
        n, c = int(rng.integers(1, 51)), int(rng.integers(1, 21))
        y = (rng.random((n, c)) < 0.3).astype(float)
        y_pred = (rng.random((n, c)) < 0.3).astype(float)
        if rng.random() < 0.1:
            y_pred[:] = 0.0  # all-zero prediction case
        if rng.random() < 0.2:
            y_pred[:, rng.integers(0, c)] = 0.0  # unseen-style column
        rep = micro_metrics(y, y_pred)
        p, r, f1 = brute_force_micro(y, y_pred)
        assert abs(rep.precision - p) < 1e-12
        assert abs(rep.recall - r) < 1e-12
        assert abs(rep.f1 - f1) < 1e-12


def test_f1_zero_iff_no_true_positives():
    rng = np.random.default_rng(3)
    for _ in range(40):
        y = (rng.random((6, 4)) < 0.4).astype(float)
        y_pred = (rng.random((6, 4)) < 0.4).astype(float)
        rep = micro_metrics(y, y_pred)
        tp = (y * y_pred).sum()
        assert (rep.f1 == 0.0) == (tp == 0)


# -- binarize ----------------------------------------------------------------


def test_binarize_boundary_is_inclusive():
    assert binarize(np.array([[0.28]]), 0.28)[0, 0] == 1.0


def test_binarize_above_max_gives_zeros():
    probs = np.array([[0.1, 0.5, 0.9]])
    assert binarize(probs, 0.9001).sum() == 0.0


def test_binarize_mixed_row():
    out = binarize(np.array([[0.1, 0.5, 0.9]]), 0.5)
    assert list(out[0]) == [0.0, 1.0, 1.0]


def test_binarize_rejects_out_of_range_threshold():
    with pytest.raises(DataError):
        binarize(np.zeros((1, 1)), 1.0)


# -- sweep_threshold ---------------------------------------------------------


def test_sweep_matches_exhaustive_oracle():
    rng = np.random.default_rng(17)
    grid = DEFAULT_GRID
    for _ in range(30):
        n, c = int(rng.integers(1, 31)), int(rng.integers(1, 11))
        y = (rng.random((n, c)) < 0.35).astype(float)
        probs = rng.random((n, c))
        best_t, reports = sweep_threshold(probs, y, grid)
        oracle_best = max(
            grid, key=lambda t: (brute_force_micro(y, (probs >= t).astype(float))[2], -t)
        )
        assert best_t == oracle_best
        assert len(reports) == len(grid)


def test_sweep_perfect_predictions_tie_breaks_to_minimum():
    y = (np.random.default_rng(0).random((8, 4)) < 0.5).astype(float)
    best_t, _ = sweep_threshold(y.copy(), y, DEFAULT_GRID)
    assert best_t == DEFAULT_GRID[0] == 0.01


def test_sweep_thresholds_on_hundredths_grid():
    assert len(DEFAULT_GRID) == 99
    assert DEFAULT_GRID[0] == 0.01 and DEFAULT_GRID[-1] == 0.99
    assert 0.28 in DEFAULT_GRID and 0.19 in DEFAULT_GRID
    rng = np.random.default_rng(23)
    y = (rng.random((20, 6)) < 0.3).astype(float)
    best_t, _ = sweep_threshold(rng.random((20, 6)), y)
    assert round(best_t * 100) == pytest.approx(best_t * 100)


def test_sweep_never_worse_on_refined_grid():
    rng = np.random.default_rng(29)
    coarse = tuple(round(t / 10, 2) for t in range(1, 10))
    fine = tuple(sorted(set(coarse) | set(DEFAULT_GRID)))
    for _ in range(20):
        y = (rng.random((10, 5)) < 0.4).astype(float)
        probs = rng.random((10, 5))
        t_coarse, _ = sweep_threshold(probs, y, coarse)
        t_fine, _ = sweep_threshold(probs, y, fine)
        f_coarse = micro_metrics(y, binarize(probs, t_coarse)).f1
        f_fine = micro_metrics(y, binarize(probs, t_fine)).f1
        assert f_fine >= f_coarse - 1e-15


# -- pad_unseen --------------------------------------------------------------


def make_space(codes):
    return LabelSpace(codes=list(codes), counts={c: 1 for c in codes})


def test_pad_unseen_identity_when_spaces_match():
    space = make_space(["A", "B"])
    probs = np.array([[0.2, 0.9]])
    assert np.array_equal(pad_unseen(probs, space, space), probs)


def test_pad_unseen_zero_columns_lower_recall_not_precision():
    trained = make_space(["A"])
    full = make_space(["A", "B"])
    probs = np.array([[0.9], [0.8]])
    padded = pad_unseen(probs, trained, full)
    assert np.all(padded[:, 1] == 0.0)
    y = np.array([[1.0, 1.0], [1.0, 1.0]])
    rep = micro_metrics(y, binarize(padded, 0.5))
    assert rep.precision == 1.0
    assert rep.recall == 0.5


def test_pad_unseen_preserves_trained_column_contributions():
    trained = make_space(["A", "B"])
    full = make_space(["A", "B", "C", "D"])
    rng = np.random.default_rng(5)
    probs = rng.random((6, 2))
    padded = pad_unseen(probs, trained, full)
    t = 0.5
    assert binarize(padded, t).sum() == binarize(probs, t).sum()


def test_pad_unseen_missing_trained_code_errors():
    with pytest.raises(DataError):
        pad_unseen(np.zeros((1, 2)), make_space(["A", "B"]), make_space(["A"]))


# -- train protocol ----------------------------------------------------------


def test_best_epoch_injected_history():
    assert best_epoch_index([0.3, 0.5, 0.4]) == 1  # restored epoch 2
    assert best_epoch_index([0.5, 0.5, 0.4]) == 0  # earliest tie
    assert best_epoch_index([0.1]) == 0


def lr_fixture(n=60, seed=0):
    rng = np.random.default_rng(seed)
    vocab = ["alpha", "beta", "gamma", "delta"]
    texts, codes = [], []
    for i in range(n):
        has_a = rng.random() < 0.5
        words = ["alpha", "alpha"] if has_a else ["beta"]
        words += list(rng.choice(["gamma", "delta"], 2))
        texts.append(" ".join(words))
        codes.append({"CA"} if has_a else {"CB"})
    return DataSplit(texts=texts, code_sets=codes)


def test_train_caps_epochs_and_restores_best():
    tr, va = lr_fixture(80, seed=1), lr_fixture(30, seed=2)
    space = LabelSpace.from_code_sets(tr.code_sets)
    model = build_model(ModelSpec(family="lr"), space, fit_tfidf(tr.texts))
    result = train(model, tr, va, TrainConfig(max_epochs=10, seed=3))
    assert len(result.history) <= 10
    assert result.best_val_f1 == max(h.val_f1 for h in result.history)
    assert result.best_epoch == best_epoch_index([h.val_f1 for h in result.history]) + 1
    assert result.threshold == result.history[result.best_epoch - 1].val_threshold


def test_train_bitwise_deterministic():
    tr, va = lr_fixture(50, seed=4), lr_fixture(20, seed=5)
    space = LabelSpace.from_code_sets(tr.code_sets)
    runs = []
    for _ in range(2):
        model = build_model(ModelSpec(family="lr"), space, fit_tfidf(tr.texts))
        result = train(model, tr, va, TrainConfig(max_epochs=4, seed=9))
        runs.append(
            (
                [(h.val_f1, h.val_threshold, h.train_loss) for h in result.history],
                model.params["out_w"].data.tobytes(),
            )
        )
    assert runs[0] == runs[1]


def test_train_aborts_on_non_finite_loss():
    tr, va = lr_fixture(40, seed=6), lr_fixture(10, seed=7)
    space = LabelSpace.from_code_sets(tr.code_sets)
    model = build_model(ModelSpec(family="lr"), space, fit_tfidf(tr.texts))
    model.params["out_w"].data[...] = np.inf
    with pytest.raises(NumericError, match="epoch 1"), np.errstate(all="ignore"):
        train(model, tr, va, TrainConfig(max_epochs=1, seed=0))


def test_train_restored_weights_reproduce_best_val_f1():
    tr, va = lr_fixture(80, seed=8), lr_fixture(30, seed=9)
    space = LabelSpace.from_code_sets(tr.code_sets)
    model = build_model(ModelSpec(family="lr"), space, fit_tfidf(tr.texts))
    result = train(model, tr, va, TrainConfig(max_epochs=5, seed=1))
    from icdkit.models import predict_texts

    probs = predict_texts(model, va.texts)
    y = space.matrix(va.code_sets)
    rep = micro_metrics(y, binarize(probs, result.threshold))
    assert rep.f1 == pytest.approx(result.best_val_f1, abs=1e-12)


# -- evaluate ----------------------------------------------------------------


def test_evaluate_constant_hand_confusion():
    train_labels = [{"A", "B"}, {"A"}, {"A", "C"}, {"B"}]
    model = constant_fit(train_labels, k=2)  # predicts {A, B}
    assert set(model.top_codes) == {"A", "B"}
    test_split = DataSplit(
        texts=["t1", "t2", "t3", "t4"],
        code_sets=[{"A"}, {"B", "C"}, {"A", "B"}, {"C"}],
    )
    full = LabelSpace.from_code_sets(train_labels + test_split.code_sets)
    rep = evaluate(model, 0.5, test_split, full)
    # predicted 2 codes x 4 samples = 8; TP: A@1, B@2, A@3, B@3 = 4; actual = 6
    assert rep.precision == pytest.approx(4 / 8)
    assert rep.recall == pytest.approx(4 / 6)
    assert rep.f1 == pytest.approx(2 * 0.5 * (4 / 6) / (0.5 + 4 / 6))


def test_evaluate_uses_checkpoint_threshold_verbatim():
    train_labels = [{"A"}] * 3
    model = constant_fit(train_labels, k=1)
    test_split = DataSplit(texts=["x"], code_sets=[{"A"}])
    full = LabelSpace.from_code_sets(train_labels)
    rep = evaluate(model, 0.73, test_split, full)
    assert rep.threshold == 0.73


def test_evaluate_scores_unseen_codes_as_misses():
    model = constant_fit([{"A"}] * 3, k=1)
    test_split = DataSplit(texts=["x", "y"], code_sets=[{"A", "NEW"}, {"NEW"}])
    full = LabelSpace.from_code_sets([{"A"}] + test_split.code_sets)
    rep = evaluate(model, 0.5, test_split, full)
    assert rep.precision == pytest.approx(1 / 2)
    assert rep.recall == pytest.approx(1 / 3)


# -- synthetic corpus --------------------------------------------------------


def test_synth_s_only_places_all_triggers_in_s():
    admissions, _ = generate_synthetic_corpus(SynthConfig(num_codes=10, samples=50, seed=1))
    for adm in admissions:
        s_text = assemble_sample(adm, "S")
        for code in adm.codes:
            trig = f"trig{int(code[1:]):03d}"
            assert trig in s_text.split()


def test_synth_split_confines_half_of_triggers_to_e():
    cfg = SynthConfig(num_codes=10, samples=120, placement="split", seed=2)
    admissions, _ = generate_synthetic_corpus(cfg)
    hidden = 0
    total = 0
    for adm in admissions:
        s_tokens = set(assemble_sample(adm, "S").split())
        sea_tokens = set(assemble_sample(adm, "SEA").split())
        for code in adm.codes:
            trig = f"trig{int(code[1:]):03d}"
            assert trig in sea_tokens  # label always recoverable from SEA
            total += 1
            if trig not in s_tokens:
                hidden += 1
    assert 0.3 < hidden / total < 0.7  # about half confined to E


def test_synth_frequency_skew():
    admissions, _ = generate_synthetic_corpus(SynthConfig(num_codes=30, samples=1500, seed=3))
    from collections import Counter

    freq = Counter()
    for adm in admissions:
        freq.update(adm.codes)
    ranked = sorted(freq.values(), reverse=True)
    assert ranked[0] >= 5 * ranked[19]


def test_synth_splits_patient_disjoint():
    admissions, manifest = generate_synthetic_corpus(SynthConfig(num_codes=5, samples=60, seed=4))
    by_id = {a.admission_id: a.patient_id for a in admissions}
    sets = [
        {by_id[i] for i in manifest.train},
        {by_id[i] for i in manifest.validation},
        {by_id[i] for i in manifest.test},
    ]
    assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])


def test_synth_labels_match_emitted_triggers_exactly():
    admissions, _ = generate_synthetic_corpus(SynthConfig(num_codes=8, samples=40, seed=5))
    for adm in admissions:
        tokens = set(assemble_sample(adm, "SEA").split())
        emitted = {t for t in tokens if t.startswith("trig")}
        expected = {f"trig{int(c[1:]):03d}" for c in adm.codes}
        assert emitted == expected


def test_synth_vocab_smaller_than_codes_errors():
    with pytest.raises(DataError):
        SynthConfig(num_codes=50, vocab_size=10)
