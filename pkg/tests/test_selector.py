"""Tests for framework.selector: labeling rules, pipelines, CV, inspection and persistence."""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.errors import FitError, StratificationError, ValidationError
from core.io import write_csv
from framework.experiment import ExperimentManifest, run_experiment
from framework.features import FEATURE_NAMES, SPECTRAL
from framework.selector import (
    LabeledDataset,
    StackingEstimator,
    balanced_accuracy,
    cross_validate,
    f_classif_finite,
    fit_pipeline,
    fit_pipeline_crit1,
    fit_pipeline_crit2,
    label_criterion1,
    label_criterion2,
    load_model,
    partial_dependence,
    permutation_importance,
    save_model,
    stratified_folds,
)

GW2 = ["expected_costGW_over_sdp_cost", "std_costGW_over_sdp_cost"]


def _dataset(rows=40, seed=0):
    """Half the rows positive; gw2 columns separate crit1, 'density' copies the crit2 label."""
    rng = np.random.default_rng(seed)
    y = np.array([k % 2 for k in range(rows)])
    X = rng.uniform(0.0, 1.0, size=(rows, len(FEATURE_NAMES)))
    hi, lo = rng.uniform(0.9, 1.0, rows), rng.uniform(0.0, 0.1, rows)
    X[:, FEATURE_NAMES.index(GW2[0])] = np.where(y == 1, hi, lo)
    X[:, FEATURE_NAMES.index(GW2[1])] = np.where(y == 1, lo, hi)
    X[:, FEATURE_NAMES.index("density")] = y
    return LabeledDataset(
        instance_ids=[f"n10_i{k:02d}" for k in range(rows)],
        features=X,
        label_crit1=y,
        label_crit2=y,
        qaoa_ratio=np.where(y == 1, 0.99, 0.9),
        gw_ratio=np.where(y == 1, 0.95, 0.95),
        n=np.full(rows, 10),
        p_used=np.full(rows, 3),
    )


def test_criterion1_ties_go_to_qaoa():
    assert label_criterion1(0.9, 0.95) == 1
    assert label_criterion1(0.95, 0.9) == 0
    assert label_criterion1(0.93, 0.93) == 0


def test_criterion2_threshold_and_margin():
    assert label_criterion2(0.99, 0.97) == 1
    assert label_criterion2(0.99, 0.975) == 0
    assert label_criterion2(0.98, 0.90) == 0
    assert label_criterion2(1.0, 0.95) == 1


def test_relabel_mismatches_flags_inconsistent_rows():
    ds = _dataset(rows=8)
    # rows with y=0 have qaoa 0.9 < gw 0.95 so crit1 should be 1
    assert len(ds.relabel_mismatches()) == 8
    ds.label_crit1 = (ds.gw_ratio > ds.qaoa_ratio).astype(int)
    ds.label_crit2 = np.array([label_criterion2(q, g) for q, g in zip(ds.qaoa_ratio, ds.gw_ratio)])
    assert ds.relabel_mismatches() == []


def test_dataset_shape_is_validated():
    with pytest.raises(ValidationError):
        LabeledDataset(["a"], np.zeros((1, 3)), [0], [0], [0.9], [0.9], [10], [1])
    X = np.zeros((1, len(FEATURE_NAMES)))
    X[0, 0] = np.nan
    with pytest.raises(ValidationError):
        LabeledDataset(["a"], X, [0], [0], [0.9], [0.9], [10], [1])


def test_dataset_from_csv_joins_on_instance_id(tmp_path):
    ds = _dataset(rows=6)
    feature_rows = [
        dict(instance_id=iid, **dict(zip(FEATURE_NAMES, ds.features[k].tolist())))
        for k, iid in reversed(list(enumerate(ds.instance_ids)))
    ]
    write_csv(tmp_path / "features.csv", ["instance_id"] + FEATURE_NAMES, feature_rows, {"seed": 0})
    label_rows = [
        {
            "instance_id": iid,
            "n": 10,
            "p_used": 3,
            "qaoa_ratio": float(ds.qaoa_ratio[k]),
            "gw_ratio": float(ds.gw_ratio[k]),
            "label_crit1": int(ds.label_crit1[k]),
            "label_crit2": int(ds.label_crit2[k]),
        }
        for k, iid in enumerate(ds.instance_ids)
    ]
    header = ["instance_id", "n", "p_used", "qaoa_ratio", "gw_ratio", "label_crit1", "label_crit2"]
    write_csv(tmp_path / "labels.csv", header, label_rows)
    back = LabeledDataset.from_csv(tmp_path / "features.csv", tmp_path / "labels.csv")
    assert back.instance_ids == ds.instance_ids
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.label_crit2, ds.label_crit2)


def test_f_classif_finite_zeroes_constant_columns():
    X = np.column_stack([np.ones(6), np.arange(6.0)])
    y = np.array([0, 0, 0, 1, 1, 1])
    scores, pvalues = f_classif_finite(X, y)
    assert scores[0] == 0.0
    assert pvalues[0] == 1.0
    assert np.all(np.isfinite(scores))


def test_anova_f_score_and_balanced_accuracy_by_hand():
    # group means 1.5 and 3.5: SSB = 4 on 1 df, SSW = 1 on 2 df
    scores, _ = f_classif_finite(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]))
    assert scores[0] == pytest.approx(8.0, abs=1e-9)
    assert balanced_accuracy([0, 0, 1, 1], [1, 1, 1, 1]) == 0.5
    assert balanced_accuracy([0, 0, 0, 1], [0, 0, 1, 1]) == pytest.approx((2 / 3 + 1) / 2, abs=1e-12)


def test_crit1_pipeline_on_two_point_clusters():
    X = np.array([[0.1, 0.1]] * 4 + [[0.9, 0.9]] * 4)
    y = np.array([0] * 4 + [1] * 4)
    model = fit_pipeline("crit1", X, y, GW2)
    assert balanced_accuracy(y, model.predict(X)) == 1.0


def test_stacking_estimator_prepends_prediction_and_probabilities():
    from sklearn.naive_bayes import GaussianNB

    X = np.array([[0.0], [0.1], [1.0], [1.1]])
    y = np.array([0, 0, 1, 1])
    out = StackingEstimator(GaussianNB()).fit(X, y).transform(X)
    assert out.shape == (4, 4)
    assert out[:, 0].tolist() == [0.0, 0.0, 1.0, 1.0]
    assert np.allclose(out[:, 1] + out[:, 2], 1.0)
    assert np.array_equal(out[:, 3], X[:, 0])


def test_crit1_pipeline_clamps_k_on_small_training_sets():
    ds = _dataset(rows=8)
    messages = []
    model = fit_pipeline_crit1(ds, log_fn=messages.append)
    assert any("clamped from 41 to 7" in m for m in messages)
    pred = model.predict(ds.matrix(GW2))
    assert balanced_accuracy(ds.label_crit1, pred) >= 0.75
    stages = model.describe()
    assert stages[1]["stacking"] and stages[1]["estimator"] == "KNeighborsClassifier"
    assert stages[1]["params"]["n_neighbors"] == 7


def test_crit2_pipeline_learns_a_label_copy():
    ds = _dataset()
    model = fit_pipeline_crit2(ds)
    assert model.feature_names == SPECTRAL
    pred = model.predict(ds.matrix(SPECTRAL))
    assert balanced_accuracy(ds.label_crit2, pred) == 1.0
    proba = model.proba_positive(ds.matrix(SPECTRAL))
    assert np.all((proba >= 0) & (proba <= 1))
    with pytest.raises(ValidationError):
        model.predict(np.zeros((2, 3)))


def test_fit_rejects_degenerate_training_data():
    X = np.random.default_rng(0).uniform(size=(10, 2))
    with pytest.raises(FitError):
        fit_pipeline("crit1", X, np.zeros(10), GW2)
    with pytest.raises(FitError):
        fit_pipeline("crit1", np.ones((10, 2)), np.arange(10) % 2, GW2)
    with pytest.raises(FitError):
        fit_pipeline("crit1", X - 5.0, np.arange(10) % 2, GW2)
    with pytest.raises(ValidationError):
        fit_pipeline("crit3", X, np.arange(10) % 2, GW2)


def test_stratified_folds_keep_class_balance_and_are_seeded():
    y = np.array([0] * 12 + [1] * 8)
    folds = stratified_folds(y, k=4, seed=3)
    assert len(folds) == 4
    for _, test in folds:
        assert np.sum(y[test] == 1) == 2
    again = stratified_folds(y, k=4, seed=3)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))
    with pytest.raises(StratificationError):
        stratified_folds(np.array([0] * 10 + [1] * 3), k=4)


def test_cross_validation_on_separable_data():
    ds = _dataset()
    report = cross_validate(ds, "crit1", k=4, seed=0)
    assert report.feature_names == GW2
    assert len(report.fold_balanced_accuracy) == 4
    assert report.mean_balanced_accuracy >= 0.9
    assert sorted(set(report.fold_of)) == [0, 1, 2, 3]
    rows = report.rows()
    assert rows[-1]["fold"] == "mean"
    assert sum(r["tp"] + r["fn"] for r in rows[:-1]) == 20


def test_permutation_importance_ranks_the_informative_feature_first():
    ds = _dataset()
    model = fit_pipeline_crit2(ds)
    ranking = {r["feature"]: r["mean_drop"] for r in permutation_importance(model, ds, repeats=10, seed=0)}
    assert set(ranking) == set(SPECTRAL)
    assert ranking["density"] > 0.25
    assert all(ranking["density"] > v for k, v in ranking.items() if k != "density")
    with pytest.raises(ValidationError):
        permutation_importance(model, ds, repeats=0)


def test_partial_dependence_grid():
    ds = _dataset()
    model = fit_pipeline_crit1(ds)
    rows = partial_dependence(model, ds, GW2[0], GW2[1], grid=5)
    assert len(rows) == 25
    assert all(0.0 <= r["mean_proba_1"] <= 1.0 for r in rows)
    assert rows[0][GW2[0]] == pytest.approx(ds.matrix(GW2)[:, 0].min())
    with pytest.raises(ValidationError):
        partial_dependence(model, ds, GW2[0], GW2[1], grid=0)
    with pytest.raises(ValidationError):
        partial_dependence(model, ds, GW2[0], "density", grid=3)


def test_saved_model_predicts_identically_and_detects_tampering(tmp_path):
    ds = _dataset()
    model = fit_pipeline_crit2(ds, seed=4)
    path = save_model(model, tmp_path / "crit2.json")
    loaded = load_model(path)
    X = ds.matrix(SPECTRAL)
    assert loaded.criterion == "crit2"
    assert loaded.seed == 4
    assert np.array_equal(loaded.predict(X), model.predict(X))

    artifact = tmp_path / "crit2.joblib"
    artifact.write_bytes(artifact.read_bytes() + b"\0")
    with pytest.raises(ValidationError):
        load_model(path)


def test_one_nearest_neighbor_reproduces_training_labels():
    from sklearn.neighbors import KNeighborsClassifier

    rng = np.random.default_rng(5)
    X = rng.uniform(size=(30, 3))
    y = rng.integers(0, 2, 30)
    knn = KNeighborsClassifier(n_neighbors=1, p=1).fit(X, y)
    assert np.array_equal(knn.predict(X), y)


def test_naive_bayes_posteriors_by_hand():
    from sklearn.naive_bayes import BernoulliNB, GaussianNB, MultinomialNB

    y = np.array([0, 0, 1, 1])
    # class means 1 and 5, unit variances, equal priors
    gauss = GaussianNB(var_smoothing=0.0).fit(np.array([[0.0], [2.0], [4.0], [6.0]]), y)
    assert gauss.predict_proba([[2.0]])[0, 1] == pytest.approx(1.0 / (1.0 + np.exp(4.0)), abs=1e-9)
    assert gauss.predict_proba([[3.0]])[0, 1] == pytest.approx(0.5, abs=1e-9)
    # smoothed word probabilities [2/3, 1/3] and [1/7, 6/7]
    multi = MultinomialNB(alpha=1.0, fit_prior=False).fit(np.array([[2, 0], [1, 1], [0, 2], [0, 3]]), y)
    assert multi.predict_proba([[1, 1]])[0, 0] == pytest.approx(49 / 76, abs=1e-9)
    # feature-on probabilities [3/4, 1/2] and [1/4, 1/2]
    bern = BernoulliNB(alpha=1.0, fit_prior=False).fit(np.array([[1, 0], [1, 1], [0, 1], [0, 0]]), y)
    assert bern.predict_proba([[1, 0]])[0, 0] == pytest.approx(0.75, abs=1e-9)


def test_depth_two_entropy_tree_is_small_and_splits_reduce_entropy():
    from sklearn.tree import DecisionTreeClassifier

    rng = np.random.default_rng(9)
    X = rng.uniform(size=(80, 4))
    y = (X[:, 0] + 0.3 * rng.standard_normal(80) > 0.5).astype(int)
    tree = DecisionTreeClassifier(criterion="entropy", max_depth=2, random_state=0).fit(X, y)
    assert tree.get_n_leaves() <= 4
    t = tree.tree_
    for node in range(t.node_count):
        left, right = t.children_left[node], t.children_right[node]
        if left == -1:
            continue
        n = t.weighted_n_node_samples
        children = (n[left] * t.impurity[left] + n[right] * t.impurity[right]) / n[node]
        assert children <= t.impurity[node] + 1e-12


def test_binarizer_and_l2_normalizer_fixtures():
    from sklearn.preprocessing import Binarizer, Normalizer

    assert Binarizer(threshold=0.25).transform([[0.25, 0.3, 0.0]]).tolist() == [[0.0, 1.0, 0.0]]
    assert np.allclose(Normalizer(norm="l2").transform([[3.0, 4.0]]), [[0.6, 0.8]], atol=1e-12)


def test_pipeline_probabilities_sum_to_one():
    ds = _dataset()
    for model in (fit_pipeline_crit1(ds), fit_pipeline_crit2(ds)):
        proba = model.predict_proba(ds.matrix(model.feature_names))
        assert proba.shape == (40, 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)
        argmax = model.pipeline.classes_[proba.argmax(axis=1)]
        assert np.array_equal(argmax, model.predict(ds.matrix(model.feature_names)))


def test_balanced_accuracy_averages_per_class_recall():
    assert balanced_accuracy([1, 1, 0, 0], [1, 0, 0, 0]) == pytest.approx(0.75, abs=1e-12)
    assert balanced_accuracy([1, 1, 0, 0], [0, 0, 0, 0]) == 0.5


def test_cross_validation_is_deterministic_for_a_seed():
    ds = _dataset()
    assert cross_validate(ds, "crit2", k=4, seed=7) == cross_validate(ds, "crit2", k=4, seed=7)


def test_crit2_with_constant_features_is_a_fit_error():
    with pytest.raises(FitError):
        fit_pipeline("crit2", np.full((12, len(SPECTRAL)), 0.3), np.arange(12) % 2, SPECTRAL)


def test_ignored_feature_has_zero_importance():
    ds = _dataset()
    ignored = next(name for name in SPECTRAL if name != "density")
    ds.features[:, FEATURE_NAMES.index(ignored)] = 0.5
    model = fit_pipeline_crit2(ds)
    ranking = {r["feature"]: r for r in permutation_importance(model, ds, repeats=5, seed=1)}
    assert ranking[ignored]["mean_drop"] == 0.0
    assert ranking[ignored]["std_drop"] == 0.0


@pytest.fixture(scope="module")
def selection_dataset(tmp_path_factory):
    """200 regenerated instances, n 11..20, labelled at depth 10."""
    manifest = ExperimentManifest(
        n_range=(11, 20),
        instances_per_n=20,
        depths=list(range(1, 11)),
        seed_root=2024,
        output_dir=str(tmp_path_factory.mktemp("selection")),
    )
    root = run_experiment(manifest)
    return LabeledDataset.from_csv(root / "features.csv", root / "labels.csv")


@pytest.mark.slow
def test_crit1_cross_validated_balanced_accuracy_on_regenerated_data(selection_dataset):
    assert len(selection_dataset.instance_ids) >= 200
    report = cross_validate(selection_dataset, "crit1", k=4, seed=0)
    assert report.mean_balanced_accuracy >= 0.85


@pytest.mark.slow
def test_gw_spread_outranks_gw_mean_in_importance(selection_dataset):
    model = fit_pipeline_crit1(selection_dataset)
    ranking = {r["feature"]: r["mean_drop"] for r in permutation_importance(model, selection_dataset, seed=0)}
    assert ranking["std_costGW_over_sdp_cost"] > ranking["expected_costGW_over_sdp_cost"]
