"""Algorithm selection: labels, the two exported classifier pipelines, CV and model inspection.

Criterion 1 (GW beats QAOA) uses the two GW features; criterion 2 (QAOA is a
"good heuristic": ratio > 0.98 and at least 0.02 above GW) uses a feature
mask from config, the efficient spectral group by default.
"""

from __future__ import annotations

import copy
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import joblib
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin, clone
from sklearn.feature_selection import SelectPercentile, f_classif
from sklearn.inspection import permutation_importance as sk_permutation_importance
from sklearn.metrics import balanced_accuracy_score, confusion_matrix, recall_score
from sklearn.model_selection import StratifiedKFold
from sklearn.naive_bayes import BernoulliNB, GaussianNB, MultinomialNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.pipeline import Pipeline, make_pipeline, make_union
from sklearn.preprocessing import Binarizer, FunctionTransformer, Normalizer
from sklearn.tree import DecisionTreeClassifier

from core.errors import FitError, StratificationError, ValidationError
from core.io import load_json, read_csv, save_json

from .features import FEATURE_NAMES, resolve_feature_set

CRITERIA = ("crit1", "crit2")
CRIT2_MIN_RATIO = 0.98
CRIT2_MARGIN = 0.02
MARGIN_EPS = 1e-12
CV_FOLDS = 4
IMPORTANCE_REPEATS = 10
MODEL_SCHEMA_VERSION = 1

DEFAULT_FEATURES = {"crit1": "gw2", "crit2": "efficient"}

LogFn = Optional[Callable[[str], None]]


def label_criterion1(qaoa_ratio: float, gw_ratio: float) -> int:
    """1 iff GW is strictly better; ties go to QAOA."""
    return int(gw_ratio > qaoa_ratio)


def label_criterion2(qaoa_ratio: float, gw_ratio: float) -> int:
    """1 iff QAOA exceeds 0.98 and beats GW by at least 0.02 (absolute)."""
    return int(qaoa_ratio > CRIT2_MIN_RATIO and qaoa_ratio - gw_ratio >= CRIT2_MARGIN - MARGIN_EPS)


LABELERS = {"crit1": label_criterion1, "crit2": label_criterion2}


def _check_criterion(criterion: str) -> str:
    if criterion not in CRITERIA:
        raise ValidationError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    return criterion


@dataclass
class LabeledDataset:
    instance_ids: List[str]
    features: np.ndarray
    label_crit1: np.ndarray
    label_crit2: np.ndarray
    qaoa_ratio: np.ndarray
    gw_ratio: np.ndarray
    n: np.ndarray
    p_used: np.ndarray
    feature_names: List[str] = field(default_factory=lambda: list(FEATURE_NAMES))

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        rows = len(self.instance_ids)
        if self.features.shape != (rows, len(self.feature_names)):
            raise ValidationError(
                f"feature matrix shape {self.features.shape} does not match "
                f"{rows} rows x {len(self.feature_names)} features"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("feature matrix contains missing or non-finite values")
        for name in ("label_crit1", "label_crit2", "qaoa_ratio", "gw_ratio", "n", "p_used"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (rows,):
                raise ValidationError(f"{name} must have {rows} entries")
            setattr(self, name, arr)

    def __len__(self) -> int:
        return len(self.instance_ids)

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        idx = [self.feature_names.index(n) for n in names]
        return self.features[:, idx]

    def labels(self, criterion: str) -> np.ndarray:
        return self.label_crit1 if _check_criterion(criterion) == "crit1" else self.label_crit2

    def relabel_mismatches(self) -> List[str]:
        """Instance ids whose stored labels disagree with the labeling rules."""
        bad = []
        for k, iid in enumerate(self.instance_ids):
            q, g = float(self.qaoa_ratio[k]), float(self.gw_ratio[k])
            if label_criterion1(q, g) != int(self.label_crit1[k]) or label_criterion2(q, g) != int(
                self.label_crit2[k]
            ):
                bad.append(iid)
        return bad

    @classmethod
    def from_csv(cls, features_csv: Path, labels_csv: Path) -> "LabeledDataset":
        """Join features.csv and labels.csv on instance_id (label order wins)."""
        feats = {row["instance_id"]: row for row in read_csv(features_csv)}
        labels = read_csv(labels_csv)
        missing = [row["instance_id"] for row in labels if row["instance_id"] not in feats]
        if missing:
            raise ValidationError(f"labels without features: {', '.join(missing[:5])}")
        try:
            matrix = [[float(feats[row["instance_id"]][n]) for n in FEATURE_NAMES] for row in labels]
        except (KeyError, ValueError) as e:
            raise ValidationError(f"malformed feature table {features_csv}: {e}") from e
        return cls(
            instance_ids=[row["instance_id"] for row in labels],
            features=np.asarray(matrix, dtype=float).reshape(len(labels), len(FEATURE_NAMES)),
            label_crit1=np.asarray([int(row["label_crit1"]) for row in labels]),
            label_crit2=np.asarray([int(row["label_crit2"]) for row in labels]),
            qaoa_ratio=np.asarray([float(row["qaoa_ratio"]) for row in labels]),
            gw_ratio=np.asarray([float(row["gw_ratio"]) for row in labels]),
            n=np.asarray([int(row["n"]) for row in labels]),
            p_used=np.asarray([int(row["p_used"]) for row in labels]),
        )


class StackingEstimator(BaseEstimator, TransformerMixin):
    """Fit a classifier and prepend [prediction, class probabilities] to the input columns."""

    def __init__(self, estimator: BaseEstimator):
        self.estimator = estimator

    def fit(self, X, y=None, **fit_params):
        self.estimator_ = clone(self.estimator).fit(X, y, **fit_params)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        out = X
        if isinstance(self.estimator_, ClassifierMixin) and hasattr(self.estimator_, "predict_proba"):
            out = np.hstack((self.estimator_.predict_proba(X), out))
        pred = np.reshape(self.estimator_.predict(X), (-1, 1)).astype(float)
        return np.hstack((pred, out))


def f_classif_finite(X, y) -> Tuple[np.ndarray, np.ndarray]:
    """ANOVA F-scores where constant features score 0 instead of NaN."""
    with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
        warnings.simplefilter("ignore")
        scores, pvalues = f_classif(X, y)
    scores = np.nan_to_num(scores, nan=0.0, posinf=np.finfo(float).max)
    pvalues = np.nan_to_num(pvalues, nan=1.0)
    return scores, pvalues


def _clamped_k(k: int, n_train: int, log_fn: LogFn) -> int:
    clamped = max(1, min(k, n_train - 1))
    if clamped != k and log_fn:
        log_fn(f"[selector] k-NN k clamped from {k} to {clamped} (train size {n_train})")
    return clamped


def build_crit1_pipeline(n_train: int, seed: int = 0, log_fn: LogFn = None) -> Pipeline:
    k = _clamped_k(41, n_train, log_fn)
    return make_pipeline(
        make_union(Normalizer(norm="l2"), FunctionTransformer(copy.copy)),
        StackingEstimator(estimator=KNeighborsClassifier(n_neighbors=k, p=1, weights="uniform")),
        MultinomialNB(alpha=0.1, fit_prior=False),
    )


def build_crit2_pipeline(n_train: int, seed: int = 0, log_fn: LogFn = None) -> Pipeline:
    k = _clamped_k(8, n_train, log_fn)
    return make_pipeline(
        SelectPercentile(score_func=f_classif_finite, percentile=95),
        StackingEstimator(
            estimator=DecisionTreeClassifier(
                criterion="entropy",
                max_depth=2,
                min_samples_leaf=13,
                min_samples_split=9,
                random_state=seed,
            )
        ),
        Binarizer(threshold=0.25),
        StackingEstimator(estimator=KNeighborsClassifier(n_neighbors=k, p=1, weights="uniform")),
        StackingEstimator(estimator=BernoulliNB(alpha=10.0, fit_prior=False)),
        StackingEstimator(estimator=GaussianNB()),
        MultinomialNB(alpha=0.001, fit_prior=False),
    )


BUILDERS = {"crit1": build_crit1_pipeline, "crit2": build_crit2_pipeline}


def _check_training_data(criterion: str, X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise FitError(f"need a 2-D feature matrix aligned with labels, got {X.shape} and {y.shape}")
    if np.unique(y).size < 2:
        raise FitError("training labels contain a single class")
    if np.all(np.ptp(X, axis=0) == 0):
        raise FitError("all feature columns are constant")
    # crit2 binarizes before any multinomial stage
    if criterion == "crit1" and np.any(X < 0):
        raise FitError("multinomial naive Bayes needs non-negative inputs")


@dataclass
class FittedPipeline:
    criterion: str
    feature_names: List[str]
    pipeline: Pipeline
    seed: int = 0

    def _matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValidationError(f"expected {len(self.feature_names)} feature columns, got shape {X.shape}")
        return X

    def predict(self, X) -> np.ndarray:
        return self.pipeline.predict(self._matrix(X)).astype(int)

    def predict_proba(self, X) -> np.ndarray:
        return self.pipeline.predict_proba(self._matrix(X))

    def proba_positive(self, X) -> np.ndarray:
        classes = list(self.pipeline.classes_)
        return self.predict_proba(X)[:, classes.index(1)]

    def describe(self) -> List[Dict[str, Any]]:
        stages = []
        for name, step in self.pipeline.steps:
            inner = getattr(step, "estimator_", None) or getattr(step, "estimator", None)
            target = inner if isinstance(step, StackingEstimator) else step
            params = {
                k: v
                for k, v in target.get_params(deep=False).items()
                if isinstance(v, (int, float, str, bool, type(None)))
            }
            stages.append(
                {
                    "name": name,
                    "stacking": isinstance(step, StackingEstimator),
                    "estimator": type(target).__name__,
                    "params": params,
                }
            )
        return stages


def fit_pipeline(
    criterion: str,
    X,
    y,
    feature_names: Sequence[str],
    seed: int = 0,
    log_fn: LogFn = None,
) -> FittedPipeline:
    _check_criterion(criterion)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    _check_training_data(criterion, X, y)
    pipeline = BUILDERS[criterion](X.shape[0], seed=seed, log_fn=log_fn)
    try:
        pipeline.fit(X, y)
    except ValueError as e:
        raise FitError(f"{criterion} pipeline failed to fit: {e}") from e
    return FittedPipeline(criterion, list(feature_names), pipeline, seed)


def fit_pipeline_crit1(
    ds: LabeledDataset,
    features: str | Sequence[str] = "gw2",
    seed: int = 0,
    log_fn: LogFn = None,
) -> FittedPipeline:
    names = resolve_feature_set(features)
    return fit_pipeline("crit1", ds.matrix(names), ds.label_crit1, names, seed, log_fn)


def fit_pipeline_crit2(
    ds: LabeledDataset,
    features: str | Sequence[str] = "efficient",
    seed: int = 0,
    log_fn: LogFn = None,
) -> FittedPipeline:
    names = resolve_feature_set(features)
    return fit_pipeline("crit2", ds.matrix(names), ds.label_crit2, names, seed, log_fn)


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean per-class recall."""
    return float(balanced_accuracy_score(np.asarray(y_true), np.asarray(y_pred)))


@dataclass
class CvReport:
    criterion: str
    feature_names: List[str]
    fold_balanced_accuracy: List[float]
    fold_recall_positive: List[float]
    confusion_matrices: List[List[List[int]]]
    fold_of: List[int]
    seed: int

    @property
    def mean_balanced_accuracy(self) -> float:
        return float(np.mean(self.fold_balanced_accuracy))

    @property
    def mean_recall_positive(self) -> float:
        return float(np.mean(self.fold_recall_positive))

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for k, (ba, rec, cm) in enumerate(
            zip(self.fold_balanced_accuracy, self.fold_recall_positive, self.confusion_matrices)
        ):
            out.append(
                {
                    "fold": k,
                    "balanced_accuracy": ba,
                    "recall_1": rec,
                    "tn": cm[0][0],
                    "fp": cm[0][1],
                    "fn": cm[1][0],
                    "tp": cm[1][1],
                }
            )
        out.append(
            {
                "fold": "mean",
                "balanced_accuracy": self.mean_balanced_accuracy,
                "recall_1": self.mean_recall_positive,
            }
        )
        return out


CV_COLUMNS = ["fold", "balanced_accuracy", "recall_1", "tn", "fp", "fn", "tp"]


def stratified_folds(y, k: int = CV_FOLDS, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    y = np.asarray(y).astype(int)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise StratificationError("cross-validation needs two classes")
    small = [int(c) for c, m in zip(classes, counts) if m < k]
    if small:
        raise StratificationError(f"class(es) {small} have fewer than {k} members")
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    return list(splitter.split(np.zeros((y.size, 1)), y))


def cross_validate(
    ds: LabeledDataset,
    criterion: str,
    features: Optional[str | Sequence[str]] = None,
    k: int = CV_FOLDS,
    seed: int = 0,
    log_fn: LogFn = None,
) -> CvReport:
    """k-fold stratified CV of the criterion's pipeline; balanced accuracy per fold."""
    names = resolve_feature_set(features or DEFAULT_FEATURES[_check_criterion(criterion)])
    X = ds.matrix(names)
    y = ds.labels(criterion).astype(int)
    fold_of = np.full(y.size, -1, dtype=int)
    scores, recalls, matrices = [], [], []
    for fold, (train, test) in enumerate(stratified_folds(y, k, seed)):
        fold_of[test] = fold
        model = fit_pipeline(criterion, X[train], y[train], names, seed=seed, log_fn=log_fn)
        pred = model.predict(X[test])
        scores.append(balanced_accuracy(y[test], pred))
        recalls.append(float(recall_score(y[test], pred, pos_label=1, zero_division=0)))
        matrices.append(confusion_matrix(y[test], pred, labels=[0, 1]).tolist())
        if log_fn:
            log_fn(f"[selector] {criterion} fold {fold}: balanced_accuracy={scores[-1]:.4f}")
    return CvReport(criterion, names, scores, recalls, matrices, fold_of.tolist(), seed)


def permutation_importance(
    model: FittedPipeline,
    ds: LabeledDataset,
    repeats: int = IMPORTANCE_REPEATS,
    seed: int = 0,
) -> List[Dict[str, Any]]:
    """Balanced-accuracy drop per shuffled feature column (mean and std over repeats)."""
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    X = ds.matrix(model.feature_names)
    y = ds.labels(model.criterion).astype(int)
    result = sk_permutation_importance(
        model.pipeline, X, y, scoring="balanced_accuracy", n_repeats=repeats, random_state=seed
    )
    return [
        {"feature": name, "mean_drop": float(m), "std_drop": float(s)}
        for name, m, s in zip(model.feature_names, result.importances_mean, result.importances_std)
    ]


def partial_dependence(
    model: FittedPipeline,
    ds: LabeledDataset,
    feat_a: str,
    feat_b: str,
    grid: int = 20,
) -> List[Dict[str, float]]:
    """Mean P(label 1) with both features overwritten at each point of a grid over their ranges."""
    if grid < 1:
        raise ValidationError(f"grid must be >= 1, got {grid}")
    for name in (feat_a, feat_b):
        if name not in model.feature_names:
            raise ValidationError(f"feature {name!r} is not used by the model")
    X = ds.matrix(model.feature_names)
    ia, ib = model.feature_names.index(feat_a), model.feature_names.index(feat_b)
    values_a = np.linspace(X[:, ia].min(), X[:, ia].max(), grid)
    values_b = np.linspace(X[:, ib].min(), X[:, ib].max(), grid)
    rows = []
    for a in values_a:
        for b in values_b:
            Xg = X.copy()
            Xg[:, ia] = a
            Xg[:, ib] = b
            rows.append({feat_a: float(a), feat_b: float(b), "mean_proba_1": float(model.proba_positive(Xg).mean())})
    return rows


def save_model(model: FittedPipeline, path: Path) -> Path:
    """Write <path> (JSON descriptor) and <path>.joblib; returns the JSON path."""
    path = Path(path)
    artifact = path.with_suffix(".joblib")
    artifact.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump(model.pipeline, artifact)
    digest = hashlib.sha256(artifact.read_bytes()).hexdigest()
    save_json(
        {
            "schema_version": MODEL_SCHEMA_VERSION,
            "criterion": model.criterion,
            "feature_names": model.feature_names,
            "seed": model.seed,
            "stages": model.describe(),
            "artifact": artifact.name,
            "artifact_sha256": digest,
        },
        path,
    )
    return path


def load_model(path: Path) -> FittedPipeline:
    path = Path(path)
    try:
        doc = load_json(path)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read model descriptor {path}: {e}") from e
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValidationError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    artifact = path.parent / doc["artifact"]
    if not artifact.exists():
        raise ValidationError(f"model artifact missing: {artifact}")
    if hashlib.sha256(artifact.read_bytes()).hexdigest() != doc["artifact_sha256"]:
        raise ValidationError(f"model artifact {artifact} does not match its recorded sha256")
    pipeline = joblib.load(artifact)
    return FittedPipeline(
        _check_criterion(doc["criterion"]), list(doc["feature_names"]), pipeline, int(doc.get("seed", 0))
    )
