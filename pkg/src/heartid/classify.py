"""From-scratch SVM classification and the session-grouped evaluation protocol.

The binary machines are trained by sequential minimal optimization on the
soft-margin dual, always updating the maximal-KKT-violating pair; multiclass
is one-vs-rest over z-scored features.  Evaluation holds out one measurement
session per fold and pools the fold predictions for accuracy, confusion
counts, and macro one-vs-rest AUC.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DimMismatch,
    LengthMismatch,
    NoConvergence,
    SingleClass,
    TooFewRows,
    TooFewSessions,
)

KERNELS = ("linear", "rbf")


# --- standardization --------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-scoring parameters fit on training data."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        out = (X - self.mean) / safe
        # zero-variance training dimensions carry no information: map to 0
        out[:, self.std == 0] = 0.0
        return out


def standardize_fit_transform(X: np.ndarray) -> tuple[Standardizer, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardization needs at least two rows")
    std = Standardizer(X.mean(axis=0), X.std(axis=0))
    return std, std.transform(X)


# --- kernels ----------------------------------------------------------------

def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-gamma * sq)
    raise ValueError(f"unknown kernel {kernel!r}")


def resolve_gamma(gamma, X: np.ndarray) -> float:
    """'scale' resolves to 1/(n_dims * Var(X)), the usual robust default."""
    if gamma == "scale":
        var = float(np.asarray(X, dtype=np.float64).var())
        if var <= 0:
            var = 1.0
        return 1.0 / (X.shape[1] * var)
    return float(gamma)


# --- binary SMO -------------------------------------------------------------

@dataclass
class BinaryMachine:
    """One trained binary SVM: support vectors, dual coefficients, bias."""

    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i over support vectors
    bias: float
    converged: bool
    n_iter: int

    def decision(self, K_sv: np.ndarray) -> np.ndarray:
        """Decision values given kernel columns against the support vectors."""
        return K_sv @ self.dual_coef + self.bias


def _smo(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, float, bool, int]:
    """Maximal-violating-pair SMO on the soft-margin dual.

    Maintains the gradient of the dual objective and repeatedly solves the
    analytic two-variable subproblem for the pair that most violates the KKT
    conditions, until max-over-up minus min-over-low falls below ``tol``.
    """
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of (1/2 a'Qa - e'a) at a = 0
    eps = 1e-12

    it = 0
    converged = False
    m_up = m_low = 0.0
    while it < max_iter:
        viol = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
        up_v = np.where(up, viol, -np.inf)
        low_v = np.where(low, viol, np.inf)
        i = int(np.argmax(up_v))
        j = int(np.argmin(low_v))
        m_up, m_low = up_v[i], low_v[j]
        if m_up - m_low <= tol:
            converged = True
            break

        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 0:
            a = 1e-12
        t = (m_up - m_low) / a
        # box constraints on both coordinates
        t = min(t, C - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else C - alpha[j])
        d_i = y[i] * t
        d_j = -y[j] * t
        alpha[i] += d_i
        alpha[j] += d_j
        grad += y * (K[:, i] * (y[i] * d_i) + K[:, j] * (y[j] * d_j))
        it += 1

    if not converged:
        # recompute the gap for the warning after the final update
        viol = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        low = ((y > 0) & (alpha > eps)) | ((y < 0) & (alpha < C - eps))
        m_up = np.max(np.where(up, viol, -np.inf))
        m_low = np.min(np.where(low, viol, np.inf))
        warnings.warn(
            NoConvergence(
                f"SMO stopped after {max_iter} iterations with KKT gap "
                f"{m_up - m_low:.3e} > tol {tol:g}"
            )
        )
    bias = float((m_up + m_low) / 2.0)
    return alpha, bias, converged, it


def train_binary_svm(
    X: np.ndarray,
    y: np.ndarray,
    kernel: str = "rbf",
    C: float = 10.0,
    gamma="scale",
    tol: float = 1e-3,
    max_passes: int = 10,
    K: np.ndarray | None = None,
) -> BinaryMachine:
    """Train one soft-margin binary machine by SMO.

    ``y`` must contain both +1 and -1.  ``K`` may carry a precomputed kernel
    matrix (shared across one-vs-rest machines).  The iteration budget is
    ``max_passes * n``; exhausting it raises a :class:`NoConvergence` warning
    and flags the machine, but still returns it.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClass("training labels must contain both classes")
    if C <= 0:
        raise ValueError("C must be positive")
    gamma_val = resolve_gamma(gamma, X)
    if K is None:
        K = kernel_matrix(X, X, kernel, gamma_val)
    alpha, bias, converged, n_iter = _smo(K, y, C, tol, max_passes * y.size)
    sv = alpha > 1e-8
    return BinaryMachine(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=bias,
        converged=converged,
        n_iter=n_iter,
    )


# --- multiclass model -------------------------------------------------------

@dataclass
class SvmModel:
    """One-vs-rest ensemble with its shared feature standardizer."""

    classes: list
    machines: list[BinaryMachine]
    kernel: str
    gamma: float
    C: float
    standardizer: Standardizer


def train_multiclass(
    X: np.ndarray,
    labels,
    kernel: str = "rbf",
    C: float = 10.0,
    gamma="scale",
    tol: float = 1e-3,
    max_passes: int = 10,
) -> SvmModel:
    """Standardize, then train one binary machine per class against the rest."""
    labels = np.asarray(labels)
    classes = sorted(np.unique(labels).tolist())
    if len(classes) < 2:
        raise SingleClass("need at least two classes")
    std, Xs = standardize_fit_transform(np.asarray(X, dtype=np.float64))
    gamma_val = resolve_gamma(gamma, Xs)
    K = kernel_matrix(Xs, Xs, kernel, gamma_val)
    machines = []
    for cls in classes:
        y = np.where(labels == cls, 1.0, -1.0)
        machines.append(
            train_binary_svm(Xs, y, kernel, C, gamma_val, tol, max_passes, K=K)
        )
    return SvmModel(classes, machines, kernel, gamma_val, C, std)


def predict(model: SvmModel, X: np.ndarray):
    """Labels and per-class decision scores for a feature matrix.

    The label is the argmax of the one-vs-rest scores; exact ties resolve to
    the lowest class id (classes are kept sorted).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.standardizer.mean.size:
        raise DimMismatch(
            f"expected {model.standardizer.mean.size} feature dims, "
            f"got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    Xs = model.standardizer.transform(X)
    scores = np.empty((X.shape[0], len(model.classes)))
    for idx, machine in enumerate(model.machines):
        K_sv = kernel_matrix(Xs, machine.support_vectors, model.kernel, model.gamma)
        scores[:, idx] = machine.decision(K_sv)
    pred = np.asarray(model.classes, dtype=object)[np.argmax(scores, axis=1)]
    return pred, scores


# --- dataset and evaluation -------------------------------------------------

@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with participant labels and session ids per row."""

    features: np.ndarray
    labels: np.ndarray
    sessions: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        sessions = np.asarray(self.sessions)
        if not features.shape[0] == labels.size == sessions.size:
            raise LengthMismatch("features, labels and sessions disagree in length")
        classes = np.unique(labels)
        if classes.size < 2:
            raise SingleClass("dataset must contain at least two classes")
        for cls in classes:
            if np.unique(sessions[labels == cls]).size < 2:
                raise TooFewSessions(
                    f"class {cls!r} appears in fewer than two sessions"
                )
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sessions", sessions)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


@dataclass
class EvalReport:
    """Pooled cross-validation metrics plus the per-fold breakdown."""

    accuracy: float  # percent
    macro_auc: float
    classes: list
    confusion: np.ndarray  # counts, true x predicted
    per_class_accuracy: dict
    per_fold: list[dict] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy_pct": self.accuracy,
            "macro_auc": self.macro_auc,
            "classes": [str(c) for c in self.classes],
            "confusion": self.confusion.astype(int).tolist(),
            "per_class_accuracy_pct": {
                str(k): v for k, v in self.per_class_accuracy.items()
            },
            "per_fold": self.per_fold,
            "params": self.params,
        }

    def save_json(self, path, timestamp: str | None = None) -> None:
        payload = self.to_dict()
        if timestamp is not None:
            payload["timestamp"] = timestamp
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def save_confusion_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted"] + [str(c) for c in self.classes])
            for cls, row in zip(self.classes, self.confusion.astype(int)):
                writer.writerow([str(cls)] + row.tolist())


def _binary_auc(scores: np.ndarray, positives: np.ndarray) -> float:
    """Rank-statistic AUC with tie correction (Mann-Whitney U)."""
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    u = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def metrics(true_labels, predicted_labels, scores=None, classes=None) -> EvalReport:
    """Accuracy, confusion counts, per-class accuracy, macro one-vs-rest AUC.

    AUC needs the per-class decision ``scores`` (samples x classes, column
    order matching ``classes``); without them it is reported as NaN.
    """
    true_labels = np.asarray(true_labels)
    predicted_labels = np.asarray(predicted_labels)
    if true_labels.size != predicted_labels.size:
        raise LengthMismatch("true and predicted labels differ in length")
    if classes is None:
        classes = sorted(np.unique(np.concatenate([true_labels, predicted_labels])).tolist())
    k = len(classes)
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        confusion[index[t], index[p]] += 1
    total = confusion.sum()
    accuracy = 100.0 * confusion.trace() / total
    per_class = {}
    for cls in classes:
        i = index[cls]
        row = confusion[i].sum()
        per_class[cls] = 100.0 * confusion[i, i] / row if row else float("nan")

    macro_auc = float("nan")
    if scores is not None:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (true_labels.size, k):
            raise LengthMismatch("scores must be (n_samples, n_classes)")
        aucs = []
        for cls in classes:
            i = index[cls]
            auc = _binary_auc(scores[:, i], true_labels == cls)
            if not np.isnan(auc):
                aucs.append(auc)
        macro_auc = float(np.mean(aucs)) if aucs else float("nan")

    return EvalReport(
        accuracy=float(accuracy),
        macro_auc=macro_auc,
        classes=list(classes),
        confusion=confusion,
        per_class_accuracy=per_class,
    )


def session_folds(sessions) -> list[tuple[str, np.ndarray]]:
    """One (session, validation-row-indices) pair per distinct session."""
    sessions = np.asarray(sessions)
    uniq = sorted(np.unique(sessions).tolist())
    if len(uniq) < 2:
        raise TooFewSessions("grouped cross-validation needs at least two sessions")
    return [(s, np.flatnonzero(sessions == s)) for s in uniq]


def session_grouped_cv(
    data: LabeledDataset,
    kernel: str = "rbf",
    C: float = 10.0,
    gamma="scale",
    tol: float = 1e-3,
    max_passes: int = 10,
) -> EvalReport:
    """Hold out one session per fold, train on the rest, pool the predictions.

    Sessions never straddle the train/validation split, so the metrics test
    generalization across measurement periods, not interpolation within one.
    """
    folds = session_folds(data.sessions)
    n = data.n_samples
    classes = sorted(np.unique(data.labels).tolist())
    pooled_pred = np.empty(n, dtype=object)
    pooled_scores = np.zeros((n, len(classes)))
    per_fold = []
    for session_id, val_idx in folds:
        train_mask = np.ones(n, dtype=bool)
        train_mask[val_idx] = False
        model = train_multiclass(
            data.features[train_mask],
            data.labels[train_mask],
            kernel=kernel,
            C=C,
            gamma=gamma,
            tol=tol,
            max_passes=max_passes,
        )
        pred, scores = predict(model, data.features[val_idx])
        pooled_pred[val_idx] = pred
        pooled_scores[val_idx] = scores
        fold_acc = 100.0 * float(np.mean(pred == data.labels[val_idx]))
        per_fold.append(
            {
                "session": str(session_id),
                "n_train": int(train_mask.sum()),
                "n_val": int(val_idx.size),
                "accuracy_pct": fold_acc,
            }
        )
    report = metrics(data.labels, pooled_pred, pooled_scores, classes)
    report.per_fold = per_fold
    report.params = {"kernel": kernel, "C": C, "gamma": str(gamma), "k_folds": len(folds)}
    return report


# --- model persistence ------------------------------------------------------

def save_model(model: SvmModel, path, manifest_hash: str | None = None) -> None:
    """Serialize a trained model (JSON) with optional provenance hash."""
    payload = {
        "kernel": model.kernel,
        "gamma": model.gamma,
        "C": model.C,
        "classes": [str(c) for c in model.classes],
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
        "machines": [
            {
                "support_vectors": m.support_vectors.tolist(),
                "dual_coef": m.dual_coef.tolist(),
                "bias": m.bias,
                "converged": m.converged,
                "n_iter": m.n_iter,
            }
            for m in model.machines
        ],
        "training_manifest_hash": manifest_hash,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path) as fh:
        payload = json.load(fh)
    machines = [
        BinaryMachine(
            support_vectors=np.asarray(m["support_vectors"], dtype=np.float64),
            dual_coef=np.asarray(m["dual_coef"], dtype=np.float64),
            bias=float(m["bias"]),
            converged=bool(m["converged"]),
            n_iter=int(m["n_iter"]),
        )
        for m in payload["machines"]
    ]
    std = Standardizer(
        np.asarray(payload["standardizer"]["mean"], dtype=np.float64),
        np.asarray(payload["standardizer"]["std"], dtype=np.float64),
    )
    return SvmModel(
        classes=payload["classes"],
        machines=machines,
        kernel=payload["kernel"],
        gamma=float(payload["gamma"]),
        C=float(payload["C"]),
        standardizer=std,
    )
