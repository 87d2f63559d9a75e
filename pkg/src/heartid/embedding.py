"""2-D diagnostic projections of feature vectors: PCA and exact t-SNE."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, PerplexityTooLarge

MACHINE_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Projection2D:
    """Projected points with the settings that produced them."""

    points: np.ndarray
    labels: np.ndarray | None
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError("points must be (n, 2)")
        if not np.all(np.isfinite(points)):
            raise ValueError("projection produced non-finite coordinates")
        object.__setattr__(self, "points", points)

    def to_csv(self, path, sample_ids=None) -> None:
        n = self.points.shape[0]
        ids = sample_ids if sample_ids is not None else [str(i) for i in range(n)]
        labels = self.labels if self.labels is not None else [""] * n
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "label", "x", "y"])
            for sid, lab, (x, y) in zip(ids, labels, self.points):
                writer.writerow([sid, lab, f"{x:.17g}", f"{y:.17g}"])


def pca2(X: np.ndarray, labels=None) -> Projection2D:
    """Project onto the top-2 principal axes of the centered data.

    Axes are ordered by descending variance; each axis is flipped if needed so
    its largest-magnitude loading is positive (fixes the sign ambiguity).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3 or X.shape[1] < 2:
        raise DegenerateInput("PCA needs at least 3 rows and 2 dimensions")
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:2]
    for k in range(2):
        j = int(np.argmax(np.abs(axes[k])))
        if axes[k, j] < 0:
            axes[k] = -axes[k]
    points = centered @ axes.T
    return Projection2D(points, None if labels is None else np.asarray(labels), "pca")


def _conditional_probs(dist_sq: np.ndarray, perplexity: float, tol: float = 1e-4):
    """Per-row Gaussian affinities with bandwidths bisected to the perplexity.

    The bisection targets Shannon entropy (bits) equal to log2(perplexity).
    Returns the row-normalized conditional matrix (diagonal zero).
    """
    n = dist_sq.shape[0]
    target = np.log2(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(dist_sq[i], i)
        lo, hi = 0.0, np.inf
        beta = 1.0
        for _ in range(200):
            w = np.exp(-beta * (d - d.min()))
            sum_w = w.sum()
            p = w / sum_w
            entropy = -np.sum(p * np.log2(np.maximum(p, MACHINE_EPS)))
            if abs(entropy - target) <= tol:
                break
            if entropy > target:  # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
        row = np.insert(p, i, 0.0)
        P[i] = row
    return P


def _kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    num = 1.0 / (1.0 + _pairwise_sq(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), MACHINE_EPS)
    Pc = np.maximum(P, MACHINE_EPS)
    return float(np.sum(P * np.log(Pc / Q)))


def _pairwise_sq(X: np.ndarray) -> np.ndarray:
    s = np.sum(X**2, axis=1)
    sq = s[:, None] + s[None, :] - 2.0 * (X @ X.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized t-SNE affinities summing to 1."""
    cond = _conditional_probs(_pairwise_sq(X), perplexity)
    P = (cond + cond.T) / (2.0 * X.shape[0])
    return np.maximum(P, MACHINE_EPS)


def tsne2(
    X: np.ndarray,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    labels=None,
    learning_rate: float | None = None,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int = 250,
) -> Projection2D:
    """Exact (O(N^2)) t-SNE to two dimensions, deterministic given the seed.

    Standard schedule: early exaggeration for the first 250 iterations with
    momentum 0.5, then momentum 0.8; adaptive per-coordinate gains; default
    learning rate N/12.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n <= 3 * perplexity:
        raise PerplexityTooLarge(
            f"{n} rows cannot support perplexity {perplexity} (need > 3x)"
        )
    if learning_rate is None:
        learning_rate = max(n / early_exaggeration, 50.0)

    P = joint_probabilities(X, perplexity)
    rng = np.random.default_rng(seed)
    Y = 1e-4 * rng.standard_normal((n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)

    for it in range(iterations):
        scale = early_exaggeration if it < exaggeration_iters else 1.0
        momentum = 0.5 if it < exaggeration_iters else 0.8
        num = 1.0 / (1.0 + _pairwise_sq(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), MACHINE_EPS)
        W = (scale * P - Q) * num
        # gradient of KL wrt each point: 4 * sum_j W_ij (y_i - y_j)
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
        inc = (update * grad) < 0
        gains[inc] += 0.2
        gains[~inc] *= 0.8
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - learning_rate * gains * grad
        Y = Y + update

    kl = _kl_divergence(P, Y)
    return Projection2D(
        Y - Y.mean(axis=0),
        None if labels is None else np.asarray(labels),
        "tsne",
        {
            "perplexity": perplexity,
            "iterations": iterations,
            "seed": seed,
            "kl": kl,
        },
    )
