"""Soft-margin SVM trained by sequential minimal optimization.

The dual problem  min 1/2 a'Qa - 1'a  s.t.  y'a = 0, 0 <= a <= C  is
solved by repeatedly picking the maximal-KKT-violating pair of variables
and optimizing them analytically, the working-set strategy used by
LIBSVM. Selection is deterministic for a given input order, so training
is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 50000

# Alphas within this distance of a box edge count as being at the edge.
_EDGE = 1e-12
# Guard for a non-positive-definite pair curvature.
_TAU = 1e-12

KERNELS = ("linear", "rbf")


def kernel_matrix(A, B, kernel: str, gamma: float | None = None) -> np.ndarray:
    """Gram matrix between row sets A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        if gamma is None or gamma <= 0:
            raise ValueError("rbf kernel needs a positive gamma")
        sq = (
            np.sum(A**2, axis=1)[:, None]
            + np.sum(B**2, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r} (expected one of {KERNELS})")


class Standardizer:
    """Per-column z-scoring fit on training rows only.

    Columns with (near) zero spread get a scale floor of 1e-12, which maps
    the constant training column to exactly 0.
    """

    def fit(self, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.means_ = X.mean(axis=0)
        self.scales_ = np.maximum(X.std(axis=0), 1e-12)
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - self.means_) / self.scales_

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)


def kkt_violation(K, y, alpha, C: float) -> float:
    """Maximal KKT violation m(a) - M(a) of a dual solution; <= 0 is optimal."""
    y = np.asarray(y, dtype=np.float64)
    Q = np.asarray(K) * np.outer(y, y)
    G = Q @ alpha - 1.0
    neg_yg = -y * G
    up = ((y > 0) & (alpha < C - _EDGE)) | ((y < 0) & (alpha > _EDGE))
    low = ((y > 0) & (alpha > _EDGE)) | ((y < 0) & (alpha < C - _EDGE))
    if not up.any() or not low.any():
        return 0.0
    return float(neg_yg[up].max() - neg_yg[low].min())


def smo_solve(
    K,
    y,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
):
    """Solve the dual on a precomputed kernel matrix.

    Args:
        K: (n, n) kernel matrix.
        y: labels in {-1, +1}.
        C: box constraint.
        tol: stop when the maximal KKT violation drops to this level.
        max_passes: bound on pair updates; hitting it returns the best
            iterate found with ``converged`` False.

    Returns:
        (alpha, bias, converged) with the decision function
        f(x) = sum_i alpha_i y_i k(x_i, x) + bias.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if K.shape != (n, n):
        raise ValueError("kernel matrix shape does not match the label count")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if C <= 0:
        raise ValueError("C must be positive")

    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False

    for _ in range(max_passes):
        neg_yg = -y * G
        up = ((y > 0) & (alpha < C - _EDGE)) | ((y < 0) & (alpha > _EDGE))
        low = ((y > 0) & (alpha > _EDGE)) | ((y < 0) & (alpha < C - _EDGE))
        if not up.any() or not low.any():
            converged = True
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = int(up_idx[np.argmax(neg_yg[up_idx])])
        j = int(low_idx[np.argmin(neg_yg[low_idx])])
        if neg_yg[i] - neg_yg[j] <= tol:
            converged = True
            break

        old_ai, old_aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], _TAU)
            delta = (-G[i] - G[j]) / quad
            diff = old_ai - old_aj
            alpha[i] = old_ai + delta
            alpha[j] = old_aj + delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], _TAU)
            delta = (G[i] - G[j]) / quad
            total = old_ai + old_aj
            alpha[i] = old_ai - delta
            alpha[j] = old_aj + delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        G += Q[:, i] * (alpha[i] - old_ai) + Q[:, j] * (alpha[j] - old_aj)

    bias = -_rho(y, G, alpha, C)
    return alpha, float(bias), converged


def _rho(y, G, alpha, C: float) -> float:
    """Offset of the decision function, from the KKT conditions."""
    yg = y * G
    free = (alpha > _EDGE) & (alpha < C - _EDGE)
    if free.any():
        return float(yg[free].mean())
    at_lower = alpha <= _EDGE
    at_upper = alpha >= C - _EDGE
    ub_mask = (at_lower & (y > 0)) | (at_upper & (y < 0))
    lb_mask = (at_lower & (y < 0)) | (at_upper & (y > 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if not np.isfinite(ub) and not np.isfinite(lb):
        return 0.0
    if not np.isfinite(ub):
        return float(lb)
    if not np.isfinite(lb):
        return float(ub)
    return float((ub + lb) / 2.0)


@dataclass(frozen=True)
class BinarySvmModel:
    """One trained two-class boundary: support vectors, dual coefs, bias.

    ``coef`` holds alpha_i * y_i for the retained support vectors, so the
    decision value of a row x is sum_i coef_i k(sv_i, x) + bias; positive
    means the positive class.
    """

    support_vectors: np.ndarray
    coef: np.ndarray
    bias: float
    converged: bool = True

    def decision(self, X, kernel: str, gamma: float | None = None) -> np.ndarray:
        if self.support_vectors.shape[0] == 0:
            return np.full(np.asarray(X).shape[0], self.bias)
        k = kernel_matrix(X, self.support_vectors, kernel, gamma)
        return k @ self.coef + self.bias


def train_binary(
    rows_pos,
    rows_neg,
    kernel: str = "rbf",
    C: float = DEFAULT_C,
    gamma: float | None = None,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> BinarySvmModel:
    """Train one binary boundary between two row sets.

    ``rows_pos`` become the +1 class. No scaling is applied here; callers
    standardize first when they want it.
    """
    rows_pos = np.asarray(rows_pos, dtype=np.float64)
    rows_neg = np.asarray(rows_neg, dtype=np.float64)
    if rows_pos.shape[0] == 0 or rows_neg.shape[0] == 0:
        raise ValueError("both classes need at least one training row")
    X = np.vstack([rows_pos, rows_neg])
    y = np.concatenate([np.ones(rows_pos.shape[0]), -np.ones(rows_neg.shape[0])])
    if kernel == "rbf" and gamma is None:
        gamma = default_gamma(X)
    K = kernel_matrix(X, X, kernel, gamma)
    alpha, bias, converged = smo_solve(K, y, C=C, tol=tol, max_passes=max_passes)
    keep = alpha > _EDGE
    return BinarySvmModel(
        support_vectors=X[keep].copy(),
        coef=(alpha * y)[keep],
        bias=bias,
        converged=converged,
    )


def default_gamma(X) -> float:
    """1 / (n_features * mean per-column variance), the scale-aware default."""
    X = np.asarray(X, dtype=np.float64)
    spread = float(np.mean(X.var(axis=0)))
    if spread <= 0.0:
        return 1.0 / X.shape[1]
    return 1.0 / (X.shape[1] * spread)
