"""Shallow binary classifiers: shrinkage-regularized LDA and linear/RBF
SVMs trained by SMO, all with Platt-calibrated posterior output.

Labels are +1 (High) / -1 (Low); posterior columns are (High, Low).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KKT_TOL = 1e-3
SHALLOW_KINDS = ("lda", "linear_svm", "rbf_svm")


class SingleClassError(ValueError):
    """Training data contains only one class."""


class DimensionMismatchError(ValueError):
    """Feature dimensionality differs from the training data."""


def _check_training_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be items x dims aligned with y")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1/-1")
    if len(np.unique(y)) < 2:
        raise SingleClassError("both classes must be present")
    return X, y


# --------------------------------------------------------------- kernels

def _kernel(kind: str, gamma: float):
    if kind == "linear_svm":
        return lambda A, B: A @ B.T
    def rbf(A, B):
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        return np.exp(-gamma * np.maximum(sq, 0.0))
    return rbf


# ------------------------------------------------------------------ SMO

def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = KKT_TOL, max_iter: int = 400000):
    """SMO with second-order working-pair selection on a precomputed kernel.

    Returns (alpha, b). Optimality: there is a b satisfying every KKT
    box condition within `tol`. State (t = y - G and the bound-set
    eligibility masks) is maintained incrementally to keep iterations cheap.
    """
    n = len(y)
    alpha = np.zeros(n)
    t = y.astype(float).copy()  # y - G, the per-item implied bias
    diag = np.diag(K).copy()
    y_pos = y > 0
    eps = 1e-12
    # Eligibility to bound b from below (i side) / above (j side).
    lb = y_pos.copy()   # at alpha = 0: +1 items can still grow
    ub = ~y_pos

    def refresh(k):
        a = alpha[k]
        if y_pos[k]:
            lb[k] = a < C - eps
            ub[k] = a > eps
        else:
            lb[k] = a > eps
            ub[k] = a < C - eps

    for _ in range(max_iter):
        t_lb = np.where(lb, t, -np.inf)
        i = int(np.argmax(t_lb))
        min_ub = np.min(np.where(ub, t, np.inf))
        if t_lb[i] - min_ub <= 2.0 * tol:
            break
        # Second-order partner: maximize the guaranteed objective gain
        # delta^2 / eta among violating candidates.
        delta = t_lb[i] - t
        cand = ub & (delta > 1e-15)
        if not cand.any():
            break
        eta_row = np.maximum(diag[i] + diag - 2.0 * K[i], 1e-12)
        gain = np.where(cand, delta * delta / eta_row, -np.inf)
        j = int(np.argmax(gain))
        # Two-variable subproblem on (i, j) with the rest fixed.
        if y[i] != y[j]:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(C, C + alpha[j] - alpha[i])
        else:
            lo = max(0.0, alpha[i] + alpha[j] - C)
            hi = min(C, alpha[i] + alpha[j])
        if hi - lo < 1e-14:
            break
        # E_i - E_j = t_j - t_i = -delta[j]
        aj_new = min(max(alpha[j] - y[j] * delta[j] / eta_row[j], lo), hi)
        delta_j = aj_new - alpha[j]
        if abs(delta_j) < 1e-14:
            break
        ai_new = alpha[i] - y[i] * y[j] * delta_j
        t -= y[i] * (ai_new - alpha[i]) * K[i] + y[j] * delta_j * K[j]
        alpha[i], alpha[j] = ai_new, aj_new
        refresh(i)
        refresh(j)
    b_low = np.max(np.where(lb, t, -np.inf))
    b_up = np.min(np.where(ub, t, np.inf))
    if not np.isfinite(b_low):
        b = b_up if np.isfinite(b_up) else 0.0
    elif not np.isfinite(b_up):
        b = b_low
    else:
        b = 0.5 * (b_low + b_up)
    return alpha, float(b)


# --------------------------------------------------------- Platt scaling

def fit_platt(scores: np.ndarray, y: np.ndarray, max_iter: int = 100):
    """Fit P(High|f) = 1/(1 + exp(A f + B)) by Newton descent on the
    regularized log-loss with the usual prior-smoothed targets."""
    scores = np.asarray(scores, dtype=float)
    n_pos = float(np.sum(y > 0))
    n_neg = float(np.sum(y < 0))
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    A, B = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    eps = 1e-12

    def apply(a, b):
        z = a * scores + b
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))
        return np.clip(p, eps, 1.0 - eps)

    def loss(a, b):
        p = apply(a, b)
        return float(-np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))

    prev = loss(A, B)
    for _ in range(max_iter):
        p = apply(A, B)
        d = p - t  # dloss/dz with z = A f + B (note p = sigma(-z))
        g_a = float(np.sum(-d * scores))
        g_b = float(np.sum(-d))
        w = p * (1.0 - p)
        h_aa = float(np.sum(w * scores * scores)) + 1e-12
        h_ab = float(np.sum(w * scores))
        h_bb = float(np.sum(w)) + 1e-12
        det = h_aa * h_bb - h_ab * h_ab
        if abs(det) < 1e-18:
            break
        step_a = (h_bb * g_a - h_ab * g_b) / det
        step_b = (h_aa * g_b - h_ab * g_a) / det
        stepsize = 1.0
        while stepsize > 1e-10:
            cand = loss(A - stepsize * step_a, B - stepsize * step_b)
            if cand <= prev + 1e-12:
                A -= stepsize * step_a
                B -= stepsize * step_b
                improved = prev - cand
                prev = cand
                break
            stepsize *= 0.5
        else:
            break
        if improved < 1e-10:
            break
    return float(A), float(B)


def platt_posterior(scores, A, B):
    z = A * np.asarray(scores, dtype=float) + B
    return np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))


# ---------------------------------------------------------------- models

@dataclass
class ShallowModel:
    kind: str
    hyperparams: dict
    n_dims: int
    # lda
    w: np.ndarray | None = None
    b: float = 0.0
    # svm
    support_vectors: np.ndarray | None = None
    dual_coef: np.ndarray | None = None  # alpha_i * y_i
    gamma: float | None = None
    # posterior calibration
    calibration: tuple[float, float] = (0.0, 0.0)
    train_meta: dict = field(default_factory=dict)

    def decision_values(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_dims:
            raise DimensionMismatchError(f"expected {self.n_dims} dims, got {X.shape[1]}")
        if self.kind == "lda" or self.kind == "linear_svm":
            out = X @ self.w + self.b
        else:
            k = _kernel("rbf_svm", self.gamma)(X, self.support_vectors)
            out = k @ self.dual_coef + self.b
        return out[0] if single else out

    def kkt_violation(self, X, y) -> float:
        """Max per-item KKT violation of the fitted SVM on its training set."""
        if self.kind == "lda":
            raise ValueError("KKT check only applies to SVMs")
        y = np.asarray(y, dtype=float)
        f = self.decision_values(X)
        margins = y * f
        alpha = self.train_meta["alpha"]
        C = self.hyperparams["C"]
        viol = np.zeros(len(y))
        at_zero = alpha <= 1e-9
        at_c = alpha >= C - 1e-9
        interior = ~(at_zero | at_c)
        viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
        viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
        viol[interior] = np.abs(1.0 - margins[interior])
        return float(viol.max()) if len(viol) else 0.0


def _fit_lda(X, y, shrinkage: float):
    pos = X[y > 0]
    neg = X[y < 0]
    mu_pos = pos.mean(axis=0)
    mu_neg = neg.mean(axis=0)
    d = X.shape[1]
    centered = np.concatenate([pos - mu_pos, neg - mu_neg])
    cov = (centered.T @ centered) / max(len(X) - 2, 1)
    if shrinkage > 0.0:
        scale = np.trace(cov) / d
        if scale <= 0.0:
            scale = 1.0  # zero within-class scatter: shrink toward the identity
        cov = (1.0 - shrinkage) * cov + shrinkage * scale * np.eye(d)
    w = np.linalg.solve(cov, mu_pos - mu_neg)
    b = -0.5 * float(w @ (mu_pos + mu_neg)) + math.log(len(pos) / len(neg))
    return w, b


def _cross_fitted_scores(X, y, fit_one, n_folds: int, seed: int):
    """Out-of-fold decision values for calibration."""
    rng = np.random.default_rng(seed)
    scores = np.zeros(len(y))
    folds = _stratified_fold_indices(y, min(n_folds, int(min(np.sum(y > 0), np.sum(y < 0)))), rng)
    for test_idx in folds:
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        if len(np.unique(y[train_mask])) < 2:
            scores[test_idx] = 0.0
            continue
        model = fit_one(X[train_mask], y[train_mask])
        scores[test_idx] = model.decision_values(X[test_idx])
    return scores


def _stratified_fold_indices(y, n_folds: int, rng) -> list[np.ndarray]:
    n_folds = max(2, n_folds)
    folds = [[] for _ in range(n_folds)]
    for cls in (1.0, -1.0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        for pos, item in enumerate(idx):
            folds[pos % n_folds].append(item)
    return [np.array(sorted(f), dtype=int) for f in folds]


def _fit_uncalibrated(X, y, kind, hyper) -> ShallowModel:
    if kind == "lda":
        w, b = _fit_lda(X, y, hyper["shrinkage"])
        return ShallowModel(kind, dict(hyper), X.shape[1], w=w, b=b)
    gamma = None
    if kind == "rbf_svm":
        gamma = hyper["gamma"]
        if gamma == "scale":
            gamma = 1.0 / X.shape[1]
        gamma = float(gamma)
    K = _kernel(kind, gamma)(X, X)
    alpha, b = _smo(K, y, hyper["C"])
    coef = alpha * y
    model = ShallowModel(kind, dict(hyper), X.shape[1], b=b, gamma=gamma,
                         train_meta={"alpha": alpha})
    if kind == "linear_svm":
        model.w = X.T @ coef
        model.support_vectors = X
        model.dual_coef = coef
    else:
        model.support_vectors = X
        model.dual_coef = coef
    return model


DEFAULT_HYPERPARAMS = {
    "lda": {"shrinkage": 0.1},
    "linear_svm": {"C": 1.0},
    "rbf_svm": {"C": 1.0, "gamma": "scale"},
}


def shallow_fit(X, y, kind: str, hyperparams: dict | None = None, seed: int = 0,
                calibration_folds: int = 3) -> ShallowModel:
    """Fit one shallow classifier and calibrate its posterior output.

    `y` holds +1/-1 labels. Calibration fits a logistic map on out-of-fold
    decision values so posteriors are honest on the training scale.
    """
    if kind not in SHALLOW_KINDS:
        raise ValueError(f"unknown shallow kind {kind!r}")
    X, y = _check_training_inputs(X, y)
    hyper = dict(DEFAULT_HYPERPARAMS[kind])
    hyper.update(hyperparams or {})
    if kind != "lda" and hyper["C"] <= 0:
        raise ValueError("C must be positive")

    model = _fit_uncalibrated(X, y, kind, hyper)
    fit_one = lambda Xi, yi: _fit_uncalibrated(Xi, yi, kind, hyper)
    scores = _cross_fitted_scores(X, y, fit_one, calibration_folds, seed)
    model.calibration = fit_platt(scores, y)
    return model


def shallow_predict_proba(model: ShallowModel, X) -> np.ndarray:
    """Per-item posterior pairs (High, Low); rows sum to 1."""
    f = model.decision_values(X)
    p_high = platt_posterior(np.atleast_1d(f), *model.calibration)
    return np.column_stack([p_high, 1.0 - p_high])


def shallow_predict(model: ShallowModel, X) -> np.ndarray:
    """Hard +1/-1 labels from the posterior argmax (ties map to Low)."""
    proba = shallow_predict_proba(model, X)
    return np.where(proba[:, 0] > proba[:, 1], 1.0, -1.0)
