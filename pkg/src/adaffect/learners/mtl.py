"""Sparse graph-regularized multi-task learning.

Jointly fits one weight column per task by minimizing

    sum_t ||X_t W_t + c_t - Y_t||^2 + alpha ||W R||_F^2
        + beta ||W||_1 + gamma ||W||_F^2

where R is the incidence matrix of the task-relatedness graph (column
e_i - e_j per related pair), so ||W R||_F^2 = sum_edges ||W_i - W_j||^2.
Minimization uses a monotone accelerated proximal-gradient scheme with
backtracking, soft-thresholding the l1 term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ALL_QUADRANTS, Quadrant


class EmptyTaskError(ValueError):
    """A task arrived with no training items."""


@dataclass
class TaskGraph:
    tasks: list[Quadrant]
    edges: list[tuple[int, int]]
    incidence: np.ndarray  # T x E, column (e_i - e_j) per edge

    def task_index(self, quadrant: Quadrant) -> int:
        return self.tasks.index(quadrant)


def build_task_graph(quadrants=ALL_QUADRANTS) -> TaskGraph:
    """Relate every pair of quadrants sharing an arousal or valence level."""
    tasks = list(quadrants)
    if len(tasks) != 4 or len(set(tasks)) != 4:
        raise ValueError("expected the 4 distinct quadrants")
    edges = [
        (i, j)
        for i in range(4)
        for j in range(i + 1, 4)
        if tasks[i].related_to(tasks[j])
    ]
    incidence = np.zeros((4, len(edges)))
    for e, (i, j) in enumerate(edges):
        incidence[i, e] = 1.0
        incidence[j, e] = -1.0
    return TaskGraph(tasks=tasks, edges=edges, incidence=incidence)


@dataclass
class MtlModel:
    W: np.ndarray                 # dims x T
    bias: np.ndarray              # T
    graph: TaskGraph
    alpha: float
    beta: float
    gamma: float
    objective_history: list[float] = field(default_factory=list)
    fit_intercept: bool = False

    @property
    def n_dims(self) -> int:
        return self.W.shape[0]


def _smooth_value(W, bias, Xs, Ys, alpha, gamma, R):
    val = 0.0
    for t, (X, Y) in enumerate(zip(Xs, Ys)):
        r = X @ W[:, t] + bias[t] - Y
        val += float(r @ r)
    if alpha > 0.0:
        WR = W @ R
        val += alpha * float(np.sum(WR * WR))
    if gamma > 0.0:
        val += gamma * float(np.sum(W * W))
    return val


def _smooth_grad(W, bias, Xs, Ys, alpha, gamma, R, RRt, fit_intercept):
    gW = np.zeros_like(W)
    gb = np.zeros_like(bias)
    for t, (X, Y) in enumerate(zip(Xs, Ys)):
        r = X @ W[:, t] + bias[t] - Y
        gW[:, t] = 2.0 * (X.T @ r)
        if fit_intercept:
            gb[t] = 2.0 * float(r.sum())
    if alpha > 0.0:
        gW += 2.0 * alpha * (W @ RRt)
    if gamma > 0.0:
        gW += 2.0 * gamma * W
    return gW, gb


def _soft_threshold(W, thresh):
    return np.sign(W) * np.maximum(np.abs(W) - thresh, 0.0)


def mtl_objective(W, bias, Xs, Ys, alpha, beta, gamma, graph: TaskGraph) -> float:
    return _smooth_value(W, bias, Xs, Ys, alpha, gamma, graph.incidence) + beta * float(
        np.sum(np.abs(W))
    )


def mtl_fit(
    Xs,
    Ys,
    alpha: float,
    beta: float,
    gamma: float,
    graph: TaskGraph,
    fit_intercept: bool = False,
    tol: float = 1e-6,
    max_iter: int = 10000,
) -> MtlModel:
    """Fit the joint weight matrix; Xs/Ys are per-task (n_t x d, n_t) pairs
    ordered like graph.tasks.

    Terminates when the relative objective change drops below `tol` or
    after `max_iter` iterations. The recorded objective history is
    nonincreasing (monotone accelerated scheme with backtracking).
    """
    if len(Xs) != len(graph.tasks) or len(Ys) != len(Xs):
        raise ValueError("need one (X, Y) pair per task")
    Xs = [np.asarray(X, dtype=float) for X in Xs]
    Ys = [np.asarray(Y, dtype=float).reshape(-1) for Y in Ys]
    for t, (X, Y) in enumerate(zip(Xs, Ys)):
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyTaskError(f"task {graph.tasks[t]} has no training items")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"task {graph.tasks[t]}: X and Y row counts differ")
    d = Xs[0].shape[1]
    if any(X.shape[1] != d for X in Xs):
        raise ValueError("all tasks must share one feature dimensionality")
    if min(alpha, beta, gamma) < 0.0:
        raise ValueError("regularizer weights must be nonnegative")
    T = len(Xs)
    R = graph.incidence
    RRt = R @ R.T

    W = np.zeros((d, T))
    bias = np.zeros(T)

    def smooth(Wm, bm):
        return _smooth_value(Wm, bm, Xs, Ys, alpha, gamma, R)

    def full(Wm, bm):
        return smooth(Wm, bm) + beta * float(np.sum(np.abs(Wm)))

    # Monotone FISTA: accelerate through a search point but never accept an
    # iterate whose objective exceeds the previous one.
    x_W, x_b = W.copy(), bias.copy()
    x_W_old, x_b_old = W.copy(), bias.copy()
    y_W, y_b = W.copy(), bias.copy()
    t_momentum = 1.0
    L = 1.0
    history = [full(x_W, x_b)]

    for _ in range(max_iter):
        gW, gb = _smooth_grad(y_W, y_b, Xs, Ys, alpha, gamma, R, RRt, fit_intercept)
        f_y = smooth(y_W, y_b)
        while True:
            z_W = _soft_threshold(y_W - gW / L, beta / L)
            z_b = y_b - gb / L if fit_intercept else y_b
            d_W = z_W - y_W
            d_b = z_b - y_b
            quad = (
                f_y
                + float(np.sum(d_W * gW))
                + float(d_b @ gb)
                + 0.5 * L * (float(np.sum(d_W * d_W)) + float(d_b @ d_b))
            )
            if smooth(z_W, z_b) <= quad + 1e-12 * max(1.0, abs(quad)):
                break
            L *= 2.0
        f_z = full(z_W, z_b)
        x_W_old, x_b_old = x_W, x_b
        accepted = f_z <= history[-1]
        if accepted:
            x_W, x_b = z_W, z_b
            f_x = f_z
        else:
            f_x = history[-1]
        history.append(f_x)

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_momentum**2))
        y_W = x_W + (t_momentum / t_next) * (z_W - x_W) + ((t_momentum - 1.0) / t_next) * (
            x_W - x_W_old
        )
        y_b = x_b + (t_momentum / t_next) * (z_b - x_b) + ((t_momentum - 1.0) / t_next) * (
            x_b - x_b_old
        )
        t_momentum = t_next

        if accepted and abs(history[-2] - history[-1]) <= tol * max(abs(history[-2]), 1e-12):
            break

    return MtlModel(
        W=x_W,
        bias=x_b,
        graph=graph,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        objective_history=history,
        fit_intercept=fit_intercept,
    )


def _logistic(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))


def mtl_scores(model: MtlModel, X) -> np.ndarray:
    """Per-task decision scores, items x T."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_dims:
        raise ValueError(f"expected {model.n_dims} dims, got {X.shape[1]}")
    return X @ model.W + model.bias


def mtl_predict(model: MtlModel, x, task: Quadrant | None = None):
    """Predict one item's High/Low sign and confidence.

    With a known task the score is W_t'x + b_t; with task=None every task
    is scored and the maximum-|score| task decides. Returns
    (+1/-1, confidence) where confidence is the logistic squash of the
    winning score (0.5 at a zero score, which maps to Low).
    """
    scores = mtl_scores(model, x)[0]
    if task is not None:
        s = float(scores[model.graph.task_index(task)])
    else:
        s = float(scores[int(np.argmax(np.abs(scores)))])
    label = 1.0 if s > 0 else -1.0
    p_high = float(_logistic(s))
    confidence = p_high if label > 0 else 1.0 - p_high
    return label, confidence


def mtl_predict_proba(model: MtlModel, X, tasks) -> np.ndarray:
    """Posterior pairs (High, Low) for items with known task ids."""
    scores = mtl_scores(model, X)
    idx = [model.graph.task_index(t) for t in tasks]
    s = scores[np.arange(len(idx)), idx]
    p_high = _logistic(s)
    return np.column_stack([p_high, 1.0 - p_high])
