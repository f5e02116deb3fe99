"""L2-regularized squared epsilon-insensitive linear regression.

Objective, over rows x_i of a feature matrix with targets y_i:

    f(w, b) = 0.5 * ||w||^2 + C * sum_i max(0, |w.x_i + b - y_i| - eps)^2

The bias is an explicit unregularized intercept. The loss is differentiable
everywhere except on the measure-zero tube boundary, where the subgradient 0
is taken, so f is smooth enough for first-order descent. The solver is
conjugate-direction gradient descent (Polak-Ribiere with restarts) with an
exact line search: the objective restricted to a ray is piecewise quadratic,
so its derivative is piecewise linear and the one-dimensional minimizer can
be found to machine precision. Exact line search off a descent direction
never increases f, which makes the per-epoch objective monotone by
construction; with eps = 0 the objective is globally quadratic and the
conjugate recursion terminates in at most width+1 steps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluate import UndefinedCorrelationError, pearson
from .features import FeatureMatrix

MODEL_FORMAT = "bwslab-svr 1"


class LayoutMismatchError(ValueError):
    """Feature matrix layout differs from the one the model was trained on."""


@dataclass
class RegressionModel:
    weights: np.ndarray
    bias: float
    C: float
    epsilon: float
    layout_digest: str
    objective_history: list[float] = field(default_factory=list, repr=False)


def _matvec(X: FeatureMatrix, v: np.ndarray) -> np.ndarray:
    n_sparse = len(X.sparse_names)
    out = np.zeros(X.n_rows)
    if X.sparse is not None:
        out += X.sparse @ v[:n_sparse]
    if X.dense is not None:
        out += X.dense @ v[n_sparse:]
    return out


def _rmatvec(X: FeatureMatrix, u: np.ndarray) -> np.ndarray:
    parts = []
    if X.sparse is not None:
        parts.append(X.sparse.T @ u)
    if X.dense is not None:
        parts.append(X.dense.T @ u)
    return np.concatenate(parts) if parts else np.zeros(0)


def objective_value(
    X: FeatureMatrix, y: np.ndarray, w: np.ndarray, b: float, C: float, epsilon: float
) -> float:
    r = _matvec(X, w) + b - y
    excess = np.maximum(0.0, np.abs(r) - epsilon)
    return 0.5 * float(w @ w) + C * float(excess @ excess)


def objective_gradient(
    X: FeatureMatrix, y: np.ndarray, w: np.ndarray, b: float, C: float, epsilon: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient (subgradient 0 on the tube boundary)."""
    r = _matvec(X, w) + b - y
    excess = np.maximum(0.0, np.abs(r) - epsilon)
    coef = 2.0 * C * np.sign(r) * excess
    return w + _rmatvec(X, coef), float(coef.sum())


def _exact_line_search(
    r: np.ndarray, q: np.ndarray, w_dot_d: float, d_dot_d: float, C: float, epsilon: float
) -> float:
    """Minimize f along w + t*d exactly.

    phi'(t) = w.d_w + t ||d_w||^2 + 2C sum_active (u_i - s_i eps) q_i with
    u = r + t q, a piecewise linear increasing function; solve the active
    piece's root with a bisection safeguard.
    """

    def dphi(t: float) -> float:
        u = r + t * q
        excess = np.abs(u) - epsilon
        act = excess > 0.0
        return w_dot_d + t * d_dot_d + 2.0 * C * float(
            (np.sign(u[act]) * excess[act]) @ q[act]
        )

    def piece(t: float) -> tuple[float, float]:
        u = r + t * q
        act = (np.abs(u) - epsilon) > 0.0
        qa = q[act]
        alpha = w_dot_d + 2.0 * C * (float(r[act] @ qa) - epsilon * float(np.sign(u[act]) @ qa))
        beta = d_dot_d + 2.0 * C * float(qa @ qa)
        return alpha, beta

    if dphi(0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, None
    alpha, beta = piece(0.0)
    t = -alpha / beta if beta > 0 else 1.0
    if not math.isfinite(t) or t <= 0:
        t = 1.0
    for _ in range(200):
        if hi is not None and not (lo < t < hi):
            t = 0.5 * (lo + hi)
        elif hi is None and t <= lo:
            t = max(lo, 1e-12) * 2.0
        val = dphi(t)
        if val < 0.0:
            lo = t
        elif val > 0.0:
            hi = t
        else:
            return t
        alpha, beta = piece(t)
        if beta > 0:
            cand = -alpha / beta
        else:
            cand = 0.5 * (lo + hi) if hi is not None else max(lo, 1e-12) * 2.0
        if not math.isfinite(cand):
            cand = 0.5 * (lo + hi) if hi is not None else max(lo, 1e-12) * 2.0
        if abs(cand - t) <= 1e-14 * max(1.0, abs(cand)):
            return cand
        if hi is not None and hi - lo <= 1e-16 * max(1.0, hi):
            return 0.5 * (lo + hi)
        t = cand
    return t


def train(
    X: FeatureMatrix,
    y,
    C: float = 1.0,
    epsilon: float = 0.1,
    tol: float = 1e-9,
    max_iter: int = 1000,
) -> RegressionModel:
    """Fit the regressor; deterministic, objective monotone per epoch.

    Stops after three consecutive epochs whose objective decrease falls below
    tol relative to the objective scale (the larger of the initial and
    current values), or after max_iter epochs. A single stalled epoch is not
    conclusive: on badly conditioned problems the first conjugate steps can
    be tiny while a later direction unlocks the real descent.
    """
    targets = np.asarray(y, dtype=np.float64)
    if X.n_rows != targets.shape[0]:
        raise ValueError(f"matrix has {X.n_rows} rows but {targets.shape[0]} targets")
    if X.n_rows < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    if X.dense is not None and not np.all(np.isfinite(X.dense)):
        raise ValueError("feature matrix contains non-finite values")
    if X.sparse is not None and not np.all(np.isfinite(X.sparse.data)):
        raise ValueError("feature matrix contains non-finite values")
    if C <= 0:
        raise ValueError("C must be positive")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")

    width = X.width
    w = np.zeros(width)
    b = 0.0
    r = -targets  # residuals of the zero model
    excess = np.maximum(0.0, np.abs(r) - epsilon)
    f = C * float(excess @ excess)
    history = [f]

    def grad_from_residual(res: np.ndarray) -> tuple[np.ndarray, float]:
        exc = np.maximum(0.0, np.abs(res) - epsilon)
        coef = 2.0 * C * np.sign(res) * exc
        return w + _rmatvec(X, coef), float(coef.sum())

    g_w, g_b = grad_from_residual(r)
    d_w, d_b = -g_w, -g_b
    stalled = 0
    for _epoch in range(max_iter):
        g_norm2 = float(g_w @ g_w) + g_b * g_b
        if g_norm2 == 0.0:
            break
        if float(g_w @ d_w) + g_b * d_b >= 0.0:
            d_w, d_b = -g_w, -g_b  # restart on a non-descent conjugate direction
        q = _matvec(X, d_w) + d_b
        t = _exact_line_search(r, q, float(w @ d_w), float(d_w @ d_w), C, epsilon)
        if t <= 0.0:
            break
        w = w + t * d_w
        b = b + t * d_b
        r = r + t * q
        excess = np.maximum(0.0, np.abs(r) - epsilon)
        f_new = 0.5 * float(w @ w) + C * float(excess @ excess)
        history.append(f_new)
        g_w_new, g_b_new = grad_from_residual(r)
        if f - f_new < tol * max(abs(history[0]), abs(f_new)):
            stalled += 1
            if stalled >= 3:
                f = f_new
                break
        else:
            stalled = 0
        beta_pr = (float(g_w_new @ (g_w_new - g_w)) + g_b_new * (g_b_new - g_b)) / g_norm2
        beta_pr = max(0.0, beta_pr)
        d_w = -g_w_new + beta_pr * d_w
        d_b = -g_b_new + beta_pr * d_b
        g_w, g_b, f = g_w_new, g_b_new, f_new

    return RegressionModel(
        weights=w,
        bias=b,
        C=C,
        epsilon=epsilon,
        layout_digest=X.layout_digest,
        objective_history=history,
    )


def predict(model: RegressionModel, X: FeatureMatrix) -> np.ndarray:
    """Raw scores w.x + b; raises if the matrix layout differs from training."""
    if X.layout_digest != model.layout_digest:
        raise LayoutMismatchError(
            f"matrix layout {X.layout_digest} != model layout {model.layout_digest}"
        )
    return _matvec(X, model.weights) + model.bias


def clamp_for_submission(scores) -> np.ndarray:
    """Submission scores are contractually in [0, 1]."""
    return np.clip(np.asarray(scores, dtype=np.float64), 0.0, 1.0)


def save_model(model: RegressionModel, path: str | Path) -> None:
    """Versioned text format; floats are written with round-tripping repr."""
    lines = [
        MODEL_FORMAT,
        f"C {model.C!r}",
        f"epsilon {model.epsilon!r}",
        f"layout {model.layout_digest}",
        f"bias {model.bias!r}",
        f"n_weights {model.weights.shape[0]}",
    ]
    lines.extend(repr(float(v)) for v in model.weights)
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_model(path: str | Path) -> RegressionModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT!r} file")
    header: dict[str, str] = {}
    for line in lines[1:6]:
        key, _, value = line.partition(" ")
        header[key] = value
    n = int(header["n_weights"])
    weights = np.asarray([float(v) for v in lines[6 : 6 + n]])
    if weights.shape[0] != n:
        raise ValueError(f"{path}: expected {n} weights, found {weights.shape[0]}")
    return RegressionModel(
        weights=weights,
        bias=float(header["bias"]),
        C=float(header["C"]),
        epsilon=float(header["epsilon"]),
        layout_digest=header["layout"],
    )


@dataclass
class CrossValResult:
    fold_pearson: list[float | None]
    mean_pearson: float | None
    n_skipped: int


def cross_validate(
    X: FeatureMatrix,
    y,
    folds: int,
    seed: int,
    C: float = 1.0,
    epsilon: float = 0.1,
    tol: float = 1e-9,
    max_iter: int = 1000,
) -> CrossValResult:
    """K-fold Pearson of held-out predictions under a seeded shuffle.

    Folds whose held-out correlation is undefined (constant gold or constant
    predictions, or fewer than two rows) are flagged as None and excluded
    from the mean with a warning.
    """
    targets = np.asarray(y, dtype=np.float64)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if X.n_rows < folds:
        raise ValueError(f"cannot make {folds} folds from {X.n_rows} rows")
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.n_rows)
    chunks = np.array_split(order, folds)
    fold_r: list[float | None] = []
    skipped = 0
    for k, held in enumerate(chunks):
        train_idx = np.concatenate([c for j, c in enumerate(chunks) if j != k])
        model = train(
            X.rows(train_idx), targets[train_idx], C=C, epsilon=epsilon, tol=tol,
            max_iter=max_iter,
        )
        try:
            r = pearson(targets[held], predict(model, X.rows(held)))
        except UndefinedCorrelationError as exc:
            warnings.warn(f"fold {k}: correlation undefined ({exc}); excluded", stacklevel=2)
            fold_r.append(None)
            skipped += 1
            continue
        fold_r.append(r)
    usable = [r for r in fold_r if r is not None]
    mean = sum(usable) / len(usable) if usable else None
    return CrossValResult(fold_pearson=fold_r, mean_pearson=mean, n_skipped=skipped)
