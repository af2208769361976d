"""Epsilon-insensitive support vector regression with exact kernels.

The dual problem (maximize -1/2 b'Kb - eps * sum|b| + y'b subject to
sum(b) = 0, |b_i| <= C) is solved in its 2n-variable box form by pairwise
coordinate ascent with maximal-violating-pair selection, the scheme used by
standard SMO solvers. Kernels are evaluated exactly; the histogram
intersection kernel K(u, v) = sum_i min(u_i, v_i) requires nonnegative
inputs, which min-max normalized features guarantee.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DimensionError

__all__ = [
    "KernelSpec",
    "SvrConfig",
    "SvrModel",
    "hik_kernel",
    "gram_matrix",
    "train_svr",
    "predict_svr",
    "grid_search_svr",
    "DEFAULT_C_GRID",
    "DEFAULT_EPSILON_GRID",
]

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_EPSILON_GRID = (0.001, 0.01, 0.05)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "histogram_intersection"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("histogram_intersection", "linear", "rbf"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ConfigError("rbf kernel requires gamma > 0")


@dataclass(frozen=True)
class SvrConfig:
    C: float = 1.0
    epsilon: float = 0.01
    tolerance: float = 1e-3
    max_iterations: int = 200_000

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")


def hik_kernel(u, v) -> float:
    """Histogram intersection sum(min(u_i, v_i)) of two nonnegative vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError(f"expected equal-length vectors, got {u.shape} and {v.shape}")
    if (u < 0).any() or (v < 0).any():
        raise DataError("histogram intersection requires nonnegative entries")
    return float(np.minimum(u, v).sum())


def gram_matrix(kernel: KernelSpec, X, Z=None) -> np.ndarray:
    """K[i, j] = k(X_i, Z_j); HIK rows are accumulated one at a time to bound memory."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape[1] != Z.shape[1]:
        raise DimensionError(f"feature dims differ: {X.shape[1]} vs {Z.shape[1]}")
    if kernel.kind == "linear":
        return X @ Z.T
    if kernel.kind == "rbf":
        sq = (X ** 2).sum(axis=1)[:, None] + (Z ** 2).sum(axis=1)[None, :] - 2.0 * (X @ Z.T)
        return np.exp(-kernel.gamma * np.maximum(sq, 0.0))
    if (X < 0).any() or (Z < 0).any():
        raise DataError("histogram intersection requires nonnegative entries")
    G = np.empty((X.shape[0], Z.shape[0]))
    for i in range(X.shape[0]):
        G[i] = np.minimum(X[i], Z).sum(axis=1)
    return G


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    beta: np.ndarray
    bias: float
    kernel: KernelSpec
    config: SvrConfig
    converged: bool
    n_iterations: int
    objective_history: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "format": "svr-model/1",
            "kernel": {"kind": self.kernel.kind, "gamma": self.kernel.gamma},
            "support_vectors": self.support_vectors.tolist(),
            "beta": self.beta.tolist(),
            "bias": self.bias,
            "config": {"C": self.config.C, "epsilon": self.config.epsilon,
                       "tolerance": self.config.tolerance,
                       "max_iterations": self.config.max_iterations},
            "converged": self.converged,
            "n_iterations": self.n_iterations,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SvrModel":
        doc = json.loads(text)
        if doc.get("format") != "svr-model/1":
            raise DataError(f"unsupported model document: {doc.get('format')!r}")
        return cls(
            support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
            beta=np.asarray(doc["beta"], dtype=np.float64),
            bias=float(doc["bias"]),
            kernel=KernelSpec(**doc["kernel"]),
            config=SvrConfig(**doc["config"]),
            converged=bool(doc["converged"]),
            n_iterations=int(doc["n_iterations"]),
        )


def train_svr(X, y, cfg: SvrConfig, kernel: KernelSpec, gram: np.ndarray | None = None) -> SvrModel:
    """Solve the dual by maximal-violating-pair SMO on the 2n box variables.

    Variables t = [a; a*] with signs s = [+1; -1] and beta = a - a*. Each
    step picks the most violating (up, low) pair, moves them along the
    equality constraint by the clipped Newton step, and updates the gradient
    with two kernel columns. Stops when the KKT violation gap drops below
    cfg.tolerance; hitting max_iterations returns converged=False. ``gram``
    may pass a precomputed kernel matrix for repeated fits on the same rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if X.shape[0] != n:
        raise DataError(f"{X.shape[0]} rows vs {n} targets")
    if n < 2:
        raise DataError("need at least 2 training samples")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("non-finite training data")
    G = gram_matrix(kernel, X) if gram is None else np.asarray(gram, dtype=np.float64)
    if G.shape != (n, n):
        raise DimensionError(f"gram matrix shape {G.shape}, expected {(n, n)}")

    C, eps, tol = cfg.C, cfg.epsilon, cfg.tolerance
    s = np.concatenate([np.ones(n), -np.ones(n)])
    t = np.zeros(2 * n)
    g = np.concatenate([eps - y, eps + y])
    diag = np.concatenate([np.diag(G), np.diag(G)])

    converged = False
    history: list[float] = []
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        viol = -s * g
        up = ((s > 0) & (t < C)) | ((s < 0) & (t > 0))
        low = ((s > 0) & (t > 0)) | ((s < 0) & (t < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.where(up, viol, -np.inf).argmax())
        j = int(np.where(low, viol, np.inf).argmin())
        m_up, m_low = viol[i], viol[j]
        if m_up - m_low < tol:
            converged = True
            break

        ii, jj = i % n, j % n
        a = max(diag[i] + diag[j] - 2.0 * G[ii, jj], 1e-12)
        cap_i = (C - t[i]) if s[i] > 0 else t[i]
        cap_j = t[j] if s[j] > 0 else (C - t[j])
        delta = min((m_up - m_low) / a, cap_i, cap_j)
        t[i] += s[i] * delta
        t[j] -= s[j] * delta
        if delta == cap_i:
            t[i] = C if s[i] > 0 else 0.0
        if delta == cap_j:
            t[j] = 0.0 if s[j] > 0 else C
        col = np.concatenate([G[:, ii] - G[:, jj]] * 2)
        g += s * delta * col
        if it % 100 == 0:
            history.append(float(-0.5 * t @ (g + np.concatenate([eps - y, eps + y]))))

    free = (t > 0) & (t < C)
    if free.any():
        bias = float(np.mean(-s[free] * g[free]))
    else:
        viol = -s * g
        up = ((s > 0) & (t < C)) | ((s < 0) & (t > 0))
        low = ((s > 0) & (t > 0)) | ((s < 0) & (t < C))
        hi = np.where(up, viol, -np.inf).max() if up.any() else 0.0
        lo = np.where(low, viol, np.inf).min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)

    beta = t[:n] - t[n:]
    keep = np.abs(beta) > 0
    return SvrModel(
        support_vectors=X[keep].copy(),
        beta=beta[keep],
        bias=bias,
        kernel=kernel,
        config=cfg,
        converged=converged,
        n_iterations=it,
        objective_history=history,
    )


def predict_svr(model: SvrModel, x):
    """f(x) = sum_i beta_i k(sv_i, x) + bias; accepts a vector or a matrix."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if model.support_vectors.size and X.shape[1] != model.support_vectors.shape[1]:
        raise DimensionError(
            f"input dim {X.shape[1]} != model dim {model.support_vectors.shape[1]}")
    if model.support_vectors.size == 0:
        out = np.full(X.shape[0], model.bias)
    else:
        out = gram_matrix(model.kernel, X, model.support_vectors) @ model.beta + model.bias
    return float(out[0]) if single else out


def grid_search_svr(
    X, y,
    kernel: KernelSpec,
    base: SvrConfig = SvrConfig(),
    c_grid=DEFAULT_C_GRID,
    epsilon_grid=DEFAULT_EPSILON_GRID,
    val_fraction: float = 0.25,
    seed: int = 0,
) -> tuple[SvrModel, SvrConfig]:
    """Pick (C, epsilon) on a held-out slice of the training rows, then refit on all.

    Selection minimizes validation MSE; ties go to the earlier grid entry
    (C-major order). The returned model is trained on the full (X, y).
    """
    from .data import SplitSpec, split as split_indices

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    fit_idx, val_idx = split_indices(
        y.size, SplitSpec(fractions=(1.0 - val_fraction, val_fraction), seed=seed))
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_val, y_val = X[val_idx], y[val_idx]
    gram_fit = gram_matrix(kernel, X_fit)

    best_cfg, best_mse = None, np.inf
    for C in c_grid:
        for eps in epsilon_grid:
            cfg = SvrConfig(C=C, epsilon=eps, tolerance=base.tolerance,
                            max_iterations=base.max_iterations)
            model = train_svr(X_fit, y_fit, cfg, kernel, gram=gram_fit)
            val_mse = float(np.mean((predict_svr(model, X_val) - y_val) ** 2))
            if val_mse < best_mse:
                best_cfg, best_mse = cfg, val_mse
    final = train_svr(X, y, best_cfg, kernel)
    return final, best_cfg
