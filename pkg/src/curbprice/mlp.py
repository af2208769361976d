"""Small sigmoid network (input -> 4 hidden -> 1) trained by Levenberg-Marquardt.

Each epoch solves the damped normal equations (J'J + lambda*I) d = -J'r on the
training residuals, accepting the step only when it lowers the training SSE
(then lambda shrinks; otherwise it grows and the solve retries). Large lambda
makes the step plain gradient descent, small lambda makes it Gauss-Newton.
Early stopping tracks validation MSE and the returned weights are always the
best-validation snapshot. When the parameter count exceeds the sample count
the step is computed through the equivalent n x n system instead of the p x p
one, which keeps sweeps with thousands of inputs cheap.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError, DimensionError, TrainingError

__all__ = [
    "HIDDEN_UNITS",
    "MlpModel",
    "LmConfig",
    "TrainHistory",
    "init_network",
    "forward",
    "residual_jacobian",
    "train_lm",
    "predict_mlp",
]

HIDDEN_UNITS = 4
LAMBDA_CEILING = 1e10
MAX_STEP_ATTEMPTS = 10


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    linear_output: bool = False

    @property
    def d_in(self) -> int:
        return self.w1.shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.d_in, HIDDEN_UNITS, 1]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1

    def pack(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def unpack(self, theta: np.ndarray):
        k = self.w1.size
        self.w1 = theta[:k].reshape(self.d_in, HIDDEN_UNITS)
        self.b1 = theta[k:k + HIDDEN_UNITS]
        self.w2 = theta[k + HIDDEN_UNITS:k + 2 * HIDDEN_UNITS]
        self.b2 = float(theta[-1])

    def to_json(self) -> str:
        return json.dumps({
            "format": "mlp-model/1",
            "layer_sizes": self.layer_sizes,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
            "linear_output": self.linear_output,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        doc = json.loads(text)
        if doc.get("format") != "mlp-model/1":
            raise DataError(f"unsupported model document: {doc.get('format')!r}")
        return cls(
            w1=np.asarray(doc["w1"], dtype=np.float64),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            w2=np.asarray(doc["w2"], dtype=np.float64),
            b2=float(doc["b2"]),
            linear_output=bool(doc["linear_output"]),
        )


@dataclass(frozen=True)
class LmConfig:
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    max_epochs: int = 1000
    patience: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ConfigError("lambda0 must be > 0")
        if self.lambda_up <= 1 or self.lambda_down <= 1:
            raise ConfigError("lambda_up and lambda_down must be > 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")


@dataclass
class TrainHistory:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    test_mse: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,train_mse,val_mse,test_mse\n")
            for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
                te = repr(self.test_mse[e - 1]) if self.test_mse else ""
                fh.write(f"{e},{tr!r},{va!r},{te}\n")


def init_network(d_in: int, seed: int) -> MlpModel:
    """Uniform [-r, r] init with r = sqrt(6 / (fan_in + fan_out)) per layer."""
    if d_in < 1:
        raise ConfigError(f"d_in must be >= 1, got {d_in}")
    rng = np.random.default_rng(seed)
    r1 = np.sqrt(6.0 / (d_in + HIDDEN_UNITS))
    r2 = np.sqrt(6.0 / (HIDDEN_UNITS + 1))
    return MlpModel(
        w1=rng.uniform(-r1, r1, (d_in, HIDDEN_UNITS)),
        b1=rng.uniform(-r1, r1, HIDDEN_UNITS),
        w2=rng.uniform(-r2, r2, HIDDEN_UNITS),
        b2=float(rng.uniform(-r2, r2)),
    )


def _forward_parts(model: MlpModel, X):
    hidden = expit(X @ model.w1 + model.b1)
    pre = hidden @ model.w2 + model.b2
    out = pre if model.linear_output else expit(pre)
    return hidden, out


def forward(model: MlpModel, x):
    """sigmoid(w2 . sigmoid(W1'x + b1) + b2); accepts a vector or a matrix."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.shape[1] != model.d_in:
        raise DimensionError(f"input dim {X.shape[1]} != network dim {model.d_in}")
    _, out = _forward_parts(model, X)
    return float(out[0]) if single else out


def predict_mlp(model: MlpModel, x):
    return forward(model, x)


def residual_jacobian(model: MlpModel, X, y) -> tuple[np.ndarray, np.ndarray]:
    """Residuals r_k = yhat_k - y_k and the analytic Jacobian dr/dparams.

    Column order matches MlpModel.pack(): W1 entries row-major, then b1, w2, b2.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise DataError(f"{X.shape[0]} rows vs {y.size} targets")
    hidden, out = _forward_parts(model, X)
    r = out - y
    go = np.ones_like(out) if model.linear_output else out * (1.0 - out)
    j_b2 = go[:, None]
    j_w2 = go[:, None] * hidden
    gh = j_w2 * (1.0 - hidden) * model.w2[None, :]
    j_w1 = (X[:, :, None] * gh[:, None, :]).reshape(X.shape[0], -1)
    return r, np.hstack([j_w1, gh, j_w2, j_b2])


def _lm_step(J, r, lam):
    """Solve (J'J + lam*I) d = -J'r via whichever side is smaller."""
    n, p = J.shape
    if p <= n:
        return np.linalg.solve(J.T @ J + lam * np.eye(p), -J.T @ r)
    return -J.T @ np.linalg.solve(J @ J.T + lam * np.eye(n), r)


def train_lm(model: MlpModel, train, val, cfg: LmConfig, test=None) -> tuple[MlpModel, TrainHistory]:
    """Damped least-squares training with validation-based early stopping.

    ``train``/``val``/``test`` are (X, y) pairs. Stops after ``patience``
    consecutive validation-MSE increases (early_stop), when the damping
    factor exceeds 1e10 (converged), or at max_epochs. The model is left at
    the epoch with minimal validation MSE, recorded 1-based in the history.
    """
    X, y = (np.atleast_2d(np.asarray(train[0], dtype=np.float64)),
            np.asarray(train[1], dtype=np.float64).ravel())
    Xv, yv = (np.atleast_2d(np.asarray(val[0], dtype=np.float64)),
              np.asarray(val[1], dtype=np.float64).ravel())
    if X.shape[0] == 0 or Xv.shape[0] == 0:
        raise DataError("train and validation parts must be non-empty")
    if not all(np.isfinite(a).all() for a in (X, y, Xv, yv)):
        raise DataError("non-finite training data")

    def mse_on(A, b):
        _, out = _forward_parts(model, A)
        return float(np.mean((out - b) ** 2))

    hist = TrainHistory()
    lam = cfg.lambda0
    theta = model.pack()
    best_val = np.inf
    best_theta = theta.copy()
    streak = 0
    prev_val = None
    hist.stop_reason = "max_epochs"

    for epoch in range(1, cfg.max_epochs + 1):
        model.unpack(theta)
        r, J = residual_jacobian(model, X, y)
        if not np.isfinite(r).all():
            raise TrainingError(f"non-finite residuals at epoch {epoch} (lambda={lam:.3g})")
        current_sse = float(r @ r)
        accepted = False
        for _ in range(MAX_STEP_ATTEMPTS):
            try:
                delta = _lm_step(J, r, lam)
            except np.linalg.LinAlgError:
                lam *= cfg.lambda_up
                continue
            if not np.isfinite(delta).all():
                lam *= cfg.lambda_up
                continue
            model.unpack(theta + delta)
            trial_r = _forward_parts(model, X)[1] - y
            trial_sse = float(trial_r @ trial_r)
            if np.isfinite(trial_sse) and trial_sse < current_sse:
                theta = theta + delta
                lam /= cfg.lambda_down
                accepted = True
                break
            lam *= cfg.lambda_up

        model.unpack(theta)
        hist.accepted.append(accepted)
        hist.train_mse.append(mse_on(X, y))
        val_mse = mse_on(Xv, yv)
        hist.val_mse.append(val_mse)
        if test is not None:
            hist.test_mse.append(mse_on(np.atleast_2d(test[0]),
                                        np.asarray(test[1], dtype=np.float64).ravel()))

        if val_mse < best_val:
            best_val = val_mse
            best_theta = theta.copy()
            hist.best_epoch = epoch
        if prev_val is not None and val_mse > prev_val:
            streak += 1
            if streak >= cfg.patience:
                hist.stop_reason = "early_stop"
                break
        else:
            streak = 0
        prev_val = val_mse
        if lam > LAMBDA_CEILING:
            hist.stop_reason = "converged"
            break

    model.unpack(best_theta)
    return model, hist
