"""End-to-end orchestration: cached extraction, training runs, sweeps, reports.

The flow per image is grayscale -> histogram equalization -> integral image ->
keypoints -> descriptors, cached on disk keyed by (parameter digest, image
content digest). Per run: assemble raw vectors, fit the normalizer on the
training part only, train the chosen estimator, and report test metrics on
both the normalized and the USD scale. A sweep varies the per-image feature
count n and the seed for both estimators and aggregates rows into sweep.csv
plus static SVG charts. Run manifests record everything needed to replay a
run bit-identically, except wall-clock timestamps which never enter reports.
"""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .data import ROLES, HouseRecord, SplitSpec, load_houses_dataset, load_image_rgb, \
    load_tabular_csv, split
from .errors import ConfigError, DataError
from .fusion import assemble, denormalize_target, fit_normalizer, normalize
from .imgproc import equalize_histogram, integral_image, to_grayscale
from .metrics import EvalReport, evaluate, mse
from .mlp import LmConfig, TrainHistory, forward, init_network, train_lm
from .surf import InterestPoint, SurfParams, detect_and_describe, strongest_n
from .svr import KernelSpec, SvrConfig, grid_search_svr, predict_svr, train_svr

__all__ = [
    "Settings",
    "SweepConfig",
    "ExtractStats",
    "RunResult",
    "SWEEP_COLUMNS",
    "extract_features",
    "assemble_matrix",
    "train_eval_matrices",
    "run_train_eval",
    "replay",
    "run_sweep",
    "read_sweep_csv",
    "plot_sweep",
    "write_report",
]

SWEEP_COLUMNS = ("estimator", "n", "seed", "train_mse_norm", "test_mse_norm",
                 "test_mse_usd", "r_squared", "r_value", "converged")

SVR_SPLIT = (0.8, 0.2)
NN_SPLIT = (0.7, 0.15, 0.15)


@dataclass(frozen=True)
class Settings:
    """Flat run configuration; every key can come from a JSON config file."""

    hessian_threshold: float = 600.0
    octaves: int = 4
    upright: bool = False
    init_step: int = 2
    max_features: int = 15
    kernel: str = "histogram_intersection"
    rbf_gamma: float | None = None
    svr_c: float | None = None
    svr_epsilon: float | None = None
    svr_tolerance: float = 1e-3
    svr_max_iterations: int = 200_000
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    max_epochs: int = 1000
    patience: int = 6

    @classmethod
    def from_dict(cls, doc: dict) -> "Settings":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def surf_params(self) -> SurfParams:
        return SurfParams(hessian_threshold=self.hessian_threshold, octaves=self.octaves,
                          upright=self.upright, init_step=self.init_step)

    def lm_config(self, seed: int) -> LmConfig:
        return LmConfig(lambda0=self.lambda0, lambda_up=self.lambda_up,
                        lambda_down=self.lambda_down, max_epochs=self.max_epochs,
                        patience=self.patience, seed=seed)


@dataclass
class ExtractStats:
    computed: int = 0
    hits: int = 0


def _sha1(data: bytes) -> str:
    return hashlib.sha1(data).hexdigest()


def params_digest(params: SurfParams, limit: int) -> str:
    payload = json.dumps({
        "format": "descriptor-cache/1",
        "hessian_threshold": params.hessian_threshold,
        "octaves": params.octaves,
        "upright": params.upright,
        "init_step": params.init_step,
        "limit": limit,
    }, sort_keys=True)
    return _sha1(payload.encode())[:12]


def _extract_one(path, params: SurfParams, limit: int) -> dict:
    gray = to_grayscale(load_image_rgb(path))
    ii = integral_image(equalize_histogram(gray))
    kept, _dropped = detect_and_describe(ii, params)
    top = strongest_n(kept, limit)
    return {
        "descriptors": np.array([p.descriptor for p in top]).reshape(len(top), -1),
        "responses": np.array([p.response for p in top]),
        "xs": np.array([p.x for p in top]),
        "ys": np.array([p.y for p in top]),
        "scales": np.array([p.scale for p in top]),
        "signs": np.array([p.laplacian_sign for p in top], dtype=np.int8),
        "orientations": np.array([p.orientation for p in top]),
    }


def extract_features(records: list[HouseRecord], params: SurfParams, cache_dir,
                     limit: int = 15) -> tuple[dict, ExtractStats]:
    """Strongest descriptors per (house, role), cached by content digest.

    Returns ({house_id: {role: arrays}}, stats). A second call with unchanged
    images and parameters is pure cache hits; changing any parameter moves to
    a fresh cache namespace and recomputes everything.
    """
    ns = Path(cache_dir) / params_digest(params, limit)
    ns.mkdir(parents=True, exist_ok=True)
    stats = ExtractStats()
    out: dict[int, dict] = {}
    for rec in records:
        out[rec.id] = {}
        for role in ROLES:
            path = rec.image_paths[role]
            key = ns / (_sha1(Path(path).read_bytes())[:20] + ".npz")
            if key.exists():
                with np.load(key) as z:
                    arrays = {k: z[k] for k in z.files}
                stats.hits += 1
            else:
                arrays = _extract_one(path, params, limit)
                np.savez(key, **arrays)
                stats.computed += 1
            out[rec.id][role] = arrays
    return out, stats


def _points_from_arrays(arrays: dict) -> list[InterestPoint]:
    return [
        InterestPoint(
            x=float(arrays["xs"][k]), y=float(arrays["ys"][k]),
            scale=float(arrays["scales"][k]), response=float(arrays["responses"][k]),
            laplacian_sign=int(arrays["signs"][k]),
            orientation=float(arrays["orientations"][k]),
            descriptor=arrays["descriptors"][k],
        )
        for k in range(arrays["responses"].size)
    ]


def assemble_matrix(records: list[HouseRecord], features: dict | None,
                    n: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unnormalized) design matrix and USD price vector, one row per house."""
    rows = []
    for rec in records:
        if n == 0:
            per_image = [[] for _ in ROLES]
        else:
            if features is None or rec.id not in features:
                raise DataError(f"house {rec.id}: no extracted features (run extract first)")
            per_image = [_points_from_arrays(features[rec.id][role]) for role in ROLES]
        rows.append(assemble(rec, per_image, n).values)
    X = np.vstack(rows)
    y = np.array([rec.price for rec in records], dtype=np.float64)
    return X, y


@dataclass
class RunResult:
    estimator: str
    n: int
    seed: int
    train_mse_norm: float
    report_norm: EvalReport
    report_usd: EvalReport
    converged: bool
    chosen: dict
    model: object
    history: TrainHistory | None = None
    manifest: dict = field(default_factory=dict)

    def reports_json(self) -> str:
        """Deterministic (timestamp-free) summary of the run's outcomes."""
        return json.dumps({
            "estimator": self.estimator,
            "n": self.n,
            "seed": self.seed,
            "train_mse_norm": self.train_mse_norm,
            "normalized": json.loads(self.report_norm.to_json()),
            "usd": json.loads(self.report_usd.to_json()),
            "converged": self.converged,
            "chosen": self.chosen,
        }, sort_keys=True)


def train_eval_matrices(X_raw, y_usd, estimator: str, seed: int,
                        st: Settings = Settings()) -> RunResult:
    """Split, normalize on train only, train one estimator, evaluate on test.

    SVR uses the two-way 80/20 split; the network uses 70/15/15 with the
    middle part driving early stopping. When svr_c/svr_epsilon are unset the
    built-in grid search picks them on a slice of the training part.
    """
    X_raw = np.atleast_2d(np.asarray(X_raw, dtype=np.float64))
    y_usd = np.asarray(y_usd, dtype=np.float64).ravel()
    if estimator not in ("svr", "nn"):
        raise ConfigError(f"estimator must be 'svr' or 'nn', got {estimator!r}")

    if estimator == "svr":
        train_idx, test_idx = split(y_usd.size, SplitSpec(SVR_SPLIT, seed=seed))
        val_idx = None
    else:
        train_idx, val_idx, test_idx = split(y_usd.size, SplitSpec(NN_SPLIT, seed=seed))

    feat_nrm = fit_normalizer(X_raw[train_idx])
    tgt_nrm = fit_normalizer(y_usd[train_idx][:, None])
    Xn = normalize(feat_nrm, X_raw)
    yn = normalize(tgt_nrm, y_usd[:, None]).ravel()

    history = None
    if estimator == "svr":
        kernel = KernelSpec(st.kernel, st.rbf_gamma)
        base = SvrConfig(tolerance=st.svr_tolerance, max_iterations=st.svr_max_iterations)
        if st.svr_c is None or st.svr_epsilon is None:
            model, cfg = grid_search_svr(Xn[train_idx], yn[train_idx], kernel,
                                         base=base, seed=seed)
        else:
            cfg = SvrConfig(C=st.svr_c, epsilon=st.svr_epsilon,
                            tolerance=st.svr_tolerance,
                            max_iterations=st.svr_max_iterations)
            model = train_svr(Xn[train_idx], yn[train_idx], cfg, kernel)
        chosen = {"C": cfg.C, "epsilon": cfg.epsilon, "kernel": st.kernel}
        converged = model.converged
        train_pred = predict_svr(model, Xn[train_idx])
        test_pred = predict_svr(model, Xn[test_idx])
    else:
        model = init_network(Xn.shape[1], seed)
        model, history = train_lm(
            model,
            (Xn[train_idx], yn[train_idx]),
            (Xn[val_idx], yn[val_idx]),
            st.lm_config(seed),
            test=(Xn[test_idx], yn[test_idx]),
        )
        chosen = {"lambda0": st.lambda0, "patience": st.patience,
                  "best_epoch": history.best_epoch, "stop_reason": history.stop_reason}
        converged = history.stop_reason != "max_epochs"
        train_pred = forward(model, Xn[train_idx])
        test_pred = forward(model, Xn[test_idx])

    report_norm = evaluate(test_pred, yn[test_idx], scale="normalized")
    report_usd = evaluate(denormalize_target(tgt_nrm, test_pred), y_usd[test_idx], scale="usd")
    return RunResult(
        estimator=estimator, n=0, seed=seed,
        train_mse_norm=mse(train_pred, yn[train_idx]),
        report_norm=report_norm, report_usd=report_usd,
        converged=converged, chosen=chosen, model=model, history=history,
    )


def _houses_fingerprint(root: Path, records, features_used: bool) -> str:
    attr = next(
        p for p in [root / "HousesInfo.txt"] + sorted(root.glob("*.txt")) if p.is_file())
    h = hashlib.sha1(attr.read_bytes())
    scope = "attributes"
    if features_used:
        scope = "attributes+images"
        for rec in records:
            for role in ROLES:
                h.update(Path(rec.image_paths[role]).read_bytes())
    return f"{scope}:{h.hexdigest()[:16]}"


def prepare_inputs(dataset, n: int, st: Settings,
                   cache_dir=None) -> tuple[np.ndarray, np.ndarray, str]:
    """Load either a houses directory or a numeric delimited file.

    Directory mode assembles textual + visual vectors (using the extraction
    cache when n > 0); file mode is textual-only, so n must be 0.
    """
    p = Path(dataset)
    if p.is_dir():
        records = load_houses_dataset(p)
        features = None
        if n > 0:
            if cache_dir is None:
                raise ConfigError("cache_dir is required for n > 0 on an image dataset")
            features, _ = extract_features(records, st.surf_params(), cache_dir,
                                           st.max_features)
        X, y = assemble_matrix(records, features, n)
        return X, y, _houses_fingerprint(p, records, features is not None)
    if p.is_file():
        if n != 0:
            raise ConfigError(f"tabular dataset {p.name} has no images; use --n-features 0")
        ds = load_tabular_csv(p)
        return ds.rows, ds.targets, f"file:{_sha1(p.read_bytes())[:16]}"
    raise DataError(f"dataset {p} does not exist")


def _config_hash(doc: dict) -> str:
    return _sha1(json.dumps(doc, sort_keys=True).encode())[:16]


def run_train_eval(dataset, estimator: str, n: int, seed: int,
                   st: Settings = Settings(), cache_dir=None) -> RunResult:
    """One complete run on a dataset path, with a replayable manifest attached."""
    if not 0 <= n <= 15:
        raise ConfigError(f"n must be in [0, 15], got {n}")
    X, y, fingerprint = prepare_inputs(dataset, n, st, cache_dir)
    result = train_eval_matrices(X, y, estimator, seed, st)
    result.n = n
    replay_args = {
        "dataset": str(dataset),
        "cache_dir": str(cache_dir) if cache_dir is not None else None,
        "estimator": estimator,
        "n": n,
        "seed": seed,
        "settings": st.to_dict(),
    }
    result.manifest = {
        "format": "run-manifest/1",
        "software_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "dataset_fingerprint": fingerprint,
        "config_hash": _config_hash(replay_args),
        "chosen_hyperparameters": result.chosen,
        "split": {"svr": list(SVR_SPLIT), "nn": list(NN_SPLIT)}[estimator],
        "replay": replay_args,
    }
    return result


def replay(manifest: dict) -> RunResult:
    """Re-execute a run from its manifest; outputs match the original run."""
    if manifest.get("format") != "run-manifest/1":
        raise DataError(f"unsupported manifest: {manifest.get('format')!r}")
    args = manifest["replay"]
    return run_train_eval(
        args["dataset"], args["estimator"], args["n"], args["seed"],
        st=Settings.from_dict(args["settings"]),
        cache_dir=args["cache_dir"],
    )


@dataclass
class SweepConfig:
    n_values: tuple = tuple(range(16))
    estimators: tuple = ("svr", "nn")
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        self.n_values = tuple(int(v) for v in self.n_values)
        self.estimators = tuple(self.estimators)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.n_values:
            raise ConfigError("n_values must be non-empty")
        if any(not 0 <= v <= 15 for v in self.n_values):
            raise ConfigError(f"n values must lie in [0, 15], got {self.n_values}")
        bad = set(self.estimators) - {"svr", "nn"}
        if bad or not self.estimators:
            raise ConfigError(f"estimators must be a non-empty subset of svr/nn, got {self.estimators}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")


def run_sweep(dataset, cfg: SweepConfig, out_dir, cache_dir=None,
              st: Settings = Settings(), strict: bool = False) -> list[dict]:
    """One row per (estimator, n, seed); writes sweep.csv and the two charts.

    A failed point is recorded with NaN metrics and converged=False and the
    sweep continues; strict mode surfaces nonconvergence to the caller via
    the returned rows (the CLI maps it to an exit code).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for estimator in cfg.estimators:
        for n in cfg.n_values:
            for seed in cfg.seeds:
                row = {"estimator": estimator, "n": n, "seed": seed}
                try:
                    res = run_train_eval(dataset, estimator, n, seed, st, cache_dir)
                    row.update(
                        train_mse_norm=res.train_mse_norm,
                        test_mse_norm=res.report_norm.mse,
                        test_mse_usd=res.report_usd.mse,
                        r_squared=(math.nan if res.report_norm.r_squared is None
                                   else res.report_norm.r_squared),
                        r_value=(math.nan if res.report_norm.r_value is None
                                 else res.report_norm.r_value),
                        converged=res.converged,
                    )
                except (DataError, ConfigError) as exc:
                    if isinstance(exc, ConfigError):
                        raise
                    row.update(train_mse_norm=math.nan, test_mse_norm=math.nan,
                               test_mse_usd=math.nan, r_squared=math.nan,
                               r_value=math.nan, converged=False)
                    row["error"] = str(exc)
                rows.append(row)
    write_sweep_csv(out_dir / "sweep.csv", rows)
    plot_sweep(rows, out_dir)
    return rows


def write_sweep_csv(path, rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([
                row["estimator"], row["n"], row["seed"],
                repr(float(row["train_mse_norm"])), repr(float(row["test_mse_norm"])),
                repr(float(row["test_mse_usd"])), repr(float(row["r_squared"])),
                repr(float(row["r_value"])),
                "true" if row["converged"] else "false",
            ])


def read_sweep_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames) != SWEEP_COLUMNS:
            raise DataError(f"unexpected sweep.csv columns: {reader.fieldnames}")
        for rec in reader:
            rows.append({
                "estimator": rec["estimator"],
                "n": int(rec["n"]),
                "seed": int(rec["seed"]),
                "train_mse_norm": float(rec["train_mse_norm"]),
                "test_mse_norm": float(rec["test_mse_norm"]),
                "test_mse_usd": float(rec["test_mse_usd"]),
                "r_squared": float(rec["r_squared"]),
                "r_value": float(rec["r_value"]),
                "converged": rec["converged"] == "true",
            })
    return rows


def median_curves(rows: list[dict], metric: str) -> dict:
    """{estimator: (sorted n values, median metric per n)} ignoring NaN rows."""
    curves = {}
    for est in sorted({r["estimator"] for r in rows}):
        ns = sorted({r["n"] for r in rows if r["estimator"] == est})
        medians = []
        for n in ns:
            vals = [r[metric] for r in rows
                    if r["estimator"] == est and r["n"] == n and not math.isnan(r[metric])]
            medians.append(float(np.median(vals)) if vals else math.nan)
        curves[est] = (ns, medians)
    return curves


def plot_sweep(rows: list[dict], out_dir):
    """Static SVG line charts: test MSE vs n and R vs n, one line per estimator."""
    from matplotlib.figure import Figure

    out_dir = Path(out_dir)
    specs = [
        ("test_mse_norm", "Test MSE (normalized)", "sweep_mse.svg"),
        ("r_value", "Test R", "sweep_r.svg"),
    ]
    for metric, label, name in specs:
        fig = Figure(figsize=(6.4, 4.2))
        ax = fig.add_subplot(111)
        for est, (ns, med) in median_curves(rows, metric).items():
            ax.plot(ns, med, marker="o", label=est)
        ax.set_xlabel("visual features per image (n)")
        ax.set_ylabel(label)
        ax.set_title(f"{label} vs feature count (median across seeds)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / name)


def write_report(out_dir) -> Path:
    """Render plots and a small summary table from an existing sweep.csv."""
    out_dir = Path(out_dir)
    rows = read_sweep_csv(out_dir / "sweep.csv")
    plot_sweep(rows, out_dir)
    lines = ["# Sweep summary", "",
             "| estimator | best n (MSE) | median test MSE | best n (R) | median R |",
             "|---|---|---|---|---|"]
    for est, (ns, mse_med) in median_curves(rows, "test_mse_norm").items():
        _, r_med = median_curves(rows, "r_value")[est]
        finite_mse = [(m, n) for n, m in zip(ns, mse_med) if not math.isnan(m)]
        finite_r = [(r, n) for n, r in zip(ns, r_med) if not math.isnan(r)]
        if not finite_mse:
            continue
        best_mse, best_mse_n = min(finite_mse)
        if finite_r:
            best_r, best_r_n = max(finite_r)
            r_cells = f"{best_r_n} | {best_r:.5g}"
        else:
            r_cells = "- | -"
        lines.append(f"| {est} | {best_mse_n} | {best_mse:.6g} | {r_cells} |")
    path = out_dir / "summary.md"
    path.write_text("\n".join(lines) + "\n")
    return path
