"""Experiment orchestration: toy data, the CV benchmark protocol, and reports.

The protocol: per trial, regroup the training set into fixed-size bags whose
positive fractions become the only supervision; run k-fold cross-validation
over bags; inside each fold pick hyper-parameters by a 2-fold inner split
scored with bag-level error; retrain on the full outer-training bags and
score instance accuracy on the held-out instances.  Bags, folds, and seeds
are derived from the experiment seed alone (never from the method name), so
every method sees identical partitions and comparisons are paired.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alternating import AlterParams, train_alter
from .convex import ConvParams, train_conv
from .data import (
    BagPartition,
    ConfigError,
    Dataset,
    generate_bags,
    kfold_over_bags,
    parse_sparse_dataset,
    restrict_to_bags,
    scale_attributes,
)
from .invcal import InvCalParams, train_invcal
from .kernels import KernelConfig

METHODS = ("alter", "conv", "invcal")

# fixed settings for the built-in two-bag dataset (always linear kernel)
TOY_PARAMS = {
    "alter": {"C": 1.0, "Cp": 10.0},
    "conv": {"C": 1.0, "eps": 0.0},
    "invcal": {"Cp": 1.0, "eps": 0.0},
}


# ---------------------------------------------------------------- metrics

def bag_error(pred_labels, part: BagPartition) -> float:
    """Sum over bags of |predicted positive fraction - given fraction|."""
    pred = np.asarray(pred_labels).ravel()
    if pred.shape[0] != part.n:
        raise ValueError(f"{pred.shape[0]} predictions for {part.n} instances")
    total = 0.0
    for b, p in zip(part.bags, part.proportions):
        total += abs(np.mean(pred[b] == 1) - p)
    return float(total)


def instance_accuracy(pred, truth) -> float:
    """Fraction of exact matches between two label vectors."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    return float(np.mean(pred == truth))


# ---------------------------------------------------------------- toy data

def make_toy_dataset() -> tuple[Dataset, BagPartition]:
    """Fixed 20-point, two-bag construction where bag means mislead.

    Bag 1 (p=0.6): six positives near x1=+1, four negatives near x1=-4,
    so its mean sits in the negative half-plane.  Bag 2 (p=0.4): four
    positives near x1=+4, six negatives near x1=-1, mean in the positive
    half-plane.  The classes themselves are exactly separated by x1=0, so
    any bag-mean summary points the wrong way while per-instance labeling
    can be perfect.
    """
    x1 = np.array(
        [1.0] * 6 + [-4.0] * 4 + [4.0] * 4 + [-1.0] * 6
    )
    x2 = np.array(
        [0.31, -0.82, 1.24, -0.45, 0.09, -1.11, 0.52, -0.27, 0.88, -0.64,
         0.17, -0.93, 0.41, -0.08, 1.02, -0.36, 0.73, -0.55, 0.26, -1.18]
    )
    features = np.column_stack([x1, x2])
    labels = np.where(x1 > 0, 1.0, -1.0)
    part = BagPartition(
        (tuple(range(10)), tuple(range(10, 20))), (0.6, 0.4), 20
    )
    return Dataset(features, labels), part


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    """Benchmark settings: dataset, methods, grids, protocol knobs."""

    dataset: str = "toy"
    methods: tuple = METHODS
    kernel: str = "linear"
    gamma_grid: tuple = (0.01, 0.1, 1.0)
    bag_sizes: tuple = (2,)
    folds: int = 5
    trials: int = 5
    c_grid: tuple = (0.1, 1.0, 10.0)
    cp_grid: tuple = (1.0, 10.0, 100.0)
    eps_grid: tuple = (0.0, 0.01, 0.1)
    restarts: int = 10
    seed: int = 0
    max_points: int = 20_000
    jobs: int = 1
    with_timings: bool = False

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; pick from {list(METHODS)}")
        if self.kernel not in ("linear", "rbf"):
            raise ConfigError(f"kernel must be linear or rbf, got {self.kernel!r}")
        for name in ("gamma_grid", "c_grid", "cp_grid"):
            vals = getattr(self, name)
            if not vals or any(v <= 0 for v in vals):
                raise ConfigError(f"{name} must be nonempty and positive")
        if not self.eps_grid or any(e < 0 for e in self.eps_grid):
            raise ConfigError("eps_grid must be nonempty and nonnegative")
        if not self.bag_sizes or any(int(b) < 1 for b in self.bag_sizes):
            raise ConfigError("bag_sizes must be nonempty positive integers")
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.trials < 1 or self.restarts < 1 or self.jobs < 1:
            raise ConfigError("trials, restarts, and jobs must be positive")
        if self.max_points < 1:
            raise ConfigError("max_points must be positive")

    def as_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = list(v) if isinstance(v, tuple) else v
        return out


_CONFIG_KEYS = {
    "dataset": ("dataset", str),
    "method": ("methods", "methods"),
    "methods": ("methods", "methods"),
    "kernel": ("kernel", str),
    "gamma": ("gamma_grid", "floats"),
    "bag_size": ("bag_sizes", "ints"),
    "bag_sizes": ("bag_sizes", "ints"),
    "folds": ("folds", int),
    "trials": ("trials", int),
    "C": ("c_grid", "floats"),
    "Cp": ("cp_grid", "floats"),
    "eps": ("eps_grid", "floats"),
    "restarts": ("restarts", int),
    "seed": ("seed", int),
    "max_points": ("max_points", int),
    "jobs": ("jobs", int),
    "with_timings": ("with_timings", "bool"),
}


def parse_config(text: str) -> ExperimentConfig:
    """Read a flat key = value config; '#' starts a comment.

    Grid-valued keys (C, Cp, eps, gamma, bag_size, method) take
    comma-separated lists.
    """
    kwargs = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        field_name, kind = _CONFIG_KEYS[key]
        try:
            if kind is str:
                parsed = val
            elif kind is int:
                parsed = int(val)
            elif kind == "bool":
                if val.lower() not in ("true", "false", "0", "1"):
                    raise ValueError(val)
                parsed = val.lower() in ("true", "1")
            elif kind == "floats":
                parsed = tuple(float(v) for v in val.split(","))
            elif kind == "ints":
                parsed = tuple(int(v) for v in val.split(","))
            else:  # methods
                parsed = tuple(v.strip() for v in val.split(","))
        except ValueError as exc:
            raise ConfigError(f"line {ln}: bad value for {key}: {val!r}") from exc
        kwargs[field_name] = parsed
    return ExperimentConfig(**kwargs)


def method_grid(cfg: ExperimentConfig, method: str) -> list:
    """Hyper-parameter grid points for one method, in tuning-priority order.

    The box-penalty grid (c_grid) doubles as the baseline's penalty grid;
    cp_grid is the proportion-term penalty used by the alternating trainer.
    With an rbf kernel every point is crossed with gamma_grid (innermost).
    """
    gammas = cfg.gamma_grid if cfg.kernel == "rbf" else (None,)
    points = []
    if method == "alter":
        base = [{"C": c, "Cp": cp} for c in cfg.c_grid for cp in cfg.cp_grid]
    elif method == "conv":
        base = [{"C": c, "eps": e} for c in cfg.c_grid for e in cfg.eps_grid]
    elif method == "invcal":
        base = [{"Cp": c, "eps": e} for c in cfg.c_grid for e in cfg.eps_grid]
    else:
        raise ConfigError(f"unknown method {method!r}")
    for point in base:
        for g in gammas:
            points.append(dict(point, gamma=g) if g is not None else dict(point))
    return points


# ---------------------------------------------------------------- training

def _kernel_for(point: dict, kind: str) -> KernelConfig:
    return KernelConfig(kind, gamma=point.get("gamma"))


def _fit_alter(ds, part, point, job):
    params = AlterParams(
        C=point["C"],
        Cp=point["Cp"],
        kernel=_kernel_for(point, job["kernel"]),
        restarts=job["restarts"],
        seed=job["seed"],
    )
    return train_alter(ds, part, params)


def _fit_conv(ds, part, point, job):
    params = ConvParams(
        C=point["C"], eps=point["eps"], kernel=_kernel_for(point, job["kernel"])
    )
    return train_conv(ds, part, params)


def _fit_invcal(ds, part, point, job):
    params = InvCalParams(
        Cp=point["Cp"], eps=point["eps"], kernel=_kernel_for(point, job["kernel"])
    )
    return train_invcal(ds, part, params)


# looked up at call time so tests can wrap entries to audit what reaches them
TRAINERS = {"alter": _fit_alter, "conv": _fit_conv, "invcal": _fit_invcal}


def _run_fold(job: dict) -> dict:
    """Tune on the inner split, retrain, and score one outer fold."""
    start = time.perf_counter()
    fit = TRAINERS[job["method"]]
    best_idx = 0
    best_err = np.inf
    for gi, point in enumerate(job["grid"]):
        err = 0.0
        for fit_ds, fit_part, val_x, val_part in job["inner"]:
            model = fit(fit_ds, fit_part, point, job)
            err += bag_error(model.predict(val_x), val_part)
        if err < best_err:  # ties keep the earliest grid point
            best_idx, best_err = gi, err
    chosen = job["grid"][best_idx]
    model = fit(job["train_ds"], job["train_part"], chosen, job)
    acc = instance_accuracy(model.predict(job["test_x"]), job["test_truth"])
    return {
        "method": job["method"],
        "bag_size": job["bag_size"],
        "trial": job["trial"],
        "fold": job["fold"],
        "accuracy": acc,
        "chosen": chosen,
        "tuning_error": float(best_err) if job["inner"] else 0.0,
        "seconds": time.perf_counter() - start,
    }


def _stream(*parts) -> np.random.Generator:
    return np.random.default_rng(list(parts))


def _fold_payloads(cfg, method, data, part, fold, bag_size, trial) -> dict:
    train_ds, train_part, _ = restrict_to_bags(data, part, fold.train_bags)
    test_ds, _, _ = restrict_to_bags(data, part, fold.test_bags)
    inner = []
    if train_part.n_bags >= 2:
        order = _stream(cfg.seed, 17, bag_size, trial, fold.fold).permutation(
            train_part.n_bags
        )
        halves = np.array_split(order, 2)
        for h in (0, 1):
            val_ids = np.sort(halves[h])
            fit_ids = np.sort(halves[1 - h])
            fit_ds, fit_part, _ = restrict_to_bags(train_ds, train_part, fit_ids)
            val_ds, val_part, _ = restrict_to_bags(train_ds, train_part, val_ids)
            inner.append(
                (fit_ds.without_labels(), fit_part, val_ds.features, val_part)
            )
    seed = int(_stream(cfg.seed, 19, bag_size, trial, fold.fold).integers(2**31))
    return {
        "method": method,
        "kernel": cfg.kernel,
        "grid": method_grid(cfg, method),
        "inner": inner,
        "train_ds": train_ds.without_labels(),
        "train_part": train_part,
        "test_x": test_ds.features,
        "test_truth": test_ds.labels,
        "restarts": cfg.restarts,
        "seed": seed,
        "bag_size": bag_size,
        "trial": trial,
        "fold": fold.fold,
    }


def load_experiment_dataset(
    dataset: str, max_points: int = 20_000, seed: int = 0
) -> Dataset:
    """Parse, label-check, subsample to max_points, and scale to [-1, 1]."""
    path = Path(dataset)
    if not path.exists():
        raise ConfigError(f"dataset file not found: {dataset}")
    ds = parse_sparse_dataset(path)
    if ds.labels is None:
        raise ConfigError(f"dataset {dataset} has no labels")
    if ds.n > max_points:
        keep = np.sort(
            _stream(seed, 23).choice(ds.n, size=max_points, replace=False)
        )
        ds = Dataset(ds.features[keep], ds.labels[keep], name=ds.name)
    return scale_attributes(ds)


def _toy_payloads(cfg: ExperimentConfig) -> list:
    data, part = make_toy_dataset()
    bag_size = int(part.bag_sizes()[0])
    payloads = []
    for method in cfg.methods:
        for trial in range(cfg.trials):
            seed = int(_stream(cfg.seed, 19, bag_size, trial, 0).integers(2**31))
            payloads.append(
                {
                    "method": method,
                    "kernel": "linear",
                    "grid": [dict(TOY_PARAMS[method])],
                    "inner": [],
                    "train_ds": data.without_labels(),
                    "train_part": part,
                    "test_x": data.features,
                    "test_truth": data.labels,
                    "restarts": cfg.restarts,
                    "seed": seed,
                    "bag_size": bag_size,
                    "trial": trial,
                    "fold": 0,
                }
            )
    return payloads


def _aggregate(records) -> dict:
    """Per (method, bag size): mean and std (ddof=1) over per-trial fold means."""
    cells = {}
    for r in records:
        cells.setdefault((r["method"], r["bag_size"]), {}).setdefault(
            r["trial"], []
        ).append(r["accuracy"])
    out = {}
    for (method, bag_size), trials in sorted(cells.items()):
        means = np.array([np.mean(trials[t]) for t in sorted(trials)])
        std = float(np.std(means, ddof=1)) if means.size > 1 else 0.0
        out.setdefault(method, {})[str(bag_size)] = {
            "mean": float(np.mean(means)),
            "std": std,
        }
    return out


@dataclass(frozen=True)
class ExperimentResult:
    """Per-fold records plus redundant aggregates and the config snapshot."""

    config: dict
    records: tuple
    aggregates: dict

    def to_json(self) -> str:
        records = []
        for r in self.records:
            r = dict(r)
            if not self.config.get("with_timings"):
                r.pop("seconds", None)
            records.append(r)
        payload = {
            "config": self.config,
            "aggregates": self.aggregates,
            "records": records,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        """Aggregate table: one row per method, one column per bag size."""
        sizes = sorted({int(b) for m in self.aggregates.values() for b in m})
        lines = ["method," + ",".join(str(b) for b in sizes)]
        for method in self.config["methods"]:
            if method not in self.aggregates:
                continue
            row = [method]
            for b in sizes:
                cell = self.aggregates[method].get(str(b))
                row.append(
                    f"{100 * cell['mean']:.2f}±{100 * cell['std']:.2f}"
                    if cell
                    else ""
                )
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full protocol for every (method, bag size, trial, fold).

    The built-in "toy" dataset skips bag regeneration and cross-validation:
    each method trains once per trial on the fixed two-bag construction with
    its canonical settings and is scored on the training instances.
    """
    if cfg.dataset == "toy":
        payloads = _toy_payloads(cfg)
    else:
        data = load_experiment_dataset(cfg.dataset, cfg.max_points, cfg.seed)
        payloads = []
        for bag_size in cfg.bag_sizes:
            for trial in range(cfg.trials):
                part = generate_bags(
                    data, bag_size, _stream(cfg.seed, 11, bag_size, trial)
                )
                folds = kfold_over_bags(
                    part, cfg.folds, _stream(cfg.seed, 13, bag_size, trial)
                )
                for method in cfg.methods:
                    for fold in folds:
                        payloads.append(
                            _fold_payloads(
                                cfg, method, data, part, fold, bag_size, trial
                            )
                        )
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_run_fold, payloads))
    else:
        records = [_run_fold(p) for p in payloads]
    records.sort(key=lambda r: (r["method"], r["bag_size"], r["trial"], r["fold"]))
    return ExperimentResult(
        config=cfg.as_dict(),
        records=tuple(records),
        aggregates=_aggregate(records),
    )
