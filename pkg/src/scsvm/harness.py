"""Experiment harness: synthetic data, multi-seed runs, summaries and reports.

A run splits the data per seed, standardizes with training statistics,
trains one algorithm, scores the test rows with ``sign(sum_i alpha_i K(z_i, x))``
and persists one trajectory CSV and one model file per seed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .baselines import pegasos, wolfe_deterministic
from .dataset import Dataset, DataError, Standardizer, load, split
from .kernel import KernelCapError
from .objective import decision_function, eval_full
from .solver import (ConfigError, SolverConfig, TrajectoryRecord, read_trajectory, solve,
                     write_trajectory)

log = logging.getLogger(__name__)

ALGORITHMS = ("scs", "pegasos", "wolfe")
SYNTHETIC_KINDS = ("blobs", "moons")


# ---------------------------------------------------------------------------
# synthetic data

def gen_synthetic(kind: str, m: int, noise: float = 1.0, seed: int = 0, *,
                  sep: float = 3.0, dim: int = 2) -> Dataset:
    """Balanced two-class data: Gaussian ``blobs`` or interleaved ``moons``.

    blobs: class centers at ``+-sep/2`` on the first axis in ``dim``
    dimensions, isotropic noise with standard deviation ``noise``.
    moons: two interleaved half circles in the plane plus Gaussian noise.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {SYNTHETIC_KINDS}")
    if m < 4:
        raise ValueError(f"need m >= 4, got {m}")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    labels = np.where(np.arange(m) < (m + 1) // 2, 1.0, -1.0)
    rng.shuffle(labels)
    pos = labels > 0
    if kind == "blobs":
        if dim < 1:
            raise ValueError("dim must be >= 1")
        X = noise * rng.standard_normal((m, dim))
        X[:, 0] += labels * sep / 2.0
    else:
        theta = rng.uniform(0.0, math.pi, size=m)
        X = np.empty((m, 2))
        X[pos, 0] = np.cos(theta[pos])
        X[pos, 1] = np.sin(theta[pos])
        X[~pos, 0] = 1.0 - np.cos(theta[~pos])
        X[~pos, 1] = 0.5 - np.sin(theta[~pos])
        X += noise * rng.standard_normal((m, 2))
    return Dataset(X, labels, np.arange(m))


def write_dataset(data: Dataset, path) -> None:
    """CSV with a header ``x1..xp,label``; labels written as -1/1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(data.n_features)] + ["label"])
        for x, y in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in x] + [str(int(y))])


# ---------------------------------------------------------------------------
# experiment configuration

@dataclass
class ExperimentSpec:
    dataset: Optional[str] = None
    format: str = "csv"
    label_column: Union[int, str] = -1
    algo: str = "scs"
    solver: SolverConfig = field(default_factory=SolverConfig)
    seeds: tuple = (0,)
    test_fraction: float = 0.2
    out: Optional[str] = None
    standardize: bool = True
    budget_mode: str = "wall"      # "wall" | "steps"
    lam: float = 1.0               # Pegasos regularization weight
    pegasos_steps: Optional[int] = None
    pegasos_record_every: Optional[int] = None
    workers: int = 1
    data: Optional[Dataset] = field(default=None, repr=False)  # in-memory alternative

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; expected one of {ALGORITHMS}")
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.budget_mode not in ("wall", "steps"):
            raise ConfigError(f"budget_mode must be 'wall' or 'steps', got {self.budget_mode!r}")
        if self.dataset is None and self.data is None:
            raise ConfigError("no dataset given")
        if not self.lam > 0:
            raise ConfigError("lam must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.pegasos_steps is not None and self.pegasos_steps < 1:
            raise ConfigError("pegasos_steps must be >= 1")

    def to_lines(self) -> list[str]:
        """Flat key=value lines that :func:`spec_from_options` reads back."""
        lines = []
        for f in fields(self):
            if f.name in ("solver", "data"):
                continue
            v = getattr(self, f.name)
            if f.name == "seeds":
                v = ",".join(str(s) for s in v)
            lines.append(f"{f.name}={_format_value(v)}")
        for k, v in self.solver.to_dict().items():
            lines.append(f"{k}={_format_value(v)}")
        return lines


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# key=value configuration

_ALIASES = {"gamma_tr": "gamma", "gamma_rbf": "rbf_gamma"}
_SPEC_FIELDS = {f.name: f for f in fields(ExperimentSpec) if f.name not in ("solver", "data")}
_SOLVER_FIELDS = {f.name: f for f in fields(SolverConfig)}
_SOLVER_HINTS = typing.get_type_hints(SolverConfig)
_SPEC_HINTS = typing.get_type_hints(ExperimentSpec)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    options = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        options[normalize_key(key)] = value
    return options


def normalize_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    return _ALIASES.get(key, key)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(name: str, text, hint):
    if not isinstance(text, str):
        return text
    args = typing.get_args(hint)
    optional = type(None) in args
    if optional and text.strip().lower() in ("none", ""):
        return None
    base = hint
    if optional:
        base = next(a for a in args if a is not type(None))
        if typing.get_origin(base) is Union:
            base = str
    if typing.get_origin(hint) is Union and not optional:
        base = str
    try:
        if base is bool:
            return _parse_bool(text)
        if base is int:
            return int(text)
        if base is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None
    return text


def parse_seeds(text) -> tuple:
    """``"0,1,2"``, ``"0-19"`` or a mix of both."""
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(part)])
        except ValueError:
            raise ConfigError(f"bad seed list {text!r}") from None
    if not seeds:
        raise ConfigError("empty seed list")
    return tuple(seeds)


def spec_from_options(options: dict, **extra) -> ExperimentSpec:
    """Build a spec from flat options (config file merged with flags)."""
    spec_kw, solver_kw = {}, {}
    for key, value in {**options, **extra}.items():
        key = normalize_key(key)
        if key == "seeds":
            spec_kw["seeds"] = parse_seeds(value)
        elif key == "label_column":
            spec_kw[key] = int(value) if isinstance(value, str) and _is_int(value) else value
        elif key in _SPEC_FIELDS:
            spec_kw[key] = _coerce(key, value, _SPEC_HINTS[key])
        elif key in _SOLVER_FIELDS:
            solver_kw[key] = _coerce(key, value, _SOLVER_HINTS[key])
        elif key == "data":
            spec_kw["data"] = value
        else:
            raise ConfigError(f"unknown option {key!r}")
    spec_kw["solver"] = SolverConfig(**solver_kw)
    return ExperimentSpec(**spec_kw)


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# models

@dataclass
class Model:
    support: np.ndarray
    alpha: np.ndarray
    gamma: float
    mean: np.ndarray
    scale: np.ndarray
    train_ids: np.ndarray
    test_ids: np.ndarray
    active: np.ndarray

    def scores(self, raw_features) -> np.ndarray:
        Z = (np.asarray(raw_features, dtype=np.float64) - self.mean) / self.scale
        return decision_function(self.support, self.alpha, Z, self.gamma)

    def predict(self, raw_features) -> np.ndarray:
        # ties go to the positive class
        return np.where(self.scores(raw_features) >= 0.0, 1.0, -1.0)

    def save(self, path) -> None:
        np.savez(path, support=self.support, alpha=self.alpha, gamma=np.float64(self.gamma),
                 mean=self.mean, scale=self.scale, train_ids=self.train_ids,
                 test_ids=self.test_ids, active=self.active)


def load_model(path) -> Model:
    with np.load(path) as z:
        return Model(z["support"], z["alpha"], float(z["gamma"]), z["mean"], z["scale"],
                     z["train_ids"], z["test_ids"], z["active"])


def accuracy(model: Model, data: Dataset, ids) -> float:
    """Test accuracy recomputed from a model and the raw loaded dataset."""
    pos = {int(i): r for r, i in enumerate(data.ids)}
    rows = np.array([pos[int(i)] for i in ids], dtype=np.int64)
    pred = model.predict(data.features[rows])
    return float(np.mean(pred == data.labels[rows]))


# ---------------------------------------------------------------------------
# runs

@dataclass
class SeedResult:
    seed: int
    status: str                    # "ok" | "N/A"
    accuracy: Optional[float] = None
    f_final: Optional[float] = None
    wall_s: Optional[float] = None
    iterations: Optional[int] = None
    reason: Optional[str] = None
    trajectory: list = field(default_factory=list, repr=False)
    trajectory_path: Optional[str] = None
    model_path: Optional[str] = None
    message: str = ""


@dataclass
class Summary:
    algo: str
    results: list

    @property
    def ok(self) -> list:
        return [r for r in self.results if r.status == "ok"]

    def _stat(self, attr):
        vals = np.array([getattr(r, attr) for r in self.ok], dtype=np.float64)
        if vals.size == 0:
            return None, None
        return float(vals.mean()), float(vals.std())

    def to_dict(self) -> dict:
        acc, f, t = self._stat("accuracy"), self._stat("f_final"), self._stat("wall_s")
        return {
            "algo": self.algo,
            "runs": len(self.results),
            "completed": len(self.ok),
            "status": "ok" if self.ok else "N/A",
            "accuracy_mean": acc[0], "accuracy_std": acc[1],
            "f_final_mean": f[0], "f_final_std": f[1],
            "wall_s_mean": t[0], "wall_s_std": t[1],
            "seeds": [{"seed": r.seed, "status": r.status, "accuracy": r.accuracy,
                       "f_final": r.f_final, "wall_s": r.wall_s, "iterations": r.iterations,
                       "reason": r.reason, "message": r.message} for r in self.results],
        }

    def text(self) -> str:
        d = self.to_dict()

        def fmt(mean, std, spec=".4f"):
            return "N/A" if mean is None else f"{mean:{spec}} +- {std:{spec}}"
        lines = [f"algorithm   {self.algo}",
                 f"runs        {d['completed']}/{d['runs']} completed",
                 f"accuracy    {fmt(d['accuracy_mean'], d['accuracy_std'])}",
                 f"f_S final   {fmt(d['f_final_mean'], d['f_final_std'], '.6g')}",
                 f"time (s)    {fmt(d['wall_s_mean'], d['wall_s_std'], '.3f')}"]
        for r in self.results:
            if r.status == "ok":
                lines.append(f"  seed {r.seed:>4}  acc {r.accuracy:.4f}  f_S {r.f_final:.8g}  "
                             f"{r.wall_s:.3f}s  {r.iterations} it ({r.reason})")
            else:
                lines.append(f"  seed {r.seed:>4}  N/A  {r.message}")
        return "\n".join(lines)


def _load_spec_data(spec: ExperimentSpec) -> Dataset:
    if spec.data is not None:
        return spec.data
    try:
        return load(spec.dataset, spec.format, spec.label_column)
    except FileNotFoundError as exc:
        raise DataError(f"dataset not found: {exc.filename}") from None


def _train(spec: ExperimentSpec, train: Dataset, seed: int):
    cfg = replace(spec.solver, seed=seed)
    if spec.budget_mode == "steps":
        cfg = replace(cfg, budget_s=None, record_time=False)
    if spec.algo == "scs":
        return solve(cfg, train)
    if spec.algo == "wolfe":
        return wolfe_deterministic(train, cfg)
    steps = spec.pegasos_steps
    if spec.budget_mode == "steps" and steps is None:
        steps = cfg.max_iters
    return pegasos(train, lam=spec.lam, seed=seed, max_steps=steps, budget_s=cfg.budget_s,
                   record_every=spec.pegasos_record_every, rbf_gamma=cfg.rbf_gamma,
                   record_time=cfg.record_time)


def run_seed(spec: ExperimentSpec, data: Dataset, seed: int) -> SeedResult:
    train, test = split(data, spec.test_fraction, seed)
    if spec.standardize:
        scaler = Standardizer.fit(train)
    else:
        scaler = Standardizer(np.zeros(data.n_features), np.ones(data.n_features))
    train_z, test_z = scaler.apply(train), scaler.apply(test)
    started = time.perf_counter()
    try:
        result = _train(spec, train_z, seed)
    except KernelCapError as exc:
        log.warning("seed %d: %s", seed, exc)
        return SeedResult(seed, "N/A", message=str(exc))
    wall = time.perf_counter() - started
    model = Model(train_z.features[result.active], np.asarray(result.alpha), result.gamma,
                  scaler.mean, scaler.scale, train.ids, test.ids, np.asarray(result.active))
    pred = np.where(decision_function(model.support, model.alpha, test_z.features,
                                      model.gamma) >= 0.0, 1.0, -1.0)
    acc = float(np.mean(pred == test_z.labels))
    f_final = eval_full(train_z.features, train_z.labels, result.active, result.alpha,
                        result.gamma)
    out = SeedResult(seed, "ok", acc, f_final, wall, result.iterations, result.reason,
                     result.trajectory)
    if spec.out is not None:
        base = Path(spec.out) / f"{spec.algo}_seed{seed}"
        out.trajectory_path = str(base) + ".csv"
        out.model_path = str(base) + "_model.npz"
        write_trajectory(result.trajectory, out.trajectory_path)
        model.save(out.model_path)
    return out


def run(spec: ExperimentSpec) -> Summary:
    """Train ``spec.algo`` once per seed and aggregate test accuracy, final
    full-sample objective and wall time."""
    data = _load_spec_data(spec)
    if spec.out is not None:
        out = Path(spec.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from None
        (out / "spec.txt").write_text("\n".join(spec.to_lines()) + "\n")
    if spec.workers == 1:
        results = [run_seed(spec, data, s) for s in spec.seeds]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(lambda s: run_seed(spec, data, s), spec.seeds))
    summary = Summary(spec.algo, results)
    if spec.out is not None:
        out = Path(spec.out)
        (out / f"{spec.algo}_summary.json").write_text(
            json.dumps(summary.to_dict(), indent=2) + "\n")
        (out / f"{spec.algo}_summary.txt").write_text(summary.text() + "\n")
    return summary


# ---------------------------------------------------------------------------
# trajectory comparison

@dataclass
class ReportTable:
    names: list
    rows: list  # (segment, index, value-or-"" per name)

    def header(self) -> list:
        return ["segment", "index"] + list(self.names)

    def to_csv(self, path=None) -> str:
        lines = [",".join(self.header())]
        lines += [",".join(str(c) for c in row) for row in self.rows]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _objective_column(records) -> list[str]:
    return [repr(float(r.f_full)) for r in records if r.f_full is not None]


def compare_report(trajectories, n: int = 50) -> ReportTable:
    """First-``n`` and last-``n`` logged full-sample objectives, side by side.

    ``trajectories`` is a list of ``(name, records)`` pairs or of paths to
    trajectory CSV files (named by file stem). Rows are keyed by position
    within each segment; shorter trajectories leave blank cells.
    """
    if not trajectories:
        raise ValueError("compare_report needs at least one trajectory")
    names, cols = [], []
    for item in trajectories:
        if isinstance(item, (str, Path)):
            name, records = Path(item).stem, read_trajectory(item)
        else:
            name, records = item
        names.append(name)
        cols.append(_objective_column(records))
    rows = []
    for segment in ("first", "last"):
        parts = [c[:n] if segment == "first" else c[-n:] for c in cols]
        for i in range(max((len(p) for p in parts), default=0)):
            rows.append([segment, i] + [p[i] if i < len(p) else "" for p in parts])
    return ReportTable(names, rows)
