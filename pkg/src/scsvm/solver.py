"""Stochastic conjugate subgradient (SCS) driver for kernel SVM training.

Each iteration takes a conjugate subgradient direction on the current
sampled objective, line-searches it inside the radius ``delta``, grows the
sample, and accepts the candidate only when its decrease on the grown
sample is matched by the decrease on an independent validation draw.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .dataset import Dataset, SampleStream, ValidationSampler
from .direction import min_norm_direction, pad
from .kernel import DEFAULT_CAP, GrowingKernel, KernelCapError, default_gamma
from .linesearch import LineSearchParams, search
from .objective import SampledObjective, eval_full

log = logging.getLogger(__name__)

TRAJECTORY_FIELDS = ("iteration", "sample_size", "f_sampled", "f_full", "dir_norm",
                     "delta", "step", "accepted", "vacuous_accept", "elapsed_ms")

# tracked train-by-active kernel block is kept only below this many entries
_TRACK_LIMIT = 30_000_000


class ConfigError(ValueError):
    pass


def min_sample_size(epsilon: float, kappa: float, delta: float, big_m: float) -> int:
    """Sample size making the sampled objective a kappa*delta^2 approximation
    with probability ``1 - epsilon``:

        ceil(-8 ln(epsilon / 2) (M + 1)^2 / (kappa^2 delta^4))
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not (kappa > 0 and delta > 0 and big_m > 0):
        raise ValueError("kappa, delta and big_m must be positive")
    return math.ceil(sample_size_bound(epsilon, kappa, delta, big_m))


def sample_size_bound(epsilon, kappa, delta, big_m) -> float:
    """The real-valued bound inside :func:`min_sample_size`."""
    # plain products rather than pow(): scaling delta by 2 then scales the
    # result by exactly 1/16
    d2 = delta * delta
    return -8.0 * math.log(epsilon / 2.0) * (big_m + 1.0) ** 2 / (kappa * kappa * (d2 * d2))


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-3
    delta0: float = 1e-3
    delta_min: float = 1e-4
    delta_max: float = 1.0
    eta1: float = 0.5
    eta2: float = 10.0
    gamma: float = 2.0            # trust factor for delta updates
    kappa: float = 10.0
    big_m: float = 10.0
    n: int = 2
    m1: float = 0.3
    m2: float = 0.25
    max_bisections: int = 60
    initial_sample: int = 32
    growth: str = "geometric"     # "geometric" | "theory" | "none"
    growth_rate: float = 0.1
    sample_confidence: float = 0.1  # epsilon of the sample-size bound in theory mode
    max_iters: int = 10_000
    budget_s: Optional[float] = 300.0
    seed: int = 0
    rbf_gamma: Optional[float] = None
    kernel_cap: int = DEFAULT_CAP
    auto_delta_max: bool = False
    c1: Optional[float] = None
    log_stride: int = 1
    validation: str = "cross"     # "cross" | "literal"
    zero_step: str = "shrink"     # "shrink" | "literal"
    record_time: bool = True

    def __post_init__(self):
        if self.auto_delta_max:
            object.__setattr__(self, "delta_max", self.epsilon / self.zeta)
        checks = [
            (self.epsilon > 0, "epsilon must be positive"),
            (0 < self.delta_min < self.delta0 < self.delta_max,
             f"need delta_min < delta0 < delta_max, got {self.delta_min}, "
             f"{self.delta0}, {self.delta_max}"),
            (0 < self.eta1 < 1, "eta1 must lie in (0, 1)"),
            (self.eta2 > 0, "eta2 must be positive"),
            (self.gamma > 1, "gamma must exceed 1"),
            (self.kappa > 0 and self.big_m > 0, "kappa and big_m must be positive"),
            (self.initial_sample >= 1, "initial_sample must be >= 1"),
            (self.growth in ("geometric", "theory", "none"), f"unknown growth {self.growth!r}"),
            (self.growth_rate > 0, "growth_rate must be positive"),
            (0 < self.sample_confidence < 1, "sample_confidence must lie in (0, 1)"),
            (self.max_iters >= 0, "max_iters must be nonnegative"),
            (self.budget_s is None or self.budget_s > 0, "budget_s must be positive"),
            (self.log_stride >= 1, "log_stride must be >= 1"),
            (self.validation in ("cross", "literal"), f"unknown validation {self.validation!r}"),
            (self.zero_step in ("shrink", "literal"), f"unknown zero_step {self.zero_step!r}"),
            (self.rbf_gamma is None or self.rbf_gamma > 0, "rbf_gamma must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            self.line_search(self.delta0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def C1(self) -> float:
        return self.c1 if self.c1 is not None else self.m1 / (2 * self.n)

    @property
    def zeta(self) -> float:
        return max(4 * self.n * self.kappa, self.eta2,
                   4 * self.kappa / (self.C1 * (1 - self.eta1)))

    def line_search(self, delta: float) -> LineSearchParams:
        return LineSearchParams(delta=delta, m1=self.m1, m2=self.m2, n=self.n,
                                max_bisections=self.max_bisections)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def to_dict(self):
        return asdict(self)


@dataclass
class TrajectoryRecord:
    iteration: int
    sample_size: int
    f_sampled: Optional[float]
    f_full: Optional[float]
    dir_norm: Optional[float]
    delta: Optional[float]
    step: Optional[float]
    accepted: bool
    vacuous_accept: bool = False
    elapsed_ms: Optional[float] = None

    def row(self) -> list:
        def num(v):
            return "" if v is None else repr(float(v))
        return [str(self.iteration), str(self.sample_size), num(self.f_sampled),
                num(self.f_full), num(self.dir_norm), num(self.delta), num(self.step),
                str(int(self.accepted)), str(int(self.vacuous_accept)),
                "" if self.elapsed_ms is None else f"{self.elapsed_ms:.3f}"]


def write_trajectory(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_FIELDS)
        for r in records:
            w.writerow(r.row())


def read_trajectory(path) -> list[TrajectoryRecord]:
    def num(v):
        return None if v == "" else float(v)
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrajectoryRecord(
                int(row["iteration"]), int(row["sample_size"]), num(row["f_sampled"]),
                num(row["f_full"]), num(row["dir_norm"]), num(row["delta"]),
                num(row["step"]), row["accepted"] == "1", row["vacuous_accept"] == "1",
                num(row["elapsed_ms"])))
    return out


@dataclass
class SolverState:
    incumbent: np.ndarray
    prev_direction: np.ndarray
    delta: float
    kernel: GrowingKernel
    stream: SampleStream
    validator: Optional[ValidationSampler]
    objective: SampledObjective
    labels: np.ndarray
    iteration: int = 0
    trajectory: list = field(default_factory=list)
    dir_norm: float = math.inf
    fixed_sample: bool = False
    started: float = field(default_factory=time.perf_counter)
    last_search: object = None
    cached_Qa: Optional[np.ndarray] = None  # gram @ incumbent on the current sample

    @property
    def active(self) -> np.ndarray:
        return self.kernel.active


@dataclass
class SolveResult:
    alpha: np.ndarray
    active: np.ndarray
    trajectory: list
    reason: str
    gamma: float
    iterations: int

    @property
    def support(self) -> np.ndarray:
        return self.active


def initial_state(cfg: SolverConfig, data: Dataset, *, sampling: bool = True) -> SolverState:
    """Draw S_0, build its kernel, and set alpha_0 = 0 with d_0 = -g_0."""
    gamma = cfg.rbf_gamma if cfg.rbf_gamma is not None else default_gamma(data.features)
    m = data.n_samples
    track = m * min(m, cfg.kernel_cap) <= _TRACK_LIMIT
    kernel = GrowingKernel(data.features, gamma, cap=cfg.kernel_cap, track_rows=track)
    # independent child seeds for the training stream and the validation draws
    s_seed, t_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    stream = SampleStream(np.arange(m), int(s_seed.generate_state(1)[0]))
    if sampling:
        first = stream.draw_next(min(cfg.initial_sample, m, cfg.kernel_cap))
        validator = ValidationSampler(np.arange(m), int(t_seed.generate_state(1)[0]))
    else:
        if m > cfg.kernel_cap:
            raise KernelCapError(f"full-SAA infeasible: {m} rows exceed kernel cap "
                                 f"{cfg.kernel_cap}")
        first = np.arange(m)
        stream.draw_next(m)
        validator = None
    kernel.extend(first)
    labels = data.labels[kernel.active]
    obj = SampledObjective(kernel.gram, labels, cfg.big_m)
    alpha0 = np.zeros(kernel.size)
    g0 = obj.subgradient(alpha0)
    return SolverState(incumbent=alpha0, prev_direction=-g0, delta=cfg.delta0,
                       kernel=kernel, stream=stream, validator=validator,
                       objective=obj, labels=labels, dir_norm=float(np.linalg.norm(g0)))


def _growth_count(state: SolverState, cfg: SolverConfig) -> int:
    size = state.kernel.size
    if cfg.growth == "none":
        return 0
    if cfg.growth == "theory":
        target = min_sample_size(cfg.sample_confidence, cfg.kappa, state.delta, cfg.big_m)
        return max(0, target - size)
    return max(1, math.ceil(cfg.growth_rate * size))


def _grow(state: SolverState, cfg: SolverConfig, data: Dataset) -> None:
    if state.fixed_sample or state.validator is None or state.stream.exhausted:
        return
    count = min(_growth_count(state, cfg), cfg.kernel_cap - state.kernel.size)
    if count <= 0:
        if state.kernel.size >= cfg.kernel_cap:
            log.warning("kernel cap %d reached; continuing with a fixed sample", cfg.kernel_cap)
            state.fixed_sample = True
        return
    new = state.stream.draw_next(count)
    try:
        state.kernel.extend(new)
    except KernelCapError:
        log.warning("kernel growth failed at cap %d; continuing with a fixed sample",
                    cfg.kernel_cap)
        state.fixed_sample = True
        return
    state.labels = data.labels[state.kernel.active]
    state.objective = SampledObjective(state.kernel.gram, state.labels, cfg.big_m)


def _hinge(labels, scores) -> float:
    return float(np.maximum(0.0, 1.0 - labels * scores).sum() / scores.shape[0])


def _validation_values(state: SolverState, cfg: SolverConfig, data: Dataset, B, quad,
                       QB=None):
    """The independent estimate at each column of ``B``.

    Returns ``(values, scores)``; ``scores`` is ``K(all rows, S) @ B`` when the
    kernel tracks full rows (it then also serves the full-sample objective),
    otherwise None.
    """
    if state.validator is None:
        return None, None
    T = state.validator.draw(state.kernel.size)
    labels_t = data.labels[T]
    if cfg.validation == "literal":
        # square kernel on T with alpha read as coefficients on T's points
        lit = GrowingKernel(data.features, state.kernel.gamma).extend(T)
        vals, _, _ = SampledObjective(lit.gram, labels_t, cfg.big_m).values(B)
        return vals, None
    scores = None
    if QB is not None and state.kernel.size == data.n_samples:
        # S covers every row, so the tracked block is the Gram matrix with its
        # rows permuted back to dataset order
        scores = np.empty_like(QB)
        scores[state.kernel.active] = QB
        cross_b = scores[T]
    elif state.kernel._tracked is not None:
        scores = state.kernel._tracked @ B
        cross_b = scores[T]
    else:
        cross_b = state.kernel.cross_rows(T) @ B
    vals = np.array([quad[j] + _hinge(labels_t, cross_b[:, j]) for j in range(B.shape[1])])
    return vals, scores


def full_objective(state: SolverState, data: Dataset, alpha=None) -> float:
    alpha = state.incumbent if alpha is None else alpha
    if state.kernel._tracked is not None:
        quad = 0.5 * float(alpha @ (state.kernel.gram @ alpha))
        return quad + _hinge(data.labels, state.kernel._tracked @ alpha)
    return eval_full(data.features, data.labels, state.active, alpha, state.kernel.gamma)


def step(state: SolverState, cfg: SolverConfig, data: Dataset) -> SolverState:
    """One outer iteration; mutates and returns ``state``."""
    state.iteration += 1
    obj_prev = state.objective
    alpha_hat = state.incumbent
    delta_prev = state.delta

    f_hat0, g = obj_prev.value_and_subgradient(alpha_hat, state.cached_Qa)
    d, _ = min_norm_direction(state.prev_direction, g)
    d_norm = float(np.linalg.norm(d))
    if d_norm > 0:
        ls = search(obj_prev, alpha_hat, d, cfg.line_search(delta_prev), f0=f_hat0,
                    Qx=state.cached_Qa)
        t = ls.t
    else:
        ls, t = None, 0.0
    state.last_search = ls
    candidate = alpha_hat + t * d

    _grow(state, cfg, data)
    size = state.kernel.size
    B = np.column_stack([pad(candidate, size), pad(alpha_hat, size)])
    d = pad(d, size)

    obj = state.objective
    (f_new, f_old), quad, QB = obj.values(B)
    v, scores = _validation_values(state, cfg, data, B, quad, QB)
    v_new, v_old = (f_new, f_old) if v is None else v
    accepted = (f_new - f_old <= cfg.eta1 * (v_new - v_old)) and d_norm > cfg.eta2 * delta_prev
    if t == 0.0 and cfg.zero_step == "shrink":
        # a collapsed search is an unsuccessful iteration; growing delta would
        # only repeat the collapse along the same direction
        accepted = False
    j = 0 if accepted else 1
    state.incumbent = B[:, j].copy()
    state.cached_Qa = QB[:, j].copy()
    if accepted:
        state.delta = min(cfg.gamma * delta_prev, cfg.delta_max)
    else:
        state.delta = max(delta_prev / cfg.gamma, cfg.delta_min)
    f_sampled = f_new if accepted else f_old
    state.prev_direction = d
    state.dir_norm = d_norm

    f_full = None
    if state.iteration % cfg.log_stride == 0:
        if state.validator is None and size == data.n_samples:
            f_full = f_sampled
        elif scores is not None:
            f_full = quad[j] + _hinge(data.labels, scores[:, j])
        else:
            f_full = full_objective(state, data)
    elapsed = (time.perf_counter() - state.started) * 1e3 if cfg.record_time else None
    state.trajectory.append(TrajectoryRecord(
        iteration=state.iteration, sample_size=size, f_sampled=f_sampled, f_full=f_full,
        dir_norm=d_norm, delta=state.delta, step=t, accepted=accepted,
        vacuous_accept=bool(accepted and v_new - v_old > 0), elapsed_ms=elapsed))
    return state


def converged(state: SolverState, cfg: SolverConfig) -> bool:
    return state.dir_norm <= cfg.epsilon and state.delta <= cfg.delta_min


def run(state: SolverState, cfg: SolverConfig, data: Dataset) -> SolveResult:
    deadline = None if cfg.budget_s is None else state.started + cfg.budget_s
    reason = "max-iters"
    while state.iteration < cfg.max_iters:
        if converged(state, cfg):
            reason = "converged"
            break
        if deadline is not None and time.perf_counter() >= deadline:
            reason = "budget"
            break
        step(state, cfg, data)
    else:
        if converged(state, cfg):
            reason = "converged"
    log.info("solver stopped after %d iterations (%s), |S|=%d, ||d||=%.3g, delta=%.3g",
             state.iteration, reason, state.kernel.size, state.dir_norm, state.delta)
    return SolveResult(state.incumbent.copy(), state.active, state.trajectory, reason,
                       state.kernel.gamma, state.iteration)


def solve(cfg: SolverConfig, data: Dataset) -> SolveResult:
    """Train with adaptive sampling until ``||d|| <= epsilon`` and
    ``delta <= delta_min``, or a budget runs out."""
    return run(initial_state(cfg, data), cfg, data)


def deterministic_config(cfg: SolverConfig) -> SolverConfig:
    return replace(cfg, growth="none")
