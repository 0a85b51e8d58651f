"""Comparison baselines: kernelized Pegasos and deterministic Wolfe on the full sample.

Pegasos keeps an integer count per training row. At step ``t`` it samples a
row ``i`` and, when ``w_i / (lam t) * sum_j counts_j w_j K(z_j, z_i) < 1``,
increments ``counts_i``. The classifier after ``T`` steps is
``1 / (lam T) * sum_j counts_j w_j K(z_j, .)``, which maps onto the SVM
coefficients as ``alpha_j = counts_j w_j / (lam T)``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset import Dataset
from .kernel import KernelCapError, default_gamma, rbf_matrix
from .solver import SolverConfig, SolveResult, TrajectoryRecord, initial_state, run

log = logging.getLogger(__name__)


@dataclass
class PegasosState:
    """``t`` is the index of the next step; after ``T`` steps ``t == T + 1``.

    ``scores[i] = sum_j counts_j w_j K(z_j, z_i)`` is kept current for every
    training row so that a step costs one kernel column per increment.
    """

    counts: np.ndarray
    t: int = 1
    lam: float = 1.0
    scores: Optional[np.ndarray] = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.t < 1:
            raise ValueError(f"iteration must be >= 1, got {self.t}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def steps_done(self) -> int:
        return self.t - 1


def pegasos_init(m: int, lam: float = 1.0) -> PegasosState:
    return PegasosState(np.zeros(m, dtype=np.int64), 1, lam, np.zeros(m))


def rbf_kernel_fn(gamma: float) -> Callable:
    return lambda A, B: rbf_matrix(A, B, gamma)


def _ensure_scores(state: PegasosState, data: Dataset, kernel_fn) -> np.ndarray:
    if state.scores is None:
        nz = np.flatnonzero(state.counts)
        scores = np.zeros(data.n_samples)
        if nz.size:
            K = np.asarray(kernel_fn(data.features, data.features[nz]), dtype=np.float64)
            scores = K @ (state.counts[nz] * data.labels[nz])
        state.scores = scores
    return state.scores


def pegasos_step(state: PegasosState, data: Dataset, kernel_fn: Callable, rng,
                 index: Optional[int] = None) -> PegasosState:
    """One kernelized Pegasos step; mutates and returns ``state``.

    ``index`` overrides the uniform draw (used by tests).
    """
    scores = _ensure_scores(state, data, kernel_fn)
    i = int(rng.integers(data.n_samples)) if index is None else int(index)
    w_i = data.labels[i]
    if w_i * scores[i] / (state.lam * state.t) < 1.0:
        state.counts[i] += 1
        col = np.asarray(kernel_fn(data.features, data.features[i:i + 1]), dtype=np.float64)
        state.scores = scores + w_i * col[:, 0]
    state.t += 1
    return state


def pegasos_as_alpha(state: PegasosState, labels) -> np.ndarray:
    """SVM coefficients over all training rows: counts_j w_j / (lam T)."""
    labels = np.asarray(labels, dtype=np.float64)
    T = max(1, state.steps_done)
    return state.counts * labels / (state.lam * T)


def pegasos_objective(state: PegasosState, data: Dataset, kernel_fn: Callable) -> float:
    """Full-sample objective at :func:`pegasos_as_alpha`, read off the scores."""
    scores = _ensure_scores(state, data, kernel_fn)
    alpha = pegasos_as_alpha(state, data.labels)
    Qa = scores / (state.lam * max(1, state.steps_done))
    margins = data.labels * Qa
    return 0.5 * float(alpha @ Qa) + float(np.maximum(0.0, 1.0 - margins).sum() / data.n_samples)


@dataclass
class PegasosResult:
    alpha: np.ndarray
    active: np.ndarray
    trajectory: list = field(default_factory=list)
    reason: str = "max-iters"
    gamma: float = 1.0
    iterations: int = 0
    state: Optional[PegasosState] = None


def pegasos(data: Dataset, *, lam: float = 1.0, seed: int = 0, max_steps: Optional[int] = None,
            budget_s: Optional[float] = None, record_every: Optional[int] = None,
            rbf_gamma: Optional[float] = None, record_time: bool = True) -> PegasosResult:
    """Run Pegasos until ``max_steps`` or ``budget_s`` runs out.

    A trajectory row is written every ``record_every`` steps (one pass over
    the data by default) and after the final step. ``f_sampled`` and the
    direction columns are empty; ``step`` holds the step size 1/(lam t).
    """
    if max_steps is None and budget_s is None:
        raise ValueError("need max_steps or budget_s")
    m = data.n_samples
    gamma = rbf_gamma if rbf_gamma is not None else default_gamma(data.features)
    kfn = rbf_kernel_fn(gamma)
    every = record_every or m
    rng = np.random.default_rng(seed)
    state = pegasos_init(m, lam)
    started = time.perf_counter()
    deadline = None if budget_s is None else started + budget_s
    trajectory = []

    def record():
        elapsed = (time.perf_counter() - started) * 1e3 if record_time else None
        trajectory.append(TrajectoryRecord(
            iteration=state.steps_done, sample_size=state.steps_done, f_sampled=None,
            f_full=pegasos_objective(state, data, kfn), dir_norm=None, delta=None,
            step=1.0 / (lam * state.steps_done), accepted=True, elapsed_ms=elapsed))

    reason = "max-iters"
    while True:
        if max_steps is not None and state.steps_done >= max_steps:
            break
        # the clock is read once per recording block to keep steps cheap
        if deadline is not None and state.steps_done % 64 == 0 \
                and time.perf_counter() >= deadline:
            reason = "budget"
            break
        pegasos_step(state, data, kfn, rng)
        if state.steps_done % every == 0:
            record()
    if state.steps_done and (not trajectory or trajectory[-1].iteration != state.steps_done):
        record()
    alpha = pegasos_as_alpha(state, data.labels)
    active = np.flatnonzero(state.counts)
    return PegasosResult(alpha[active], active, trajectory, reason, gamma,
                         state.steps_done, state)


def wolfe_deterministic(data: Dataset, cfg: SolverConfig) -> SolveResult:
    """The solver loop on the full sample: no growth, validation equals f.

    Raises :class:`KernelCapError` ("full-SAA infeasible") when the full Gram
    matrix would exceed ``cfg.kernel_cap``.
    """
    if data.n_samples > cfg.kernel_cap:
        raise KernelCapError(f"full-SAA infeasible: {data.n_samples} rows exceed kernel cap "
                             f"{cfg.kernel_cap}")
    return run(initial_state(cfg, data, sampling=False), cfg, data)
