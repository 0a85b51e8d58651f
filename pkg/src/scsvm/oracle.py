"""Brute-force references for small instances.

* the exact subdifferential of the full-sample objective at a point, and its
  minimum-norm element (the optimality certificate);
* a dense reference solver with a duality-gap bound;
* a grid scan of a line-search ray.

None of this shares code paths with the solver beyond the kernel itself.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset
from .kernel import rbf_matrix

log = logging.getLogger(__name__)

KINK_TOL = 1e-9
MAX_KINKS = 30


class OracleError(RuntimeError):
    pass


@dataclass
class SubdifferentialSpec:
    """``{base + sum_i c_i gens[i] : c in [0, 1]^K}``; ``gens`` is K x n."""

    base: np.ndarray
    gens: np.ndarray
    kink_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_kinks(self) -> int:
        return self.gens.shape[0]

    def element(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.float64)
        return self.base + c @ self.gens if self.n_kinks else self.base.copy()


def subdifferential(gram, labels, alpha, kink_tol: float = KINK_TOL) -> SubdifferentialSpec:
    """Subdifferential of 0.5 a'Qa + mean(max(0, 1 - w * Qa)) at ``alpha``.

    Terms with ``|margin - 1| <= kink_tol`` are kinks; each contributes the
    segment between 0 and ``-w_i Q_i / m``.
    """
    Q = np.asarray(gram, dtype=np.float64)
    w = np.asarray(labels, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    m = w.shape[0]
    Qa = Q @ a
    margins = w * Qa
    kink = np.abs(margins - 1.0) <= kink_tol
    hinge = (margins < 1.0) & ~kink
    base = Qa - Q @ np.where(hinge, w, 0.0) / m
    rows = np.flatnonzero(kink)
    gens = -(w[rows, None] * Q[rows]) / m
    return SubdifferentialSpec(base, gens.reshape(len(rows), m), rows)


def min_norm_subgradient(spec: SubdifferentialSpec, tol: float = 1e-10, *,
                         max_kinks: int = MAX_KINKS, max_sweeps: int = 100_000):
    """Minimum-norm element of the subdifferential by projected coordinate descent.

    Minimizes ``||base + G'c||^2`` over the box; stops once the projected
    gradient (in the generators' own scale) drops below ``tol``. Returns
    ``(d_star, norm)`` with ``d_star`` the negated minimizer.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    K = spec.n_kinks
    if K == 0:
        return -spec.base.copy(), float(np.linalg.norm(spec.base))
    if K > max_kinks:
        raise OracleError(f"{K} kink generators exceed the limit {max_kinks}")
    G = spec.gens
    sq = np.einsum("ij,ij->i", G, G)
    c = np.zeros(K)
    r = spec.base.copy()
    for _ in range(max_sweeps):
        for i in range(K):
            if sq[i] == 0.0:
                continue
            new = min(1.0, max(0.0, c[i] - float(G[i] @ r) / sq[i]))
            if new != c[i]:
                r += (new - c[i]) * G[i]
                c[i] = new
        grad = G @ r
        proj = c - np.clip(c - grad, 0.0, 1.0)
        if float(np.max(np.abs(proj))) <= tol:
            break
    else:
        raise OracleError(f"min-norm subgradient did not converge in {max_sweeps} sweeps")
    r = spec.element(c)
    return -r, float(np.linalg.norm(r))


@dataclass
class Certificate:
    norm: float
    threshold: float
    passed: bool
    kinks: int
    epsilon: float
    epsilon_prime: float

    def text(self) -> str:
        return "\n".join([
            "optimality certificate",
            f"  min-norm subgradient  {self.norm:.6e}",
            f"  threshold 4e + e'     {self.threshold:.6e}  (e={self.epsilon:g}, e'={self.epsilon_prime:g})",
            f"  kink generators       {self.kinks}",
            f"  result                {'PASS' if self.passed else 'FAIL'}",
        ])

    __str__ = text


def full_alpha(m: int, active, alpha) -> np.ndarray:
    out = np.zeros(m)
    out[np.asarray(active, dtype=np.int64)] = np.asarray(alpha, dtype=np.float64)
    return out


def certify_optimality(data: Dataset, active, alpha, gamma: float, eps: float,
                       eps_prime: float, *, kink_tol: float = KINK_TOL,
                       max_kinks: int = MAX_KINKS) -> Certificate:
    """Check ``||d*|| < 4 eps + eps_prime`` for the full-sample objective.

    ``alpha`` holds coefficients on the rows ``active``; the objective is taken
    over every row of ``data`` with coefficients zero elsewhere.
    """
    Q = rbf_matrix(data.features, data.features, gamma)
    a = full_alpha(data.n_samples, active, alpha)
    spec = subdifferential(Q, data.labels, a, kink_tol)
    _, norm = min_norm_subgradient(spec, max_kinks=max_kinks)
    threshold = 4.0 * eps + eps_prime
    return Certificate(norm, threshold, norm < threshold, spec.n_kinks, eps, eps_prime)


def objective(gram, labels, alpha) -> float:
    Qa = gram @ alpha
    return 0.5 * float(alpha @ Qa) + float(np.maximum(0.0, 1.0 - labels * Qa).mean())


def saturated_optimum(gram, labels) -> Optional[np.ndarray]:
    """``alpha = w / m`` when it is optimal, else None.

    That point puts every dual variable at its upper bound 1/m. It is
    optimal exactly when no margin there exceeds 1, which always holds for
    kernels with ``|K| <= 1`` (the RBF kernel among them), because each
    margin is a mean of ``m`` kernel values with signs.
    """
    Q = np.asarray(gram, dtype=np.float64)
    w = np.asarray(labels, dtype=np.float64)
    alpha = w / w.shape[0]
    margins = w * (Q @ alpha)
    return alpha if float(margins.max()) <= 1.0 else None


@dataclass
class ReferenceResult:
    alpha: np.ndarray
    value: float           # best objective found
    lower_bound: float     # best dual value, so value - lower_bound bounds the error
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.value - self.lower_bound


def dense_reference_solve(data: Dataset, gamma: float, tol: float = 1e-6, *,
                          c: float = 1.0, max_iters: int = 1_000_000,
                          budget_s: Optional[float] = None,
                          max_rows: int = 300) -> ReferenceResult:
    """Subgradient method in the function-space metric with best-iterate tracking.

    With ``beta = sum_i alpha_i phi(z_i)`` the subgradient of the objective is
    ``beta - 1/m sum_{margin_i < 1} w_i phi(z_i)``, so a step of size ``eta``
    reads ``alpha <- (1 - eta) alpha + eta * v`` with ``v_i = w_i / m`` on
    the margin violators. Steps are ``eta_k = c / (k + c - 1)``; for ``c = 1``
    the iterate is the running mean of the ``v`` vectors.

    Each iterate also defines a feasible point ``a = w * alpha`` of the dual
    problem ``max sum(a) - 0.5 (w a)'Q(w a)`` over ``0 <= a <= 1/m``, so the
    duality gap is available at no extra cost. The run stops once
    ``best value - best dual <= tol``; ``tol = inf`` runs the full budget.
    """
    m = data.n_samples
    if m > max_rows:
        raise OracleError(f"dense reference limited to {max_rows} rows, got {m}")
    if not c >= 1:
        raise ValueError("c must be >= 1 so that the first step is a full step")
    Q = rbf_matrix(data.features, data.features, gamma)
    w = data.labels
    alpha = np.zeros(m)
    Qa = np.zeros(m)
    best_val, best_alpha = 1.0, alpha.copy()
    best_dual = 0.0
    deadline = None if budget_s is None else time.perf_counter() + budget_s
    early = math.isfinite(tol)
    k = 0
    converged = False
    while k < max_iters:
        k += 1
        margins = w * Qa
        quad = float(alpha @ Qa)
        val = 0.5 * quad + float(np.maximum(0.0, 1.0 - margins).sum() / m)
        if val < best_val:
            best_val, best_alpha = val, alpha.copy()
        # w * alpha lies in [0, 1/m] up to rounding for every iterate
        dual = float(np.clip(w * alpha, 0.0, 1.0 / m).sum()) - 0.5 * quad
        best_dual = max(best_dual, dual)
        if early and best_val - best_dual <= tol:
            converged = True
            break
        if deadline is not None and k % 256 == 0 and time.perf_counter() >= deadline:
            break
        v = np.where(margins < 1.0, w, 0.0) / m
        eta = c / (k + c - 1.0)
        alpha = (1.0 - eta) * alpha + eta * v
        Qa = (1.0 - eta) * Qa + eta * (Q @ v)
        if k % 1024 == 0:
            Qa = Q @ alpha  # limit drift of the running product
    if early and not converged:
        log.warning("reference solve stopped at gap %.3g (tol %.3g) after %d iterations",
                    best_val - best_dual, tol, k)
    return ReferenceResult(best_alpha, best_val, best_dual, k, converged)


def scan_ray(obj, x, d, ts):
    """``f(x + t d) - f(x)`` and ``<g(x + t d), d>`` on a grid of step lengths,
    evaluated directly from the objective (no restriction caching)."""
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    f0 = obj.eval(x)
    out = []
    for t in ts:
        y = x + t * d
        out.append((float(t), obj.eval(y) - f0, float(obj.subgradient(y) @ d)))
    return out
