"""Sampled kernel-SVM objective, its validation estimate and subgradients.

The objective over an active sample S with Gram block Q is

    f(alpha) = 1/2 alpha^T Q alpha + 1/|S| sum_i max(0, 1 - w_i <alpha, Q_i>)

and is evaluated as the sum of its quadratic and hinge parts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kernel import rbf_matrix

log = logging.getLogger(__name__)

DEFAULT_MARGIN_BOUND = 10.0


def _check_alpha(alpha, n: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (n,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({n},)")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("alpha has non-finite entries")
    return alpha


def _hinge_mean(margins: np.ndarray) -> float:
    # fixed index-order accumulation keeps sums reproducible
    return float(np.maximum(0.0, 1.0 - margins).sum() / margins.shape[0])


@dataclass(frozen=True)
class Parts:
    quadratic: float
    hinge: float

    @property
    def value(self) -> float:
        return self.quadratic + self.hinge


class SampledObjective:
    """f over the active sample: ``gram`` is |S| x |S|, ``labels`` the w_i."""

    def __init__(self, gram, labels, margin_bound: float = DEFAULT_MARGIN_BOUND):
        self.gram = np.asarray(gram, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.float64)
        n = self.labels.shape[0]
        if self.gram.shape != (n, n):
            raise ValueError(f"gram {self.gram.shape} does not match {n} labels")
        self.margin_bound = margin_bound

    @property
    def dim(self) -> int:
        return self.labels.shape[0]

    def margins(self, alpha) -> np.ndarray:
        alpha = _check_alpha(alpha, self.dim)
        return self.labels * (self.gram @ alpha)

    def _check_bound(self, margins):
        if margins.size and np.abs(margins).max() > self.margin_bound:
            log.debug("margin %.3g exceeds bound M=%g", np.abs(margins).max(),
                      self.margin_bound)

    def parts(self, alpha) -> Parts:
        alpha = _check_alpha(alpha, self.dim)
        Qa = self.gram @ alpha
        margins = self.labels * Qa
        self._check_bound(margins)
        return Parts(0.5 * float(alpha @ Qa), _hinge_mean(margins))

    def eval(self, alpha) -> float:
        return self.parts(alpha).value

    __call__ = eval

    def subgradient(self, alpha) -> np.ndarray:
        """Q alpha - 1/|S| sum_{margin_i < 1} w_i Q_i.

        A hinge sitting exactly at margin 1 contributes nothing.
        """
        alpha = _check_alpha(alpha, self.dim)
        Qa = self.gram @ alpha
        active = self.labels * Qa < 1.0
        coef = np.where(active, -self.labels, 0.0) / self.dim
        return Qa + self.gram @ coef

    def value_and_subgradient(self, alpha, Qa=None):
        """``Qa`` may pass a precomputed ``gram @ alpha``."""
        alpha = _check_alpha(alpha, self.dim)
        if Qa is None:
            Qa = self.gram @ alpha
        margins = self.labels * Qa
        value = 0.5 * float(alpha @ Qa) + _hinge_mean(margins)
        coef = np.where(margins < 1.0, -self.labels, 0.0) / self.dim
        return value, Qa + self.gram @ coef

    def values(self, columns):
        """Objective at each column of ``columns`` (|S| x k), one matrix product.

        Returns ``(values, quadratics, products)`` with ``products = gram @ columns``.
        """
        B = np.asarray(columns, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != self.dim:
            raise ValueError(f"columns have shape {B.shape}, expected ({self.dim}, k)")
        QB = self.gram @ B
        quad = 0.5 * np.einsum("ij,ij->j", B, QB)
        vals = np.array([quad[j] + _hinge_mean(self.labels * QB[:, j])
                         for j in range(B.shape[1])])
        return vals, quad, QB

    def restrict(self, x, d, Qx=None) -> "LineRestriction":
        return LineRestriction(self, x, d, Qx)


class LineRestriction:
    """``f(x + t d)`` and ``<g(x + t d), d>`` in O(|S|) per step length.

    ``gram @ x`` and ``gram @ d`` are formed once; every trial step then
    reuses them. The subgradient follows the same kink rule as
    :meth:`SampledObjective.subgradient`.
    """

    def __init__(self, obj: SampledObjective, x, d, Qx=None):
        self.obj = obj
        self.x = _check_alpha(x, obj.dim)
        self.d = _check_alpha(d, obj.dim)
        self.Qx = obj.gram @ self.x if Qx is None else np.asarray(Qx, dtype=np.float64)
        self.Qd = obj.gram @ self.d
        self.xQx = float(self.x @ self.Qx)
        self.xQd = float(self.x @ self.Qd)
        self.dQd = float(self.d @ self.Qd)
        self.value0 = 0.5 * self.xQx + _hinge_mean(obj.labels * self.Qx)

    def value_and_slope(self, t: float):
        w = self.obj.labels
        margins = w * (self.Qx + t * self.Qd)
        value = 0.5 * (self.xQx + 2.0 * t * self.xQd + t * t * self.dQd) + _hinge_mean(margins)
        coef = np.where(margins < 1.0, -w, 0.0) / self.obj.dim
        slope = self.xQd + t * self.dQd + float(coef @ self.Qd)
        return value, slope


def eval_validation(obj: SampledObjective, cross, labels_t, alpha) -> float:
    """Quadratic term on the active Gram block, hinge averaged over validation rows.

    ``cross`` holds K(z_t, z_s) for validation rows t and active rows s.
    """
    alpha = _check_alpha(alpha, obj.dim)
    cross = np.asarray(cross, dtype=np.float64)
    labels_t = np.asarray(labels_t, dtype=np.float64)
    if cross.shape != (labels_t.shape[0], obj.dim):
        raise ValueError(f"cross block {cross.shape} does not match "
                         f"({labels_t.shape[0]}, {obj.dim})")
    quad = 0.5 * float(alpha @ (obj.gram @ alpha))
    return quad + _hinge_mean(labels_t * (cross @ alpha))


def eval_full(features, labels, active, alpha, gamma: float, *, chunk: int = 4096) -> float:
    """Full-sample objective for the classifier sum_i alpha_i phi(z_active_i).

    The quadratic term uses the active Gram block; the hinge is averaged over
    every row of ``features``.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    active = np.asarray(active, dtype=np.int64)
    alpha = _check_alpha(alpha, active.shape[0])
    A = features[active]
    quad = 0.5 * float(alpha @ (rbf_matrix(A, A, gamma) @ alpha)) if len(active) else 0.0
    scores = decision_function(A, alpha, features, gamma, chunk=chunk)
    return quad + _hinge_mean(labels * scores)


def decision_function(support, alpha, X, gamma: float, *, chunk: int = 4096) -> np.ndarray:
    """sum_i alpha_i K(support_i, x) for every row x of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    out = np.zeros(X.shape[0])
    if alpha.size == 0:
        return out
    nz = alpha != 0
    support, alpha = np.asarray(support)[nz], alpha[nz]
    if alpha.size == 0:
        return out
    for lo in range(0, X.shape[0], chunk):
        out[lo:lo + chunk] = rbf_matrix(X[lo:lo + chunk], support, gamma) @ alpha
    return out
