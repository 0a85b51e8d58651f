"""Bracketing line search with sufficient-decrease and slope conditions.

For a direction ``d`` at ``x`` the accepted step sets are

    L = {t > 0 : f(x + t d) - f(x) <= -m1 ||d||^2 t}
    R = {t > 0 : 0 > <g(x + t d), d> >= -m2 ||d||^2}

where ``g`` is the deterministic subgradient of the objective. Step lengths
``t ||d||`` are confined to ``[delta / n, delta]``; a search that shrinks
below ``delta / n`` without reaching ``L`` returns ``t = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineSearchParams:
    delta: float
    m1: float = 0.3
    m2: float = 0.25
    n: int = 2
    max_bisections: int = 60

    def __post_init__(self):
        if not 0.25 <= self.m1 < 0.5:
            raise ValueError(f"m1 must lie in [1/4, 1/2), got {self.m1}")
        if not 0.25 <= self.m2 < self.m1:
            raise ValueError(f"m2 must lie in [1/4, m1), got {self.m2}")
        if int(self.n) != self.n or self.n <= 1:
            raise ValueError(f"n must be an integer > 1, got {self.n}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")
        if self.max_bisections < 0:
            raise ValueError("max_bisections must be nonnegative")

    @property
    def b(self) -> float:
        return self.delta / self.n


@dataclass(frozen=True)
class StepQuery:
    t: float
    in_L: bool
    in_R: bool
    f_delta: float
    dir_deriv: float
    dd: float  # ||d||^2

    @property
    def good(self) -> bool:
        return self.in_L and self.in_R

    @property
    def short(self) -> bool:
        """In L while still descending faster than the slope condition allows."""
        return self.in_L and self.dir_deriv < 0.0 and not self.in_R

    @property
    def step_length(self) -> float:
        return self.t * math.sqrt(self.dd)


@dataclass
class LineSearchResult:
    t: float
    branch: str  # "interior", "boundary", "collapse", "fallback", "zero-direction"
    evaluations: int
    witness: Optional[StepQuery] = None
    trace: list = field(default_factory=list, repr=False)


def _value_and_subgradient(obj, x):
    if hasattr(obj, "value_and_subgradient"):
        return obj.value_and_subgradient(x)
    return obj.eval(x), obj.subgradient(x)


def classify(obj, x, d, t: float, params: LineSearchParams,
             f0: Optional[float] = None, line=None) -> StepQuery:
    """Evaluate L/R membership of step ``t`` along ``d`` from ``x``.

    ``line`` is an optional restriction of ``obj`` to the ray (see
    :meth:`SampledObjective.restrict`); it then supplies both the value and
    the slope, and ``f0`` is taken from it.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    dd = float(d @ d)
    if dd <= 0:
        raise ValueError("direction must be nonzero")
    if line is not None:
        f0 = line.value0
        ft, slope = line.value_and_slope(t)
    else:
        if f0 is None:
            f0 = obj.eval(x)
        ft, gt = _value_and_subgradient(obj, x + t * d)
        slope = float(gt @ d)
    if not (math.isfinite(ft) and math.isfinite(f0)):
        raise FloatingPointError(f"non-finite objective value at t={t}")
    f_delta = ft - f0
    in_L = f_delta <= -params.m1 * dd * t
    in_R = 0.0 > slope >= -params.m2 * dd
    return StepQuery(t, bool(in_L), bool(in_R), f_delta, slope, dd)


def search(obj, x, d, params: LineSearchParams, f0: Optional[float] = None,
           Qx=None) -> LineSearchResult:
    """Find a step ``t`` along ``d``.

    Returns ``t`` in L and R with ``t ||d||`` in ``[b, delta]`` when the
    bracket closes; the last doubled step still in L when doubling would leave
    the radius ``delta``; ``t = 0`` once halving drops ``t ||d||`` below
    ``b = delta / n`` without entering L. Every positive result lies in L.

    Objectives with a ``restrict`` method are searched on their restriction
    to the ray; ``Qx`` may pass its cached ``gram @ x``.
    """
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    norm_d = float(np.sqrt(d @ d))
    if norm_d == 0.0:
        raise ValueError("direction must be nonzero")
    line = obj.restrict(x, d, Qx) if hasattr(obj, "restrict") else None
    if line is None and f0 is None:
        f0 = obj.eval(x)
    delta, b = params.delta, params.b
    trace: list[StepQuery] = []

    def query(t):
        q = classify(obj, x, d, t, params, f0, line)
        trace.append(q)
        return q

    def done(t, branch, witness=None):
        return LineSearchResult(t, branch, len(trace), witness, trace)

    def bisect(lo, hi):
        for _ in range(params.max_bisections):
            mid = 0.5 * (lo + hi)
            q = query(mid)
            if q.good:
                return done(mid, "interior")
            if q.short:
                lo = mid
            else:
                hi = mid
        in_L = [q for q in trace if q.in_L]
        best = min(in_L, key=lambda q: (q.f_delta, -q.t))
        log.info("line search: bisection cap %d reached, falling back to t=%.3g",
                 params.max_bisections, best.t)
        return done(best.t, "fallback")

    t = delta / (2.0 * norm_d)
    q = query(t)
    if q.good:
        return done(t, "interior")

    if q.short:
        while True:
            t2 = 2.0 * t
            if t2 * norm_d > delta:
                return done(t, "boundary")
            q2 = query(t2)
            if q2.good:
                return done(t2, "interior")
            if not q2.short:
                return bisect(t, t2)
            t = t2

    if not q.in_L:
        log.debug("line search: initial step in neither L nor R" if not q.in_R
                  else "line search: initial step in R but not L")
    while True:
        hi = t
        t = 0.5 * t
        q = query(t)
        if q.good:
            return done(t, "interior")
        if q.short:
            return bisect(t, hi)
        if q.in_L:
            # past the minimum along d but still decreasing enough
            if t * norm_d < b:
                return done(t, "fallback")
            continue
        if t * norm_d < b:
            return done(0.0, "collapse", witness=q)
