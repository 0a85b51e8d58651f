"""Conjugate subgradient direction: the negated minimum-norm point of a segment."""

from __future__ import annotations

import numpy as np


def min_norm_direction(d_prev, g):
    """Combine the previous direction and a fresh subgradient.

    Minimizes ``0.5 * ||lam * (-d_prev) + (1 - lam) * g||^2`` over lam in
    [0, 1] in closed form and returns ``(d_new, lam)`` with ``d_new`` the
    negated minimizer. A degenerate segment (``-d_prev == g``) resolves to
    ``lam = 0``, i.e. the plain subgradient direction ``-g``.
    """
    d_prev = np.asarray(d_prev, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if d_prev.shape != g.shape:
        raise ValueError(f"dimension mismatch: {d_prev.shape} vs {g.shape}")
    if not (np.all(np.isfinite(d_prev)) and np.all(np.isfinite(g))):
        raise ValueError("non-finite input to min_norm_direction")
    u = -d_prev - g
    uu = float(u @ u)
    if uu == 0.0:
        lam = 0.0
    else:
        lam = min(1.0, max(0.0, -float(g @ u) / uu))
    point = lam * (-d_prev) + (1.0 - lam) * g
    return -point, lam


def pad(v, new_dim: int) -> np.ndarray:
    """Append zeros so that ``v`` has ``new_dim`` entries."""
    v = np.asarray(v, dtype=np.float64)
    if new_dim < v.shape[0]:
        raise ValueError(f"cannot pad length {v.shape[0]} down to {new_dim}")
    out = np.zeros(new_dim)
    out[:v.shape[0]] = v
    return out
