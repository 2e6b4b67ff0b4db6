"""Discrete information measures, all in bits.

Small helpers shared by the attack and rate modules.  Joints are plain
numpy arrays of nonnegative weights summing to one; zero cells are
handled with the usual 0*log(0) = 0 convention.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError, NotNormalized

NORM_TOL = 1e-9


def binary_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) bit, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy argument {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def entropy(dist) -> float:
    """Shannon entropy of a flattened distribution."""
    p = np.asarray(dist, dtype=float).ravel()
    _check_normalized(p)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def mutual_information(joint) -> float:
    """I(X:Y) from a 2-d joint distribution p(x, y)."""
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2:
        raise ValueError("mutual_information expects a 2-d joint")
    _check_normalized(p)
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    prod = px * py
    mask = p > 0
    vals = p[mask] * np.log2(p[mask] / prod[mask])
    return max(0.0, float(vals.sum()))


def conditional_mutual_information(joint) -> float:
    """I(X:Y|Z) from a 3-d joint p(x, y, z), z on the last axis."""
    p = np.asarray(joint, dtype=float)
    if p.ndim != 3:
        raise ValueError("conditional_mutual_information expects a 3-d joint")
    _check_normalized(p)
    pz = p.sum(axis=(0, 1), keepdims=True)
    pxz = p.sum(axis=1, keepdims=True)
    pyz = p.sum(axis=0, keepdims=True)
    mask = p > 0
    num = p[mask] * np.broadcast_to(pz, p.shape)[mask]
    den = (np.broadcast_to(pxz, p.shape) * np.broadcast_to(pyz, p.shape))[mask]
    vals = p[mask] * np.log2(num / den)
    return max(0.0, float(vals.sum()))


def _check_normalized(p: np.ndarray) -> None:
    if np.any(p < -NORM_TOL):
        raise NotNormalized("negative weight in distribution")
    total = float(p.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise NotNormalized(f"distribution sums to {total!r}, expected 1")
