"""Interaction energy W of a vortex configuration and its analytic gradient.

W collects the pairwise log interactions and the boundary terms built from
the harmonic correction F:

    W_d(a) = -pi * ( sum_{j != k} d_j d_k log|a_j - a_k|
                     + sum_{j,k} d_j d_k F(a_j, a_k) )

with the diagonal F(a_j, a_j) self-terms included; they supply the boundary
confinement force.  The gradient is analytic; the diagonal term uses the
total derivative of F(x, x), i.e. grad[F(x, x)] = 2 grad_x F(x, y)|_{y=x}
by symmetry of F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import SingularityError

__all__ = ["EnergyReport", "min_separation", "renormalized_W", "grad_W", "grad_W_all", "energy_report"]


@dataclass
class EnergyReport:
    """W, per-vortex gradient, and the separation radius of a configuration."""

    W: float
    gradients: np.ndarray  # (M, 2)
    min_separation: float


def _pair_min(points):
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return np.inf
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(len(pts), k=1)
    return float(dist[iu].min())


def min_separation(a_positions, b_positions, domain) -> float:
    """Quarter of the smallest of: intra-family gaps, boundary distances,
    and cross-family gaps.  Positive iff the configuration is admissible."""
    a = np.asarray(a_positions, dtype=float).reshape(-1, 2)
    b = np.asarray(b_positions, dtype=float).reshape(-1, 2)
    r_a = min(
        _pair_min(a),
        min((geometry.distance_to_boundary(domain, p) for p in a), default=np.inf),
    )
    r_b = min(
        _pair_min(b),
        min((geometry.distance_to_boundary(domain, p) for p in b), default=np.inf),
    )
    if len(a) and len(b):
        diff = a[:, None, :] - b[None, :, :]
        r_ab = float(np.hypot(diff[..., 0], diff[..., 1]).min())
    else:
        r_ab = np.inf
    return 0.25 * min(r_a, r_b, r_ab)


def _check_admissible(positions):
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(positions) >= 2 and _pair_min(positions) <= 0.0:
        raise SingularityError("coincident vortex positions")
    return positions


def renormalized_W(domain, positions, degrees, grid=None) -> float:
    """W of one vortex family (positions (M,2), degrees +-1)."""
    a = _check_admissible(positions)
    d = np.asarray(degrees, dtype=float)
    total = 0.0
    for j in range(len(a)):
        for k in range(len(a)):
            if j != k:
                total += d[j] * d[k] * np.log(np.hypot(*(a[j] - a[k])))
            total += d[j] * d[k] * geometry.boundary_green_F(domain, a[j], a[k], grid)
    return float(-np.pi * total)


def grad_W_all(domain, positions, degrees, grid=None) -> np.ndarray:
    """Analytic gradient of W with respect to every vortex position; (M, 2)."""
    a = _check_admissible(positions)
    d = np.asarray(degrees, dtype=float)
    M = len(a)
    grads = np.zeros((M, 2))
    for j in range(M):
        acc = np.zeros(2)
        for k in range(M):
            if k == j:
                # d/da_j of d_j^2 F(a_j, a_j): both slots move
                acc += d[j] ** 2 * 2.0 * geometry.grad_boundary_green_F(domain, a[j], a[j], grid)
            else:
                sep = a[j] - a[k]
                acc += 2.0 * d[j] * d[k] * sep / np.dot(sep, sep)
                acc += 2.0 * d[j] * d[k] * geometry.grad_boundary_green_F(domain, a[j], a[k], grid)
        grads[j] = -np.pi * acc
    return grads


def grad_W(domain, positions, degrees, j, grid=None) -> np.ndarray:
    """Gradient of W with respect to the j-th vortex position."""
    return grad_W_all(domain, positions, degrees, grid)[int(j)]


def energy_report(domain, positions, degrees, grid=None) -> EnergyReport:
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    return EnergyReport(
        W=renormalized_W(domain, positions, degrees, grid),
        gradients=grad_W_all(domain, positions, degrees, grid),
        min_separation=min_separation(positions, np.empty((0, 2)), domain),
    )
