"""Canonical harmonic map of a vortex family: current, phase, annulus energy.

The map is represented through its stream function

    Phi(x) = sum_j d_j ( log|x - a_j| + F(x, a_j) ),

whose level sets are the current lines: the current is j = -J grad(Phi) with
J = [[0, 1], [-1, 0]].  Phi is constant (zero) on the boundary, so the
normal current vanishes there; Delta(Phi) = 2 pi sum_j d_j delta_{a_j}
gives circulation 2 pi d_j around each vortex.  A single-valued phase theta
with grad(theta) = j is recovered by line integration from a reference
point; only e^{i theta} is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import geometry
from .errors import DomainError, PathError, SingularityError
from .renormalized_energy import min_separation

__all__ = [
    "VortexFamily",
    "VortexConfiguration",
    "stream_function",
    "canonical_current",
    "phase",
    "annulus_energy",
]

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass
class VortexFamily:
    """Positions (M, 2) and degrees (M,) in {+1, -1} of one component's vortices."""

    positions: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.degrees = np.asarray(self.degrees, dtype=int).reshape(-1)
        if len(self.positions) != len(self.degrees):
            raise ValueError("positions and degrees must have equal length")
        if len(self.degrees) and not np.all(np.abs(self.degrees) == 1):
            raise ValueError("vortex degrees must be +1 or -1")

    def __len__(self):
        return len(self.degrees)

    @classmethod
    def empty(cls):
        return cls(np.empty((0, 2)), np.empty(0, dtype=int))


@dataclass
class VortexConfiguration:
    """Vortices of both components; u carries the a-family, v the b-family."""

    u: VortexFamily = field(default_factory=VortexFamily.empty)
    v: VortexFamily = field(default_factory=VortexFamily.empty)

    def separation(self, domain) -> float:
        return min_separation(self.u.positions, self.v.positions, domain)

    def validate(self, domain):
        for fam in (self.u, self.v):
            for p in fam.positions:
                if geometry.distance_to_boundary(domain, p) <= 0:
                    raise DomainError(f"vortex at {tuple(p)} is not strictly inside the domain")
        if not self.separation(domain) > 0:
            raise DomainError("vortex configuration has zero separation radius")


def _positions_degrees(family):
    if isinstance(family, VortexFamily):
        return family.positions, family.degrees.astype(float)
    positions, degrees = family
    return (
        np.asarray(positions, dtype=float).reshape(-1, 2),
        np.asarray(degrees, dtype=float).reshape(-1),
    )


def _guard_singular(points, positions, scale):
    if len(positions) == 0:
        return
    diff = points[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist < 1e-13 * max(scale, 1.0)):
        raise SingularityError("evaluation point coincides with a vortex position")


def _domain_scale(domain):
    return domain.radius if domain.kind == "disk" else max(domain.lx, domain.ly)


def _rect_smooth_gradient(domain, family, grid):
    """Vertex-grid gradient of sum_j d_j F(., a_j) for rectangle domains."""
    positions, degrees = _positions_degrees(family)
    if grid is None:
        grid = geometry.default_green_grid(domain)
    S = None
    for p, d in zip(positions, degrees):
        f, grid, _ = geometry.green_field(domain, p, grid)
        S = d * f if S is None else S + d * f
    if S is None:
        S = np.zeros((grid.nx + 1, grid.ny + 1))
    xs, ys = geometry.vertex_coords(domain, grid)
    Gx = np.gradient(S, xs, axis=0)
    Gy = np.gradient(S, ys, axis=1)
    return Gx, Gy, grid


def _grad_stream(domain, family, points, grid=None, _rect_cache=None):
    """grad(Phi) at an (N, 2) array of points (vectorized)."""
    positions, degrees = _positions_degrees(family)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    _guard_singular(points, positions, _domain_scale(domain))
    out = np.zeros_like(points)
    # singular log parts, exact for either domain kind
    for p, d in zip(positions, degrees):
        diff = points - p
        r2 = np.einsum("ij,ij->i", diff, diff)
        out += d * diff / r2[:, None]
    if domain.kind == "disk":
        R = domain.radius
        c = np.asarray(domain.center)
        xh = (points - c) / R
        for p, d in zip(positions, degrees):
            yh = (np.asarray(p) - c) / R
            yy = np.dot(yh, yh)
            s = np.einsum("ij,ij->i", xh, xh) * yy - 2.0 * xh @ yh + 1.0
            out += d * (-(xh * yy - yh) / (R * s[:, None]))
    else:
        if _rect_cache is None:
            _rect_cache = _rect_smooth_gradient(domain, family, grid)
        Gx, Gy, grid = _rect_cache
        for i, pt in enumerate(points):
            out[i, 0] += geometry.bilinear_eval(Gx, domain, grid, pt)
            out[i, 1] += geometry.bilinear_eval(Gy, domain, grid, pt)
    return out


def stream_function(domain, family, x, grid=None) -> float:
    """Phi(x); diverges logarithmically (sign d_j) at the vortices."""
    positions, degrees = _positions_degrees(family)
    pt = np.asarray(x, dtype=float).reshape(1, 2)
    _guard_singular(pt, positions, _domain_scale(domain))
    total = 0.0
    for p, d in zip(positions, degrees):
        total += d * (
            np.log(np.hypot(*(pt[0] - p))) + geometry.boundary_green_F(domain, pt[0], p, grid)
        )
    return float(total)


def canonical_current(domain, family, x, grid=None):
    """The current j = -J grad(Phi) at x: circulation 2 pi d_j around each
    vortex, zero normal component on the boundary."""
    g = _grad_stream(domain, family, np.asarray(x, dtype=float).reshape(1, 2), grid)[0]
    return -_J @ g


# ---------------------------------------------------------------------------
# Phase by line integration.
# ---------------------------------------------------------------------------


def _detour_pieces(A, B, positions, delta):
    """Split segment A->B into segments and circular arcs skirting vortices."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    AB = B - A
    L2 = np.dot(AB, AB)
    if L2 == 0.0:
        return []
    hits = []
    for v in positions:
        t_star = np.clip(np.dot(v - A, AB) / L2, 0.0, 1.0)
        d_star = np.hypot(*(A + t_star * AB - v))
        if d_star >= delta:
            continue
        # chord of the circle |p - v| = delta along the segment
        tc = np.dot(v - A, AB) / L2
        d_perp2 = np.dot(A + tc * AB - v, A + tc * AB - v)
        half = np.sqrt(max(delta**2 - d_perp2, 0.0)) / np.sqrt(L2)
        t1, t2 = max(tc - half, 0.0), min(tc + half, 1.0)
        if t2 <= t1:
            continue
        hits.append((t1, t2, v))
    hits.sort(key=lambda h: h[0])
    for (_, t2a, _), (t1b, _, _) in zip(hits, hits[1:]):
        if t1b < t2a:
            raise PathError("vortices too close together to route the integration path")
    pieces = []
    t_prev = 0.0
    for t1, t2, v in hits:
        if t1 > t_prev:
            pieces.append(("seg", A + t_prev * AB, A + t1 * AB))
        P, Q = A + t1 * AB, A + t2 * AB
        th0 = np.arctan2(*(P - v)[::-1])
        th1 = np.arctan2(*(Q - v)[::-1])
        dth = np.remainder(th1 - th0 + np.pi, 2 * np.pi) - np.pi
        if dth == -np.pi:
            dth = np.pi
        pieces.append(("arc", v, delta, th0, dth))
        t_prev = t2
    if t_prev < 1.0:
        pieces.append(("seg", A + t_prev * AB, B))
    return pieces


def phase(domain, family, x, reference_point, grid=None) -> float:
    """Phase theta(x) with grad(theta) = j, normalized to theta(ref) = 0.

    The straight path from the reference point detours around vortices on
    circular arcs; homotopic paths agree, paths enclosing vortices differ by
    2 pi times the enclosed degree sum, so e^{i theta} is single-valued.
    """
    positions, _ = _positions_degrees(family)
    x = np.asarray(x, dtype=float)
    ref = np.asarray(reference_point, dtype=float)
    scale = _domain_scale(domain)
    _guard_singular(np.vstack([x[None, :], ref[None, :]]), positions, scale)
    r_fam = min_separation(positions, np.empty((0, 2)), domain) if len(positions) else np.inf
    delta = min(0.25 * r_fam, 0.1 * scale)
    if len(positions):
        ends = min(
            np.hypot(*(x - p)) for p in positions
        ), min(np.hypot(*(ref - p)) for p in positions)
        delta = min(delta, 0.45 * ends[0], 0.45 * ends[1])
    if not delta > 0:
        raise PathError("cannot route a path: endpoint sits on a vortex")

    rect_cache = None
    if domain.kind == "rectangle":
        rect_cache = _rect_smooth_gradient(domain, family, grid)

    def jvec(p):
        g = _grad_stream(domain, family, p.reshape(1, 2), grid, _rect_cache=rect_cache)[0]
        return -_J @ g

    total = 0.0
    for piece in _detour_pieces(ref, x, positions, delta):
        if piece[0] == "seg":
            _, P, Q = piece
            PQ = Q - P

            def integrand(t, P=P, PQ=PQ):
                return float(jvec(P + t * PQ) @ PQ)

        else:
            _, v, rad, th0, dth = piece

            def integrand(t, v=v, rad=rad, th0=th0, dth=dth):
                th = th0 + t * dth
                p = v + rad * np.array([np.cos(th), np.sin(th)])
                tangent = rad * dth * np.array([-np.sin(th), np.cos(th)])
                return float(jvec(p) @ tangent)

        val, _err = quad(integrand, 0.0, 1.0, epsabs=1e-11, epsrel=1e-11, limit=200)
        total += val
    return total


# ---------------------------------------------------------------------------
# Annulus energy: 2-D quadrature of |j|^2 over the domain minus rho-balls.
#
# The integral is split with a smooth partition of unity: a polar patch
# around each vortex (log-radial Gauss nodes soak up the 1/r^2 density) and
# a far field where the integrand is smooth (polar Gauss grid on the disk,
# tensor Gauss on the rectangle).
# ---------------------------------------------------------------------------


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**4 * (35.0 - 84.0 * s + 70.0 * s**2 - 20.0 * s**3)


def _speed_sq(domain, family, pts, rect_cache, grid):
    g = _grad_stream(domain, family, pts, grid, _rect_cache=rect_cache)
    return np.einsum("ij,ij->i", g, g)


def annulus_energy(domain, family, rho, grid=None, refine: int = 0) -> float:
    """Integral of |grad H|^2 = |j|^2 over the domain minus rho-balls.

    Expands as 2 M pi log(1/rho) + 2 W(a) + O(rho^2), with W the
    renormalized interaction energy of the family (a Green-identity
    computation: the log cores contribute 2 pi log(1/rho) each, the mean
    value of the regular part at each vortex contributes 2 W, and the
    removed-ball energy of the regular part is the rho^2 term).
    ``refine`` doubles every quadrature resolution (for convergence checks).
    """
    positions, degrees = _positions_degrees(family)
    if len(positions) == 0:
        return 0.0
    r_sep = min_separation(positions, np.empty((0, 2)), domain)
    if not 0.0 < rho < r_sep:
        raise DomainError(f"rho must lie in (0, {r_sep}), got {rho}")
    # widest patch that keeps the balls disjoint and inside the domain;
    # a wide transition band keeps the far-field integrand easy to resolve
    min_gap = np.inf
    if len(positions) >= 2:
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        min_gap = dist[np.triu_indices(len(positions), k=1)].min()
    min_bdry = min(geometry.distance_to_boundary(domain, p) for p in positions)
    r_out = max(r_sep, min(0.45 * min_gap, 0.85 * min_bdry))
    rho1 = rho + 0.2 * (r_out - rho)
    rho2 = rho + 0.8 * (r_out - rho)

    rect_cache = None
    if domain.kind == "rectangle":
        rect_cache = _rect_smooth_gradient(domain, family, grid)

    def w_patch(r):
        return 1.0 - _smoothstep((r - rho1) / (rho2 - rho1))

    scale = 2**refine
    total = 0.0

    # per-vortex polar patches on [rho, rho2], log-radial Gauss x uniform angle
    n_s, n_th = 96 * scale, 256 * scale
    s_nodes, s_wts = np.polynomial.legendre.leggauss(n_s)
    s_lo, s_hi = np.log(rho), np.log(rho2)
    s_vals = 0.5 * (s_hi - s_lo) * s_nodes + 0.5 * (s_hi + s_lo)
    s_wts = 0.5 * (s_hi - s_lo) * s_wts
    thetas = 2.0 * np.pi * np.arange(n_th) / n_th
    ct, st = np.cos(thetas), np.sin(thetas)
    for p in positions:
        r_vals = np.exp(s_vals)
        pts = p[None, None, :] + r_vals[:, None, None] * np.stack([ct, st], axis=-1)[None, :, :]
        f = _speed_sq(domain, family, pts.reshape(-1, 2), rect_cache, grid).reshape(n_s, n_th)
        ang = f.mean(axis=1) * 2.0 * np.pi
        total += np.sum(s_wts * ang * w_patch(r_vals) * r_vals**2)

    # far field: smooth integrand, vanishes inside the rho1-balls
    def far_weight(pts):
        w = np.ones(len(pts))
        for p in positions:
            w -= w_patch(np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1]))
        return np.clip(w, 0.0, 1.0)

    if domain.kind == "disk":
        n_r, n_a = 192 * scale, 384 * scale
        r_nodes, r_wts = np.polynomial.legendre.leggauss(n_r)
        rr = 0.5 * domain.radius * (r_nodes + 1.0)
        rw = 0.5 * domain.radius * r_wts
        aa = 2.0 * np.pi * np.arange(n_a) / n_a
        ca, sa = np.cos(aa), np.sin(aa)
        c = np.asarray(domain.center)
        pts = c[None, None, :] + rr[:, None, None] * np.stack([ca, sa], axis=-1)[None, :, :]
        pts = pts.reshape(-1, 2)
        wts = np.repeat(rw * rr, n_a) * (2.0 * np.pi / n_a)
    else:
        n_x = 256 * scale
        gx, wx = np.polynomial.legendre.leggauss(n_x)
        x0, y0 = domain.corner
        xs = x0 + 0.5 * domain.lx * (gx + 1.0)
        ws_x = 0.5 * domain.lx * wx
        ys = y0 + 0.5 * domain.ly * (gx + 1.0)
        ws_y = 0.5 * domain.ly * wx
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        wts = np.outer(ws_x, ws_y).ravel()

    wfar = far_weight(pts)
    live = wfar > 0.0
    if np.any(live):
        f = _speed_sq(domain, family, pts[live], rect_cache, grid)
        total += np.sum(f * wfar[live] * wts[live])
    return float(total)
