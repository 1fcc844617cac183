"""Spatial domains and the harmonic boundary-correction function F.

F(x, y) is harmonic in x on the domain and equals -log|x - y| for x on the
boundary, so that log|x - y| + F(x, y) is the Dirichlet Green function (up
to normalization).  On a disk F has the classical image-charge closed form;
on a rectangle it is realized by a cached finite-difference Dirichlet solve
per source point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, SolverError

__all__ = [
    "Disk",
    "Rectangle",
    "GridSpec",
    "distance_to_boundary",
    "boundary_green_F",
    "grad_boundary_green_F",
    "solve_laplace_dirichlet",
    "green_field",
    "vertex_coords",
    "cell_centers",
    "bilinear_eval",
]


@dataclass(frozen=True)
class Disk:
    """Disk of given radius centered at ``center``."""

    center: tuple[float, float]
    radius: float

    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"disk radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle: lower-left ``corner``, side lengths lx, ly."""

    corner: tuple[float, float]
    lx: float
    ly: float

    kind = "rectangle"

    def __post_init__(self):
        if not (self.lx > 0 and self.ly > 0):
            raise DomainError(f"rectangle sides must be > 0, got ({self.lx}, {self.ly})")
        object.__setattr__(self, "corner", (float(self.corner[0]), float(self.corner[1])))


@dataclass(frozen=True)
class GridSpec:
    """Cell counts for a rectangle mesh; spacing is derived from the domain.

    ``layout`` is "cell" for cell-centered nodes (PDE fields) or "vertex"
    for nodes including the boundary (Dirichlet solves).
    """

    nx: int
    ny: int
    layout: str = "cell"

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise DomainError(f"grid must have nx, ny >= 8, got ({self.nx}, {self.ny})")
        if self.layout not in ("cell", "vertex"):
            raise DomainError(f"unknown grid layout {self.layout!r}")


def spacing(domain: Rectangle, grid: GridSpec) -> tuple[float, float]:
    return domain.lx / grid.nx, domain.ly / grid.ny


def vertex_coords(domain: Rectangle, grid: GridSpec):
    """1-D vertex coordinates (nx+1, ny+1 points including the boundary)."""
    x0, y0 = domain.corner
    return (
        x0 + np.linspace(0.0, domain.lx, grid.nx + 1),
        y0 + np.linspace(0.0, domain.ly, grid.ny + 1),
    )


def cell_centers(domain: Rectangle, grid: GridSpec):
    """1-D cell-center coordinates (nx, ny points strictly inside)."""
    hx, hy = spacing(domain, grid)
    x0, y0 = domain.corner
    return (
        x0 + hx * (np.arange(grid.nx) + 0.5),
        y0 + hy * (np.arange(grid.ny) + 0.5),
    )


def distance_to_boundary(domain, x) -> float:
    """Signed distance from x to the domain boundary (negative outside)."""
    x = np.asarray(x, dtype=float)
    if domain.kind == "disk":
        return domain.radius - float(np.hypot(*(x - np.asarray(domain.center))))
    x0, y0 = domain.corner
    dx = min(x[0] - x0, x0 + domain.lx - x[0])
    dy = min(x[1] - y0, y0 + domain.ly - x[1])
    if dx >= 0 and dy >= 0:
        return float(min(dx, dy))
    # outside: Euclidean distance to the rectangle, negated
    ox = max(-dx, 0.0) if dx < 0 else 0.0
    oy = max(-dy, 0.0) if dy < 0 else 0.0
    return -float(np.hypot(ox, oy))


def _require_interior(domain, p, name):
    if distance_to_boundary(domain, p) <= 0:
        raise DomainError(f"{name}={tuple(np.asarray(p, float))} is not strictly inside the domain")


# ---------------------------------------------------------------------------
# Disk: image-charge closed form.
#
# With unit-scaled coordinates xh = (x-c)/R, yh = (y-c)/R,
#     F(x, y) = -log R - (1/2) log(|xh|^2 |yh|^2 - 2 xh.yh + 1),
# which is harmonic in x (image charge at yh/|yh|^2 lies outside), equals
# -log|x-y| on |xh| = 1, and is manifestly symmetric in (x, y).
# ---------------------------------------------------------------------------


def _disk_F(domain: Disk, x, y):
    R = domain.radius
    c = np.asarray(domain.center)
    xh = (np.asarray(x, float) - c) / R
    yh = (np.asarray(y, float) - c) / R
    s = np.dot(xh, xh) * np.dot(yh, yh) - 2.0 * np.dot(xh, yh) + 1.0
    return -np.log(R) - 0.5 * np.log(s)


def _disk_grad_F(domain: Disk, x, y):
    R = domain.radius
    c = np.asarray(domain.center)
    xh = (np.asarray(x, float) - c) / R
    yh = (np.asarray(y, float) - c) / R
    s = np.dot(xh, xh) * np.dot(yh, yh) - 2.0 * np.dot(xh, yh) + 1.0
    return -(xh * np.dot(yh, yh) - yh) / (R * s)


# ---------------------------------------------------------------------------
# Rectangle: finite-difference Dirichlet solve, factorization and per-source
# fields memoized.  Caches are plain dicts: safe for one writer at a time,
# values are immutable once inserted.
# ---------------------------------------------------------------------------

_FACTOR_CACHE: dict = {}
_FIELD_CACHE: dict = {}

DEFAULT_GREEN_CELLS = 192


def default_green_grid(domain: Rectangle) -> GridSpec:
    """Vertex grid used for F solves when the caller does not pass one."""
    h = min(domain.lx, domain.ly) / DEFAULT_GREEN_CELLS
    nx = max(8, int(round(domain.lx / h)))
    ny = max(8, int(round(domain.ly / h)))
    return GridSpec(nx, ny, layout="vertex")


def _laplace_factorization(domain: Rectangle, grid: GridSpec):
    """LU-factorized 5-point Laplacian on interior vertices (SPD system)."""
    key = (domain, grid)
    hit = _FACTOR_CACHE.get(key)
    if hit is not None:
        return hit
    nx, ny = grid.nx, grid.ny
    hx, hy = spacing(domain, grid)
    mi, mj = nx - 1, ny - 1  # interior vertex counts
    n = mi * mj
    ax, ay = 1.0 / hx**2, 1.0 / hy**2
    main = np.full(n, 2.0 * (ax + ay))
    # interior index (i, j) -> i * mj + j, i along x
    diags = [main]
    offsets = [0]
    ex = np.full(n - mj, ax)
    diags += [-ex, -ex]
    offsets += [mj, -mj]
    ey = np.full(n - 1, ay)
    ey[mj - 1 :: mj] = 0.0  # no coupling across column wrap
    diags += [-ey, -ey]
    offsets += [1, -1]
    A = sp.diags(diags, offsets, shape=(n, n), format="csc")
    solve = spla.factorized(A)
    hit = (solve, A)
    _FACTOR_CACHE[key] = hit
    return hit


def solve_laplace_dirichlet(domain: Rectangle, grid: GridSpec, boundary_data):
    """Solve Laplace's equation on a rectangle with Dirichlet data.

    ``boundary_data`` is a callable taking a point (2,) and returning the
    boundary value.  Returns the field on the (nx+1, ny+1) vertex grid with
    boundary vertices set to the data and the 5-point Laplacian residual at
    interior vertices at solver tolerance.
    """
    if domain.kind != "rectangle":
        raise DomainError("Dirichlet solve is only available on rectangles")
    nx, ny = grid.nx, grid.ny
    xs, ys = vertex_coords(domain, grid)
    field = np.zeros((nx + 1, ny + 1))
    # boundary vertices
    for i in (0, nx):
        for j in range(ny + 1):
            field[i, j] = boundary_data((xs[i], ys[j]))
    for j in (0, ny):
        for i in range(1, nx):
            field[i, j] = boundary_data((xs[i], ys[j]))
    if not np.all(np.isfinite(field[0, :])) or not np.all(np.isfinite(field[-1, :])) \
            or not np.all(np.isfinite(field[:, 0])) or not np.all(np.isfinite(field[:, -1])):
        raise DomainError("boundary data is not finite on all boundary vertices")

    hx, hy = spacing(domain, grid)
    ax, ay = 1.0 / hx**2, 1.0 / hy**2
    mi, mj = nx - 1, ny - 1
    b = np.zeros((mi, mj))
    b[0, :] += ax * field[0, 1:ny]
    b[-1, :] += ax * field[nx, 1:ny]
    b[:, 0] += ay * field[1:nx, 0]
    b[:, -1] += ay * field[1:nx, ny]

    solve, A = _laplace_factorization(domain, grid)
    rhs = b.ravel()
    sol = solve(rhs)
    res = np.linalg.norm(A @ sol - rhs)
    rel = res / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(rel) or rel > 1e-10:
        raise SolverError("Dirichlet solve did not reach tolerance", residual=rel)
    field[1:nx, 1:ny] = sol.reshape(mi, mj)
    return field


def _quantize_source(domain: Rectangle, grid: GridSpec, y):
    """Snap a source point to the h/4 lattice used as the cache key."""
    hx, hy = spacing(domain, grid)
    x0, y0 = domain.corner
    qx, qy = hx / 4.0, hy / 4.0
    ix = int(round((y[0] - x0) / qx))
    iy = int(round((y[1] - y0) / qy))
    return (ix, iy), np.array([x0 + ix * qx, y0 + iy * qy])


def green_field(domain: Rectangle, y, grid: GridSpec | None = None):
    """Cached vertex-grid field of F(., y_q) for the quantized source y_q.

    Returns (field, grid, y_q).  One Dirichlet solve per distinct quantized
    source; the factorized operator is shared across sources.
    """
    if grid is None:
        grid = default_green_grid(domain)
    y = np.asarray(y, dtype=float)
    hx, hy = spacing(domain, grid)
    if distance_to_boundary(domain, y) < 0.5 * min(hx, hy):
        raise DomainError("source point is too close to the rectangle boundary for the grid")
    key_q, yq = _quantize_source(domain, grid, y)
    key = (domain, grid, key_q)
    field = _FIELD_CACHE.get(key)
    if field is None:
        def data(p):
            return -np.log(np.hypot(p[0] - yq[0], p[1] - yq[1]))

        field = solve_laplace_dirichlet(domain, grid, data)
        _FIELD_CACHE[key] = field
    return field, grid, yq


def bilinear_eval(field, domain: Rectangle, grid: GridSpec, p):
    """Bilinear interpolation of a vertex-grid field at point p."""
    hx, hy = spacing(domain, grid)
    x0, y0 = domain.corner
    sx = (p[0] - x0) / hx
    sy = (p[1] - y0) / hy
    i = min(max(int(np.floor(sx)), 0), grid.nx - 1)
    j = min(max(int(np.floor(sy)), 0), grid.ny - 1)
    tx, ty = sx - i, sy - j
    return (
        field[i, j] * (1 - tx) * (1 - ty)
        + field[i + 1, j] * tx * (1 - ty)
        + field[i, j + 1] * (1 - tx) * ty
        + field[i + 1, j + 1] * tx * ty
    )


def bilinear_eval_many(field, domain: Rectangle, grid: GridSpec, pts):
    """Vectorized bilinear interpolation at an (N, 2) array of points."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    hx, hy = spacing(domain, grid)
    x0, y0 = domain.corner
    sx = (pts[:, 0] - x0) / hx
    sy = (pts[:, 1] - y0) / hy
    i = np.clip(np.floor(sx).astype(int), 0, grid.nx - 1)
    j = np.clip(np.floor(sy).astype(int), 0, grid.ny - 1)
    tx = sx - i
    ty = sy - j
    return (
        field[i, j] * (1 - tx) * (1 - ty)
        + field[i + 1, j] * tx * (1 - ty)
        + field[i, j + 1] * (1 - tx) * ty
        + field[i + 1, j + 1] * tx * ty
    )


def boundary_green_F(domain, x, y, grid: GridSpec | None = None) -> float:
    """The harmonic boundary correction F(x, y).

    Harmonic in x, equals -log|x - y| on the boundary, symmetric in its
    arguments.  x = y is allowed (F is smooth on the diagonal).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _require_interior(domain, x, "x")
    _require_interior(domain, y, "y")
    if domain.kind == "disk":
        return float(_disk_F(domain, x, y))
    field, grid, _ = green_field(domain, y, grid)
    return float(bilinear_eval(field, domain, grid, x))


def grad_boundary_green_F(domain, x, y, grid: GridSpec | None = None):
    """Gradient of F with respect to the first argument.

    Analytic on the disk; centered differences of the interpolated cached
    field with step h on rectangles.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _require_interior(domain, x, "x")
    _require_interior(domain, y, "y")
    if domain.kind == "disk":
        return _disk_grad_F(domain, x, y)
    field, grid, _ = green_field(domain, y, grid)
    hx, hy = spacing(domain, grid)

    def diff(axis, h):
        lo = domain.corner[axis]
        hi = lo + (domain.lx if axis == 0 else domain.ly)
        step = np.zeros(2)
        step[axis] = h
        # centered where possible, one-sided next to the wall
        if x[axis] - h < lo:
            return (bilinear_eval(field, domain, grid, x + step)
                    - bilinear_eval(field, domain, grid, x)) / h
        if x[axis] + h > hi:
            return (bilinear_eval(field, domain, grid, x)
                    - bilinear_eval(field, domain, grid, x - step)) / h
        return (bilinear_eval(field, domain, grid, x + step)
                - bilinear_eval(field, domain, grid, x - step)) / (2 * h)

    return np.array([diff(0, hx), diff(1, hy)])
