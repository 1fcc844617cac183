import numpy as np
import pytest

from vortexlab.errors import SingularityError
from vortexlab.geometry import Disk
from vortexlab.renormalized_energy import (
    energy_report,
    grad_W,
    grad_W_all,
    min_separation,
    renormalized_W,
)


def fd_grad(domain, positions, degrees, j, h=1e-5):
    """Central finite differences of W (the independent gradient route)."""
    positions = np.asarray(positions, dtype=float)
    out = np.zeros(2)
    for c in range(2):
        up = positions.copy()
        dn = positions.copy()
        up[j, c] += h
        dn[j, c] -= h
        out[c] = (renormalized_W(domain, up, degrees)
                  - renormalized_W(domain, dn, degrees)) / (2 * h)
    return out


def random_admissible(rng, n):
    """Vortices in the unit disk with healthy separations."""
    while True:
        pts = rng.uniform(-0.6, 0.6, size=(n, 2))
        if min_separation(pts, np.empty((0, 2)), Disk((0, 0), 1.0)) > 0.04:
            return pts


class TestMinSeparation:
    def test_single_center_vortex(self, unit_disk):
        assert min_separation([[0.0, 0.0]], [], unit_disk) == pytest.approx(0.25)

    def test_pair(self, unit_disk):
        r = min_separation([[0.3, 0.0], [-0.3, 0.0]], [], unit_disk)
        assert r == pytest.approx(0.25 * min(0.6, 0.7))

    def test_cross_family(self, unit_disk):
        r = min_separation([[0.2, 0.0]], [[0.2, 0.1]], unit_disk)
        assert r == pytest.approx(0.025)

    def test_degenerate_goes_nonpositive(self, unit_disk):
        assert min_separation([[0.2, 0.0], [0.2, 0.0]], [], unit_disk) == 0.0
        assert min_separation([[1.5, 0.0]], [], unit_disk) < 0.0


class TestW:
    def test_center_vortex_zero(self, unit_disk):
        assert renormalized_W(unit_disk, [[0.0, 0.0]], [1]) == pytest.approx(0.0, abs=1e-14)

    def test_offcenter_closed_form(self, unit_disk):
        # W = pi log(1 - r^2) for a single vortex at radius r
        for r in (0.25, 0.5, 0.7):
            val = renormalized_W(unit_disk, [[r, 0.0]], [1])
            assert val == pytest.approx(np.pi * np.log(1 - r**2), abs=1e-12)

    def test_rotation_invariance(self, unit_disk):
        pts = np.array([[0.3, 0.0], [-0.3, 0.0]])
        w0 = renormalized_W(unit_disk, pts, [1, -1])
        phi = np.deg2rad(37.0)
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        w1 = renormalized_W(unit_disk, pts @ rot.T, [1, -1])
        assert w1 == pytest.approx(w0, abs=1e-10)

    def test_degree_flip_invariance(self, unit_disk):
        rng = np.random.default_rng(3)
        pts = random_admissible(rng, 3)
        d = np.array([1, -1, 1])
        assert renormalized_W(unit_disk, pts, d) == pytest.approx(
            renormalized_W(unit_disk, pts, -d), abs=1e-12
        )

    def test_coincident_raises(self, unit_disk):
        with pytest.raises(SingularityError):
            renormalized_W(unit_disk, [[0.1, 0.0], [0.1, 0.0]], [1, 1])


class TestGradW:
    def test_center_vortex_stationary(self, unit_disk):
        assert grad_W(unit_disk, [[0.0, 0.0]], [1], 0) == pytest.approx([0.0, 0.0], abs=1e-14)

    def test_offcenter_closed_form(self, unit_disk):
        g = grad_W(unit_disk, [[0.5, 0.0]], [1], 0)
        assert g == pytest.approx([-2 * np.pi * 0.5 / 0.75, 0.0], abs=1e-10)
        fd = fd_grad(unit_disk, [[0.5, 0.0]], [1], 0)
        assert g == pytest.approx(fd, rel=1e-6)

    def test_three_vortex_fd_agreement(self, unit_disk):
        rng = np.random.default_rng(11)
        pts = random_admissible(rng, 3)
        degs = np.array([1, -1, 1])
        for j in range(3):
            g = grad_W(unit_disk, pts, degs, j)
            fd = fd_grad(unit_disk, pts, degs, j)
            assert np.linalg.norm(g - fd) / (1 + np.linalg.norm(g)) <= 1e-6

    def test_rotation_equivariance(self, unit_disk):
        pts = np.array([[0.3, 0.1], [-0.2, -0.4]])
        degs = np.array([1, 1])
        phi = 0.83
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        g0 = grad_W_all(unit_disk, pts, degs)
        g1 = grad_W_all(unit_disk, pts @ rot.T, degs)
        assert np.allclose(g1, g0 @ rot.T, atol=1e-10)
        assert renormalized_W(unit_disk, pts @ rot.T, degs) == pytest.approx(
            renormalized_W(unit_disk, pts, degs), abs=1e-10
        )

    def test_report_shape(self, unit_disk):
        rep = energy_report(unit_disk, [[0.3, 0.0], [-0.3, 0.0]], [1, -1])
        assert rep.gradients.shape == (2, 2)
        assert np.all(np.isfinite(rep.gradients))
        assert rep.min_separation == pytest.approx(0.15)
