import numpy as np
import pytest

from vortexlab.harmonic_map import VortexConfiguration, VortexFamily
from vortexlab.reduced_dynamics import (
    OdeState,
    integrate,
    vortex_rhs,
    write_trajectory_csv,
)


def single(r, d=1):
    return VortexConfiguration(u=VortexFamily([[r, 0.0]], [d]))


class TestRHS:
    def test_center_vortex_stationary(self, unit_disk):
        va, vb = vortex_rhs(OdeState(0.0, single(0.0)), unit_disk)
        assert va == pytest.approx(np.zeros((1, 2)), abs=1e-14)

    def test_offcenter_velocity(self, unit_disk):
        va, _ = vortex_rhs(OdeState(0.0, single(0.5)), unit_disk)
        assert va[0] == pytest.approx([0.0, -4.0 / 3.0], abs=1e-10)

    def test_families_decouple(self, unit_disk):
        cfg_a = VortexConfiguration(u=VortexFamily([[0.3, 0.1], [-0.2, 0.2]], [1, -1]))
        cfg_ab = VortexConfiguration(
            u=VortexFamily([[0.3, 0.1], [-0.2, 0.2]], [1, -1]),
            v=VortexFamily([[0.0, -0.5], [0.5, -0.2]], [1, 1]),
        )
        va1, _ = vortex_rhs(OdeState(0.0, cfg_a), unit_disk)
        va2, _ = vortex_rhs(OdeState(0.0, cfg_ab), unit_disk)
        assert np.array_equal(va1, va2)  # bit-identical


class TestIntegrate:
    def test_circular_orbit(self, unit_disk):
        # closed form: radius conserved, angular speed 2/(1-r^2), clockwise
        r = 0.5
        omega = 2.0 / (1.0 - r**2)
        period = 2 * np.pi / omega
        dt = 1e-4
        traj = integrate(OdeState(0.0, single(r)), unit_disk, period, dt, sample_stride=100)
        assert traj.reason == "completed"
        radii = np.hypot(traj.positions[:, 0, 0], traj.positions[:, 0, 1])
        assert np.abs(radii - r).max() <= 1e-6
        # end angle after the integer number of steps actually taken
        t_end = traj.times[-1]
        expected = np.array([r * np.cos(omega * t_end), -r * np.sin(omega * t_end)])
        assert traj.positions[-1, 0] == pytest.approx(expected, abs=1e-8)

    def test_center_vortex_stationary(self, unit_disk):
        traj = integrate(OdeState(0.0, single(0.0)), unit_disk, 0.5, 1e-3)
        assert np.abs(traj.positions[:, 0, :]).max() <= 1e-12

    def test_same_sign_pair_w_drift(self, unit_disk):
        cfg = VortexConfiguration(u=VortexFamily([[0.2, 0.0], [-0.2, 0.0]], [1, 1]))
        traj = integrate(OdeState(0.0, cfg), unit_disk, 1.0, 1e-4, sample_stride=100)
        assert traj.reason == "completed"
        assert traj.metadata["w_drift_u"] <= 1e-8

    def test_conservation_order_dt4(self, unit_disk):
        # generic (aperiodic) three-vortex motion shows the secular dt^4
        # drift; symmetric pairs behave oscillator-like and scale dt^5
        cfg = VortexConfiguration(
            u=VortexFamily([[0.3, 0.1], [-0.25, 0.2], [0.0, -0.35]], [1, 1, -1])
        )
        drifts = []
        dts = [4e-4, 2e-4, 1e-4]
        for dt in dts:
            traj = integrate(OdeState(0.0, cfg), unit_disk, 1.0, dt, sample_stride=10**6)
            assert traj.reason == "completed"
            drifts.append(traj.metadata["w_drift_u"])
        slope = np.polyfit(np.log(dts), np.log(drifts), 1)[0]
        assert slope == pytest.approx(4.0, abs=0.5)
        assert max(drifts) <= 1e-8

    def test_decoupling_exact(self, unit_disk):
        cfg_a = VortexConfiguration(u=VortexFamily([[0.3, 0.0], [-0.3, 0.0]], [1, -1]))
        cfg_ab = VortexConfiguration(
            u=VortexFamily([[0.3, 0.0], [-0.3, 0.0]], [1, -1]),
            v=VortexFamily([[0.0, 0.4]], [1]),
        )
        t1 = integrate(OdeState(0.0, cfg_a), unit_disk, 0.05, 1e-3)
        t2 = integrate(OdeState(0.0, cfg_ab), unit_disk, 0.05, 1e-3)
        assert np.array_equal(t1.positions[:, :2, :], t2.positions[:, :2, :])

    def test_time_reversal(self, unit_disk):
        cfg = VortexConfiguration(u=VortexFamily([[0.25, 0.1], [-0.3, -0.1]], [1, 1]))
        fwd = integrate(OdeState(0.0, cfg), unit_disk, 0.2, 1e-4, sample_stride=10**6)
        flipped = VortexConfiguration(
            u=VortexFamily(fwd.positions[-1, :, :], -cfg.u.degrees)
        )
        back = integrate(OdeState(0.0, flipped), unit_disk, 0.2, 1e-4, sample_stride=10**6)
        tol = 10 * max(fwd.metadata["w_drift_u"], 1e-12)
        assert np.abs(back.positions[-1] - cfg.u.positions).max() <= max(tol, 1e-9)

    def test_speeds_bounded(self, unit_disk):
        cfg = VortexConfiguration(u=VortexFamily([[0.3, 0.0], [-0.3, 0.0]], [1, 1]))
        traj = integrate(OdeState(0.0, cfg), unit_disk, 0.1, 1e-3)
        assert traj.reason == "completed"
        steps = np.diff(traj.positions[:, 0, :], axis=0)
        speeds = np.hypot(steps[:, 0], steps[:, 1]) / np.diff(traj.times)[:, None].ravel()
        assert speeds.max() < 50.0

    def test_collision_halt(self, unit_disk):
        cfg = VortexConfiguration(u=VortexFamily([[0.004, 0.0], [-0.004, 0.0]], [1, -1]))
        traj = integrate(OdeState(0.0, cfg), unit_disk, 1.0, 1e-4)
        assert traj.reason == "collision"
        assert traj.times[-1] < 1.0

    def test_boundary_halt(self, unit_disk):
        # a vortex inside the 1e-3 wall margin trips the guard immediately
        cfg = VortexConfiguration(u=VortexFamily([[1.0 - 5e-4, 0.0]], [1]))
        traj = integrate(OdeState(0.0, cfg), unit_disk, 1.0, 1e-4, sample_stride=100)
        assert traj.reason == "boundary"
        assert traj.times[-1] < 1.0


class TestTrajectoryExport:
    def test_csv_rows(self, unit_disk, tmp_path):
        cfg = VortexConfiguration(
            u=VortexFamily([[0.3, 0.0]], [1]), v=VortexFamily([[-0.3, 0.0]], [-1])
        )
        traj = integrate(OdeState(0.0, cfg), unit_disk, 0.01, 1e-3)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,component,index,degree,x,y"
        assert len(lines) - 1 == len(traj.times) * 2
        assert lines[1].split(",")[1] == "u"
        assert lines[2].split(",")[1] == "v"
