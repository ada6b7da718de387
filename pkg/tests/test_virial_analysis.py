import numpy as np
import pytest

from viriallab import evolve as ev
from viriallab import functionals as fn
from viriallab import soliton as sol
from viriallab import virial_analysis as va
from viriallab import weight as w
from viriallab.field import LineField


def gaussian_field(L=20.0, N=2**12, amp=1.0):
    return LineField.from_function(lambda x: amp * np.exp(-(x**2)), L, N)


def smooth_free_run(dt, stride, T=0.1, N=2**12):
    f = gaussian_field(N=N)
    cfg = ev.SolverConfig(
        dt_init=dt, dt_max=dt, phase_tol=1e6, T_end=T, snapshot_stride=stride
    )
    return ev.run(f, fn.ModelSpec.free(), cfg)


class TestA0:
    def test_value(self):
        assert va.a0() == pytest.approx(0.7825422900366437, abs=1e-15)

    def test_fourth_power(self):
        assert va.a0() ** 4 == pytest.approx(0.375, abs=1e-16)

    def test_proof_coefficient(self):
        assert 8.0 / 3.0 * va.a0() ** 4 == pytest.approx(1.0, abs=1e-15)


class TestEnvelope:
    def test_unit_case(self):
        assert va.envelope(1.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_four_case(self):
        assert va.envelope(4.0, 0.0, 1.0) == pytest.approx(2.0, abs=1e-15)

    def test_is_root(self):
        I0, Ip, et = 2.3, -0.7, 1.9
        t = va.envelope(I0, Ip, et)
        assert I0 + Ip * t - et * t**2 == pytest.approx(0.0, abs=1e-12)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            va.envelope(1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            va.envelope(-1.0, 0.0, 1.0)


class TestReport:
    def test_free_gaussian_residual(self):
        traj = smooth_free_run(dt=1e-3, stride=10)
        rep = va.report(traj, 8.0, fn.ModelSpec.free())
        assert rep.max_residual() < 1e-3
        assert rep.violations() == 0

    def test_residual_refines_in_delta(self):
        coarse = smooth_free_run(dt=1e-3, stride=10)
        fine = smooth_free_run(dt=5e-4, stride=10)
        r1 = va.report(coarse, 8.0, fn.ModelSpec.free()).max_residual()
        r2 = va.report(fine, 8.0, fn.ModelSpec.free()).max_residual()
        order = np.log2(r1 / r2)
        assert order >= 1.8

    def test_eta_tilde_consistency(self):
        traj = smooth_free_run(dt=1e-3, stride=20)
        rep = va.report(traj, 4.0, fn.ModelSpec.free())
        E = traj.energy_series[0]
        assert rep.eta_tilde == pytest.approx(-8 * E - rep.eta, abs=1e-12)

    def test_rejects_sparse_or_nonuniform(self):
        traj = smooth_free_run(dt=1e-3, stride=200)
        assert len(traj.snapshots) < 3
        with pytest.raises(ValueError):
            va.report(traj, 4.0, fn.ModelSpec.free())
        traj2 = smooth_free_run(dt=1e-3, stride=10)
        traj2.times = traj2.times.copy()
        traj2.times[2] += 1e-4
        with pytest.raises(ValueError):
            va.report(traj2, 4.0, fn.ModelSpec.free())


class TestFindR:
    def soliton_data(self, lam, L=16.0, N=2**12):
        f = LineField.from_function(lambda x: np.zeros_like(x), L, N)
        return sol.scaled_data(lam, 1.0, f)

    def test_negative_energy_data(self):
        u0 = self.soliton_data(1.1)
        R, eta_val, eta_tilde = va.find_R(u0, fn.ModelSpec.free())
        assert eta_tilde > 0
        c1, c2, _ = va.selection_clauses(u0, fn.ModelSpec.free(), R)
        assert c1 and c2
        assert eta_val == pytest.approx(w.eta(R, fn.mass(u0)), rel=1e-14)

    def test_monotone_beyond_found_R(self):
        u0 = self.soliton_data(1.1)
        R, _, _ = va.find_R(u0, fn.ModelSpec.free())
        for _ in range(5):
            R *= 2.0
            c1, c2, _ = va.selection_clauses(u0, fn.ModelSpec.free(), R)
            assert c1 and c2

    def test_rejects_positive_energy(self):
        u0 = self.soliton_data(0.9)
        assert fn.energy(u0, fn.ModelSpec.free()) > 0
        with pytest.raises(ValueError):
            va.find_R(u0, fn.ModelSpec.free())

    def test_ladder_exhaustion(self):
        u0 = self.soliton_data(1.1)
        with pytest.raises(RuntimeError):
            va.find_R(u0, fn.ModelSpec.free(), max_doublings=2)


class TestInequalityFlags:
    def test_free_soliton_scaled(self):
        u0 = LineField.from_function(lambda x: 1.1 * sol.exact_Q(1.0, x), 16.0, 2**12)
        model = fn.ModelSpec.free()
        R, eta_val, _ = va.find_R(u0, model)
        E = fn.energy(u0, model)
        checked, satisfied, rhs = va.inequality_flags([u0], R, model, E, eta_val)
        assert checked[0]
        assert satisfied[0]
        assert rhs[0] <= 16 * E + 2 * eta_val + 1e-6 * (1 + abs(E))
