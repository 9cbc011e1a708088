import numpy as np
import pytest
from scipy.linalg import expm

import curvepulse as cp
from curvepulse.errors import ConvergenceError, InputError
from curvepulse.su2 import SIGMA_X, SIGMA_Y, SIGMA_Z, as_matrix, pauli_compose


def square_x_pulse(duration=1.0, angle=np.pi, n_samples=128):
    return cp.square_pulse(duration, angle=angle, n_samples=n_samples)


class TestPropagate:
    def test_square_pi_pulse_is_x_flip(self):
        u = cp.propagate(square_x_pulse(), 0.0, refinement=1)
        assert cp.gate_distance(u, -1j * SIGMA_X) < 1e-12

    def test_free_evolution_exact(self):
        t = np.linspace(0.0, 2.0, 64)
        pulse = cp.PulseWaveform(t, np.zeros(64), np.zeros(64))
        delta = 0.3
        u = cp.propagate(pulse, delta, refinement=1)
        want = expm(-1j * delta * 2.0 * SIGMA_Z)
        assert cp.gate_distance(u, want) < 1e-12

    def test_matches_dense_expm_oracle(self):
        # independent oracle: scipy expm over very fine midpoint steps
        rng = np.random.default_rng(12)
        n = 33
        t = np.linspace(0.0, 1.0, n)
        omega = 2.0 + np.sin(2 * np.pi * t) + 0.3 * rng.normal(size=n).cumsum() / n
        omega = np.abs(omega)
        phi = 0.4 * np.cos(2 * np.pi * t)
        pulse = cp.PulseWaveform(t, omega, phi)
        delta = 0.05

        fine = 512
        u_ref = np.eye(2, dtype=complex)
        wx, wy = pulse.omega_x, pulse.omega_y
        for k in range(n - 1):
            for j in range(fine):
                frac = (j + 0.5) / fine
                hx = 0.5 * (wx[k] + frac * (wx[k + 1] - wx[k]))
                hy = 0.5 * (wy[k] + frac * (wy[k + 1] - wy[k]))
                h = pauli_compose([hx, hy, delta])
                u_ref = expm(-1j * (t[1] - t[0]) / fine * h) @ u_ref
        u = cp.propagate(pulse, delta, refinement=512)
        assert cp.gate_distance(u, u_ref) < 1e-10

    def test_certificate(self):
        pulse = square_x_pulse(n_samples=64)
        u, cert = cp.propagate(pulse, 0.1, certify=True)
        assert cert.converged
        assert cert.last_delta < 1e-8

    def test_strict_raises_for_unresolvable(self):
        # absurdly fast drive cannot converge within the refinement cap
        t = np.linspace(0.0, 1.0, 16)
        pulse = cp.PulseWaveform(t, np.full(16, 1e7), np.linspace(0, 40 * np.pi, 16))
        with pytest.raises(ConvergenceError):
            cp.propagate(pulse, 0.0, certify=True, strict=True, max_refinement=4)

    def test_input_validation(self):
        with pytest.raises(InputError):
            cp.propagate("not a pulse", 0.0)


class TestInfidelity:
    def test_exact_cases(self):
        rng = np.random.default_rng(2)
        from conftest import random_special_unitary

        u = random_special_unitary(rng).matrix
        assert cp.average_gate_infidelity(u, u) == 0.0
        assert cp.average_gate_infidelity(np.exp(0.7j) * u, u) < 1e-15
        assert abs(cp.average_gate_infidelity(SIGMA_X, np.eye(2)) - 2.0 / 3.0) < 1e-15

    def test_bounds_and_phase_invariance(self):
        rng = np.random.default_rng(13)
        from conftest import random_special_unitary

        for _ in range(100):
            a = random_special_unitary(rng).matrix
            b = random_special_unitary(rng).matrix
            val = cp.average_gate_infidelity(a, b)
            assert 0.0 <= val <= 1.0
            val2 = cp.average_gate_infidelity(np.exp(1j * rng.uniform(0, 2 * np.pi)) * a, b)
            assert abs(val - val2) < 1e-14


class TestSweep:
    def test_square_pulse_uncorrected_slope(self):
        sweep = cp.infidelity_sweep(square_x_pulse(n_samples=256))
        assert abs(sweep.slope - 2.0) < 0.2

    def test_even_in_noise_sign(self):
        sweep = cp.infidelity_sweep(square_x_pulse(n_samples=256), check_even=True)
        assert sweep.asymmetry is not None
        assert sweep.asymmetry < 1e-6

    def test_grid_validation(self):
        pulse = square_x_pulse()
        with pytest.raises(InputError):
            cp.infidelity_sweep(pulse, delta_beta=np.array([-0.1, 0.2, 0.3]))
        with pytest.raises(InputError):
            cp.infidelity_sweep(pulse, delta_beta=np.logspace(-2, -1.5, 6))

    def test_zero_noise_infidelity_floor(self, builtin_curves, builtin_frenet, builtin_pulses):
        # a correctly synthesized pulse reproduces its geometric target
        # essentially exactly at zero noise
        for name in ("circle", "clifford_fig1"):
            gate = cp.target_gate_from_curve(builtin_curves[name], builtin_frenet[name])
            u = cp.propagate(builtin_pulses[name], 0.0)
            assert cp.average_gate_infidelity(u, gate.unitary) < 1e-10, name

    def test_slope_stability_under_doubling(self, builtin_pulses):
        pulse = builtin_pulses["clifford_fig1"]
        base = cp.infidelity_sweep(pulse)
        dense = cp.infidelity_sweep(
            pulse,
            delta_beta=cp.default_noise_grid(pulse.duration, n_points=24),
            refinement=2 * base.refinement,
        )
        assert abs(base.slope - dense.slope) < 0.1


class TestMagnus:
    def test_zero_drive(self):
        t = np.linspace(0.0, 2.0, 512)
        pulse = cp.PulseWaveform(t, np.zeros(512), np.zeros(512))
        mag = cp.magnus_errors(pulse)
        assert np.max(np.abs(mag.a1_vector - np.array([0.0, 0.0, 2.0]))) < 1e-12
        assert mag.a2_norm < 1e-12

    def test_routes_agree(self, builtin_pulses):
        for name in ("circle", "alpha_eq12", "clifford_fig1"):
            mag = cp.magnus_errors(builtin_pulses[name])
            assert mag.route_disagreement is not None
            assert mag.route_disagreement < 1e-9, name

    def test_substep_cap(self, builtin_pulses):
        with pytest.raises(InputError):
            cp.magnus_errors(builtin_pulses["circle"], refinement=4, nested=True)

    def test_first_order_reconstruction_scaling(self):
        # U0 * exp(-i db A1.sigma) reproduces the noisy propagator to O(db^2)
        pulse = square_x_pulse(n_samples=256)
        mag = cp.magnus_errors(pulse)
        u0 = as_matrix(cp.propagate(pulse, 0.0, refinement=32))
        dists = []
        for db in (0.02, 0.01):
            recon = u0 @ expm(-1j * db * pauli_compose(mag.a1_vector))
            exact = as_matrix(cp.propagate(pulse, db, refinement=32))
            dists.append(cp.gate_distance(recon, exact))
        assert dists[0] / dists[1] > 2.5

    def test_closed_curve_pulse_small_a1(self, builtin_pulses):
        mag = cp.magnus_errors(builtin_pulses["circle"])
        assert mag.a1_norm < 1e-9

    def test_sphere_loop_third_order_vanishes(self, builtin_curves):
        # geometric oracle for the third error integral: the spherical loop's
        # reversal symmetry (x even, y odd, z even) kills it identically,
        # which is why its noise scaling beats the generic second-order rate
        from curvepulse._numerics import cumtrapz, fd1

        def third_order_vector(curve):
            v = fd1(curve.points, curve.dt)
            r = curve.points
            dt = curve.dt
            s = cumtrapz(np.cross(v, r), dt)
            m = cumtrapz(v[:, :, None] * r[:, None, :], dt)
            g = cumtrapz(np.sum(v * r, axis=1), dt)
            term1 = np.cross(v, s)
            term2 = np.einsum("nij,nj->ni", m, v) - g[:, None] * v
            return -(2.0 / 3.0) * np.trapezoid(term1 + term2, dx=dt, axis=0)

        assert np.linalg.norm(third_order_vector(builtin_curves["alpha_eq12"])) < 1e-6
        assert np.linalg.norm(third_order_vector(builtin_curves["const_torsion_gamma"])) > 0.1
        assert np.linalg.norm(third_order_vector(builtin_curves["clifford_fig1"])) > 0.1

        # the symmetry itself, on the raw loop coordinates
        from curvepulse.curves import _sphere_loop_point

        lam = np.linspace(0.1, 3.0, 7)
        fwd = _sphere_loop_point(lam)
        rev = _sphere_loop_point(-lam)
        assert np.max(np.abs(rev - fwd * np.array([1.0, -1.0, 1.0]))) < 1e-14


class TestSquarePulse:
    def test_rotation_angle(self):
        pulse = cp.square_pulse(2.0, angle=2 * np.pi / 3)
        u = cp.propagate(pulse, 0.0, refinement=1)
        _, angle = cp.unitary_axis_angle(u)
        assert abs(angle - 2 * np.pi / 3) < 1e-12

    def test_rejects_bad_duration(self):
        with pytest.raises(InputError):
            cp.square_pulse(0.0)
