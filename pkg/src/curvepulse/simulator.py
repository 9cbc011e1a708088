"""Noisy two-level evolution, gate fidelity sweeps, and Magnus-term oracles.

The Hamiltonian is (omega_x/2) sx + (omega_y/2) sy + delta_beta sz with the
Cartesian drive components interpolated linearly between waveform samples.
``propagate`` multiplies exact substep propagators with midpoint-sampled
coefficients; the interaction-frame trajectory behind the Magnus integrals
uses a higher-order per-substep log so the quadratures, not the stepping,
limit the accuracy.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._numerics import cumtrapz_end_corrected, fd1, trapz_end_corrected
from .errors import ConvergenceError, InputError
from .su2 import Unitary2, as_matrix, gate_distance
from .synthesis import PulseWaveform

MAX_REFINEMENT = 64
MAGNUS_SUBSTEP_CAP = 8192
_CONVERGENCE_TOL = 1e-8


@dataclass(frozen=True)
class PropagationCertificate:
    converged: bool
    refinement: int
    last_delta: float


@dataclass(frozen=True)
class NoiseSweepResult:
    """Quasistatic-noise sweep with its fitted log-log scaling exponent."""

    delta_beta: np.ndarray
    infidelity: np.ndarray
    slope: float
    intercept: float
    residual: float
    used: np.ndarray
    refinement: int
    asymmetry: float = None


@dataclass(frozen=True)
class MagnusErrors:
    """First and second error integrals of the interaction-frame expansion.

    a1_vector is the Pauli vector of the first integral (the curve endpoint);
    a2_vector is the real second-order vector R2 (the operator is -i R2.sigma).
    route_disagreement compares the nested O(N^2) and single-pass quadratures.
    """

    a1_vector: np.ndarray
    a2_vector: np.ndarray
    a1_norm: float
    a2_norm: float
    substeps: int
    route_disagreement: float = None


def _substep_midpoints(pulse, delta_beta, refinement):
    n = pulse.n_samples
    dt = pulse.dt / refinement
    total = (n - 1) * refinement
    t_mid = (np.arange(total) + 0.5) * dt
    wx = np.interp(t_mid, pulse.t, pulse.omega_x)
    wy = np.interp(t_mid, pulse.t, pulse.omega_y)
    hz = np.full(total, float(delta_beta))
    return 0.5 * wx, 0.5 * wy, hz, dt


def _substep_nodes(pulse, delta_beta, refinement):
    n = pulse.n_samples
    dt = pulse.dt / refinement
    total = (n - 1) * refinement + 1
    t_nodes = np.arange(total) * dt
    wx = np.interp(t_nodes, pulse.t, pulse.omega_x)
    wy = np.interp(t_nodes, pulse.t, pulse.omega_y)
    hz = np.full(total, float(delta_beta))
    return 0.5 * wx, 0.5 * wy, hz, dt


def _propagate_once(pulse, delta_beta, refinement):
    hx, hy, hz, dt = _substep_midpoints(pulse, delta_beta, refinement)
    u1, u2 = _accel.su2_product(hx, hy, hz, dt)
    return Unitary2(u1, u2).normalized()


def propagate(
    pulse,
    delta_beta=0.0,
    refinement=None,
    certify=False,
    tol=_CONVERGENCE_TOL,
    max_refinement=MAX_REFINEMENT,
    strict=False,
):
    """Evolution operator of the noisy Hamiltonian over the full waveform.

    With refinement=None the substep count per sample interval is doubled
    until the result moves by less than `tol` (phase-aligned), up to
    `max_refinement`.  certify=True returns (unitary, certificate);
    strict=True raises ConvergenceError instead of returning an
    unconverged result.
    """
    if not isinstance(pulse, PulseWaveform):
        raise InputError("propagate expects a PulseWaveform")
    if refinement is not None:
        r = int(refinement)
        if r < 1:
            raise InputError("refinement must be >= 1")
        u = _propagate_once(pulse, delta_beta, r)
        if not certify:
            return u
        u2x = _propagate_once(pulse, delta_beta, 2 * r)
        delta = gate_distance(u, u2x)
        cert = PropagationCertificate(delta < tol, r, float(delta))
        if strict and not cert.converged:
            raise ConvergenceError(
                f"propagation not converged at refinement {r}: delta {delta:.3e}"
            )
        return u2x, cert

    r = 1
    u_prev = _propagate_once(pulse, delta_beta, r)
    while True:
        r2 = 2 * r
        u_next = _propagate_once(pulse, delta_beta, r2)
        delta = gate_distance(u_prev, u_next)
        if delta < tol:
            cert = PropagationCertificate(True, r2, float(delta))
            return (u_next, cert) if certify else u_next
        if r2 >= max_refinement:
            cert = PropagationCertificate(False, r2, float(delta))
            if strict:
                raise ConvergenceError(
                    f"propagation not converged at refinement {r2}: delta {delta:.3e}"
                )
            return (u_next, cert) if certify else u_next
        r, u_prev = r2, u_next


def average_gate_infidelity(actual, target):
    """1 - F with F = (|Tr(target^dag actual)|^2 + 2) / 6 for unitaries."""
    a = as_matrix(actual)
    b = as_matrix(target)
    overlap = abs(np.trace(b.conj().T @ a)) ** 2
    return float(1.0 - (overlap + 2.0) / 6.0)


def default_noise_grid(duration, n_points=12, lo=1e-3, hi=10 ** (-1.5)):
    """Log-spaced delta_beta grid with delta_beta * duration in [lo, hi]."""
    return np.logspace(np.log10(lo), np.log10(hi), n_points) / duration


def infidelity_sweep(
    pulse,
    target=None,
    delta_beta=None,
    refinement=None,
    floor=1e-13,
    check_even=False,
):
    """Infidelity across a quasistatic-noise grid and its log-log slope.

    target=None measures against the pulse's own noise-free evolution, so
    the fitted exponent reflects pure noise scaling.  Points below `floor`
    sit in the double-precision noise and are excluded from the fit.
    """
    if delta_beta is None:
        delta_beta = default_noise_grid(pulse.duration)
    delta_beta = np.asarray(delta_beta, dtype=float)
    if np.any(delta_beta <= 0):
        raise InputError("delta_beta grid must be positive")
    if delta_beta.size >= 2:
        decades = np.log10(delta_beta.max() / delta_beta.min())
        if decades < 1.49:
            raise InputError("delta_beta grid must span at least 1.5 decades")

    if refinement is None:
        _, cert = propagate(pulse, float(delta_beta.max()), certify=True)
        refinement = cert.refinement
    refinement = int(refinement)

    if target is None:
        target_m = propagate(pulse, 0.0, refinement=refinement).matrix
    else:
        target_m = as_matrix(getattr(target, "unitary", target))

    infid = np.array(
        [
            average_gate_infidelity(_propagate_once(pulse, db, refinement), target_m)
            for db in delta_beta
        ]
    )
    used = infid > floor
    if int(used.sum()) < 3:
        raise ConvergenceError(
            "fewer than 3 sweep points above the infidelity noise floor"
        )
    logx = np.log10(delta_beta[used])
    logy = np.log10(infid[used])
    slope, intercept = np.polyfit(logx, logy, 1)
    resid = float(np.sqrt(np.mean((np.polyval([slope, intercept], logx) - logy) ** 2)))

    asymmetry = None
    if check_even:
        top = np.argsort(delta_beta)[-3:]
        asym = [
            abs(
                average_gate_infidelity(
                    _propagate_once(pulse, -delta_beta[i], refinement), target_m
                )
                - infid[i]
            )
            for i in top
        ]
        asymmetry = float(max(asym) / max(infid[top].max(), 1e-300))

    return NoiseSweepResult(
        delta_beta, infid, float(slope), float(intercept), resid, used, refinement, asymmetry
    )


def interaction_tangent(u1, u2):
    """Pauli vector of U^dag sz U along a trajectory: the curve velocity."""
    vx = -2.0 * np.real(u1 * u2)
    vy = -2.0 * np.imag(u1 * u2)
    vz = np.abs(u1) ** 2 - np.abs(u2) ** 2
    return np.stack([vx, vy, vz], axis=1)


def u0_trajectory(pulse, refinement):
    """Noise-free evolution at every substep node."""
    hx, hy, hz, dt = _substep_nodes(pulse, 0.0, refinement)
    u1, u2 = _accel.su2_trajectory(hx, hy, hz, dt)
    return u1, u2, dt


def _a2_end_correction(v, dt):
    # Euler-Maclaurin correction of the cumulative inner integral, applied
    # identically to both quadrature routes.
    vdot = fd1(v, dt)
    delta_r = dt * dt / 12.0 * (vdot[0][None, :] - vdot)
    return np.trapezoid(np.cross(delta_r, v), dx=dt, axis=0)


def magnus_errors(pulse, refinement=None, nested="auto"):
    """First- and second-order error integrals from the actual evolution.

    The interaction-frame axis U0^dag sz U0 is evaluated on the substep grid
    and integrated by end-corrected trapezoid rules.  The second integral is
    computed twice: a literal O(N^2) nested trapezoid (capped at
    8192 substeps) and a single-pass accumulation; their disagreement is
    reported.  nested may be True, False, or "auto" (run when within cap).
    """
    n = pulse.n_samples
    if refinement is None:
        refinement = max(1, (MAGNUS_SUBSTEP_CAP - 1) // (n - 1))
    refinement = int(refinement)
    substeps = (n - 1) * refinement + 1

    run_nested = nested is True or (nested == "auto" and substeps <= MAGNUS_SUBSTEP_CAP)
    if nested is True and substeps > MAGNUS_SUBSTEP_CAP:
        raise InputError(
            f"nested route limited to {MAGNUS_SUBSTEP_CAP} substeps, got {substeps}"
        )

    u1, u2, dt = u0_trajectory(pulse, refinement)
    v = interaction_tangent(u1, u2)

    a1 = trapz_end_corrected(v, dt)
    r_sim = cumtrapz_end_corrected(v, dt)
    # single-pass route on the corrected prefixes
    a2_single = np.trapezoid(np.cross(r_sim, v), dx=dt, axis=0)

    disagreement = None
    a2 = a2_single
    if run_nested:
        a2_nested = _accel.magnus_nested_r2(v[:, 0], v[:, 1], v[:, 2], dt)
        a2_nested = a2_nested + _a2_end_correction(v, dt)
        disagreement = float(np.max(np.abs(a2_nested - a2_single)))

    return MagnusErrors(
        a1_vector=a1,
        a2_vector=a2,
        a1_norm=float(np.linalg.norm(a1)),
        a2_norm=float(np.linalg.norm(a2)),
        substeps=substeps,
        route_disagreement=disagreement,
    )


def square_pulse(duration, angle=np.pi, phase=0.0, n_samples=256):
    """Constant-envelope pulse of the given duration and total rotation."""
    if duration <= 0:
        raise InputError("duration must be positive")
    t = np.linspace(0.0, duration, n_samples)
    omega = np.full(n_samples, angle / duration)
    phi = np.full(n_samples, float(phase))
    return PulseWaveform(t, omega, phi, metadata={"shape": "square", "angle": float(angle)})
