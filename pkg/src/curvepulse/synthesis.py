"""Forward synthesis: curve geometry to drive fields and target gates.

The drive envelope equals the curvature and the drive-phase velocity equals
the torsion of a unit-speed curve.  The implemented gate is read off the
endpoint tangent, the accumulated torsion, and a continuously unwrapped
endpoint phase, without ever integrating the Schrodinger equation.

Orientation convention: an evolution starting from the identity always has
initial tangent +z and initial normal (-sin(phi0), cos(phi0), 0), where
phi0 is the initial drive phase (default 0).  Gate extraction first moves
the curve rigidly into that pose, which is why rigid motions of the curve
never change the result.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._numerics import carried_unwrap, cumtrapz, fd1, fd2
from .curves import frenet_data
from .errors import InputError, NoSolutionError
from .su2 import Unitary2, gate_distance, unitary_axis_angle, unitary_from_angles

_POLE_TOL = 1e-7
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PulseWaveform:
    """Drive fields on a uniform time grid: envelope omega >= 0, phase phi.

    The optional detuning column carries a z-axis field for lab-frame
    exports; metadata records provenance and the phi0 convention.
    """

    t: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    detuning: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        om = np.asarray(self.omega, dtype=float)
        ph = np.asarray(self.phi, dtype=float)
        if t.ndim != 1 or om.shape != t.shape or ph.shape != t.shape:
            raise InputError("t, omega, phi must be 1-d arrays of equal length")
        if t.shape[0] < 2:
            raise InputError("waveform needs at least 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(om)) and np.all(np.isfinite(ph))):
            raise InputError("non-finite waveform values")
        steps = np.diff(t)
        if t[0] != 0.0 or np.any(steps <= 0):
            raise InputError("time grid must start at 0 and increase")
        if np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
            raise InputError("time grid must be uniform")
        if np.any(om < 0):
            raise InputError("omega must be non-negative (signs live in phi)")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "phi", ph)
        if self.detuning is not None:
            det = np.asarray(self.detuning, dtype=float)
            if det.shape != t.shape or not np.all(np.isfinite(det)):
                raise InputError("detuning must match the time grid and be finite")
            object.__setattr__(self, "detuning", det)

    @property
    def n_samples(self):
        return self.t.shape[0]

    @property
    def duration(self):
        return float(self.t[-1])

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def omega_x(self):
        return self.omega * np.cos(self.phi)

    @property
    def omega_y(self):
        return self.omega * np.sin(self.phi)


@dataclass(frozen=True)
class LabFramePulse:
    """Single-axis drive plus z-axis field equivalent to a transverse pulse.

    omega_x is signed; phase0 is the initial drive-phase offset and
    phase_ramp the accumulated z-frame angle (its derivative is omega_z).
    """

    t: np.ndarray
    omega_x: np.ndarray
    omega_z: np.ndarray
    phase0: float
    phase_ramp: np.ndarray

    def to_waveform(self):
        omega = np.abs(self.omega_x)
        phi = np.where(self.omega_x < 0, np.pi, 0.0)
        return PulseWaveform(
            self.t,
            omega,
            phi,
            detuning=self.omega_z,
            metadata={"frame": "lab", "phase0": float(self.phase0)},
        )


@dataclass(frozen=True)
class TargetGate:
    """Implemented gate with its rotation axis/angle and final phase angle."""

    unitary: Unitary2
    axis: np.ndarray
    angle: float
    phase_theta_final: float
    closed: bool
    flags: tuple = ()


def _resolve_phi0(phi0):
    return 0.0 if phi0 is None else float(phi0)


def _first_valid_normal(frenet):
    idx = np.flatnonzero(~frenet.flagged)
    i = int(idx[0]) if idx.size else 0
    return frenet.normal[i]


def canonicalize_curve(curve, frenet, phi0):
    """Rigidly move a curve so tangent(0) = +z and normal(0) matches phi0.

    Returns (points, rotation); curvature/torsion are untouched by
    construction, so the synthesized pulse is identical.
    """
    t0 = frenet.tangent[0]
    n0 = _first_valid_normal(frenet)
    n0 = n0 - (n0 @ t0) * t0
    n0 /= np.linalg.norm(n0)
    src = np.stack([t0, n0, np.cross(t0, n0)], axis=1)
    e1 = np.array([-np.sin(phi0), np.cos(phi0), 0.0])
    dst = np.stack([_Z, e1, np.cross(_Z, e1)], axis=1)
    rot = dst @ src.T
    pts = (curve.points - curve.points[0]) @ rot.T
    return pts, rot


def drive_phase_track(frenet, phi0_val):
    """Accumulated drive phase phi(t) = phi0 + running torsion integral.

    Evaluated as the angle of r'' in a twist-free (parallel-transported)
    frame, which equals the torsion integral but stays exact across
    curvature zeros, where the plain quadrature misses the pi flip of the
    frame.  Returns (phi, reliable_mask).
    """
    if frenet.points is None:
        raise InputError("frame data carries no source points")
    rddot = fd2(frenet.points, frenet.dt)
    t0 = frenet.tangent[0]
    m1 = _first_valid_normal(frenet)
    m1 = m1 - (m1 @ t0) * t0
    m1 /= np.linalg.norm(m1)
    a, b = _accel.transport_components(frenet.points, frenet.tangent, rddot, m1)
    mag = np.hypot(a, b)
    ok = mag > _POLE_TOL * max(float(mag.max()), 1e-300)
    beta = carried_unwrap(np.arctan2(b, a), ok)
    idx = np.flatnonzero(ok)
    anchor = beta[idx[0]] if idx.size else 0.0
    return phi0_val + beta - anchor, ok


def pulses_from_curve(frenet, phi0=None):
    """Drive fields from frame data: omega = curvature, phi = phi0 + int(torsion).

    The phase integral is carried by the twist-free frame (see
    drive_phase_track), so envelope zero crossings contribute their pi
    flips instead of being lost to quadrature.
    """
    phi0_val = _resolve_phi0(phi0)
    omega = frenet.curvature.copy()
    phi, reliable = drive_phase_track(frenet, phi0_val)
    warnings = []
    if frenet.any_flagged:
        warnings.append(
            f"{int(np.sum(frenet.flagged))} samples below the curvature floor; "
            "torsion continued from neighbors"
        )
    if not np.all(reliable):
        warnings.append(
            f"{int(np.sum(~reliable))} samples with negligible envelope; "
            "phase bridged across them"
        )
    meta = {"source_tag": frenet.source_tag, "phi0": phi0_val, "warnings": warnings}
    return PulseWaveform(frenet.t, omega, phi, metadata=meta)


def _endpoint_phase_delta(points, dt, final_tz):
    """Continuously unwrapped endpoint difference of the binormal-phase angle.

    The angle is arg(-i*x''*y' + i*x'*y'' + z'') along the canonical curve.
    Its limits at the ends are pinned by the tangent: exactly pi at the
    start (tangent +z with growing polar angle), and at a pole-tangent
    finish an even (+z) or odd (-z) multiple of pi, so the endpoint value
    is snapped to the known parity.  Unreliable samples (|W| tiny) are
    bridged by nearest-branch unwrapping.
    """
    rdot = fd1(points, dt)
    rddot = fd2(points, dt)
    w = (
        -1j * rddot[:, 0] * rdot[:, 1]
        + 1j * rdot[:, 0] * rddot[:, 1]
        + rddot[:, 2]
    )
    mag = np.abs(w)
    wmax = max(float(mag.max()), 1e-300)
    valid = mag >= _POLE_TOL * wmax
    # the start is always a pole departure; the one-sided stencil rows there
    # carry noise, so force them out of the unwrap
    head = min(2, len(valid))
    valid[:head] &= mag[:head] >= 1e-4 * wmax
    final_pole = abs(final_tz) > 1.0 - 1e-9
    if final_pole:
        tail = min(2, len(valid))
        valid[-tail:] &= mag[-tail:] >= 1e-4 * wmax
    idx = np.flatnonzero(valid)
    if idx.size < 2:
        # effectively planar through the pole axis; no phase winding resolvable
        return 0.0, ("endpoint_phase_unresolved",)
    n = points.shape[0]
    tv = idx * dt
    ph = np.unwrap(np.angle(w[idx]))
    # anchor the t->0 limit at exactly pi
    slope0 = (ph[1] - ph[0]) / (tv[1] - tv[0])
    ph0_est = ph[0] - slope0 * tv[0]
    ph += 2.0 * np.pi * np.round((np.pi - ph0_est) / (2.0 * np.pi))
    flags = ()
    if valid[-1] and not final_pole:
        ph_end = ph[-1]
    else:
        slope1 = (ph[-1] - ph[-2]) / (tv[-1] - tv[-2])
        ph_est = ph[-1] + slope1 * ((n - 1) * dt - tv[-1])
        if final_pole and final_tz > 0:
            ph_end = 2.0 * np.pi * np.round(ph_est / (2.0 * np.pi))
        elif final_pole:
            ph_end = 2.0 * np.pi * np.round((ph_est - np.pi) / (2.0 * np.pi)) + np.pi
        else:
            ph_end = ph_est
        flags = ("endpoint_phase_snapped",)
    return float(ph_end - np.pi), flags


def target_gate_from_curve(curve, frenet=None, phi0=None, closure_rtol=1e-3):
    """Implemented gate of a curve's pulse, from endpoint geometry alone.

    chi comes from the final tangent's polar angle, phi from its azimuth
    (or from the final normal at a pole), and theta from the accumulated
    torsion plus the unwrapped endpoint phase term.
    """
    if frenet is None:
        frenet = frenet_data(curve)
    phi0_val = _resolve_phi0(phi0)
    points, rot = canonicalize_curve(curve, frenet, phi0_val)
    dt = curve.dt
    flags = []
    if frenet.flagged[0]:
        flags.append("degenerate_initial_normal")

    closed = curve.closure_residual() <= closure_rtol * curve.total_length
    if not closed:
        flags.append("non_robust_open_curve")

    tangent_end = rot @ frenet.tangent[-1]
    tz = np.clip(tangent_end[2], -1.0, 1.0)
    chi_end = float(np.arccos(tz))
    sin_chi = np.hypot(tangent_end[0], tangent_end[1])
    if sin_chi > _POLE_TOL:
        phi_end = float(np.arctan2(-tangent_end[0], tangent_end[1]))
    else:
        flags.append("degenerate_final_tangent")
        if frenet.flagged[-1]:
            phi_end = 0.0
            flags.append("degenerate_final_normal")
        else:
            n_end = rot @ frenet.normal[-1]
            phi_end = float(np.arctan2(n_end[0], -n_end[1]))

    phi_track, _ = drive_phase_track(frenet, phi0_val)
    total_torsion = float(phi_track[-1] - phi0_val)
    delta_arg, arg_flags = _endpoint_phase_delta(points, dt, float(tz))
    flags.extend(arg_flags)
    theta_end = -phi0_val - total_torsion - delta_arg

    unitary = unitary_from_angles(chi_end, phi_end, theta_end)
    axis, angle = unitary_axis_angle(unitary)
    return TargetGate(unitary, axis, angle, float(theta_end), closed, tuple(flags))


def gate_from_frame(curve, frenet=None, phi0=None):
    """Cross-check gate assembly from the full endpoint frame (rotation lift).

    Independent of the endpoint-phase unwrapping; agrees with
    target_gate_from_curve up to global phase for well-posed curves.
    """
    from .su2 import unitary_from_rotation

    if frenet is None:
        frenet = frenet_data(curve)
    phi0_val = _resolve_phi0(phi0)
    _, rot = canonicalize_curve(curve, frenet, phi0_val)
    phi_track, _ = drive_phase_track(frenet, phi0_val)
    phi_end = float(phi_track[-1])
    post = np.stack(
        [rot @ frenet.tangent[-1], rot @ frenet.normal[-1], rot @ frenet.binormal[-1]],
        axis=1,
    )
    e1 = np.array([-np.sin(phi_end), np.cos(phi_end), 0.0])
    pre = np.stack([_Z, e1, np.cross(_Z, e1)], axis=1)
    r_u = post @ pre.T
    # project back to the nearest rotation before lifting
    uu, _, vv = np.linalg.svd(r_u)
    r_u = uu @ vv
    if np.linalg.det(r_u) < 0:
        r_u = -r_u
    return unitary_from_rotation(r_u)


def transform_to_transverse_frame(t, omega_x, omega_z, phase0=0.0, phase_ramp=None):
    """Rotate a (x-drive + z-field) Hamiltonian into the transverse form.

    The z field is absorbed into the frame: omega = |omega_x| and
    phi = phase0 - int(omega_z) with a pi offset where omega_x < 0.
    """
    t = np.asarray(t, dtype=float)
    omega_x = np.asarray(omega_x, dtype=float)
    omega_z = np.asarray(omega_z, dtype=float)
    if omega_x.shape != t.shape or omega_z.shape != t.shape:
        raise InputError("waveforms must share one time grid")
    dt = t[1] - t[0]
    lam = np.asarray(phase_ramp, dtype=float) if phase_ramp is not None else cumtrapz(omega_z, dt)
    if lam.shape != t.shape:
        raise InputError("phase_ramp must match the time grid")
    phi = phase0 - lam + np.where(omega_x < 0, np.pi, 0.0)
    return PulseWaveform(
        t, np.abs(omega_x), phi, metadata={"frame": "transverse", "phase0": float(phase0)}
    )


def transform_to_lab_frame(pulse):
    """Signed-envelope export: drive along one axis plus a z field.

    Extracts a continuous drive angle xi(t) (unwrapped modulo pi so the
    envelope may change sign smoothly) and returns omega_x = signed
    envelope, omega_z = -d(xi)/dt, with the exact ramp kept for roundtrips.
    """
    wx = pulse.omega_x
    wy = pulse.omega_y
    t = pulse.t
    dt = pulse.dt
    mag = np.hypot(wx, wy)
    floor = 1e-12 * max(float(mag.max()), 1e-300)
    ok = mag > floor
    raw = np.arctan2(wy, wx)
    if not np.all(ok):
        if not np.any(ok):
            raw = np.zeros_like(raw)
        else:
            idx = np.flatnonzero(ok)
            raw = np.interp(np.arange(len(t)), idx, np.unwrap(raw[idx]))
    xi = np.unwrap(raw, period=np.pi)
    signed = wx * np.cos(xi) + wy * np.sin(xi)
    omega_z = -fd1(xi, dt)
    return LabFramePulse(t, signed, omega_z, float(xi[0]), float(xi[0]) - xi)


@dataclass(frozen=True)
class PhaseSolveResult:
    param: float
    distance: float
    flat: bool
    scan_params: np.ndarray
    scan_distances: np.ndarray


def solve_target_phase(
    curve_family,
    target,
    param_range,
    tol=1e-6,
    n_scan=33,
    phi0=None,
    flat_tol=1e-6,
):
    """Locate the family parameter whose gate matches the target.

    Scans the range, then shrinks a bracket around the best sample until the
    parameter is pinned to `tol`.  A landscape flat to within `flat_tol` is
    reported as such instead of pretending a root was found.
    """
    target_m = target.unitary if isinstance(target, TargetGate) else target

    def dist(p):
        gate = target_gate_from_curve(curve_family(p))
        return gate_distance(gate.unitary, target_m)

    lo, hi = float(param_range[0]), float(param_range[1])
    ps = np.linspace(lo, hi, n_scan)
    ds = np.array([dist(p) for p in ps])
    if float(ds.max() - ds.min()) < flat_tol:
        k = int(np.argmin(ds))
        return PhaseSolveResult(float(ps[k]), float(ds[k]), True, ps, ds)
    k = int(np.argmin(ds))
    if k == 0 or k == n_scan - 1:
        raise NoSolutionError(
            "no interior bracket for the gate-distance minimum in the given range",
            params=ps,
            distances=ds,
        )
    a, b = ps[k - 1], ps[k + 1]
    # golden-section shrink of the bracketed minimum
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd_ = dist(c), dist(d)
    while (b - a) > tol:
        if fc < fd_:
            b, d, fd_ = d, c, fc
            c = b - gr * (b - a)
            fc = dist(c)
        else:
            a, c, fc = c, d, fd_
            d = a + gr * (b - a)
            fd_ = dist(d)
    p_best = 0.5 * (a + b)
    return PhaseSolveResult(float(p_best), float(dist(p_best)), False, ps, ds)


# ---------------------------------------------------------------------------
# pulse file formats: CSV header t,omega_x,omega_y[,detuning] and a JSON twin


def save_pulse_csv(pulse, path):
    cols = [pulse.t, pulse.omega_x, pulse.omega_y]
    header = "t,omega_x,omega_y"
    if pulse.detuning is not None:
        cols.append(pulse.detuning)
        header += ",detuning"
    np.savetxt(
        path, np.column_stack(cols), fmt="%.17g", delimiter=",", header=header, comments=""
    )


def _clean_metadata(metadata):
    return {k: v for k, v in metadata.items() if k not in ("import_timestamp",)}


def save_pulse_json(pulse, path):
    payload = {
        "t": pulse.t.tolist(),
        "omega": pulse.omega.tolist(),
        "phi": pulse.phi.tolist(),
        "detuning": None if pulse.detuning is None else pulse.detuning.tolist(),
        "metadata": _clean_metadata(pulse.metadata),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def read_pulse_file(path):
    """Parse the shared pulse format; returns arrays without resampling.

    CSV errors carry line numbers; t must be strictly increasing and all
    values finite.
    """
    path = str(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON: {exc}") from exc
        try:
            t = np.asarray(payload["t"], dtype=float)
            omega = np.asarray(payload["omega"], dtype=float)
            phi = np.asarray(payload["phi"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: malformed pulse JSON: {exc}") from exc
        det = payload.get("detuning")
        det = None if det is None else np.asarray(det, dtype=float)
        meta = dict(payload.get("metadata", {}))
        wx = omega * np.cos(phi)
        wy = omega * np.sin(phi)
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise InputError(f"{path}: empty file") from None
            if header not in (
                ["t", "omega_x", "omega_y"],
                ["t", "omega_x", "omega_y", "detuning"],
            ):
                raise InputError(f"{path}: expected header t,omega_x,omega_y[,detuning]")
            ncol = len(header)
            t_list, wx_list, wy_list, det_list = [], [], [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != ncol:
                    raise InputError(
                        f"{path}: line {lineno}: expected {ncol} columns, got {len(row)}"
                    )
                try:
                    vals = [float(v) for v in row]
                except ValueError as exc:
                    raise InputError(f"{path}: line {lineno}: {exc}") from exc
                if not all(np.isfinite(v) for v in vals):
                    raise InputError(f"{path}: line {lineno}: non-finite value")
                if t_list and vals[0] <= t_list[-1]:
                    raise InputError(f"{path}: line {lineno}: t must be strictly increasing")
                t_list.append(vals[0])
                wx_list.append(vals[1])
                wy_list.append(vals[2])
                if ncol == 4:
                    det_list.append(vals[3])
        t = np.asarray(t_list)
        wx = np.asarray(wx_list)
        wy = np.asarray(wy_list)
        det = np.asarray(det_list) if det_list else None
        meta = {}
    if t.shape[0] < 2:
        raise InputError(f"{path}: need at least 2 samples")
    return t, wx, wy, det, meta
