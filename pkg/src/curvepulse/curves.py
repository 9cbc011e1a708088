"""Space curves: arc-length sampling, moving-frame data, area diagnostics.

Curves are stored as dense uniform arc-length samples (default 4096), so the
sample parameter t doubles as evolution time: curvature(t) is the drive
envelope and torsion(t) the drive-phase velocity of the matching pulse.
Derivatives come from five-point finite-difference stencils on the uniform
grid; convergence is certified by sample-doubling tests rather than splines.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from ._numerics import cumulative_cross_integral, fd1, fd2, fd3
from .errors import InputError

DEFAULT_SAMPLES = 4096
_MIN_SAMPLES = 64
_DENSE_FLOOR = 32768
_DENSE_CAP = 2 ** 22

SQRT2 = np.sqrt(2.0)
CLIFFORD_Q = 1.6054  # phase parameter of the built-in Clifford-gate curve


@dataclass(frozen=True)
class SpaceCurve:
    """Uniformly sampled curve r(t) with t equal to arc length, r(0) = origin."""

    t: np.ndarray
    points: np.ndarray
    source_tag: str = "unknown"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] != t.shape[0]:
            raise InputError("points must have shape (n, 3) matching t")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(pts)):
            raise InputError("non-finite curve samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InputError("t must start at 0 and be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", pts)

    @property
    def n_samples(self):
        return self.t.shape[0]

    @property
    def total_length(self):
        return float(self.t[-1])

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def closure_residual(self):
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    def transformed(self, rotation=None, translation=None):
        """Rigid copy: points @ rotation.T + translation."""
        pts = self.points
        if rotation is not None:
            rotation = np.asarray(rotation, dtype=float)
            pts = pts @ rotation.T
        if translation is not None:
            pts = pts + np.asarray(translation, dtype=float)
        return SpaceCurve(self.t.copy(), pts, self.source_tag)

    def resampled(self, n_samples):
        spline = CubicSpline(self.t, self.points, axis=0)
        return reparameterize_by_arclength(
            spline, (self.t[0], self.t[-1]), n_samples, source_tag=self.source_tag
        )


@dataclass(frozen=True)
class FrenetData:
    """Per-sample moving frame with curvature and torsion.

    Samples where curvature falls below the floor carry normals/torsion
    continued from the nearest valid sample and are marked in `flagged`.
    The source positions ride along so downstream frame transports do not
    need the curve object again.
    """

    t: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    binormal: np.ndarray
    curvature: np.ndarray
    torsion: np.ndarray
    flagged: np.ndarray
    points: np.ndarray = None
    source_tag: str = "unknown"

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def any_flagged(self):
        return bool(np.any(self.flagged))


@dataclass(frozen=True)
class AreaDiagnostics:
    """Closure and projected-area error-cancellation diagnostics.

    r2_vector is the quadrature of r x rdot; for a closed loop its
    components equal twice the signed projected areas (A_yz, A_zx, A_xy).
    """

    closure_residual: float
    r2_vector: np.ndarray
    projected_areas: np.ndarray


def reparameterize_by_arclength(
    sampler,
    lam_span=(0.0, 2.0 * np.pi),
    n_samples=DEFAULT_SAMPLES,
    source_tag="sampled",
    rel_tol=1e-9,
):
    """Resample a parametric curve onto a uniform unit-speed grid.

    The cumulative length is built by fine-grid chord summation, with the
    dense grid doubled (Richardson-style) until the total length changes by
    less than rel_tol in relative terms.  The output curve starts at the
    origin and has total_length equal to its final t value.
    """
    lo, hi = float(lam_span[0]), float(lam_span[1])
    if not hi > lo:
        raise InputError("lam_span must be an increasing interval")
    if n_samples < _MIN_SAMPLES:
        raise InputError(f"n_samples must be at least {_MIN_SAMPLES}")

    m = max(8 * n_samples, _DENSE_FLOOR)
    prev_len = None
    while True:
        lam = np.linspace(lo, hi, m + 1)
        pts = np.asarray(sampler(lam), dtype=float)
        if pts.shape != (m + 1, 3):
            raise InputError("sampler must map a lambda array to (n, 3) points")
        if not np.all(np.isfinite(pts)):
            raise InputError("sampler returned non-finite points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        total = float(seg.sum())
        if total == 0.0:
            raise InputError("zero-length curve")
        if prev_len is not None:
            refined = total + (total - prev_len) / 3.0
            if abs(total - prev_len) <= rel_tol * total or 2 * m > _DENSE_CAP:
                break
        prev_len = total
        m *= 2

    s_dense = np.concatenate([[0.0], np.cumsum(seg)])
    s_dense *= refined / total
    t = np.linspace(0.0, refined, n_samples)
    # monotone-cubic inversion: a piecewise-linear inverse would leave
    # O(h_dense^2) kinks that finite differences amplify into fake curvature
    lam_t = PchipInterpolator(s_dense, lam)(np.clip(t, 0.0, s_dense[-1]))
    out = np.asarray(sampler(lam_t), dtype=float)
    out = out - out[0]
    return SpaceCurve(t, out, source_tag)


def frenet_data(curve, curvature_floor_rel=1e-8):
    """Moving frame, curvature = |r''| and torsion of a unit-speed curve."""
    pts = curve.points
    dt = curve.dt
    rdot = fd1(pts, dt)
    rddot = fd2(pts, dt)
    rdddot = fd3(pts, dt)

    speed = np.linalg.norm(rdot, axis=1)
    tangent = rdot / speed[:, None]
    curvature = np.linalg.norm(rddot, axis=1)
    # below the relative floor, or below the rounding noise that second
    # differences amplify by 1/dt^2, the frame direction is meaningless
    coord_scale = max(float(np.max(np.linalg.norm(pts, axis=1))), 1e-300)
    noise_floor = 1e3 * np.finfo(float).eps * coord_scale / dt**2
    floor = max(curvature_floor_rel * float(curvature.mean()), noise_floor)
    valid = curvature > floor
    flagged = ~valid

    normal = np.zeros_like(pts)
    if np.any(valid):
        normal[valid] = rddot[valid] / curvature[valid, None]
        # enforce exact orthogonality to the tangent (removes the tangential
        # finite-difference leakage near small curvature)
        proj = np.sum(normal[valid] * tangent[valid], axis=1)
        normal[valid] -= proj[:, None] * tangent[valid]
        normal[valid] /= np.linalg.norm(normal[valid], axis=1)[:, None]
        if np.any(flagged):
            idx_valid = np.flatnonzero(valid)
            nearest = idx_valid[
                np.argmin(np.abs(np.flatnonzero(flagged)[:, None] - idx_valid[None, :]), axis=1)
            ]
            carried = normal[nearest]
            # re-orthogonalize the carried normals against the local tangent
            tloc = tangent[flagged]
            carried = carried - np.sum(carried * tloc, axis=1)[:, None] * tloc
            nrm = np.linalg.norm(carried, axis=1)
            bad = nrm < 1e-12
            if np.any(bad):
                fallback = np.cross(tloc[bad], np.array([0.0, 0.0, 1.0]))
                alt = np.linalg.norm(fallback, axis=1) < 1e-6
                fallback[alt] = np.cross(tloc[bad][alt], np.array([1.0, 0.0, 0.0]))
                carried[bad] = fallback
                nrm = np.linalg.norm(carried, axis=1)
            normal[flagged] = carried / nrm[:, None]
    else:
        # straight segment: any frame orthogonal to the tangent
        ref = np.array([0.0, 0.0, 1.0])
        if abs(tangent[0] @ ref) > 0.9:
            ref = np.array([1.0, 0.0, 0.0])
        n0 = np.cross(tangent[0], ref)
        normal[:] = n0 / np.linalg.norm(n0)

    binormal = np.cross(tangent, normal)
    binormal /= np.linalg.norm(binormal, axis=1)[:, None]

    cross = np.cross(rdot, rddot)
    denom = np.sum(cross * cross, axis=1)
    torsion = np.zeros(len(pts))
    torsion[valid] = np.sum(cross[valid] * rdddot[valid], axis=1) / denom[valid]
    if np.any(flagged) and np.any(valid):
        idx_valid = np.flatnonzero(valid)
        nearest = idx_valid[
            np.argmin(np.abs(np.flatnonzero(flagged)[:, None] - idx_valid[None, :]), axis=1)
        ]
        torsion[flagged] = torsion[nearest]

    return FrenetData(
        curve.t,
        tangent,
        normal,
        binormal,
        curvature,
        torsion,
        flagged,
        curve.points,
        curve.source_tag,
    )


def _shoelace(u, w):
    # signed polygon area with the loop closed back to the first vertex
    return 0.5 * float(np.sum(u * np.roll(w, -1) - np.roll(u, -1) * w))


def area_diagnostics(curve):
    """Closure residual, quadrature of r x rdot, and shoelace projected areas."""
    pts = curve.points
    dt = curve.dt
    rdot = fd1(pts, dt)
    r2 = np.trapezoid(np.cross(pts, rdot), dx=dt, axis=0)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    areas = np.array([_shoelace(y, z), _shoelace(z, x), _shoelace(x, y)])
    return AreaDiagnostics(curve.closure_residual(), r2, areas)


# ---------------------------------------------------------------------------
# built-in curves


def _circle_sampler(radius):
    def f(lam):
        lam = np.atleast_1d(lam)
        return radius * np.stack(
            [np.cos(lam) - 1.0, np.sin(lam), np.zeros_like(lam)], axis=1
        )

    return f


def _lemniscate_sampler(a):
    # figure-eight traversed once, starting on a lobe so the two inflection
    # points stay interior (endpoints with zero curvature would leave the
    # gate extraction degenerate)
    def f(lam):
        lam = np.atleast_1d(lam)
        return np.stack(
            [-0.5 * a * np.sin(2 * lam), a * np.cos(lam), np.zeros_like(lam)], axis=1
        )

    return f


def _rot_z(q):
    c, s = np.cos(q), np.sin(q)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _clifford_sampler(q):
    rz = _rot_z(q)

    def f(lam):
        lam = np.atleast_1d(lam)
        env = SQRT2 * np.sin(np.pi * lam)
        s2 = np.sin(np.pi * lam / 2.0) ** 2
        c2 = np.cos(np.pi * lam / 2.0) ** 2
        zeros = np.zeros_like(lam)
        r1 = env[:, None] * np.stack([zeros, s2, c2], axis=1)
        r2 = (env[:, None] * np.stack([s2, c2, zeros], axis=1)) @ rz
        return (1.0 - lam)[:, None] * r1 + lam[:, None] * r2

    return f


def _sphere_loop_point(lam):
    lam = np.atleast_1d(lam)
    x = 0.25 * (SQRT2 * np.cos(2 * lam) - 2.0 * np.cos(lam))
    y = 0.25 * (-SQRT2 * np.sin(2 * lam) - 2.0 * np.sin(lam))
    z = 0.5 * np.sqrt(SQRT2 * np.cos(3 * lam) + 2.5)
    return np.stack([x, y, z], axis=1)


def _sphere_loop_velocity(lam):
    lam = np.atleast_1d(lam)
    dx = 0.25 * (-2.0 * SQRT2 * np.sin(2 * lam) + 2.0 * np.sin(lam))
    dy = 0.25 * (-2.0 * SQRT2 * np.cos(2 * lam) - 2.0 * np.cos(lam))
    rad = SQRT2 * np.cos(3 * lam) + 2.5
    dz = -3.0 * SQRT2 * np.sin(3 * lam) / (4.0 * np.sqrt(rad))
    return np.stack([dx, dy, dz], axis=1)


def _gamma_sampler(lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam[0] > 0.0:
        grid = np.concatenate([[0.0], lam])
        vals = cumulative_cross_integral(_sphere_loop_point, _sphere_loop_velocity, grid)
        return vals[1:]
    return cumulative_cross_integral(_sphere_loop_point, _sphere_loop_velocity, lam)


BUILTIN_CURVES = ("circle", "lemniscate", "clifford_fig1", "alpha_eq12", "const_torsion_gamma")


def builtin_curve(name, n_samples=DEFAULT_SAMPLES, **params):
    """Construct one of the named curves on a uniform arc-length grid.

    circle(radius=1): one counter-clockwise loop in the xy plane.
    lemniscate(a=1): planar figure-eight traversed once.
    clifford_fig1(q=1.6054): closed loop whose endpoint tangents encode a
        two-thirds-turn rotation about (-1, 1, 1); q rotates the second
        blending arc about z.
    alpha_eq12: closed loop on the unit sphere with vanishing projected areas.
    const_torsion_gamma: closed constant-torsion loop built as the running
        integral of alpha x alpha'.
    """

    def _reject_unknown(allowed):
        extra = set(params) - set(allowed)
        if extra:
            raise InputError(f"unknown parameters for {name}: {sorted(extra)}")

    if name == "circle":
        _reject_unknown({"radius"})
        radius = float(params.get("radius", 1.0))
        if radius <= 0:
            raise InputError("circle radius must be positive")
        return reparameterize_by_arclength(
            _circle_sampler(radius), (0.0, 2 * np.pi), n_samples, source_tag="circle"
        )
    if name == "lemniscate":
        _reject_unknown({"a"})
        a = float(params.get("a", 1.0))
        if a <= 0:
            raise InputError("lemniscate scale must be positive")
        return reparameterize_by_arclength(
            _lemniscate_sampler(a), (0.0, 2 * np.pi), n_samples, source_tag="lemniscate"
        )
    if name == "clifford_fig1":
        _reject_unknown({"q"})
        q = float(params.get("q", CLIFFORD_Q))
        return reparameterize_by_arclength(
            _clifford_sampler(q), (0.0, 1.0), n_samples, source_tag="clifford_fig1"
        )
    if name == "alpha_eq12":
        _reject_unknown(set())
        return reparameterize_by_arclength(
            _sphere_loop_point, (0.0, 2 * np.pi), n_samples, source_tag="alpha_eq12"
        )
    if name == "const_torsion_gamma":
        _reject_unknown(set())
        return reparameterize_by_arclength(
            _gamma_sampler, (0.0, 2 * np.pi), n_samples, source_tag="const_torsion_gamma"
        )
    raise InputError(f"unknown builtin curve {name!r}; choose from {BUILTIN_CURVES}")


def random_fourier_loop(seed, n_modes=4, perturbation=0.3, n_samples=DEFAULT_SAMPLES):
    """Smooth random closed curve: a circle plus decaying Fourier modes.

    The base circle keeps the curvature bounded away from zero; coefficients
    are pinned by the seed so test curves are reproducible.
    """
    rng = np.random.default_rng(seed)
    ks = np.arange(2, 2 + n_modes)
    a = rng.normal(0.0, perturbation, (n_modes, 3)) / ks[:, None] ** 3
    b = rng.normal(0.0, perturbation, (n_modes, 3)) / ks[:, None] ** 3
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1

    def f(lam):
        lam = np.atleast_1d(lam)
        pts = np.stack([np.cos(lam) - 1.0, np.sin(lam), np.zeros_like(lam)], axis=1)
        for k, ak, bk in zip(ks, a, b):
            pts = pts + np.outer(np.cos(k * lam) - 1.0, ak) + np.outer(np.sin(k * lam), bk)
        return pts @ q.T

    return reparameterize_by_arclength(
        f, (0.0, 2 * np.pi), n_samples, source_tag=f"fourier_loop_{seed}"
    )


def reconstruct_from_frenet(frenet, r0=None, frame0=None):
    """Integrate the moving-frame system from (curvature, torsion) by RK4.

    Returns positions on the same grid; used to certify that the frame data
    actually regenerates the curve it came from.
    """
    t = frenet.t
    dt = frenet.dt
    kappa = frenet.curvature
    tau = frenet.torsion
    n = len(t)

    if r0 is None:
        r0 = np.zeros(3)
    if frame0 is None:
        frame0 = np.stack([frenet.tangent[0], frenet.normal[0], frenet.binormal[0]])

    def deriv(state, k, w):
        r, tg, nm, bn = state
        return (
            tg,
            k * nm,
            -k * tg + w * bn,
            -w * nm,
        )

    def interp(idx_half):
        return (
            np.interp(idx_half, np.arange(n), kappa),
            np.interp(idx_half, np.arange(n), tau),
        )

    out = np.empty((n, 3))
    state = (np.asarray(r0, dtype=float), frame0[0].copy(), frame0[1].copy(), frame0[2].copy())
    out[0] = state[0]
    for i in range(n - 1):
        k1, w1 = kappa[i], tau[i]
        k2, w2 = interp(i + 0.5)
        k4, w4 = kappa[i + 1], tau[i + 1]
        d1 = deriv(state, k1, w1)
        s2 = tuple(s + 0.5 * dt * d for s, d in zip(state, d1))
        d2 = deriv(s2, k2, w2)
        s3 = tuple(s + 0.5 * dt * d for s, d in zip(state, d2))
        d3 = deriv(s3, k2, w2)
        s4 = tuple(s + dt * d for s, d in zip(state, d3))
        d4 = deriv(s4, k4, w4)
        state = tuple(
            s + dt / 6.0 * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, d1, d2, d3, d4)
        )
        if i % 64 == 63:
            r, tg, nm, bn = state
            tg = tg / np.linalg.norm(tg)
            nm = nm - (nm @ tg) * tg
            nm = nm / np.linalg.norm(nm)
            bn = np.cross(tg, nm)
            state = (r, tg, nm, bn)
        out[i + 1] = state[0]
    return out


# ---------------------------------------------------------------------------
# curve file formats: CSV header t,x,y,z and a JSON twin


def save_curve_csv(curve, path):
    header = "t,x,y,z"
    data = np.column_stack([curve.t, curve.points])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def save_curve_json(curve, path):
    payload = {
        "samples": np.column_stack([curve.t, curve.points]).tolist(),
        "source_tag": curve.source_tag,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _parse_curve_rows(rows, where):
    t = []
    pts = []
    for lineno, row in rows:
        if len(row) != 4:
            raise InputError(f"{where}: line {lineno}: expected 4 columns, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise InputError(f"{where}: line {lineno}: {exc}") from exc
        if not all(np.isfinite(v) for v in vals):
            raise InputError(f"{where}: line {lineno}: non-finite value")
        if t and vals[0] <= t[-1]:
            raise InputError(f"{where}: line {lineno}: t must be strictly increasing")
        t.append(vals[0])
        pts.append(vals[1:])
    if len(t) < 8:
        raise InputError(f"{where}: need at least 8 samples, got {len(t)}")
    return np.asarray(t), np.asarray(pts)


def load_curve(path, n_samples=DEFAULT_SAMPLES):
    """Load a curve file (CSV or JSON) and reparameterize it by arc length."""
    path = str(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "samples" not in payload:
            raise InputError(f"{path}: curve JSON must carry a 'samples' list")
        rows = [(i + 1, [str(v) for v in row]) for i, row in enumerate(payload["samples"])]
        tag = payload.get("source_tag", "file")
        t_in, pts = _parse_curve_rows(rows, path)
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError(f"{path}: empty file") from None
            if [h.strip() for h in header] != ["t", "x", "y", "z"]:
                raise InputError(f"{path}: expected header t,x,y,z")
            rows = [(i + 2, row) for i, row in enumerate(reader) if row]
        tag = "file"
        t_in, pts = _parse_curve_rows(rows, path)
    spline = CubicSpline(t_in, pts, axis=0)
    return reparameterize_by_arclength(
        spline, (t_in[0], t_in[-1]), n_samples, source_tag=tag
    )
