"""Hot SU(2) kernels: numba-jitted loops with pure-NumPy fallbacks.

Setting the environment variable CURVEPULSE_NO_NUMBA=1 (checked at import
time) forces the NumPy/Python fallback path.  Both paths are compared by
``bench/bench_kernels.py`` and by the test suite.

State convention: a special-unitary 2x2 matrix is carried as the complex
pair (u1, u2) with matrix [[u1, -conj(u2)], [u2, conj(u1)]].  One exact
step for a constant Pauli vector h over dt is exp(-i*dt*h.sigma).
"""

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "su2_product",
    "su2_trajectory",
    "magnus_nested_r2",
    "transport_components",
]

_RENORM_EVERY = 512

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CURVEPULSE_NO_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)


def _su2_product_loop(hx, hy, hz, dt):
    # Ordered product of exact substep propagators; h arrays hold the
    # piecewise-constant Pauli coefficients for each substep.
    u1 = 1.0 + 0.0j
    u2 = 0.0 + 0.0j
    n = hx.shape[0]
    for k in range(n):
        a = np.sqrt(hx[k] * hx[k] + hy[k] * hy[k] + hz[k] * hz[k]) * dt
        if a > 0.0:
            c = np.cos(a)
            snc = np.sin(a) / a * dt
        else:
            c = 1.0
            snc = dt
        s1 = c - 1j * snc * hz[k]
        s2 = snc * (hy[k] - 1j * hx[k])
        w1 = s1 * u1 - np.conj(s2) * u2
        w2 = s2 * u1 + np.conj(s1) * u2
        u1 = w1
        u2 = w2
        if k % _RENORM_EVERY == _RENORM_EVERY - 1:
            norm = np.sqrt(abs(u1) ** 2 + abs(u2) ** 2)
            u1 = u1 / norm
            u2 = u2 / norm
    norm = np.sqrt(abs(u1) ** 2 + abs(u2) ** 2)
    return u1 / norm, u2 / norm


def _su2_trajectory_loop(hx, hy, hz, dt, u1_out, u2_out):
    # h arrays are sampled on the substep NODES (n values -> n-1 steps).
    # Each step uses the exact exponential of the fourth-order Magnus log,
    # which is exact (to O(dt^5)) for a Hamiltonian linear in t:
    #   heff = dt*(h_k + h_{k+1})/2 - dt^2/6 * (h_k x h_{k+1})
    n = hx.shape[0]
    u1 = 1.0 + 0.0j
    u2 = 0.0 + 0.0j
    u1_out[0] = u1
    u2_out[0] = u2
    c6 = dt * dt / 6.0
    for k in range(n - 1):
        mx = 0.5 * dt * (hx[k] + hx[k + 1]) - c6 * (hy[k] * hz[k + 1] - hz[k] * hy[k + 1])
        my = 0.5 * dt * (hy[k] + hy[k + 1]) - c6 * (hz[k] * hx[k + 1] - hx[k] * hz[k + 1])
        mz = 0.5 * dt * (hz[k] + hz[k + 1]) - c6 * (hx[k] * hy[k + 1] - hy[k] * hx[k + 1])
        a = np.sqrt(mx * mx + my * my + mz * mz)
        if a > 0.0:
            c = np.cos(a)
            snc = np.sin(a) / a
        else:
            c = 1.0
            snc = 1.0
        s1 = c - 1j * snc * mz
        s2 = snc * (my - 1j * mx)
        w1 = s1 * u1 - np.conj(s2) * u2
        w2 = s2 * u1 + np.conj(s1) * u2
        u1 = w1
        u2 = w2
        if k % _RENORM_EVERY == _RENORM_EVERY - 1:
            norm = np.sqrt(abs(u1) ** 2 + abs(u2) ** 2)
            u1 = u1 / norm
            u2 = u2 / norm
        u1_out[k + 1] = u1
        u2_out[k + 1] = u2
    return u1_out, u2_out


def _magnus_nested_loop(vx, vy, vz, dt):
    # Literal O(N^2) nested trapezoid of the commutator double integral,
    # reported as the real vector R2 = int r x rdot dt.
    n = vx.shape[0]
    r2x = 0.0
    r2y = 0.0
    r2z = 0.0
    for i in range(1, n):
        ax = 0.5 * vx[0]
        ay = 0.5 * vy[0]
        az = 0.5 * vz[0]
        for j in range(1, i):
            ax += vx[j]
            ay += vy[j]
            az += vz[j]
        ax = (ax + 0.5 * vx[i]) * dt
        ay = (ay + 0.5 * vy[i]) * dt
        az = (az + 0.5 * vz[i]) * dt
        wi = dt
        if i == n - 1:
            wi = 0.5 * dt
        r2x += wi * (ay * vz[i] - az * vy[i])
        r2y += wi * (az * vx[i] - ax * vz[i])
        r2z += wi * (ax * vy[i] - ay * vx[i])
    return r2x, r2y, r2z


def _transport_components_loop(points, tangent, rddot, m1x, m1y, m1z, a_out, b_out):
    # Double-reflection parallel transport of a twist-free frame vector m1;
    # a, b are the components of r'' in the transported (m1, t x m1) basis.
    n = tangent.shape[0]
    for i in range(n):
        tx, ty, tz = tangent[i, 0], tangent[i, 1], tangent[i, 2]
        m2x = ty * m1z - tz * m1y
        m2y = tz * m1x - tx * m1z
        m2z = tx * m1y - ty * m1x
        a_out[i] = rddot[i, 0] * m1x + rddot[i, 1] * m1y + rddot[i, 2] * m1z
        b_out[i] = rddot[i, 0] * m2x + rddot[i, 1] * m2y + rddot[i, 2] * m2z
        if i == n - 1:
            break
        # first reflection: across the chord bisector plane
        v1x = points[i + 1, 0] - points[i, 0]
        v1y = points[i + 1, 1] - points[i, 1]
        v1z = points[i + 1, 2] - points[i, 2]
        c1 = v1x * v1x + v1y * v1y + v1z * v1z
        if c1 > 0.0:
            d = 2.0 * (v1x * tx + v1y * ty + v1z * tz) / c1
            tlx = tx - d * v1x
            tly = ty - d * v1y
            tlz = tz - d * v1z
            d = 2.0 * (v1x * m1x + v1y * m1y + v1z * m1z) / c1
            m1x -= d * v1x
            m1y -= d * v1y
            m1z -= d * v1z
        else:
            tlx, tly, tlz = tx, ty, tz
        # second reflection: align the reflected tangent with the next one
        v2x = tangent[i + 1, 0] - tlx
        v2y = tangent[i + 1, 1] - tly
        v2z = tangent[i + 1, 2] - tlz
        c2 = v2x * v2x + v2y * v2y + v2z * v2z
        if c2 > 0.0:
            d = 2.0 * (v2x * m1x + v2y * m1y + v2z * m1z) / c2
            m1x -= d * v2x
            m1y -= d * v2y
            m1z -= d * v2z
        # re-orthogonalize against the new tangent
        tnx, tny, tnz = tangent[i + 1, 0], tangent[i + 1, 1], tangent[i + 1, 2]
        dot = m1x * tnx + m1y * tny + m1z * tnz
        m1x -= dot * tnx
        m1y -= dot * tny
        m1z -= dot * tnz
        norm = np.sqrt(m1x * m1x + m1y * m1y + m1z * m1z)
        m1x /= norm
        m1y /= norm
        m1z /= norm
    return a_out, b_out


def _su2_product_numpy(hx, hy, hz, dt):
    # Pairwise (log-depth) reduction of the substep propagator sequence.
    a = np.sqrt(hx * hx + hy * hy + hz * hz) * dt
    safe = np.where(a > 0.0, a, 1.0)
    snc = np.where(a > 0.0, np.sin(safe) / safe, 1.0) * dt
    s1 = np.cos(a) - 1j * snc * hz
    s2 = snc * (hy - 1j * hx)
    while s1.shape[0] > 1:
        if s1.shape[0] % 2 == 1:
            t1, t2 = s1[-1], s2[-1]
            s1, s2 = s1[:-1], s2[:-1]
        else:
            t1 = None
            t2 = None
        a1, a2 = s1[0::2], s2[0::2]
        b1, b2 = s1[1::2], s2[1::2]
        s1 = b1 * a1 - np.conj(b2) * a2
        s2 = b2 * a1 + np.conj(b1) * a2
        norm = np.sqrt(np.abs(s1) ** 2 + np.abs(s2) ** 2)
        s1 = s1 / norm
        s2 = s2 / norm
        if t1 is not None:
            s1 = np.concatenate([s1, [t1]])
            s2 = np.concatenate([s2, [t2]])
    return complex(s1[0]), complex(s2[0])


def _su2_trajectory_numpy(hx, hy, hz, dt):
    # Step factors are prepared vectorized; the sequential recurrence runs
    # as a plain Python loop over scalars.
    ha = np.stack([hx, hy, hz], axis=1)
    mid = 0.5 * dt * (ha[:-1] + ha[1:]) - (dt * dt / 6.0) * np.cross(ha[:-1], ha[1:])
    a = np.linalg.norm(mid, axis=1)
    safe = np.where(a > 0.0, a, 1.0)
    snc = np.where(a > 0.0, np.sin(safe) / safe, 1.0)
    s1 = np.cos(a) - 1j * snc * mid[:, 2]
    s2 = snc * (mid[:, 1] - 1j * mid[:, 0])
    n = hx.shape[0]
    u1_out = np.empty(n, dtype=np.complex128)
    u2_out = np.empty(n, dtype=np.complex128)
    u1 = 1.0 + 0.0j
    u2 = 0.0 + 0.0j
    u1_out[0] = u1
    u2_out[0] = u2
    for k in range(n - 1):
        w1 = s1[k] * u1 - np.conj(s2[k]) * u2
        w2 = s2[k] * u1 + np.conj(s1[k]) * u2
        u1, u2 = w1, w2
        if k % _RENORM_EVERY == _RENORM_EVERY - 1:
            norm = np.sqrt(abs(u1) ** 2 + abs(u2) ** 2)
            u1 /= norm
            u2 /= norm
        u1_out[k + 1] = u1
        u2_out[k + 1] = u2
    return u1_out, u2_out


def _magnus_nested_numpy(vx, vy, vz, dt):
    # Same O(N^2) nested sum, with the inner trapezoid vectorized per row.
    v = np.stack([vx, vy, vz], axis=1)
    n = v.shape[0]
    r2 = np.zeros(3)
    for i in range(1, n):
        w_in = np.full(i + 1, dt)
        w_in[0] = 0.5 * dt
        w_in[-1] = 0.5 * dt
        inner = w_in @ v[: i + 1]
        wi = dt if i < n - 1 else 0.5 * dt
        r2 += wi * np.cross(inner, v[i])
    return r2[0], r2[1], r2[2]


if HAVE_NUMBA:
    _su2_product_nb = numba.njit(cache=True)(_su2_product_loop)
    _su2_trajectory_nb = numba.njit(cache=True)(_su2_trajectory_loop)
    _magnus_nested_nb = numba.njit(cache=True)(_magnus_nested_loop)
    _transport_nb = numba.njit(cache=True)(_transport_components_loop)
else:  # pragma: no cover
    _su2_product_nb = None
    _su2_trajectory_nb = None
    _magnus_nested_nb = None
    _transport_nb = None


def _prep(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.float64) for a in arrays)


def su2_product(hx, hy, hz, dt):
    """Product of exact substep propagators; returns the final (u1, u2)."""
    hx, hy, hz = _prep(hx, hy, hz)
    if USE_NUMBA:
        return _su2_product_nb(hx, hy, hz, float(dt))
    return _su2_product_numpy(hx, hy, hz, float(dt))


def su2_trajectory(hx, hy, hz, dt):
    """Evolution (u1, u2) at every substep node for node-sampled h arrays."""
    hx, hy, hz = _prep(hx, hy, hz)
    if USE_NUMBA:
        u1 = np.empty(hx.shape[0], dtype=np.complex128)
        u2 = np.empty(hx.shape[0], dtype=np.complex128)
        return _su2_trajectory_nb(hx, hy, hz, float(dt), u1, u2)
    return _su2_trajectory_numpy(hx, hy, hz, float(dt))


def magnus_nested_r2(vx, vy, vz, dt):
    """Nested-trapezoid second-order error vector (O(N^2) route)."""
    vx, vy, vz = _prep(vx, vy, vz)
    if USE_NUMBA:
        return np.array(_magnus_nested_nb(vx, vy, vz, float(dt)))
    return np.array(_magnus_nested_numpy(vx, vy, vz, float(dt)))


def transport_components(points, tangent, rddot, m1):
    """Twist-free frame components (a, b) of r'' along the curve."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    tangent = np.ascontiguousarray(tangent, dtype=np.float64)
    rddot = np.ascontiguousarray(rddot, dtype=np.float64)
    n = tangent.shape[0]
    a = np.empty(n)
    b = np.empty(n)
    fn = _transport_nb if USE_NUMBA else _transport_components_loop
    fn(points, tangent, rddot, float(m1[0]), float(m1[1]), float(m1[2]), a, b)
    return a, b
