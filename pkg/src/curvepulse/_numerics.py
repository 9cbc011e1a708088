"""Finite-difference stencils and quadrature helpers on uniform grids.

Interior derivatives use five-point central stencils; the two rows at each
end use six-point one-sided stencils (Fornberg weights) so boundary values
stay at least one order better than the quantities built from them.
"""

import numpy as np

from .errors import InputError


def _fornberg_weights(z, x, m):
    # weights w[k] with f^(m)(z) ~ sum w[k] f(x[k]); Fornberg (1988)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


_EDGE_POINTS = 6
_W_EDGE = {
    m: [_fornberg_weights(float(row), np.arange(_EDGE_POINTS, dtype=float), m) for row in (0, 1)]
    for m in (1, 2, 3)
}


def _apply_edges(d, y, dx, m):
    w0, w1 = _W_EDGE[m]
    head = y[:_EDGE_POINTS]
    tail = y[-_EDGE_POINTS:][::-1]
    sign = (-1.0) ** m
    scale = dx ** m
    d[0] = np.tensordot(w0, head, axes=(0, 0)) / scale
    d[1] = np.tensordot(w1, head, axes=(0, 0)) / scale
    d[-1] = sign * np.tensordot(w0, tail, axes=(0, 0)) / scale
    d[-2] = sign * np.tensordot(w1, tail, axes=(0, 0)) / scale


def fd1(y, dx):
    """First derivative, five-point central stencils (one-sided at the ends)."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < _EDGE_POINTS:
        raise InputError(f"need at least {_EDGE_POINTS} samples for the stencils")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dx)
    _apply_edges(d, y, dx, 1)
    return d


def fd2(y, dx):
    """Second derivative, five-point central stencils."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < _EDGE_POINTS:
        raise InputError(f"need at least {_EDGE_POINTS} samples for the stencils")
    h2 = dx * dx
    d = np.empty_like(y)
    d[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * h2)
    _apply_edges(d, y, dx, 2)
    return d


def fd3(y, dx):
    """Third derivative, five-point central stencils."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < _EDGE_POINTS:
        raise InputError(f"need at least {_EDGE_POINTS} samples for the stencils")
    h3 = dx ** 3
    d = np.empty_like(y)
    d[2:-2] = (-y[:-4] + 2 * y[1:-3] - 2 * y[3:-1] + y[4:]) / (2 * h3)
    _apply_edges(d, y, dx, 3)
    return d


def cumtrapz(y, dx):
    """Cumulative trapezoid along axis 0, starting at zero."""
    y = np.asarray(y, dtype=float)
    seg = 0.5 * dx * (y[1:] + y[:-1])
    out = np.zeros_like(y)
    out[1:] = np.cumsum(seg, axis=0)
    return out


def trapz_end_corrected(y, dx):
    """Trapezoid with the Euler-Maclaurin end correction (fourth order)."""
    y = np.asarray(y, dtype=float)
    base = np.trapezoid(y, dx=dx, axis=0)
    yd = fd1(y, dx)
    return base - dx * dx / 12.0 * (yd[-1] - yd[0])


def cumtrapz_end_corrected(y, dx):
    """Cumulative trapezoid with the per-prefix Euler-Maclaurin correction."""
    y = np.asarray(y, dtype=float)
    out = cumtrapz(y, dx)
    yd = fd1(y, dx)
    return out - dx * dx / 12.0 * (yd - yd[0])


def carried_unwrap(angles, ok, seed=None):
    """Unwrap angles over reliable samples; unreliable ones inherit neighbors.

    Bridges across unreliable gaps pick the nearest branch, so a genuine pi
    flip across a gap survives while no spurious winding is invented.  With
    `seed` given, the first reliable sample continues from that branch.
    """
    angles = np.asarray(angles, dtype=float)
    ok = np.asarray(ok, dtype=bool)
    idx = np.flatnonzero(ok)
    out = np.empty_like(angles)
    if idx.size == 0:
        out[:] = 0.0 if seed is None else seed
        return out
    vals = angles[idx]
    if seed is not None:
        vals = np.unwrap(np.concatenate([[seed], vals]))[1:]
    else:
        vals = np.unwrap(vals)
    out[idx] = vals
    fill = np.maximum.accumulate(np.where(ok, np.arange(len(ok)), -1))
    missing = fill >= 0
    out[missing] = out[fill[missing]]
    out[~missing] = vals[0] if seed is None else seed
    return out


def kabsch_align(moving, fixed):
    """Best rigid alignment of `moving` onto `fixed` (proper rotation + shift).

    Returns (rotation, translation, rms) so that moving @ rotation.T + translation
    approximates fixed with the returned root-mean-square residual.
    """
    moving = np.asarray(moving, dtype=float)
    fixed = np.asarray(fixed, dtype=float)
    mc = moving.mean(axis=0)
    fc = fixed.mean(axis=0)
    h = (moving - mc).T @ (fixed - fc)
    u, _, vt = np.linalg.svd(h)
    sign = np.sign(np.linalg.det(vt.T @ u.T))
    d = np.diag([1.0, 1.0, sign])
    rot = vt.T @ d @ u.T
    shift = fc - rot @ mc
    aligned = moving @ rot.T + shift
    rms = float(np.sqrt(np.mean(np.sum((aligned - fixed) ** 2, axis=1))))
    return rot, shift, rms


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def cumulative_cross_integral(f, fprime, lam):
    """Cumulative integral of f x f' from lam[0], composite 7-point Gauss.

    `lam` must be ascending; returns an array of shape (len(lam), 3).
    """
    lam = np.asarray(lam, dtype=float)
    a = lam[:-1]
    b = lam[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    flat = pts.ravel()
    vals = np.cross(f(flat), fprime(flat)).reshape(len(a), _GL_NODES.size, 3)
    seg = half[:, None] * np.einsum("q,mqc->mc", _GL_WEIGHTS, vals)
    out = np.zeros((len(lam), 3))
    out[1:] = np.cumsum(seg, axis=0)
    return out
