"""Exact 2x2 algebra for SU(2) evolutions.

Closed-form single-step propagators, the (chi, phi, theta) angle
parameterization with its degenerate branches, Pauli decomposition, the
scaled Frobenius norm, phase-aligned gate distances, and the two-to-one
lift between SU(2) elements and rotations.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

_DEGEN_TOL = 1e-9


@dataclass(frozen=True)
class Unitary2:
    """Special-unitary 2x2 matrix stored as the column pair (u1, u2)."""

    u1: complex
    u2: complex

    @property
    def matrix(self):
        return np.array(
            [[self.u1, -np.conj(self.u2)], [self.u2, np.conj(self.u1)]], dtype=complex
        )

    @classmethod
    def from_matrix(cls, m, tol=1e-8):
        m = as_matrix(m)
        if not np.all(np.isfinite(m)):
            raise InputError("non-finite matrix entries")
        if np.max(np.abs(m @ m.conj().T - IDENTITY)) > tol:
            raise InputError("matrix is not unitary within tolerance")
        # strip the global det phase so the stored pair is special-unitary
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        m = m / np.sqrt(det)
        return cls(complex(m[0, 0]), complex(m[1, 0]))

    def normalized(self):
        norm = np.sqrt(abs(self.u1) ** 2 + abs(self.u2) ** 2)
        return Unitary2(self.u1 / norm, self.u2 / norm)


def as_matrix(u):
    """Accept a Unitary2 or an array-like and return a 2x2 complex ndarray."""
    if isinstance(u, Unitary2):
        return u.matrix
    m = np.asarray(u, dtype=complex)
    if m.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


class EulerAngles(NamedTuple):
    chi: float
    phi: float
    theta: float
    degenerate: bool = False


def step_propagator(h, dt):
    """exp(-i*dt*(h.sigma)) in closed form for a constant Pauli vector h."""
    h = np.asarray(h, dtype=float)
    if h.shape != (3,) or not np.all(np.isfinite(h)) or not np.isfinite(dt):
        raise InputError("h must be a finite 3-vector and dt finite")
    if dt <= 0:
        raise InputError("dt must be positive")
    a = float(np.linalg.norm(h)) * dt
    if a == 0.0:
        return Unitary2(1.0 + 0.0j, 0.0j)
    snc = np.sin(a) / a * dt
    u1 = np.cos(a) - 1j * snc * h[2]
    u2 = snc * (h[1] - 1j * h[0])
    return Unitary2(complex(u1), complex(u2))


def unitary_from_angles(chi, phi, theta):
    """Assemble the evolution operator from its (chi, phi, theta) angles."""
    u1 = np.exp(0.5j * (theta + phi)) * np.cos(chi / 2.0)
    u2 = -1j * np.exp(0.5j * (phi - theta)) * np.sin(chi / 2.0)
    return Unitary2(complex(u1), complex(u2))


def angles_from_unitary(u, tol=_DEGEN_TOL):
    """Recover (chi, phi, theta) with chi in [0, pi].

    At chi = 0 or pi one angle combination is undetermined; a canonical
    representative is returned with degenerate=True.
    """
    w = u if isinstance(u, Unitary2) else Unitary2.from_matrix(u)
    w = w.normalized()
    chi = 2.0 * np.arctan2(abs(w.u2), abs(w.u1))
    if abs(w.u2) < tol:
        # z-rotation: only theta+phi observable; put it all in theta
        s = float(np.angle(w.u1))
        return EulerAngles(float(chi), 0.0, 2.0 * s, True)
    if abs(w.u1) < tol:
        # equator point: only phi-theta observable; theta=0 branch
        d = float(np.angle(1j * w.u2))
        return EulerAngles(float(chi), 2.0 * d, 0.0, True)
    s = float(np.angle(w.u1))
    d = float(np.angle(1j * w.u2))
    return EulerAngles(float(chi), s + d, s - d, False)


def pauli_decompose(m):
    """Coefficients (x, y, z) with m = id_coeff*I + x*sx + y*sy + z*sz.

    Returns (vector, id_coeff); both may be complex for non-Hermitian input.
    """
    m = as_matrix(m)
    vec = np.array([0.5 * np.trace(m @ p) for p in PAULIS])
    ident = 0.5 * np.trace(m)
    return vec, complex(ident)


def pauli_compose(vec, id_coeff=0.0):
    vec = np.asarray(vec)
    return (
        id_coeff * IDENTITY + vec[0] * SIGMA_X + vec[1] * SIGMA_Y + vec[2] * SIGMA_Z
    )


def scaled_frobenius_norm(m):
    """sqrt(Tr(m^dag m)/2): Pauli matrices have unit norm under this scaling."""
    m = as_matrix(m)
    return float(np.sqrt(np.real(np.trace(m.conj().T @ m)) / 2.0))


def gate_distance(u, v):
    """Phase-aligned operator-norm distance min_phase ||u - e^{i phase} v||.

    For unitaries this equals sqrt(2 - |Tr(u^dag v)|); near zero that form
    loses everything to cancellation (floor ~sqrt(eps)), so small distances
    are evaluated as the operator norm of the phase-aligned difference.
    """
    a = as_matrix(u)
    b = as_matrix(v)
    tr = np.trace(a.conj().T @ b)
    gap = 2.0 - abs(tr)
    if gap > 1e-8:
        return float(np.sqrt(max(0.0, gap)))
    diff = a - b * (np.conj(tr) / abs(tr))
    return float(np.linalg.norm(diff, ord=2))


def phase_align(u, reference):
    """Multiply u by the global phase that best matches the reference."""
    a = as_matrix(u)
    r = as_matrix(reference)
    tr = np.trace(a.conj().T @ r)
    if abs(tr) == 0.0:
        return a
    return a * (tr / abs(tr))


def axis_angle_unitary(axis, angle):
    """cos(angle/2) I - i sin(angle/2) (axis.sigma) for a unit axis."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0:
        raise InputError("rotation axis must be nonzero")
    axis = axis / n
    half = angle / 2.0
    u1 = np.cos(half) - 1j * np.sin(half) * axis[2]
    u2 = np.sin(half) * (axis[1] - 1j * axis[0])
    return Unitary2(complex(u1), complex(u2))


def unitary_axis_angle(u):
    """Rotation axis and angle in [0, pi] of u, up to global phase."""
    m = as_matrix(u)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    m = m / np.sqrt(det)
    c = np.clip(np.real(np.trace(m)) / 2.0, -1.0, 1.0)
    vec, _ = pauli_decompose(m)
    s_vec = -np.imag(vec)
    s = np.linalg.norm(s_vec)
    angle = 2.0 * np.arctan2(s, c)
    if s < 1e-12:
        return np.array([0.0, 0.0, 1.0]), float(angle)
    axis = s_vec / s
    if angle > np.pi:
        angle = 2.0 * np.pi - angle
        axis = -axis
    return axis, float(angle)


def rotation_from_unitary(u):
    """SO(3) matrix R with u^dag (v.sigma) u = (R v).sigma."""
    m = as_matrix(u)
    r = np.empty((3, 3))
    for a in range(3):
        conj = m.conj().T @ PAULIS[a] @ m
        for b in range(3):
            r[b, a] = 0.5 * np.real(np.trace(PAULIS[b] @ conj))
    return r


def unitary_from_rotation(r):
    """One of the two SU(2) preimages of a rotation matrix (global sign free)."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > 1e-6:
        raise InputError("not an orthogonal 3x3 matrix")
    # quaternion extraction for the adjoint convention used above
    q = np.empty(4)
    tr = np.trace(r)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q[0] = 0.25 * s
        q[1] = (r[2, 1] - r[1, 2]) / s
        q[2] = (r[0, 2] - r[2, 0]) / s
        q[3] = (r[1, 0] - r[0, 1]) / s
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1e-15, 1.0 + r[i, i] - r[j, j] - r[k, k])) * 2
        q[0] = (r[k, j] - r[j, k]) / s
        q[i + 1] = 0.25 * s
        q[j + 1] = (r[j, i] + r[i, j]) / s
        q[k + 1] = (r[k, i] + r[i, k]) / s
    q = q / np.linalg.norm(q)
    # U = q0 I + i (q.sigma) satisfies U^dag (v.sigma) U = (R v).sigma
    u1 = q[0] + 1j * q[3]
    u2 = -q[2] + 1j * q[1]
    return Unitary2(complex(u1), complex(u2)).normalized()
