"""Quaternion and unit dual quaternion algebra.

Quaternions are scalar-first 4-vectors ``[q0, q1, q2, q3]``. Dual quaternions
are 8-vectors ``[qr, qd]`` stacking the real and dual parts. All functions take
and return plain numpy arrays and never mutate their inputs.

A rigid transform (R, p) maps frame-i coordinates to the parent frame,
``x = R @ x_i + p``, and is encoded as ``d = qr + eps/2 * qt o qr`` with
``qt = [0, p]``.
"""

from dataclasses import dataclass

import numpy as np

DQ_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
Q_IDENTITY = DQ_IDENTITY[:4].copy()
DQ_IDENTITY.flags.writeable = False
Q_IDENTITY.flags.writeable = False

UNIT_TOL = 1e-6


class DegenerateInputError(ValueError):
    """Raised when an input cannot be normalized or converted."""


@dataclass(frozen=True)
class Pose:
    """Rigid body pose: rotation matrix and position in meters."""

    rotation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        p = np.array(self.position, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {R.shape}")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "position", p)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def is_valid(self, tol=1e-9):
        R = self.rotation
        return (
            bool(np.all(np.isfinite(R)))
            and bool(np.all(np.isfinite(self.position)))
            and np.max(np.abs(R.T @ R - np.eye(3))) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol
        )

    def compose(self, other):
        """Return ``self o other`` as an SE(3) composition."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.position + self.position)

    def inverse(self):
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.position)


def skew(v):
    """Skew-symmetric matrix ``[v]x`` such that ``skew(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# --------------------------------------------------------------------------
# quaternions


def quat_conjugate(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate(([q[0]], -q[1:4]))


def quat_compose(p, q):
    """Hamilton product ``p o q``."""
    p0, p1, p2, p3 = np.asarray(p, dtype=float)[:4]
    q0, q1, q2, q3 = np.asarray(q, dtype=float)[:4]
    return np.array(
        [
            p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
            p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
            p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
            p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
        ]
    )


def mat_M(p):
    """Left-multiplication operator: ``mat_M(p) @ q == p o q``."""
    a, b, c, d = np.asarray(p, dtype=float)[:4]
    return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]])


def mat_N(q):
    """Right-multiplication operator: ``mat_N(q) @ p == p o q``."""
    a, b, c, d = np.asarray(q, dtype=float)[:4]
    return np.array([[a, -b, -c, -d], [b, a, d, -c], [c, -d, a, b], [d, c, -b, a]])


def mat_N_tilde(q):
    """Operator with ``mat_N_tilde(q) @ p == conj(p) o q``."""
    a, b, c, d = np.asarray(q, dtype=float)[:4]
    return np.array([[a, b, c, d], [b, -a, -d, c], [c, d, -a, -b], [d, -c, b, -a]])


def quat_from_axis_angle(u, theta):
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError(f"rotation axis must be unit length, got norm {np.linalg.norm(u)}")
    half = 0.5 * theta
    return np.concatenate(([np.cos(half)], u * np.sin(half)))


def quat_to_rotation(q):
    """Rotation matrix ``I + 2 q0 [v]x + 2 [v]x^2`` of a unit quaternion."""
    q = np.asarray(q, dtype=float)
    K = skew(q[1:4])
    return np.eye(3) + 2.0 * q[0] * K + 2.0 * K @ K


def _canonical_sign(q):
    if q[0] < 0:
        return -q
    if q[0] == 0:
        nz = np.flatnonzero(q[1:])
        if nz.size and q[1 + nz[0]] < 0:
            return -q
    return q


def quat_from_rotation(R):
    """Unit quaternion of a rotation matrix, canonical sign ``q0 >= 0``.

    Picks the largest of the four squared components before taking the root,
    which keeps the conversion accurate near half-turns.
    """
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    sq = np.array([1.0 + tr, 1.0 + 2 * R[0, 0] - tr, 1.0 + 2 * R[1, 1] - tr, 1.0 + 2 * R[2, 2] - tr])
    k = int(np.argmax(sq))
    q = np.empty(4)
    s = 2.0 * np.sqrt(sq[k])  # 4 * |q_k|
    if k == 0:
        q[0] = 0.25 * s
        q[1] = (R[2, 1] - R[1, 2]) / s
        q[2] = (R[0, 2] - R[2, 0]) / s
        q[3] = (R[1, 0] - R[0, 1]) / s
    elif k == 1:
        q[0] = (R[2, 1] - R[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (R[0, 1] + R[1, 0]) / s
        q[3] = (R[0, 2] + R[2, 0]) / s
    elif k == 2:
        q[0] = (R[0, 2] - R[2, 0]) / s
        q[1] = (R[0, 1] + R[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (R[1, 2] + R[2, 1]) / s
    else:
        q[0] = (R[1, 0] - R[0, 1]) / s
        q[1] = (R[0, 2] + R[2, 0]) / s
        q[2] = (R[1, 2] + R[2, 1]) / s
        q[3] = 0.25 * s
    q /= np.linalg.norm(q)
    return _canonical_sign(q)


# --------------------------------------------------------------------------
# dual quaternions


def dq_conjugate(d):
    d = np.asarray(d, dtype=float)
    return np.concatenate((quat_conjugate(d[:4]), quat_conjugate(d[4:])))


def dq_compose(d, d2):
    """Dual quaternion product ``d (.) d2``."""
    d = np.asarray(d, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    real = quat_compose(d[:4], d2[:4])
    dual = quat_compose(d[:4], d2[4:]) + quat_compose(d[4:], d2[:4])
    return np.concatenate((real, dual))


def _block(A, B):
    out = np.zeros((8, 8))
    out[:4, :4] = A
    out[4:, :4] = B
    out[4:, 4:] = A
    return out


def mat_U(d):
    """``mat_U(d) @ d2 == d (.) d2``."""
    d = np.asarray(d, dtype=float)
    return _block(mat_M(d[:4]), mat_M(d[4:]))


def mat_V(d2):
    """``mat_V(d2) @ d == d (.) d2``."""
    d2 = np.asarray(d2, dtype=float)
    return _block(mat_N(d2[:4]), mat_N(d2[4:]))


def mat_V_tilde(d2):
    """``mat_V_tilde(d2) @ d == conj(d) (.) d2``."""
    d2 = np.asarray(d2, dtype=float)
    return _block(mat_N_tilde(d2[:4]), mat_N_tilde(d2[4:]))


def unit_residual(d):
    """Largest violation of ``|qr|^2 = 1`` and ``qr . qd = 0``."""
    d = np.asarray(d, dtype=float)
    return max(abs(d[:4] @ d[:4] - 1.0), abs(d[:4] @ d[4:]))


def is_unit(d, tol=1e-12):
    return unit_residual(d) <= tol


def dq_project_to_unit(d):
    """Normalize the real part, then remove its component from the dual part."""
    d = np.asarray(d, dtype=float)
    qr, qd = d[:4], d[4:]
    nr = np.linalg.norm(qr)
    if not nr > 1e-12:
        raise DegenerateInputError(f"real part norm {nr:g} too small to normalize")
    qr = qr / nr
    qd = qd - qr * (qr @ qd)
    return np.concatenate((qr, qd))


def dq_from_pose(pose):
    if not pose.is_valid():
        raise DegenerateInputError("rotation is not orthonormal with det +1")
    qr = quat_from_rotation(pose.rotation)
    qt = np.concatenate(([0.0], pose.position))
    return np.concatenate((qr, 0.5 * quat_compose(qt, qr)))


def dq_to_pose(d):
    d = np.asarray(d, dtype=float)
    res = unit_residual(d)
    if not res <= UNIT_TOL:
        raise DegenerateInputError(f"not a unit dual quaternion (residual {res:g})")
    qr, qd = d[:4], d[4:]
    qt = 2.0 * quat_compose(qd, quat_conjugate(qr))
    return Pose(quat_to_rotation(qr), qt[1:4])


def dq_from_rt(R, p):
    return dq_from_pose(Pose(R, p))


def dq_translation(d):
    """Position vector encoded by a unit dual quaternion."""
    d = np.asarray(d, dtype=float)
    return 2.0 * quat_compose(d[4:], quat_conjugate(d[:4]))[1:4]


# --------------------------------------------------------------------------
# batched helpers used by the solvers, shape (..., 4) and (..., 8)


def quat_compose_batch(p, q):
    p0, pv = p[..., :1], p[..., 1:4]
    q0, qv = q[..., :1], q[..., 1:4]
    w = p0 * q0 - np.sum(pv * qv, axis=-1, keepdims=True)
    v = p0 * qv + q0 * pv + np.cross(pv, qv)
    return np.concatenate((w, v), axis=-1)


def quat_conjugate_batch(q):
    out = q.copy()
    out[..., 1:4] *= -1.0
    return out


def dq_conjugate_batch(d):
    out = d.copy()
    out[..., 1:4] *= -1.0
    out[..., 5:8] *= -1.0
    return out


def dq_compose_batch(a, b):
    ar, ad = a[..., :4], a[..., 4:]
    br, bd = b[..., :4], b[..., 4:]
    real = quat_compose_batch(ar, br)
    dual = quat_compose_batch(ar, bd) + quat_compose_batch(ad, br)
    return np.concatenate((real, dual), axis=-1)


def dq_project_to_unit_batch(d):
    qr, qd = d[..., :4], d[..., 4:]
    nr = np.linalg.norm(qr, axis=-1, keepdims=True)
    if not np.all(nr > 1e-12):
        raise DegenerateInputError("real part norm too small to normalize")
    qr = qr / nr
    qd = qd - qr * np.sum(qr * qd, axis=-1, keepdims=True)
    return np.concatenate((qr, qd), axis=-1)


def quat_to_rotation_batch(q):
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def dq_translation_batch(d):
    return 2.0 * quat_compose_batch(d[..., 4:], quat_conjugate_batch(d[..., :4]))[..., 1:4]
