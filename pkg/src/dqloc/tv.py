"""Two-stage baseline: rotation consensus on SO(3), then translations in R^3.

The relative pose distance splits as ``theta(R_i^T R_j, Rm_ij)^2 +
|R_i^T (p_j - p_i) - pm_ij|^2`` with ``theta`` the geodesic angle. The rotation
stage runs Riemannian gradient descent on the first term, then the
translation stage runs Euclidean gradient descent on the second with the
rotations frozen. Both use the same 1/4 symmetric weighting as DDQL, so the
network costs are half the sum over directed edges.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np
from scipy.spatial.transform import Rotation

from .algebra import dq_translation_batch, quat_to_rotation_batch
from .metrics import SolverTrace, error_rotation, error_translation

# fixed tie-break axis for log maps at exactly a half turn
_PI_AXIS = np.array([1.0, 2.0, 3.0]) / np.sqrt(14.0)
_PI_EPS = 1e-9


@dataclass(frozen=True)
class TvConfig:
    delta_R: float = 1e-3
    delta_T: float = 1e-3
    iters_R: int = 50_000
    iters_T: int = 50_000
    anchor: int = 0
    metric_stride: int = 10

    def __post_init__(self):
        for name in ("delta_R", "delta_T"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        for name in ("iters_R", "iters_T", "metric_stride"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    def as_dict(self):
        return asdict(self)


def so3_log(R):
    """Rotation vectors of a batch of rotation matrices, shape (..., 3)."""
    R = np.asarray(R, dtype=float)
    flat = R.reshape(-1, 3, 3)
    cos = np.clip((np.trace(flat, axis1=1, axis2=2) - 1.0) / 2.0, -1.0, 1.0)
    near_pi = np.arccos(cos) > np.pi - _PI_EPS
    if np.any(near_pi):
        flat = flat.copy()
        flat[near_pi] = flat[near_pi] @ so3_exp(_PI_EPS * _PI_AXIS)
    return Rotation.from_matrix(flat).as_rotvec().reshape(R.shape[:-2] + (3,))


def so3_exp(w):
    w = np.asarray(w, dtype=float)
    return Rotation.from_rotvec(w.reshape(-1, 3)).as_matrix().reshape(w.shape[:-1] + (3, 3))


def geodesic_distance(R1, R2):
    """Angle of ``R1^T R2``, equal to ``|log(R1^T R2)|_F / sqrt(2)``."""
    return np.linalg.norm(so3_log(np.swapaxes(R1, -1, -2) @ R2), axis=-1)


def decompose(measurements):
    """``(src, dst, R_meas, p_meas)`` from a measurement set."""
    src, dst, D = measurements.arrays()
    return src, dst, quat_to_rotation_batch(D[:, :4]), dq_translation_batch(D)


def _T(R):
    return np.swapaxes(R, -1, -2)


def tv_cost_R(rotations, measurements):
    src, dst, Rm, _ = decompose(measurements)
    R = np.asarray(rotations, dtype=float)
    theta = geodesic_distance(_T(R[src]) @ R[dst], Rm)
    return 0.5 * float(np.sum(theta**2))


def tv_cost_T(rotations, positions, measurements):
    src, dst, _, pm = decompose(measurements)
    R = np.asarray(rotations, dtype=float)
    p = np.asarray(positions, dtype=float)
    r = np.einsum("eba,eb->ea", R[src], p[dst] - p[src]) - pm
    return 0.5 * float(np.sum(r * r))


def rotation_gradient(rotations, measurements):
    """Riemannian gradient of each node's local rotation cost, in body coordinates.

    Row i is the gradient for the perturbation ``R_i exp([w]x)``.
    """
    src, dst, Rm, _ = decompose(measurements)
    return _rotation_gradient(np.asarray(rotations, dtype=float), src, dst, Rm)[1]


def _rotation_gradient(R, src, dst, Rm):
    v = so3_log(_T(R[src]) @ R[dst] @ _T(Rm))
    u = so3_log(_T(Rm) @ _T(R[src]) @ R[dst])
    g = np.zeros((len(R), 3))
    np.add.at(g, src, -0.5 * v)
    np.add.at(g, dst, 0.5 * u)
    return 0.5 * float(np.sum(v * v)), g


def translation_gradient(rotations, positions, measurements):
    src, dst, _, pm = decompose(measurements)
    return _translation_gradient(np.asarray(rotations, float), np.asarray(positions, float), src, dst, pm)[1]


def _translation_gradient(R, p, src, dst, pm):
    r = np.einsum("eba,eb->ea", R[src], p[dst] - p[src]) - pm
    gs = -0.5 * np.einsum("eab,eb->ea", R[src], r)
    g = np.zeros((len(p), 3))
    np.add.at(g, src, gs)
    np.add.at(g, dst, -gs)
    return 0.5 * float(np.sum(r * r)), g


def _record(trace, t, rho_R, rho_T, R, p, truth, force, stride):
    e_R = e_T = math.nan
    if truth is not None and (force or t % stride == 0):
        e_R = error_rotation((R, p), truth)
        e_T = error_translation((R, p), truth)
    trace.append(t, rho_R + rho_T, rho_R=rho_R, rho_T=rho_T, e_R=e_R, e_T=e_T)


def tv_rotation_stage(rotations, positions, measurements, config, truth=None, trace=None, t0=0):
    """Riemannian descent on the rotation cost; positions are carried along unchanged."""
    src, dst, Rm, pm = decompose(measurements)
    R = np.array(rotations, dtype=float)
    p = np.array(positions, dtype=float)
    a = config.anchor
    trace = SolverTrace({"stage": "rotation"}) if trace is None else trace
    rho_T = _translation_gradient(R, p, src, dst, pm)[0]
    rho_R, g = _rotation_gradient(R, src, dst, Rm)
    if t0 == 0:
        _record(trace, 0, rho_R, rho_T, R, p, truth, True, config.metric_stride)
    for k in range(1, int(config.iters_R) + 1):
        g[a] = 0.0
        # composing as unit quaternions re-normalizes every step
        R = (Rotation.from_matrix(R) * Rotation.from_rotvec(-config.delta_R * g)).as_matrix()
        R[a] = np.eye(3)
        rho_R, g = _rotation_gradient(R, src, dst, Rm)
        rho_T = _translation_gradient(R, p, src, dst, pm)[0]
        _record(trace, t0 + k, rho_R, rho_T, R, p, truth, k == config.iters_R, config.metric_stride)
    return R, trace


def tv_translation_stage(rotations, positions, measurements, config, truth=None, trace=None, t0=0):
    """Euclidean descent on the translation cost with frozen rotations."""
    src, dst, Rm, pm = decompose(measurements)
    R = np.array(rotations, dtype=float)
    p = np.array(positions, dtype=float)
    a = config.anchor
    trace = SolverTrace({"stage": "translation"}) if trace is None else trace
    p[a] = 0.0
    rho_R = _rotation_gradient(R, src, dst, Rm)[0]
    rho_T, g = _translation_gradient(R, p, src, dst, pm)
    if t0 == 0:
        _record(trace, 0, rho_R, rho_T, R, p, truth, True, config.metric_stride)
    for k in range(1, int(config.iters_T) + 1):
        g[a] = 0.0
        p = p - config.delta_T * g
        rho_T, g = _translation_gradient(R, p, src, dst, pm)
        _record(trace, t0 + k, rho_R, rho_T, R, p, truth, k == config.iters_T, config.metric_stride)
    return p, trace


def tv_run(net, measurements, init, config, truth=None, meta=None):
    """Rotation stage followed by translation stage, traced on one time axis.

    ``init`` is an (n, 8) array of unit dual quaternions or an ``(R, p)``
    tuple. Returns ``((R, p), trace)``.
    """
    measurements.check_covers(net)
    if isinstance(init, tuple):
        R0, p0 = (np.array(x, dtype=float) for x in init)
    else:
        X = np.asarray(init, dtype=float)
        R0, p0 = quat_to_rotation_batch(X[:, :4]), dq_translation_batch(X)
    truth = net.truth if truth is None else truth
    trace = SolverTrace({"solver": "tv", "config": config.as_dict(), **(meta or {})})
    R, trace = tv_rotation_stage(R0, p0, measurements, config, truth=truth, trace=trace)
    p, trace = tv_translation_stage(R, p0, measurements, config, truth=truth, trace=trace, t0=int(config.iters_R))
    return (R, p), trace
