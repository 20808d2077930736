"""Distributed dual quaternion localization (DDQL).

Every non-anchor node takes a gradient step on its local cost

    rho_i = sum_{j in N_i} 1/4 (|e_ij - c|^2 + |e_ji - c|^2),
    e_ij = conj(m_ij) (.) conj(d_i) (.) d_j,

and projects the result back onto the unit dual quaternions. ``m_ij`` is the
measured relative pose and ``c`` is zero for the ``"literal"`` cost form or the
identity for the ``"residual"`` form. The literal form never reaches zero: on
the unit manifold the real part of each error term contributes a constant 1.
Summing the local costs counts every directed term twice, so the network cost
is ``1/2 sum_{(i, j)} |e_ij - c|^2``.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .algebra import (
    DQ_IDENTITY,
    dq_compose_batch,
    dq_conjugate,
    dq_conjugate_batch,
    dq_project_to_unit,
    dq_project_to_unit_batch,
    mat_U,
    mat_V_tilde,
)
from .metrics import SolverTrace, error_rotation, error_translation
from .scene import gen_measurements, measurement_schedule

UPDATE_MODES = ("jacobi", "gauss_seidel")
COST_FORMS = ("literal", "residual")


class DivergenceError(FloatingPointError):
    """A gradient or estimate became non-finite. ``trace`` holds the rows so far."""

    def __init__(self, msg, trace=None, t=None):
        super().__init__(msg)
        self.trace = trace
        self.t = t


@dataclass(frozen=True)
class DdqlConfig:
    delta: float = 1e-4
    t_max: int = 100_000
    anchor: int = 0
    update_mode: str = "jacobi"
    T_s: int = None
    cost_form: str = "literal"
    metric_stride: int = 10

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be positive, got {self.delta}")
        if int(self.t_max) < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}, got {self.update_mode!r}")
        if self.cost_form not in COST_FORMS:
            raise ValueError(f"cost_form must be one of {COST_FORMS}, got {self.cost_form!r}")
        if self.T_s is not None and not 0 < int(self.T_s) < int(self.t_max):
            raise ValueError(f"need 0 < T_s < t_max, got T_s={self.T_s}, t_max={self.t_max}")
        if int(self.metric_stride) < 1:
            raise ValueError("metric_stride must be >= 1")

    def as_dict(self):
        return asdict(self)


def _offset(cost_form):
    return DQ_IDENTITY if cost_form == "residual" else np.zeros(8)


def _basis(fn):
    eye = np.eye(8)
    return np.stack([fn(eye[k]) for k in range(8)])


# operator(d)[a, b] == sum_k d[k] * T[k, a, b]; both operators are linear in d
_T_U = _basis(mat_U)
_T_VT = _basis(mat_V_tilde)


def _ops(T, D):
    return (D @ T.reshape(8, 64)).reshape(-1, 8, 8)


def edge_errors(estimates, measurements):
    """Error dual quaternions ``e_ij`` for every directed edge, by direct composition."""
    X = np.asarray(estimates, dtype=float)
    src, dst, D = measurements.arrays()
    rel = dq_compose_batch(dq_conjugate_batch(X[src]), X[dst])
    return dq_compose_batch(dq_conjugate_batch(D), rel)


def ddql_cost(estimates, measurements, cost_form="literal"):
    """Network cost ``sum_i rho_i``."""
    r = edge_errors(estimates, measurements) - _offset(cost_form)
    return 0.5 * float(np.sum(r * r))


def _incident(i, measurements):
    out_nbrs = [j for (a, j) in measurements if a == i]
    in_nbrs = [j for (j, b) in measurements if b == i]
    if sorted(out_nbrs) != sorted(in_nbrs):
        raise KeyError(f"node {i} is missing a measurement direction: out {out_nbrs}, in {in_nbrs}")
    return sorted(out_nbrs)


def local_cost(i, estimates, measurements, cost_form="literal"):
    """``rho_i`` built from the matrix operator form."""
    X = np.asarray(estimates, dtype=float)
    c = _offset(cost_form)
    total = 0.0
    for j in _incident(i, measurements):
        a = mat_U(dq_conjugate(measurements[(i, j)])) @ mat_V_tilde(X[j]) @ X[i] - c
        b = mat_U(dq_conjugate(measurements[(j, i)])) @ mat_V_tilde(X[i]) @ X[j] - c
        total += 0.25 * (a @ a + b @ b)
    return float(total)


def local_gradient(i, estimates, measurements, cost_form="literal"):
    """Exact derivative of ``rho_i`` with respect to node i's 8-vector.

    Needs only node i's estimate, its neighbors' estimates and the two
    measurements on each incident edge.
    """
    X = np.asarray(estimates, dtype=float)
    c = _offset(cost_form)
    g = np.zeros(8)
    for j in _incident(i, measurements):
        A = mat_U(dq_conjugate(measurements[(i, j)])) @ mat_V_tilde(X[j])
        B = mat_U(dq_conjugate(measurements[(j, i)])) @ mat_U(dq_conjugate(X[j]))
        g += 0.5 * (A.T @ (A @ X[i] - c) + B.T @ (B @ X[i] - c))
    return g


class _EdgeSystem:
    """Vectorized cost and gradients for all nodes at once."""

    def __init__(self, n, measurements, cost_form):
        self.src, self.dst, D = measurements.arrays()
        m = len(self.src)
        self.n = n
        self.c = _offset(cost_form)
        self.Um = _ops(_T_U, dq_conjugate_batch(D))
        self.inc_src = np.zeros((n, m))
        self.inc_src[self.src, np.arange(m)] = 1.0
        self.inc_dst = np.zeros((n, m))
        self.inc_dst[self.dst, np.arange(m)] = 1.0

    def evaluate(self, X):
        """Return ``(rho, grad)`` where ``grad[i]`` is d rho_i / d X_i."""
        A = self.Um @ _ops(_T_VT, X[self.dst])
        C = self.Um @ _ops(_T_U, dq_conjugate_batch(X[self.src]))
        r = np.einsum("eab,eb->ea", A, X[self.src]) - self.c
        g_src = np.einsum("eab,ea->eb", A, r)
        g_dst = np.einsum("eab,ea->eb", C, r)
        grad = 0.5 * (self.inc_src @ g_src + self.inc_dst @ g_dst)
        return 0.5 * float(np.sum(r * r)), grad


def _check_finite(arr, what, t, trace):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite {what} at iteration {t}", trace=trace, t=t)


def ddql_round(estimates, measurements, config, t=None):
    """One synchronous round: anchor reset, gradient steps, unit projection."""
    X = np.array(estimates, dtype=float)
    n = len(X)
    a = config.anchor
    if config.update_mode == "jacobi":
        _, grad = _EdgeSystem(n, measurements, config.cost_form).evaluate(X)
        _check_finite(grad, "gradient", t, None)
        grad[a] = 0.0
        X = dq_project_to_unit_batch(X - config.delta * grad)
    else:
        for i in range(n):
            if i == a:
                continue
            g = local_gradient(i, X, measurements, config.cost_form)
            _check_finite(g, "gradient", t, None)
            X[i] = dq_project_to_unit(X[i] - config.delta * g)
    X[a] = DQ_IDENTITY
    return X


class _Recorder:
    def __init__(self, trace, truth, stride):
        self.trace = trace
        self.truth = truth
        self.stride = stride

    def __call__(self, t, rho, X, window_k, force=False):
        e_R = e_T = math.nan
        if self.truth is not None and (force or t % self.stride == 0):
            e_R = error_rotation(X, self.truth)
            e_T = error_translation(X, self.truth)
        self.trace.append(t, rho, e_R=e_R, e_T=e_T, window_k=window_k)


def _run_windows(n, windows, init, config, truth, meta):
    """Shared loop; ``windows`` maps start iteration -> measurement set."""
    X = np.array(init, dtype=float).reshape(n, 8)
    a = config.anchor
    if np.max(np.abs(X[a] - DQ_IDENTITY)) > 1e-12:
        raise ValueError("initial anchor estimate must be the identity")
    X[a] = DQ_IDENTITY
    t_max = int(config.t_max)
    trace = SolverTrace(meta)
    record = _Recorder(trace, truth, int(config.metric_stride))
    jacobi = config.update_mode == "jacobi"

    k = 0
    meas = windows[0]
    system = _EdgeSystem(n, meas, config.cost_form)
    rho, grad = system.evaluate(X)
    record(0, rho, X, k)
    for t in range(1, t_max + 1):
        if t in windows:
            k += 1
            meas = windows[t]
            system = _EdgeSystem(n, meas, config.cost_form)
            if jacobi:
                _, grad = system.evaluate(X)
        if jacobi:
            if not np.all(np.isfinite(grad)):
                raise DivergenceError(f"non-finite gradient at iteration {t}", trace=trace, t=t)
            grad[a] = 0.0
            X = dq_project_to_unit_batch(X - config.delta * grad)
            X[a] = DQ_IDENTITY
            rho, grad = system.evaluate(X)
        else:
            try:
                X = ddql_round(X, meas, config, t=t)
            except DivergenceError as exc:
                exc.trace = trace
                raise
            rho = ddql_cost(X, meas, config.cost_form)
        if not np.isfinite(rho):
            raise DivergenceError(f"non-finite cost at iteration {t}", trace=trace, t=t)
        record(t, rho, X, k, force=(t == t_max))
    return X, trace


def ddql_run(net, measurements, init, config, truth=None, meta=None):
    """Run ``t_max`` rounds on fixed measurements.

    Returns the final estimates and a trace with the cost at every iteration
    and, when ``truth`` is given, pose errors every ``metric_stride`` rounds
    and at the last one. ``truth`` defaults to the network's ground truth.
    """
    measurements.check_covers(net)
    truth = net.truth if truth is None else truth
    meta = {"solver": "ddql", "config": config.as_dict(), **(meta or {})}
    return _run_windows(net.n, {0: measurements}, init, config, truth, meta)


def ddql_run_multisample(net, noise, config, rng, init, truth=None, meta=None):
    """Re-measure every ``T_s`` rounds and keep descending from the current estimates.

    A measurement set is drawn from ``rng`` at t = 0 and at each multiple of
    ``T_s``; the round producing the estimates at ``k * T_s`` already uses the
    new set. Trace rows carry the window index ``k``.
    """
    if config.T_s is None:
        raise ValueError("multi-sampling needs config.T_s")
    windows = {0: gen_measurements(net, noise, rng)}
    for t in measurement_schedule(config.T_s, config.t_max):
        windows[t] = gen_measurements(net, noise, rng)
    truth = net.truth if truth is None else truth
    meta = {"solver": "ddql", "config": config.as_dict(), **(meta or {})}
    return _run_windows(net.n, windows, init, config, truth, meta)
