"""scikit-learn style wrappers around the two localizers.

``fit`` takes a measurement mapping ``{(i, j): unit dual quaternion}`` with
0-based nodes and node 0 as the anchor. ``predict`` returns the absolute pose
estimates as an (n, 8) array.

>>> from dqloc.scene import build_planar_network, gen_measurements, NOISE_FREE
>>> net = build_planar_network(6)
>>> meas = gen_measurements(net, NOISE_FREE, None)
>>> loc = DDQLocalizer(t_max=200).fit(meas)
>>> loc.predict().shape
(6, 8)
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_estimates, check_measurements, n_nodes
from .algebra import DQ_IDENTITY, Pose, dq_from_pose, dq_to_pose
from .ddql import DdqlConfig, _run_windows, ddql_cost
from .tv import TvConfig, tv_cost_R, tv_cost_T, tv_rotation_stage, tv_translation_stage


def _initial(init, n):
    if init is None:
        X = np.tile(DQ_IDENTITY, (n, 1))
    else:
        X = check_estimates(init, n=n)
    return X


def _truth_dq(truth):
    if truth is None:
        return None
    if len(truth) and hasattr(truth[0], "rotation"):
        return np.array([dq_from_pose(p) for p in truth])
    return np.asarray(truth, dtype=float)


class DDQLocalizer(BaseEstimator):
    """Distributed dual quaternion localization as an estimator.

    Parameters mirror :class:`dqloc.ddql.DdqlConfig`. Fitted attributes:
    ``estimates_`` (n, 8), ``trace_`` (SolverTrace), ``n_nodes_``, ``n_iter_``.
    """

    def __init__(self, delta=1e-4, t_max=100_000, update_mode="jacobi", cost_form="literal", metric_stride=10):
        self.delta = delta
        self.t_max = t_max
        self.update_mode = update_mode
        self.cost_form = cost_form
        self.metric_stride = metric_stride

    def _config(self):
        return DdqlConfig(
            delta=self.delta,
            t_max=self.t_max,
            update_mode=self.update_mode,
            cost_form=self.cost_form,
            metric_stride=self.metric_stride,
        )

    def fit(self, X, y=None, init=None, truth=None):
        """Localize from measurements ``X``; ``truth`` (optional) enables error tracing.

        ``init`` defaults to every node at the identity.
        """
        meas = check_measurements(X)
        n = n_nodes(meas)
        x0 = _initial(init, n)
        est, trace = _run_windows(n, {0: meas}, x0, self._config(), _truth_dq(truth), {"solver": "ddql"})
        self.estimates_ = est
        self.trace_ = trace
        self.n_nodes_ = n
        self.n_iter_ = int(self.t_max)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "estimates_")
        return self.estimates_.copy()

    def predict_poses(self):
        check_is_fitted(self, "estimates_")
        return [dq_to_pose(d) for d in self.estimates_]

    def score(self, X, y=None):
        """Negative network cost of the fitted estimates on measurements ``X``."""
        check_is_fitted(self, "estimates_")
        return -ddql_cost(self.estimates_, check_measurements(X), self.cost_form)


class TVLocalizer(BaseEstimator):
    """Two-stage rotation-then-translation baseline as an estimator.

    Fitted attributes: ``rotations_`` (n, 3, 3), ``positions_`` (n, 3),
    ``trace_``, ``n_nodes_``.
    """

    def __init__(self, delta_R=1e-3, delta_T=1e-3, iters_R=50_000, iters_T=50_000, metric_stride=10):
        self.delta_R = delta_R
        self.delta_T = delta_T
        self.iters_R = iters_R
        self.iters_T = iters_T
        self.metric_stride = metric_stride

    def fit(self, X, y=None, init=None, truth=None):
        meas = check_measurements(X)
        n = n_nodes(meas)
        x0 = _initial(init, n)
        cfg = TvConfig(self.delta_R, self.delta_T, self.iters_R, self.iters_T, metric_stride=self.metric_stride)
        truth_dq = _truth_dq(truth)
        R0 = np.array([dq_to_pose(d).rotation for d in x0])
        p0 = np.array([dq_to_pose(d).position for d in x0])
        R, trace = tv_rotation_stage(R0, p0, meas, cfg, truth=truth_dq)
        p, trace = tv_translation_stage(R, p0, meas, cfg, truth=truth_dq, trace=trace, t0=int(self.iters_R))
        trace.meta["solver"] = "tv"
        self.rotations_ = R
        self.positions_ = p
        self.trace_ = trace
        self.n_nodes_ = n
        return self

    def predict(self, X=None):
        check_is_fitted(self, "rotations_")
        return np.array([dq_from_pose(Pose(R, p)) for R, p in zip(self.rotations_, self.positions_)])

    def score(self, X, y=None):
        check_is_fitted(self, "rotations_")
        meas = check_measurements(X)
        return -(tv_cost_R(self.rotations_, meas) + tv_cost_T(self.rotations_, self.positions_, meas))
