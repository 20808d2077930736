import math
import warnings

import numpy as np
import pytest

from dqloc.algebra import DQ_IDENTITY, Pose, dq_compose, dq_from_pose, quat_from_axis_angle
from dqloc.metrics import (
    GaugeWarning,
    SolverTrace,
    as_rotations_positions,
    error_rotation,
    error_translation,
    gauge_note,
)

from conftest import random_pose, random_unit_dq


def poses(rng, n=6):
    return [random_pose(rng) for _ in range(n)]


class TestErrors:
    def test_zero_at_truth(self, rng):
        truth = poses(rng)
        assert error_rotation(truth, truth) == 0
        assert error_translation(truth, truth) == 0

    def test_half_turn_gives_eight_over_n(self, rng):
        truth = poses(rng)
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        flip = np.zeros(8)
        flip[:4] = quat_from_axis_angle(u, np.pi)
        X = np.array([dq_from_pose(p) for p in truth])
        X[2] = dq_compose(X[2], flip)
        assert abs(error_rotation(X, truth) - 8 / 6) < 1e-12

    def test_double_cover(self, rng):
        truth = poses(rng)
        X = np.array([random_unit_dq(rng) for _ in range(6)])
        assert error_rotation(X, truth) == pytest.approx(error_rotation(-X, truth), abs=1e-14)
        assert error_translation(X, truth) == pytest.approx(error_translation(-X, truth), abs=1e-12)

    def test_constant_offset(self, rng):
        truth = poses(rng)
        v = rng.normal(size=3)
        est = [Pose(p.rotation, p.position + v) for p in truth]
        assert abs(error_translation(est, truth) - v @ v) < 1e-12

    def test_naive_oracle(self, rng):
        truth, est = poses(rng), poses(rng)
        eR = sum(np.sum((a.rotation - b.rotation) ** 2) for a, b in zip(truth, est)) / 6
        eT = sum(np.sum((a.position - b.position) ** 2) for a, b in zip(truth, est)) / 6
        assert abs(error_rotation(est, truth) - eR) < 1e-14
        assert abs(error_translation(est, truth) - eT) < 1e-14

    def test_joint_gauge_invariance(self, rng):
        truth, est = poses(rng), poses(rng)
        g = dq_from_pose(random_pose(rng))
        T = np.array([dq_compose(g, dq_from_pose(p)) for p in truth])
        E = np.array([dq_compose(g, dq_from_pose(p)) for p in est])
        assert abs(error_rotation(E, T) - error_rotation(est, truth)) < 1e-10
        assert abs(error_translation(E, T) - error_translation(est, truth)) < 1e-10

    def test_per_node_bound(self, rng):
        for _ in range(100):
            a, b = poses(rng, 1), poses(rng, 1)
            assert 0 <= error_rotation(a, b) <= 8 + 1e-12

    def test_input_forms_agree(self, rng):
        truth = poses(rng)
        X = np.array([dq_from_pose(p) for p in truth])
        R, p = as_rotations_positions(truth)
        R2, p2 = as_rotations_positions(X)
        np.testing.assert_allclose(R, R2, atol=1e-12)
        np.testing.assert_allclose(p, p2, atol=1e-12)
        R3, p3 = as_rotations_positions((R, p))
        assert np.array_equal(R3, R) and np.array_equal(p3, p)


class TestGauge:
    def test_identity_anchor_is_silent(self, rng):
        X = np.array([random_unit_dq(rng) for _ in range(4)])
        X[0] = DQ_IDENTITY
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert gauge_note(X) == 0.0

    def test_negated_identity_is_identity(self):
        X = np.tile(-DQ_IDENTITY, (2, 1))
        assert gauge_note(X) == 0.0

    def test_drifted_anchor_warns(self, rng):
        X = np.array([random_unit_dq(rng) for _ in range(4)])
        with pytest.warns(GaugeWarning):
            assert gauge_note(X) > 1e-8


class TestTrace:
    def make(self):
        tr = SolverTrace({"solver": "ddql"})
        tr.append(0, 2.0, e_R=1.0, e_T=3.0)
        tr.append(1, 1.5)
        tr.append(2, 1.0 / 3.0, e_R=0.1, e_T=0.2, window_k=1)
        return tr

    def test_strictly_increasing(self):
        tr = self.make()
        with pytest.raises(ValueError):
            tr.append(2, 0.1)

    def test_summary(self):
        s = self.make().summary()
        assert s["rho_initial"] == 2.0
        assert s["rho_final"] == 1.0 / 3.0
        assert s["rho_ratio"] == pytest.approx(1 / 6)
        assert s["e_R_final"] == 0.1 and s["e_T_final"] == 0.2

    def test_csv_round_trip(self, tmp_path):
        tr = self.make()
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        back = SolverTrace.from_csv(path)
        assert back.to_csv() == tr.to_csv()
        assert back.rho[-1] == 1.0 / 3.0

    def test_csv_layout(self):
        text = self.make().to_csv()
        lines = text.splitlines()
        assert lines[0] == "t,rho,e_R,e_T,window_k"
        assert lines[2] == "1,1.5,,,0"
        assert lines[3] == f"2,{1.0 / 3.0!r},0.1,0.2,1"

    def test_tv_columns(self):
        tr = SolverTrace()
        tr.append(0, 1.0, rho_R=0.25, rho_T=0.75)
        assert tr.to_csv().splitlines()[0] == "t,rho,rho_R,rho_T,e_R,e_T,window_k"

    def test_window_starts(self):
        assert self.make().window_starts() == [2]

    def test_sampled(self):
        t, v = self.make().sampled("e_R")
        assert list(t) == [0, 2] and list(v) == [1.0, 0.1]

    def test_missing_metric_is_nan(self):
        tr = SolverTrace()
        tr.append(0, 1.0)
        assert math.isnan(tr.summary()["e_R_final"])
