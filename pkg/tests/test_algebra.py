import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dqloc.algebra import (
    DQ_IDENTITY,
    DegenerateInputError,
    Pose,
    dq_compose,
    dq_compose_batch,
    dq_conjugate,
    dq_from_pose,
    dq_project_to_unit,
    dq_to_pose,
    mat_M,
    mat_N,
    mat_N_tilde,
    mat_U,
    mat_V,
    mat_V_tilde,
    quat_compose,
    quat_conjugate,
    quat_from_axis_angle,
    quat_from_rotation,
    quat_to_rotation,
    unit_residual,
)

from conftest import random_pose, random_unit_dq

# Hamilton multiplication table on the basis (1, i, j, k): e_a e_b = sign * e_c
_TABLE = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def table_product(p, q):
    out = np.zeros(4)
    for a in range(4):
        for b in range(4):
            s, c = _TABLE[(a, b)]
            out[c] += s * p[a] * q[b]
    return out


def homogeneous(pose):
    T = np.eye(4)
    T[:3, :3] = pose.rotation
    T[:3, 3] = pose.position
    return T


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quats = arrays(np.float64, 4, elements=finite)


class TestQuaternion:
    def test_identity_left_factor(self):
        q = np.array([0.5, 0.5, 0.5, 0.5])
        np.testing.assert_array_equal(quat_compose([1, 0, 0, 0], q), q)

    def test_i_squared(self):
        np.testing.assert_array_equal(quat_compose([0, 1, 0, 0], [0, 1, 0, 0]), [-1, 0, 0, 0])

    def test_ijk_is_minus_one(self):
        i, j, k = np.eye(4)[1:]
        np.testing.assert_array_equal(quat_compose(quat_compose(i, j), k), [-1, 0, 0, 0])

    def test_matches_multiplication_table(self, rng):
        for _ in range(200):
            p, q = rng.normal(size=(2, 4))
            np.testing.assert_allclose(quat_compose(p, q), table_product(p, q), atol=1e-13)

    def test_unit_norm_preserved(self, rng):
        for _ in range(200):
            p, q = rng.normal(size=(2, 4))
            p /= np.linalg.norm(p)
            q /= np.linalg.norm(q)
            assert abs(np.linalg.norm(quat_compose(p, q)) - 1) < 1e-12

    def test_conjugate_examples(self):
        np.testing.assert_array_equal(quat_conjugate([1, 0, 0, 0]), [1, 0, 0, 0])
        np.testing.assert_array_equal(quat_conjugate([0.5, 0.5, 0.5, 0.5]), [0.5, -0.5, -0.5, -0.5])

    def test_conjugate_recovers_identity(self, rng):
        for _ in range(100):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            np.testing.assert_allclose(quat_compose(q, quat_conjugate(q)), [1, 0, 0, 0], atol=1e-12)

    @given(quats, quats)
    def test_norm_multiplicative(self, p, q):
        lhs = np.linalg.norm(quat_compose(p, q))
        rhs = np.linalg.norm(p) * np.linalg.norm(q)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)

    @given(quats, quats)
    def test_operator_forms(self, p, q):
        pq = quat_compose(p, q)
        scale = max(1.0, np.abs(p).max() * np.abs(q).max())
        assert np.max(np.abs(mat_M(p) @ q - pq)) <= 1e-13 * scale
        assert np.max(np.abs(mat_N(q) @ p - pq)) <= 1e-13 * scale
        assert np.max(np.abs(mat_N_tilde(q) @ p - mat_M(quat_conjugate(p)) @ q)) <= 1e-13 * scale

    def test_operator_examples(self):
        np.testing.assert_array_equal(mat_M([1, 0, 0, 0]), np.eye(4))
        np.testing.assert_array_equal(mat_N_tilde([1, 0, 0, 0]), np.diag([1.0, -1, -1, -1]))

    def test_operator_consistency_random(self, rng):
        for _ in range(200):
            p, q = rng.normal(size=(2, 4))
            assert np.max(np.abs(mat_M(p) @ q - mat_N(q) @ p)) < 1e-14
            assert np.max(np.abs(mat_N_tilde(q) @ p - mat_M(quat_conjugate(p)) @ q)) < 1e-14

    def test_axis_angle_examples(self):
        np.testing.assert_array_equal(quat_from_axis_angle([0, 0, 1], 0.0), [1, 0, 0, 0])
        np.testing.assert_allclose(quat_from_axis_angle([0, 0, 1], np.pi), [0, 0, 0, 1], atol=1e-16)
        s = np.sqrt(2) / 2
        np.testing.assert_allclose(quat_from_axis_angle([1, 0, 0], np.pi / 2), [s, s, 0, 0], atol=1e-16)

    def test_axis_angle_rejects_non_unit_axis(self):
        with pytest.raises(ValueError):
            quat_from_axis_angle([0, 0, 2], 0.3)

    def test_axis_angle_rotation_agrees_with_rodrigues(self, rng):
        for _ in range(50):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            th = rng.uniform(-np.pi, np.pi)
            K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
            R = np.eye(3) + np.sin(th) * K + (1 - np.cos(th)) * K @ K
            np.testing.assert_allclose(quat_to_rotation(quat_from_axis_angle(u, th)), R, atol=1e-13)


class TestDualQuaternion:
    def test_identity_left(self, rng):
        d2 = rng.normal(size=8)
        np.testing.assert_array_equal(dq_compose(DQ_IDENTITY, d2), d2)

    def test_translations_add(self):
        a, b = np.array([1.0, -2.0, 0.5]), np.array([0.25, 3.0, -1.0])
        da = np.concatenate(([1, 0, 0, 0], 0.5 * np.concatenate(([0], a))))
        db = np.concatenate(([1, 0, 0, 0], 0.5 * np.concatenate(([0], b))))
        expect = np.concatenate(([1, 0, 0, 0], 0.5 * np.concatenate(([0], a + b))))
        np.testing.assert_array_equal(dq_compose(da, db), expect)

    def test_composition_matches_homogeneous_matrices(self, rng):
        for _ in range(200):
            g1, g2 = random_pose(rng), random_pose(rng)
            got = dq_to_pose(dq_compose(dq_from_pose(g1), dq_from_pose(g2)))
            T = homogeneous(g1) @ homogeneous(g2)
            np.testing.assert_allclose(got.rotation, T[:3, :3], atol=1e-9)
            np.testing.assert_allclose(got.position, T[:3, 3], atol=1e-9)

    def test_operator_forms(self, rng):
        for _ in range(200):
            d, d2 = random_unit_dq(rng), random_unit_dq(rng)
            dd = dq_compose(d, d2)
            assert np.max(np.abs(mat_U(d) @ d2 - dd)) < 1e-13
            assert np.max(np.abs(mat_V(d2) @ d - dd)) < 1e-13
            assert np.max(np.abs(mat_U(dq_conjugate(d)) @ d2 - mat_V_tilde(d2) @ d)) < 1e-13

    def test_operator_examples(self):
        np.testing.assert_array_equal(mat_U(DQ_IDENTITY), np.eye(8))
        np.testing.assert_array_equal(dq_conjugate(DQ_IDENTITY), DQ_IDENTITY)

    def test_unit_closure_over_long_chains(self, rng):
        d = DQ_IDENTITY.copy()
        for _ in range(1000):
            d = dq_compose(d, random_unit_dq(rng, scale=0.5))
        assert unit_residual(d) < 1e-10

    def test_conjugate_is_inverse_for_unit(self, rng):
        for _ in range(200):
            d = random_unit_dq(rng)
            np.testing.assert_allclose(dq_compose(dq_conjugate(d), d), DQ_IDENTITY, atol=1e-12)

    def test_batch_matches_scalar(self, rng):
        a = np.array([random_unit_dq(rng) for _ in range(20)])
        b = np.array([random_unit_dq(rng) for _ in range(20)])
        ref = np.array([dq_compose(x, y) for x, y in zip(a, b)])
        np.testing.assert_allclose(dq_compose_batch(a, b), ref, atol=1e-14)


class TestPoseConversion:
    def test_translation_only(self):
        d = dq_from_pose(Pose(np.eye(3), [1, 2, 3]))
        np.testing.assert_array_equal(d, [1, 0, 0, 0, 0, 0.5, 1, 1.5])

    def test_identity(self):
        np.testing.assert_array_equal(dq_from_pose(Pose.identity()), DQ_IDENTITY)
        pose = dq_to_pose(DQ_IDENTITY)
        np.testing.assert_array_equal(pose.rotation, np.eye(3))
        np.testing.assert_array_equal(pose.position, np.zeros(3))

    def test_half_turn_about_z(self):
        pose = dq_to_pose(np.array([0, 0, 0, 1, 0, 0, 0, 0.0]))
        np.testing.assert_allclose(pose.rotation, np.diag([-1.0, -1, 1]), atol=1e-16)
        np.testing.assert_array_equal(pose.position, np.zeros(3))

    def test_round_trip(self, rng):
        for _ in range(1000):
            g = random_pose(rng)
            back = dq_to_pose(dq_from_pose(g))
            np.testing.assert_allclose(back.rotation, g.rotation, atol=1e-9)
            np.testing.assert_allclose(back.position, g.position, atol=1e-9)

    def test_canonical_sign(self, rng):
        for _ in range(200):
            d = dq_from_pose(random_pose(rng))
            assert d[0] >= 0
        # q0 == 0: first nonzero vector component positive
        R = np.diag([1.0, -1.0, -1.0])  # half turn about x
        assert dq_from_pose(Pose(R, np.zeros(3)))[1] > 0

    def test_quat_from_rotation_near_half_turn(self, rng):
        for _ in range(200):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            th = np.pi - rng.uniform(0, 1e-6)
            q = quat_from_axis_angle(u, th)
            R = quat_to_rotation(q)
            np.testing.assert_allclose(quat_to_rotation(quat_from_rotation(R)), R, atol=1e-12)

    def test_rejects_invalid_rotation(self):
        with pytest.raises(DegenerateInputError):
            dq_from_pose(Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3)))
        with pytest.raises(DegenerateInputError):
            dq_from_pose(Pose(2 * np.eye(3), np.zeros(3)))

    def test_to_pose_rejects_non_unit(self):
        with pytest.raises(DegenerateInputError):
            dq_to_pose(np.array([2.0, 0, 0, 0, 0, 0, 0, 0]))
        with pytest.raises(DegenerateInputError):
            dq_to_pose(np.array([1.0, 0, 0, 0, 0.1, 0, 0, 0]))


class TestProjection:
    def test_unit_input_unchanged(self, rng):
        for _ in range(100):
            d = random_unit_dq(rng)
            assert np.max(np.abs(dq_project_to_unit(d) - d)) < 1e-14

    def test_example(self):
        out = dq_project_to_unit(np.array([2.0, 0, 0, 0, 1, 0, 0, 0]))
        np.testing.assert_array_equal(out, DQ_IDENTITY)

    def test_perturbed_input(self, rng):
        for _ in range(200):
            d = random_unit_dq(rng, scale=1.0)
            x = d + rng.normal(size=8) * 1e-3
            out = dq_project_to_unit(x)
            assert unit_residual(out) < 1e-12
            # stays close to the nearby unit point it perturbs
            assert np.linalg.norm(out - d) < 5 * np.linalg.norm(x - d)

    def test_idempotent(self, rng):
        x = rng.normal(size=8)
        once = dq_project_to_unit(x)
        assert np.max(np.abs(dq_project_to_unit(once) - once)) < 1e-14

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            dq_project_to_unit(np.array([0, 0, 0, 0, 1.0, 0, 0, 0]))

    @settings(max_examples=200)
    @given(arrays(np.float64, 8, elements=finite))
    def test_output_unit(self, x):
        if np.linalg.norm(x[:4]) < 1e-3:
            return
        assert unit_residual(dq_project_to_unit(x)) < 1e-12
