import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgereg.se3 import (
    AngleAtPi,
    Chart,
    ChartMismatch,
    Pose,
    Twist,
    compose,
    exp_rot,
    frobenius_dev,
    hat,
    invert,
    log_rot,
    pose_exp,
    pose_log,
    quat_to_rot,
    rot_to_quat,
    vee,
)

RNG = np.random.default_rng(20240811)


def random_twist(rng, max_angle=math.pi - 0.1, chart=Chart.SE3_LOG):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return Twist(angle * axis, rng.normal(0, 0.5, 3), chart)


class TestHat:
    def test_zero(self):
        assert np.array_equal(hat([0, 0, 0]), np.zeros((3, 3)))

    def test_pattern(self):
        expected = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
        assert np.array_equal(hat([1, 2, 3]), expected)

    def test_cross_product(self):
        assert np.array_equal(hat([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    def test_vee_inverse(self, phi):
        assert np.array_equal(vee(hat(phi)), np.asarray(phi))

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    def test_skew_symmetric(self, phi):
        m = hat(phi)
        assert np.array_equal(m, -m.T)


class TestRotExpLog:
    def test_exp_zero(self):
        assert np.array_equal(exp_rot([0, 0, 0]), np.eye(3))

    def test_exp_quarter_turn_z(self):
        # Closed-form Rodrigues at angle pi/2 about z.
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        assert np.allclose(exp_rot([0, 0, math.pi / 2]), expected, atol=1e-15)

    def test_round_trip_axis(self):
        phi = np.array([math.pi / 3, 0, 0])
        assert np.allclose(log_rot(exp_rot(phi)), phi, atol=1e-12)

    def test_log_identity(self):
        assert np.array_equal(log_rot(np.eye(3)), np.zeros(3))

    def test_round_trip_generic(self):
        phi = np.array([0.1, -0.2, 0.3])
        assert np.allclose(log_rot(exp_rot(phi)), phi, atol=1e-12)

    def test_angle_at_pi_raises(self):
        with pytest.raises(AngleAtPi):
            log_rot(exp_rot([0, 0, math.pi - 1e-12]))

    def test_small_angle_branch(self):
        phi = np.array([1e-9, -2e-9, 5e-10])
        assert np.allclose(log_rot(exp_rot(phi)), phi, atol=1e-18)

    def test_rotation_invariants(self):
        for _ in range(50):
            r = exp_rot(random_twist(RNG).phi)
            assert np.allclose(r @ r.T, np.eye(3), atol=1e-9)
            assert abs(np.linalg.det(r) - 1.0) < 1e-9


class TestPoseLogExp:
    def test_identity_both_charts(self):
        for chart in Chart:
            x = pose_log(Pose.identity(), chart)
            assert np.array_equal(x.vec, np.zeros(6))

    def test_pure_translation_charts_agree(self):
        p = Pose(np.eye(3), [1, 2, 3])
        for chart in Chart:
            x = pose_log(p, chart)
            assert np.array_equal(x.phi, np.zeros(3))
            assert np.array_equal(x.t, [1, 2, 3])

    @pytest.mark.parametrize("chart", list(Chart))
    def test_round_trip_100_random_poses(self, chart):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = pose_exp(random_twist(rng, max_angle=3.0, chart=chart))
            q = pose_exp(pose_log(p, chart))
            assert np.allclose(q.rotation, p.rotation, atol=1e-9)
            assert np.allclose(q.translation, p.translation, atol=1e-9)

    def test_exp_of_negated_twist_se3_log(self):
        x = random_twist(np.random.default_rng(3))
        left = pose_exp(Twist(-x.phi, -x.t))
        right = invert(pose_exp(x))
        assert np.allclose(left.rotation, right.rotation, atol=1e-12)
        assert np.allclose(left.translation, right.translation, atol=1e-12)

    def test_exp_of_negated_twist_so3_plus_t(self):
        # In the split chart, exp(-x) keeps -t, while the group inverse
        # carries -R^T t; they only agree at the identity rotation.
        x = random_twist(np.random.default_rng(4), chart=Chart.SO3_PLUS_T)
        p = pose_exp(x)
        neg = pose_exp(Twist(-x.phi, -x.t, Chart.SO3_PLUS_T))
        assert np.allclose(neg.rotation, p.rotation.T, atol=1e-12)
        assert np.allclose(neg.translation, -x.t, atol=1e-15)
        inv = invert(p)
        assert np.allclose(inv.translation, -(p.rotation.T @ x.t), atol=1e-12)
        assert not np.allclose(neg.translation, inv.translation, atol=1e-9)

    def test_log_antisymmetry_se3_log(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = pose_exp(random_twist(rng))
            a = pose_log(p).vec
            b = pose_log(invert(p)).vec
            assert np.allclose(a + b, 0, atol=1e-12)

    def test_chart_mismatch_raises(self):
        a = Twist.zero(Chart.SE3_LOG)
        b = Twist.zero(Chart.SO3_PLUS_T)
        with pytest.raises(ChartMismatch):
            _ = a + b


class TestGroupOps:
    def test_compose_invert_identity(self):
        p = pose_exp(random_twist(np.random.default_rng(6)))
        q = compose(p, invert(p))
        assert np.allclose(q.matrix(), np.eye(4), atol=1e-12)

    def test_associativity(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            a, b, c = (pose_exp(random_twist(rng)) for _ in range(3))
            left = compose(compose(a, b), c).matrix()
            right = compose(a, compose(b, c)).matrix()
            assert np.allclose(left, right, atol=1e-12)

    def test_frobenius_dev_identity(self):
        assert frobenius_dev(Pose.identity()) == 0.0

    def test_frobenius_dev_translation(self):
        assert frobenius_dev(Pose(np.eye(3), [1, 0, 0])) == pytest.approx(1.0)

    def test_matrix_bottom_row_exact(self):
        m = pose_exp(random_twist(np.random.default_rng(8))).matrix()
        assert np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0])


class TestQuaternions:
    def test_round_trip_fuzz(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            r = exp_rot(random_twist(rng, max_angle=math.pi - 1e-3).phi)
            r2 = quat_to_rot(rot_to_quat(r))
            assert np.allclose(r2, r, atol=1e-12)

    def test_unit_norm(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            q = rot_to_quat(exp_rot(random_twist(rng).phi))
            assert abs(np.linalg.norm(q) - 1.0) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1.0, 1.0), min_size=6, max_size=6),
    st.sampled_from(list(Chart)),
)
def test_round_trip_property(vals, chart):
    x = Twist(np.array(vals[:3]), np.array(vals[3:]), chart)
    if np.linalg.norm(x.phi) >= math.pi - 0.1:
        return
    y = pose_log(pose_exp(x), chart)
    assert np.allclose(y.vec, x.vec, atol=1e-9)
