import numpy as np
import pytest

from cyclodamp.kinematics import (
    Kinematics,
    PhasePoint,
    drift_matrix,
    exact_flow,
    rotated_frequencies,
    rotation_matrix,
    shift_s0,
)


def random_points(n, seed, vscale=3.0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield PhasePoint.of(rng.uniform(0, 1, 3), rng.normal(0, vscale, 3))


class TestRotationMatrix:
    def test_zero_rotation_is_identity(self):
        kin = Kinematics(omega=1.3)
        assert np.allclose(rotation_matrix(0.0, kin), np.eye(3), atol=1e-15)

    def test_quarter_turn_sign_layout(self):
        kin = Kinematics(omega=1.0)
        R = rotation_matrix(np.pi / 2, kin)
        assert np.allclose(R @ np.array([1.0, 0, 0]), [0, 1, 0], atol=1e-15)
        assert np.allclose(R @ np.array([0.0, 0, 1]), [0, 0, 1], atol=1e-15)

    def test_composition_against_matrix_multiply(self):
        kin = Kinematics(omega=1.0)
        lhs = rotation_matrix(0.3, kin) @ rotation_matrix(0.4, kin)
        assert np.allclose(lhs, rotation_matrix(0.7, kin), atol=1e-14)

    def test_orthogonal_det_one(self):
        kin = Kinematics(omega=2.7)
        R = rotation_matrix(0.83, kin)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
        assert abs(np.linalg.det(R) - 1.0) < 1e-14


class TestDriftMatrix:
    def test_zero_dt_is_zero(self):
        kin = Kinematics(omega=1.9)
        assert np.allclose(drift_matrix(0.0, kin), np.zeros((3, 3)), atol=1e-15)

    def test_full_period_leaves_only_z(self):
        kin = Kinematics(omega=1.0)
        M = drift_matrix(2 * np.pi, kin)
        expect = np.zeros((3, 3))
        expect[2, 2] = 2 * np.pi
        assert np.allclose(M, expect, atol=1e-13)

    def test_small_omega_matches_taylor_oracle(self):
        # Oracle: Taylor series of sin(w t)/w and (cos(w t)-1)/w at w = 1e-8.
        w, dt = 1e-8, 1.0
        g_oracle = dt - (w * dt) ** 2 * dt / 6.0
        h_oracle = w * dt * dt / 2.0
        M = drift_matrix(dt, Kinematics(omega=w))
        expect = np.array([[g_oracle, -h_oracle, 0], [h_oracle, g_oracle, 0], [0, 0, dt]])
        assert np.allclose(M, dt * np.eye(3), atol=1e-7)
        assert np.allclose(M, expect, atol=1e-12)

    def test_drift_is_integral_of_rotation(self):
        # Quadrature oracle: M(dt) = int_0^dt R(s) ds via fine midpoint rule.
        kin = Kinematics(omega=1.7)
        dt = 0.9
        s = (np.arange(20000) + 0.5) * (dt / 20000)
        acc = np.zeros((3, 3))
        for si in s:
            acc += rotation_matrix(si, kin)
        acc *= dt / 20000
        assert np.allclose(acc, drift_matrix(dt, kin), atol=1e-9)


class TestExactFlow:
    def test_identity_at_equal_times(self):
        kin = Kinematics(omega=0.8)
        p = PhasePoint.of([0.2, 0.5, 0.9], [1.0, -2.0, 0.5])
        q = exact_flow(1.7, 1.7, p, kin)
        assert np.allclose(q.x, p.x, atol=1e-15)
        assert np.allclose(q.v, p.v, atol=1e-15)

    def test_composition_oracle(self):
        kin = Kinematics(omega=1.0)
        p = PhasePoint.of([0.1, 0.7, 0.3], [0.4, -1.2, 2.0])
        two_leg = exact_flow(2.5, 1.0, exact_flow(1.0, 0.0, p, kin), kin)
        one_leg = exact_flow(2.5, 0.0, p, kin)
        assert np.allclose(two_leg.x, one_leg.x, atol=1e-12)
        assert np.allclose(two_leg.v, one_leg.v, atol=1e-12)

    def test_speed_preserved(self):
        kin = Kinematics(omega=2.2)
        for p in random_points(20, seed=1):
            q = exact_flow(3.1, 0.4, p, kin)
            assert abs(np.linalg.norm(q.v) - np.linalg.norm(p.v)) < 1e-14

    def test_group_law_100_random_triples(self):
        kin = Kinematics(omega=1.4)
        rng = np.random.default_rng(7)
        for _ in range(100):
            t1, t2, t3 = np.sort(rng.uniform(-3, 3, 3))
            p = PhasePoint.of(rng.uniform(0, 1, 3), rng.normal(0, 2, 3))
            a = exact_flow(t3, t2, exact_flow(t2, t1, p, kin), kin)
            b = exact_flow(t3, t1, p, kin)
            dx = np.abs(a.x - b.x)
            dx = np.minimum(dx, 1.0 - dx)  # torus distance
            assert np.all(dx < 1e-12)
            assert np.allclose(a.v, b.v, atol=1e-12)

    def test_measure_preservation_jacobian(self):
        # Finite-difference Jacobian of the 6-dim map has determinant 1;
        # Richardson extrapolation of the central difference controls both
        # truncation and roundoff below the 1e-10 tolerance.
        kin = Kinematics(omega=1.1)
        rng = np.random.default_rng(3)

        def flow6(z):
            q = exact_flow(1.3, 0.0, PhasePoint(x=z[:3], v=z[3:]), kin)
            return np.concatenate([q.x, q.v])

        def fd_jacobian(z0, eps):
            J = np.zeros((6, 6))
            for j in range(6):
                dz = np.zeros(6)
                dz[j] = eps
                diff = flow6(z0 + dz) - flow6(z0 - dz)
                diff[:3] = (diff[:3] + 0.5) % 1.0 - 0.5
                J[:, j] = diff / (2 * eps)
            return J

        for _ in range(5):
            z0 = np.concatenate([rng.uniform(0, 1, 3), rng.normal(0, 2, 3)])
            J = (4.0 * fd_jacobian(z0, 1e-5) - fd_jacobian(z0, 2e-5)) / 3.0
            assert abs(np.linalg.det(J) - 1.0) < 1e-10

    def test_landau_limit_matches_free_streaming(self):
        kin = Kinematics(omega=1e-8)
        rng = np.random.default_rng(11)
        for _ in range(10):
            p = PhasePoint.of(rng.uniform(0, 1, 3), rng.normal(0, 1, 3))
            for dt in (-10.0, -2.0, 3.0, 10.0):
                q = exact_flow(dt, 0.0, p, kin)
                x_free = np.mod(p.x + p.v * dt, 1.0)
                dx = np.abs(q.x - x_free)
                dx = np.minimum(dx, 1.0 - dx)
                assert np.all(dx < 1e-6)
                assert np.allclose(q.v, p.v, atol=1e-6)


class TestShiftS0:
    def test_identity_at_equal_times(self):
        kin = Kinematics(omega=0.6)
        p = PhasePoint.of([0.3, 0.3, 0.3], [1.0, 2.0, 3.0])
        q = shift_s0(0.9, 0.9, p, kin)
        assert np.allclose(q.x, p.x, atol=1e-15)
        assert np.allclose(q.v, p.v, atol=1e-15)

    def test_landau_limit_is_free_streaming_shift(self):
        kin = Kinematics(omega=0.0)
        p = PhasePoint.of([0.0, 0.0, 0.0], [0.1, 0.2, 0.3])
        q = shift_s0(2.0, 0.0, p, kin)
        assert np.allclose(q.x, np.mod(p.v * 2.0, 1.0), atol=1e-14)

    def test_group_law_at_quoted_times(self):
        kin = Kinematics(omega=1.0)
        p = PhasePoint.of([0.25, 0.5, 0.75], [0.3, -0.7, 1.1])
        a = shift_s0(1.9, 0.7, shift_s0(0.7, 0.0, p, kin), kin)
        b = shift_s0(1.9, 0.0, p, kin)
        dx = np.abs(a.x - b.x)
        dx = np.minimum(dx, 1.0 - dx)
        assert np.all(dx < 1e-12)
        assert np.allclose(a.v, b.v, atol=1e-15)

    def test_group_law_100_random_triples(self):
        kin = Kinematics(omega=2.3)
        rng = np.random.default_rng(5)
        for _ in range(100):
            t1, t2, t3 = rng.uniform(-4, 4, 3)
            p = PhasePoint.of(rng.uniform(0, 1, 3), rng.normal(0, 2, 3))
            a = shift_s0(t3, t2, shift_s0(t2, t1, p, kin), kin)
            b = shift_s0(t3, t1, p, kin)
            dx = np.abs(a.x - b.x)
            dx = np.minimum(dx, 1.0 - dx)
            assert np.all(dx < 1e-12)

    def test_velocity_unchanged(self):
        kin = Kinematics(omega=1.0)
        p = PhasePoint.of([0.0, 0.1, 0.2], [1.0, 2.0, -3.0])
        q = shift_s0(5.0, 1.0, p, kin)
        assert np.allclose(q.v, p.v, atol=1e-15)


class TestRotatedFrequencies:
    def test_zero_time(self):
        rf = rotated_frequencies([3, -2, 5], 0.0, Kinematics(omega=1.2))
        assert rf.eta_k1 == 0.0 and rf.eta_k2 == 0.0 and rf.nu_k == 0.0

    def test_pure_z_mode(self):
        rf = rotated_frequencies([0, 0, 5], 7.3, Kinematics(omega=0.9))
        assert rf.eta_k1 == 0.0 and rf.eta_k2 == 0.0
        assert abs(rf.nu_k - 5 * 7.3) < 1e-12

    def test_direct_evaluation_example(self):
        # k = (1,0,0), Omega = 1, t = pi: eta_k1 = -sin(pi) = 0, eta_k2 = -(1-cos(pi)) = -2.
        rf = rotated_frequencies([1, 0, 0], np.pi, Kinematics(omega=1.0))
        assert abs(rf.eta_k1 - 0.0) < 1e-14
        assert abs(rf.eta_k2 - (-2.0)) < 1e-14

    def test_nu_consistency(self):
        kin = Kinematics(omega=1.7)
        rf = rotated_frequencies([2, -1, 3], 2.2, kin)
        assert abs(rf.nu_k - (abs(rf.eta_k1) + abs(rf.eta_k2) + 3 * 2.2)) < 1e-14

    def test_landau_limit(self):
        rf = rotated_frequencies([2, -3, 1], 4.0, Kinematics(omega=1e-9))
        assert abs(rf.eta_k1 - (-2 * 4.0)) < 1e-6
        assert abs(rf.eta_k2 - (3 * 4.0)) < 1e-6

    def test_uniform_bound(self):
        # |eta_k1|, |eta_k2| <= 2(|k1|+|k2|)/Omega for all t.
        kin = Kinematics(omega=0.8)
        k = np.array([3, -2, 7])
        bound = 2 * (abs(k[0]) + abs(k[1])) / kin.omega
        for t in np.linspace(0, 50, 500):
            rf = rotated_frequencies(k, t, kin)
            assert abs(rf.eta_k1) <= bound + 1e-12
            assert abs(rf.eta_k2) <= bound + 1e-12


def test_negative_omega_rejected():
    with pytest.raises(ValueError):
        Kinematics(omega=-1.0)
