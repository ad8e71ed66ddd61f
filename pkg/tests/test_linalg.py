import numpy as np
import pytest

from dwelltime.errors import DimensionError, InputError
from dwelltime.linalg import expm, min_eig_sym, spectral_radius, transition_matrix

# Example 1 flow/jump pair: boundary of the stable periodic interval.
A_EX1 = np.array([[-1.0, 0.1], [0.0, 1.2]])
J_EX1 = np.array([[1.2, 0.0], [0.0, 0.5]])


class TestExpm:
    def test_zero_matrix(self):
        assert np.allclose(expm(np.zeros((2, 2)), 1.0), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        E = expm(np.diag([-1.0, 1.2]), 0.5)
        assert np.allclose(E, np.diag([np.exp(-0.5), np.exp(0.6)]), rtol=1e-13)

    def test_nilpotent_series_terminates(self):
        E = expm(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)
        assert np.allclose(E, np.array([[1.0, 1.0], [0.0, 1.0]]), atol=1e-15)

    def test_inverse_identity_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            M = rng.standard_normal((4, 4))
            M *= 2.0 / max(np.linalg.norm(M), 1e-12)
            t = rng.uniform(0.1, 2.0)
            P = expm(M, t) @ expm(M, -t)
            assert np.linalg.norm(P - np.eye(4)) < 1e-9

    def test_derivative_finite_difference(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((3, 3))
        t, h = 0.8, 1e-6
        D = (expm(M, t + h) - expm(M, t)) / h - M @ expm(M, t)
        assert np.linalg.norm(D) < 50 * h

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            expm(np.zeros((2, 3)), 1.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            expm(np.array([[np.nan, 0], [0, 0]]), 1.0)


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.25])) == pytest.approx(0.5, abs=1e-12)

    def test_rotation_complex_pair(self):
        assert spectral_radius(np.array([[0.0, 1.0], [-1.0, 0.0]])) == pytest.approx(1.0, abs=1e-12)

    def test_example1_interval_boundary(self):
        # rho(e^{A*0.5776} J) sits on the stability boundary.
        rho = spectral_radius(expm(A_EX1, 0.5776) @ J_EX1)
        assert rho == pytest.approx(1.0, abs=1e-3)

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((5, 5))
        a = -2.7
        assert spectral_radius(a * M) == pytest.approx(abs(a) * spectral_radius(M), abs=1e-9)


class TestMinEigSym:
    def test_identity(self):
        assert min_eig_sym(np.eye(3)) == pytest.approx(1.0, abs=1e-14)

    def test_diagonal(self):
        assert min_eig_sym(np.diag([3.0, -2.0])) == pytest.approx(-2.0, abs=1e-14)

    def test_two_by_two(self):
        assert min_eig_sym(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(InputError):
            min_eig_sym(np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestTransitionMatrix:
    def test_zero_gain_matches_expm(self):
        Phi = transition_matrix(np.diag([-1.0, -2.0]), None, None, 1.0, 1000)
        assert np.allclose(Phi, np.diag([np.exp(-1), np.exp(-2)]), atol=1e-9)

    def test_constant_closed_loop(self):
        # A = 0, Bc*K constant: Phi = expm(G t) up to O(h^4).
        G = np.array([[0.0, 1.0], [-1.0, -0.5]])
        Phi = transition_matrix(np.zeros((2, 2)), np.eye(2), lambda tau: G, 2.0, 2000)
        assert np.linalg.norm(Phi - expm(G, 2.0)) < 1e-10

    def test_matches_expm_at_1e4_steps(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((3, 3))
        Phi = transition_matrix(A, None, None, 1.0, 10_000)
        assert np.linalg.norm(Phi - expm(A, 1.0)) < 1e-6

    def test_printed_controller_transition_is_bounded(self):
        # Gain profile from the minimum-dwell synthesis worked example:
        # rational time-varying gain, integrated over [0, 0.1].
        A = np.array([[1.0, 0.0], [1.0, 2.0]])
        Bc = np.array([[1.0], [0.0]])

        def gain(tau):
            d = -0.19767438 + 0.78454217 * tau + 7.6562219 * tau ** 2
            k1 = 1.4750481 + 3.2714889 * tau - 41.011914 * tau ** 2
            k2 = 3.9063911 - 1.6733059 * tau - 37.472443 * tau ** 2
            return np.array([[k1 / d, k2 / d]])

        Phi = transition_matrix(A, Bc, gain, 0.1, 2000)
        assert np.all(np.isfinite(Phi))
        assert np.linalg.norm(Phi) < 10.0

    def test_rejects_nonfinite_gain(self):
        with pytest.raises(InputError):
            transition_matrix(np.eye(2), np.eye(2),
                              lambda tau: np.full((2, 2), np.inf), 1.0, 10)
