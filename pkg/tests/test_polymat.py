import numpy as np
import pytest

from dwelltime.errors import InputError
from dwelltime.polymat import PolyMat


def test_eval_constant():
    C = np.array([[2.0, 1.0], [1.0, 0.0]])
    P = PolyMat.constant(C)
    for tau in (-1.0, 0.0, 3.7):
        assert np.array_equal(P.eval(tau), C)


def test_eval_linear():
    P = PolyMat([np.eye(2), 2 * np.eye(2)])
    assert np.array_equal(P.eval(3.0), 7 * np.eye(2))


def test_eval_quadratic():
    P = PolyMat([np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2)])
    assert np.array_equal(P.eval(0.5), 0.25 * np.eye(2))


def test_derivative_of_constant_is_zero():
    P = PolyMat.constant(np.eye(3))
    D = P.derivative()
    assert D.degree == 0
    assert np.array_equal(D.coeffs[0], np.zeros((3, 3)))


def test_derivative_power_rule():
    A0, A1, A2 = np.eye(2), 2 * np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])
    P = PolyMat([A0, A1, A2])
    D = P.derivative()
    assert D.degree == 1
    assert np.array_equal(D.coeffs[0], A1)
    assert np.array_equal(D.coeffs[1], 2 * A2)


def test_second_derivative():
    P = PolyMat([np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2)])
    DD = P.derivative().derivative()
    assert DD.degree == 0
    assert np.array_equal(DD.coeffs[0], 2 * np.eye(2))


def test_derivative_matches_central_difference():
    rng = np.random.default_rng(5)
    coeffs = [0.5 * (M + M.T) for M in rng.standard_normal((4, 3, 3))]
    P = PolyMat(coeffs)
    D = P.derivative()
    h = 1e-6
    for tau in (0.0, 0.3, 1.0):
        fd = (P.eval(tau + h) - P.eval(tau - h)) / (2 * h)
        assert np.linalg.norm(fd - D.eval(tau)) < 1e-8


def test_reparametrize_identity():
    rng = np.random.default_rng(6)
    coeffs = [0.5 * (M + M.T) for M in rng.standard_normal((3, 2, 2))]
    P = PolyMat(coeffs)
    Q = P.reparametrize(1.0, 0.0)
    assert np.array_equal(Q.coeffs, P.coeffs)


def test_reparametrize_affine_linear_case():
    tbar = 0.75
    P = PolyMat([np.zeros((2, 2)), np.eye(2)])
    Q = P.reparametrize(-1.0, tbar)
    assert np.array_equal(Q.coeffs[0], tbar * np.eye(2))
    assert np.array_equal(Q.coeffs[1], -np.eye(2))


def test_reparametrize_evaluates_correctly():
    rng = np.random.default_rng(7)
    coeffs = [0.5 * (M + M.T) for M in rng.standard_normal((5, 2, 2))]
    P = PolyMat(coeffs)
    a, b = -1.3, 0.4
    Q = P.reparametrize(a, b)
    for s in np.linspace(-1, 1, 7):
        assert np.allclose(Q.eval(s), P.eval(a * s + b), atol=1e-12)


def test_time_reversal_involution_exact():
    # Dyadic coefficients keep the binomial re-expansion exact, so the
    # double reversal recovers the coefficients bit for bit.
    coeffs = np.array([
        [[1.0, 0.5], [0.5, 2.0]],
        [[-0.25, 1.0], [1.0, 0.75]],
        [[0.125, 0.0], [0.0, -1.5]],
    ])
    P = PolyMat(coeffs)
    PP = P.reparametrize(-1.0, 1.0).reparametrize(-1.0, 1.0)
    assert np.array_equal(PP.coeffs, P.coeffs)


def test_symmetry_enforced():
    with pytest.raises(InputError):
        PolyMat([np.array([[0.0, 1.0], [0.0, 0.0]])])


def test_rectangular_needs_flag():
    U = PolyMat([np.ones((1, 2))], symmetric=False)
    assert U.shape == (1, 2)
    assert np.array_equal(U.eval(2.0), np.ones((1, 2)))


def test_json_roundtrip():
    P = PolyMat([np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])])
    Q = PolyMat.from_json(P.to_json())
    assert np.array_equal(P.coeffs, Q.coeffs)
    assert Q.symmetric
