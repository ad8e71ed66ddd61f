import numpy as np
import pytest

from dwelltime.errors import EncodingError, InputError
from dwelltime.sdp import MARGIN_THRESHOLD, max_margin, solve
from dwelltime.sos import (
    AffMatPoly,
    ParamLmi,
    PwlUnknown,
    SdpBuilder,
    blockmat,
    discretize_encode,
    sos_encode,
    verify_pointwise,
)


def scalar_poly(coeffs):
    """1x1 constant AffMatPoly from scalar coefficients."""
    arr = np.array(coeffs, dtype=float).reshape(-1, 1, 1)
    return AffMatPoly(1, 1, arr, {})


def feasibility(builder):
    """Plain feasibility of the accumulated constraints (no margin)."""
    prob = builder.finalize()
    prob.objective = np.zeros(prob.nvars)
    sol = solve(prob)
    return sol.status == "optimal"


class TestSosEncode:
    def test_tau_one_minus_tau_feasible(self):
        # p(tau) = tau(1-tau) >= 0 on [0,1]: S0 = 0, S1 = 1 works.
        b = SdpBuilder()
        b.new_var()  # keep at least one variable
        sos_encode(b, ParamLmi(scalar_poly([0.0, 1.0, -1.0]), 0.0, 1.0,
                               strict=False))
        assert feasibility(b)

    def test_sign_changing_poly_infeasible(self):
        # p(tau) = tau - 0.5 < 0 at tau=0: infeasible at any multiplier degree.
        for md in (0, 2, 4, 6):
            b = SdpBuilder()
            b.new_var()
            sos_encode(b, ParamLmi(scalar_poly([-0.5, 1.0]), 0.0, 1.0,
                                   strict=False), mult_degree=md)
            assert not feasibility(b)

    def test_monotone_in_multiplier_degree(self):
        # feasible at the default degree stays feasible at degree + 2
        p = [0.0, 1.0, -1.0]
        for md in (0, 2, 4):
            b = SdpBuilder()
            b.new_var()
            sos_encode(b, ParamLmi(scalar_poly(p), 0.0, 1.0, strict=False),
                       mult_degree=md)
            assert feasibility(b)

    def test_degree_mismatch_rejected(self):
        # condition degree 6 cannot match a window of degree 4
        b = SdpBuilder()
        b.new_var()
        with pytest.raises(EncodingError):
            sos_encode(b, ParamLmi(scalar_poly([0, 0, 0, 0, 0, 0, 1.0]),
                                   0.0, 1.0, strict=False), mult_degree=2)

    def test_matrix_valued_interval_positivity(self):
        # M(tau) = [[tau+0.1, 0], [0, 1-tau+0.1]] on [0,1] is PD throughout.
        b = SdpBuilder()
        b.new_var()
        const = np.zeros((2, 2, 2))
        const[0] = np.diag([0.1, 1.1])
        const[1] = np.diag([1.0, -1.0])
        sos_encode(b, ParamLmi(AffMatPoly(2, 2, const, {}), 0.0, 1.0,
                               strict=False))
        assert feasibility(b)

    def test_soundness_via_margin_witness(self):
        # Solve for the largest c with tau(1-tau) - c >= 0 on [0,1]; the
        # answer must not exceed the true minimum (0 at the endpoints).
        b = SdpBuilder()
        t = b.margin()
        expr = scalar_poly([0.0, 1.0, -1.0])
        sos_encode(b, ParamLmi(expr, 0.0, 1.0, strict=True))
        margin, x = max_margin(b.finalize())
        assert margin <= 1e-8
        assert margin >= -1e-7


class TestVerifyPointwise:
    def test_identity(self):
        r, arg = verify_pointwise(lambda t: np.eye(2), 0.0, 1.0, grid=100)
        assert r == pytest.approx(1.0, abs=1e-12)

    def test_locates_minimum(self):
        r, arg = verify_pointwise(lambda t: np.diag([t - 0.5, 1.0]), 0.0, 1.0)
        assert r == pytest.approx(-0.5, abs=1e-12)
        assert arg == pytest.approx(0.0, abs=1e-12)

    def test_grid_validation(self):
        with pytest.raises(InputError):
            verify_pointwise(lambda t: np.eye(1), 0.0, 1.0, grid=1)


class TestDiscretize:
    def test_two_sided_endpoint_conditions(self):
        # dV/dtau <= -1 with V piecewise linear and V(0) = 1 forces descent.
        b = SdpBuilder()
        pwl = PwlUnknown(b, 1, 4, 0.0, 1.0)
        one = AffMatPoly.constant(np.array([[1.0]]))
        discretize_encode(b, pwl, lambda V, dV: dV + one, margin=False)
        b.add_equality({next(iter(pwl.value(0).terms)): 1.0}, 1.0)
        prob = b.finalize()
        prob.objective = np.zeros(prob.nvars)
        sol = solve(prob)
        assert sol.status == "optimal"
        vals = pwl.extract(sol.x)
        # slope <= -1 per segment implies the last breakpoint is <= 0
        assert vals.values[-1][0, 0] <= 1e-6

    def test_parameter_dependent_condition_rejected(self):
        b = SdpBuilder()
        pwl = PwlUnknown(b, 1, 2, 0.0, 1.0)
        tau_poly = AffMatPoly(1, 1, np.array([[[0.0]], [[1.0]]]), {})
        with pytest.raises(EncodingError):
            discretize_encode(b, pwl, lambda V, dV: V + tau_poly)

    def test_interpolated_evaluation(self):
        b = SdpBuilder()
        pwl = PwlUnknown(b, 1, 2, 0.0, 1.0)
        expr = pwl.at(0.25)
        v0 = next(iter(pwl.value(0).terms))
        v1 = next(iter(pwl.value(1).terms))
        assert expr.terms[v0][0, 0, 0] == pytest.approx(0.5)
        assert expr.terms[v1][0, 0, 0] == pytest.approx(0.5)


class TestBlockmat:
    def test_two_by_two_assembly(self):
        A = AffMatPoly.constant(np.eye(2))
        Bm = AffMatPoly.constant(np.zeros((2, 1)))
        C = AffMatPoly.constant(np.zeros((1, 2)))
        D = AffMatPoly.constant(2 * np.eye(1))
        M = blockmat([[A, Bm], [C, D]])
        assert M.rows == M.cols == 3
        assert np.allclose(M.const[0], np.diag([1.0, 1.0, 2.0]))

    def test_variable_terms_merge(self):
        b = SdpBuilder()
        X, _ = b.sym_poly_var(2, 1)
        M = blockmat([[X, AffMatPoly.zero(2, 2, 1)],
                      [AffMatPoly.zero(2, 2, 1), X]])
        assert M.rows == 4
        some_var = next(iter(X.terms))
        T = M.terms[some_var]
        assert np.allclose(T[:, :2, :2], X.terms[some_var])
        assert np.allclose(T[:, 2:, 2:], X.terms[some_var])
