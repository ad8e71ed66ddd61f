import numpy as np
import pytest

from dwelltime.errors import ExtractionError
from dwelltime.linalg import expm, spectral_radius, transition_matrix
from dwelltime.polymat import PolyMat
from dwelltime.synthesis import (
    Controller,
    extract_gain,
    stabilize_min_dwell,
    stabilize_periodic,
)
from dwelltime.systems import ImpulsiveSystem, PolytopicSystem

# Worked example: both flow and jumps unstable, one continuous input.
SYS_HARD = ImpulsiveSystem(np.array([[1.0, 0.0], [1.0, 2.0]]),
                           np.array([[1.0, 1.0], [1.0, 3.0]]),
                           Bc=np.array([[1.0], [0.0]]))
# Flow with an unstable mode actuated through the second state.
SYS_PER = ImpulsiveSystem(np.array([[-1.0, 0.1], [0.0, 1.2]]),
                          np.array([[1.2, 0.0], [0.0, 0.5]]),
                          Bc=np.array([[0.0], [1.0]]))


def closed_loop_transition(sys, ctrl, tbar, steps=20000):
    return transition_matrix(sys.A, sys.Bc, lambda t: ctrl.gain(t), tbar, steps)


class TestMinDwellSynthesis:
    def test_hard_example_feasible_at_degree_one(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=1)
        assert r.feasible
        assert r.margin >= 1e-8
        assert all(v >= -1e-6 for v in r.residuals.values())

    def test_closed_loop_schur_across_dwells(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=1)
        ctrl = r.controller
        Phi_T = closed_loop_transition(SYS_HARD, ctrl, 0.1)
        Acl_T = SYS_HARD.A + SYS_HARD.Bc @ ctrl.gain(0.1)
        for th in np.linspace(0.1, 2.0, 25):
            Phi = expm(Acl_T, th - 0.1) @ Phi_T
            assert spectral_radius(Phi @ SYS_HARD.J) < 1.0

    def test_no_control_authority_infeasible(self):
        r = stabilize_min_dwell(
            ImpulsiveSystem(SYS_HARD.A, SYS_HARD.J), 0.5, degree=2,
            bc=np.zeros((2, 1)), bd=np.zeros((2, 1)))
        assert not r.feasible
        assert r.controller is None

    def test_stable_plant_zero_inputs_feasible(self):
        sys = ImpulsiveSystem(np.array([[-1.0, 0.0], [1.0, -2.0]]),
                              0.5 * np.eye(2),
                              Bc=np.zeros((2, 1)), Bd=np.zeros((2, 1)))
        r = stabilize_min_dwell(sys, 1.0, degree=1)
        assert r.feasible

    def test_duality_closure_residuals(self):
        # inv(S) satisfies the closed-loop analysis conditions pointwise.
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=2)
        assert r.feasible
        assert r.residuals["closure_flow"] >= -1e-7
        assert r.residuals["closure_jump"] > 0
        assert r.residuals["closure_strict_flow"] > 0


class TestPeriodicSynthesis:
    def test_outside_open_loop_interval(self):
        # tbar = 1.0 is far outside the open-loop stable interval.
        r = stabilize_periodic(SYS_PER, 1.0, degree=3)
        assert r.feasible
        ctrl = r.controller
        Phi = closed_loop_transition(SYS_PER, ctrl, 1.0)
        assert spectral_radius(Phi @ SYS_PER.J) < 1.0

    def test_discrete_input_channel(self):
        sys = ImpulsiveSystem(SYS_HARD.A, SYS_HARD.J,
                              Bc=np.array([[1.0], [0.0]]),
                              Bd=np.array([[0.0], [1.0]]))
        r = stabilize_periodic(sys, 0.2, degree=2)
        assert r.feasible
        ctrl = r.controller
        assert ctrl.Kd is not None and ctrl.Kd.shape == (1, 2)
        Phi = closed_loop_transition(sys, ctrl, 0.2)
        Jcl = sys.J + sys.Bd @ ctrl.Kd
        assert spectral_radius(Phi @ Jcl) < 1.0

    def test_robust_vertices_common_controller(self):
        psys = PolytopicSystem([(SYS_PER.A, SYS_PER.J),
                                (1.05 * SYS_PER.A, SYS_PER.J)])
        r = stabilize_periodic(psys, 0.8, degree=3,
                               bc=np.array([[0.0], [1.0]]))
        assert r.feasible
        for A, J in psys.vertices:
            sysv = ImpulsiveSystem(A, J, Bc=np.array([[0.0], [1.0]]))
            Phi = closed_loop_transition(sysv, r.controller, 0.8)
            assert spectral_radius(Phi @ J) < 1.0


class TestGainExtraction:
    def test_clamp_is_exact(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=1)
        ctrl = r.controller
        K_bar = extract_gain(ctrl, 0.1)
        assert np.array_equal(extract_gain(ctrl, 0.2), K_bar)
        assert np.array_equal(extract_gain(ctrl, 5.0), K_bar)

    def test_continuity_at_clamp(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=2)
        ctrl = r.controller
        below = extract_gain(ctrl, 0.1 - 1e-9)
        at = extract_gain(ctrl, 0.1)
        assert np.linalg.norm(below - at) < 1e-5

    def test_gain_at_zero(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=1)
        ctrl = r.controller
        K0 = extract_gain(ctrl, 0.0)
        expected = ctrl.Uc.eval(0.0) @ np.linalg.inv(ctrl.S.eval(0.0))
        assert np.allclose(K0, expected, atol=1e-10)

    def test_singular_s_rejected(self):
        ctrl = Controller(
            Uc=PolyMat([np.array([[1.0, 0.0]])], symmetric=False),
            S=PolyMat([np.diag([1.0, 0.0])]),
            Ud=None, tbar=1.0)
        with pytest.raises(ExtractionError):
            extract_gain(ctrl, 0.5)


class TestControllerSerialization:
    def test_json_roundtrip(self):
        r = stabilize_min_dwell(SYS_HARD, 0.1, degree=1)
        ctrl = r.controller
        d = ctrl.to_json()
        back = Controller.from_json(d)
        assert back.tbar == ctrl.tbar
        assert back.clamp is True
        assert np.array_equal(back.S.coeffs, ctrl.S.coeffs)
        assert np.array_equal(back.Uc.coeffs, ctrl.Uc.coeffs)
        for tau in (0.0, 0.05, 0.1, 0.3):
            assert np.allclose(back.gain(tau), ctrl.gain(tau))
