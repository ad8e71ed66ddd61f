"""State-feedback synthesis for impulsive systems.

Designs the control law u_c(t_k + tau) = K_c(tau) x(t_k + tau),
u_d(t_k) = K_d x^-(t_k) by solving the convexified (congruence-transformed)
stability conditions in the dual variables (S, U_c, U_d) and extracting
K_c(tau) = U_c(tau) S(tau)^{-1} on demand.  The minimum dwell-time law
clamps the gain at tau = tbar and holds it constant afterwards.

Infeasibility of a synthesis program is an answer, not an error: the
operations return a :class:`SynthesisResult` whose ``feasible`` flag and
margin report the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExtractionError, InputError
from .linalg import sym
from .polymat import PolyMat
from .sdp import MARGIN_THRESHOLD, max_margin
from .sos import AffMatPoly, SdpBuilder, blockmat, verify_pointwise
from .systems import ImpulsiveSystem, PolytopicSystem

# Lower bound imposed on S(tau) across the interval so the gain extraction
# stays well conditioned (the anchor trace is normalized to n, so this is
# small relative to the witness scale).
S_FLOOR = 1e-4
# Condition-number ceiling above which extraction refuses to invert S.
EXTRACT_COND_MAX = 1e12


@dataclass
class Controller:
    """Synthesized state-feedback law.

    ``Uc`` and ``S`` live on the normalized time sigma = tau / tbar in
    [0, 1]; ``clamp`` freezes the gain at its tau = tbar value for larger
    tau (minimum dwell-time law).  ``kd_anchor`` is the normalized point
    whose S-value defines K_d = Ud S(anchor)^{-1}.
    """

    Uc: PolyMat
    S: PolyMat
    Ud: np.ndarray | None
    tbar: float
    clamp: bool = True
    kd_anchor: float = 0.0

    @property
    def Kd(self) -> np.ndarray | None:
        """Discrete gain Ud S(anchor)^{-1}; None when there is no discrete
        input channel (the jump then stays x <- J x^-)."""
        if self.Ud is None:
            return None
        Sa = self.S.eval(self.kd_anchor)
        return _solve_right(self.Ud, Sa, self.kd_anchor * self.tbar)

    def gain(self, tau: float) -> np.ndarray:
        return extract_gain(self, tau)

    def to_json(self) -> dict:
        return {
            "Uc": self.Uc.to_json(),
            "S": self.S.to_json(),
            "Ud": None if self.Ud is None else self.Ud.tolist(),
            "Tbar": self.tbar,
            "clamp": self.clamp,
            "kd_anchor": self.kd_anchor,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Controller":
        return cls(
            Uc=PolyMat.from_json(d["Uc"]),
            S=PolyMat.from_json(d["S"]),
            Ud=None if d.get("Ud") is None else np.asarray(d["Ud"], dtype=float),
            tbar=d["Tbar"],
            clamp=d.get("clamp", True),
            kd_anchor=d.get("kd_anchor", 0.0),
        )


@dataclass
class SynthesisResult:
    theorem: str
    feasible: bool
    margin: float
    controller: Controller | None = None
    residuals: dict = field(default_factory=dict)


def _solve_right(U: np.ndarray, S: np.ndarray, tau: float) -> np.ndarray:
    """U S^{-1} with a conditioning guard."""
    if np.linalg.cond(S) > EXTRACT_COND_MAX:
        raise ExtractionError(f"S({tau:g}) is numerically singular")
    return np.linalg.solve(S.T, U.T).T


def extract_gain(ctrl: Controller, tau: float) -> np.ndarray:
    """Continuous gain K_c(tau) = Uc(sigma) S(sigma)^{-1} with the clamped
    profile sigma = min(tau, tbar) / tbar; constant for tau >= tbar."""
    s = tau / ctrl.tbar
    if ctrl.clamp:
        s = min(s, 1.0)
    return _solve_right(ctrl.Uc.eval(s), ctrl.S.eval(s), tau)


def _vertices_and_inputs(sys, bc, bd):
    if isinstance(sys, PolytopicSystem):
        if bc is None and bd is None:
            raise InputError("polytopic synthesis needs Bc and/or Bd")
        return list(sys.vertices), bc, bd, sys.n
    return [(sys.A, sys.J)], sys.Bc if bc is None else bc, \
        sys.Bd if bd is None else bd, sys.n


def _synthesize(sys, tbar: float, degree: int, minimum: bool,
                bc=None, bd=None) -> SynthesisResult:
    vertices, Bc, Bd, n = _vertices_and_inputs(sys, bc, bd)
    if not tbar > 0:
        raise InputError("tbar must be positive")
    mc = Bc.shape[1] if Bc is not None else 0
    md = Bd.shape[1] if Bd is not None else 0
    L = tbar
    theorem = "synthesis-minimum" if minimum else "synthesis-periodic"
    # The conditions below are the orientation of the synthesis program
    # whose contraction argument runs along the implemented (forward-time)
    # gain profile: flow He[A S + Bc Uc] - dS <= 0 together with the jump
    # block [[-S(0)+eps I, J S(tbar) + Bd Ud], [*, -S(tbar)]] and
    # K_d = Ud S(tbar)^{-1}.  The mirror orientation (+dS with the jump
    # roles of S(0) and S(tbar) swapped) certifies the time-reversed gain
    # profile instead; with a time-varying K_c the two closed loops differ
    # and the mirror orientation demonstrably admits witnesses whose
    # forward closed loop is unstable.
    kd_anchor = 1.0

    b = SdpBuilder()
    S, hS = b.sym_poly_var(n, degree)
    if mc:
        Uc, hUc = b.mat_poly_var(mc, n, degree)
        b.bound_entries(hUc)
    else:
        Uc = AffMatPoly.zero(1, n, degree)     # unused
    if md:
        Ud, hUd = b.mat_poly_var(md, n, 0)
        b.bound_entries(hUd)

    for A, J in vertices:
        closed = S.lmul(A) + (Uc.lmul(Bc) if mc else AffMatPoly.zero(n, n, degree))
        flow = closed.he() - S.deriv().scale(1.0 / L)
        b.require_poly_neg(flow, 0.0, 1.0, margin=False)
        if minimum:
            # clamped-gain extension to dwell times beyond tbar
            closed1 = closed.at(1.0)
            b.require_neg(closed1.he(), margin=True)
        off = S.at(1.0).lmul(J)
        if md:
            off = off + Ud.lmul(Bd)
        block = blockmat([
            [S.at(0.0).scale(-1.0), off],
            [off.T, S.at(1.0).scale(-1.0)],
        ])
        b.require_neg(block, margin=True)

    anchor = S.at(0.0)
    b.require_psd(anchor, margin=True)
    b.require_psd(S.at(1.0), margin=True)
    b.fix_trace(anchor, float(n))
    # conditioning floor keeps S invertible across the whole interval
    floor = AffMatPoly.constant(S_FLOOR * np.eye(n))
    b.require_poly_psd(S - floor, 0.0, 1.0, margin=False)

    margin, x = max_margin(b.finalize())
    feasible = margin >= MARGIN_THRESHOLD
    result = SynthesisResult(theorem=theorem, feasible=feasible,
                             margin=float(margin))
    if not feasible:
        return result

    ctrl = Controller(
        Uc=hUc.extract(x) if mc else PolyMat([np.zeros((0, n))], symmetric=False),
        S=hS.extract(x),
        Ud=hUd.extract(x).coeffs[0] if md else None,
        tbar=tbar, clamp=True, kd_anchor=kd_anchor,
    )
    result.controller = ctrl
    result.residuals = closed_loop_residuals(ctrl, vertices, Bc, Bd, minimum)
    return result


def stabilize_periodic(sys, tbar: float, degree: int = 2,
                       bc=None, bd=None) -> SynthesisResult:
    """Design (K_c(tau), K_d) stabilizing tbar-periodic impulses.

    ``sys`` is an :class:`ImpulsiveSystem` (control channels taken from its
    Bc/Bd) or a :class:`PolytopicSystem` with the input matrices passed
    explicitly; a common (S, U_c, U_d) is then used across all vertices.
    """
    return _synthesize(sys, tbar, degree, minimum=False, bc=bc, bd=bd)


def stabilize_min_dwell(sys, tbar: float, degree: int = 2,
                        bc=None, bd=None) -> SynthesisResult:
    """Design the clamped control law for minimum dwell-time tbar."""
    return _synthesize(sys, tbar, degree, minimum=True, bc=bc, bd=bd)


def closed_loop_residuals(ctrl: Controller, vertices, Bc, Bd,
                          minimum: bool, grid: int = 50) -> dict:
    """Duality-closure audit: the pointwise inverse of S must satisfy the
    analysis conditions of the closed-loop system on a grid.

    This re-derives, numerically and per point, the congruence argument
    that turned the analysis conditions into the synthesis program.
    """
    L = ctrl.tbar
    mc = Bc.shape[1] if Bc is not None else 0
    md = Bd.shape[1] if Bd is not None else 0
    Sd = ctrl.S.derivative()
    Kd = ctrl.Kd if md else None
    res: dict[str, float] = {}
    for i, (A, J) in enumerate(vertices):
        sfx = f"[{i}]" if len(vertices) > 1 else ""
        Jcl = J + (Bd @ Kd if md else 0.0)

        def flow_res(tau):
            # forward-profile closure: Acl^T X + X Acl + dX <= 0, X = inv(S)
            s = tau / L
            Sv = ctrl.S.eval(s)
            Si = np.linalg.inv(Sv)
            Acl = A + (Bc @ ctrl.gain(tau) if mc else 0.0)
            dSi = -Si @ (Sd.eval(s) / L) @ Si
            return -(Acl.T @ Si + Si @ Acl + dSi)

        r, _ = verify_pointwise(flow_res, 0.0, L, grid)
        res[f"closure_flow{sfx}"] = r
        Si_end = np.linalg.inv(ctrl.S.eval(1.0))
        Si_start = np.linalg.inv(ctrl.S.eval(0.0))
        # Jump closure from the dualization of the synthesis block:
        # Jcl^T inv(S(0)) Jcl - inv(S(tbar)) < 0.
        M = Jcl.T @ Si_start @ Jcl - Si_end
        res[f"closure_jump{sfx}"] = float(np.linalg.eigvalsh(sym(-M))[0])
        if minimum:
            Acl1 = A + (Bc @ ctrl.gain(L) if mc else 0.0)
            res[f"closure_strict_flow{sfx}"] = float(
                np.linalg.eigvalsh(sym(-(Acl1.T @ Si_end + Si_end @ Acl1)))[0])
    return res
