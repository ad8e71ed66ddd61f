"""Sampled-data systems as impulsive systems.

A plant dx/dt = A x + B u under the piecewise-constant control
u(t) = K1 x(t_k) + K2 u(t_{k-1}) on [t_k, t_{k+1}) is lifted by appending
the held input as a state: the lifted flow matrix is Abar = [[A, B],[0,0]]
and the sampling action is the jump Jbar = J0 + B0 K with
J0 = [[I,0],[0,0]], B0 = [0; I], K = [K1 K2].  Analysis with fixed gains
delegates to the impulsive ranged-dwell machinery; synthesis solves the
lifted convex program and extracts K = Y S(0)^{-1}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    Certificate,
    Encoder,
    SosEncoder,
    ranged_certificate,
    search_range,
)
from .errors import DimensionError, InputError
from .linalg import as_matrix, as_square, expm, spectral_radius, sym
from .polymat import PolyMat
from .sdp import MARGIN_THRESHOLD, max_margin
from .sos import AffMatPoly, SdpBuilder, blockmat, verify_pointwise
from .systems import DwellSpec, ImpulsiveSystem

# Conditioning floor for the lifted S( tau ) (anchor trace is normalized).
S_FLOOR = 1e-6


@dataclass
class SampledDataSystem:
    """Plant and (optionally) fixed sampled-data feedback gains."""

    A: np.ndarray
    B: np.ndarray
    K1: np.ndarray | None = None
    K2: np.ndarray | None = None

    def __post_init__(self):
        self.A = as_square(self.A, "A")
        self.B = as_matrix(self.B, "B")
        if self.B.shape[0] != self.A.shape[0]:
            raise DimensionError("B row count must match A")
        n, m = self.A.shape[0], self.B.shape[1]
        if self.K1 is not None:
            self.K1 = as_matrix(self.K1, "K1")
            if self.K1.shape != (m, n):
                raise DimensionError(f"K1 must be {m}x{n}")
        if self.K2 is not None:
            self.K2 = as_matrix(self.K2, "K2")
            if self.K2.shape != (m, m):
                raise DimensionError(f"K2 must be {m}x{m}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_json(self) -> dict:
        d = {"A": self.A.tolist(), "B": self.B.tolist()}
        if self.K1 is not None:
            d["K1"] = self.K1.tolist()
        if self.K2 is not None:
            d["K2"] = self.K2.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SampledDataSystem":
        return cls(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float),
                   None if d.get("K1") is None else np.asarray(d["K1"], dtype=float),
                   None if d.get("K2") is None else np.asarray(d["K2"], dtype=float))


@dataclass
class PolytopicSampledData:
    """Sampled-data plant with a polytopic flow matrix and a common B."""

    A_vertices: list[np.ndarray]
    B: np.ndarray

    def __post_init__(self):
        if not self.A_vertices:
            raise InputError("need at least one vertex")
        self.A_vertices = [as_square(Ai, "A_i") for Ai in self.A_vertices]
        self.B = as_matrix(self.B, "B")
        n = self.A_vertices[0].shape[0]
        if any(Ai.shape[0] != n for Ai in self.A_vertices):
            raise DimensionError("vertices must share one dimension")
        if self.B.shape[0] != n:
            raise DimensionError("B row count must match A")

    @property
    def n(self) -> int:
        return self.A_vertices[0].shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_json(self) -> dict:
        return {"A_vertices": [Ai.tolist() for Ai in self.A_vertices],
                "B": self.B.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "PolytopicSampledData":
        return cls([np.asarray(Ai, dtype=float) for Ai in d["A_vertices"]],
                   np.asarray(d["B"], dtype=float))


@dataclass
class LiftedSystem:
    """Impulsive reformulation of a sampled-data loop."""

    abar: np.ndarray                 # (n+m, n+m)
    j0: np.ndarray                   # jump part independent of the gains
    b0: np.ndarray                   # gain input channel of the jump
    jbar: np.ndarray | None = None   # closed jump when gains are fixed

    def as_impulsive(self) -> ImpulsiveSystem:
        if self.jbar is None:
            raise InputError("gains are not fixed; no closed jump available")
        return ImpulsiveSystem(self.abar, self.jbar)


def lift(sd: SampledDataSystem) -> LiftedSystem:
    """Lift the sampled-data loop to the impulsive form.

    Returns the lifted flow matrix together with the decomposition
    Jbar = J0 + B0 [K1 K2]; when the system carries fixed gains the closed
    jump matrix is included as well.
    """
    n, m = sd.n, sd.m
    abar = np.block([[sd.A, sd.B], [np.zeros((m, n)), np.zeros((m, m))]])
    j0 = np.block([[np.eye(n), np.zeros((n, m))],
                   [np.zeros((m, n)), np.zeros((m, m))]])
    b0 = np.vstack([np.zeros((n, m)), np.eye(m)])
    jbar = None
    if sd.K1 is not None:
        K2 = sd.K2 if sd.K2 is not None else np.zeros((m, m))
        jbar = j0 + b0 @ np.hstack([sd.K1, K2])
    return LiftedSystem(abar=abar, j0=j0, b0=b0, jbar=jbar)


def lift_closed(sd_or_lifted, K: np.ndarray) -> np.ndarray:
    """Closed jump matrix J0 + B0 K for a designed gain."""
    lifted = sd_or_lifted if isinstance(sd_or_lifted, LiftedSystem) else lift(sd_or_lifted)
    return lifted.j0 + lifted.b0 @ K


def analyze_fixed(sd: SampledDataSystem, tmin: float, tmax: float,
                  encoder: Encoder = SosEncoder(4)) -> Certificate:
    """Ranged dwell-time certificate for the loop with its fixed gains."""
    if sd.K1 is None:
        raise InputError("analyze_fixed needs fixed gains K1 (and optional K2)")
    return ranged_certificate(lift(sd).as_impulsive(), tmin, tmax, encoder)


def sampled_search_range(sd: SampledDataSystem, seed: float,
                         encoder: Encoder = SosEncoder(4),
                         tol: float = 1e-4,
                         tmin_floor: float = 1e-3) -> tuple[float, float]:
    """Certified sampling-period range around a stable seed period."""
    if sd.K1 is None:
        raise InputError("needs fixed gains")
    return search_range(lift(sd).as_impulsive(), encoder, seed=seed,
                        tol=tol, tmin_floor=tmin_floor)


@dataclass
class SampledSynthesisResult:
    feasible: bool
    margin: float
    K1: np.ndarray | None = None
    K2: np.ndarray | None = None
    S: PolyMat | None = None            # lifted witness, normalized domain
    Y: np.ndarray | None = None
    tmin: float = 0.0
    tmax: float = 0.0
    k2_zero: bool = False
    residuals: dict = field(default_factory=dict)

    @property
    def K(self) -> np.ndarray:
        return np.hstack([self.K1, self.K2])


def synthesize(sd, tmin: float, tmax: float, degree: int = 2,
               k2_zero: bool = False) -> SampledSynthesisResult:
    """Design K = [K1 K2] stabilizing every sampling sequence in
    [tmin, tmax].

    ``sd`` is a :class:`SampledDataSystem` or :class:`PolytopicSampledData`
    (common Y and S across vertices).  With ``k2_zero`` the upper-right
    n x m block of S(0) and the last m columns of Y are fixed to zero
    structurally, which makes the returned K2 the zero matrix bit-exactly.
    """
    if not (0 < tmin <= tmax):
        raise InputError("need 0 < tmin <= tmax")
    if isinstance(sd, PolytopicSampledData):
        A_list, B = sd.A_vertices, sd.B
    else:
        A_list, B = [sd.A], sd.B
    n, m = B.shape
    N = n + m
    lifted = [lift(SampledDataSystem(Ai, B)) for Ai in A_list]
    j0, b0 = lifted[0].j0, lifted[0].b0
    L = tmax
    theta_lo = tmin / L

    b = SdpBuilder()
    if k2_zero:
        # S(0) block-diagonal; higher coefficients unrestricted
        S0expr, hS0 = b.sym_var_with_zero_block(n, m)
        if degree >= 1:
            Srest, hSrest = b.sym_poly_var(N, degree)
            # zero out the constant coefficient of the general part
            for p in range(N):
                for q in range(p, N):
                    v = int(hSrest.idx[0, p, q])
                    b.add_equality({v: 1.0}, 0.0)
            S = S0expr + Srest
        else:
            S = S0expr
            hSrest = None
        Y, hY = b.mat_poly_var(m, N, 0, zero_cols=tuple(range(n, N)))
    else:
        S, hS = b.sym_poly_var(N, degree)
        hS0 = hSrest = None
        Y, hY = b.mat_poly_var(m, N, 0)
    b.bound_entries(hY)

    for lf in lifted:
        flow = S.lmul(lf.abar) + S.rmul(lf.abar.T) + S.deriv().scale(1.0 / L)
        b.require_poly_neg(flow, 0.0, 1.0, margin=False)
    # jump block in the sampling-interval parameter theta on [tmin, tmax];
    # margin weighted by theta since the sampling action is neutral at
    # theta -> 0 (the lifted jump has unit-modulus eigenvalues)
    off = S.at(0.0).lmul(j0) + Y.lmul(b0)
    if theta_lo < 1.0 - 1e-12:
        block = blockmat([
            [S.scale(-1.0), off],
            [off.T, S.at(0.0).scale(-1.0)],
        ])
        bump = b.margin_profile(2 * N, [0.0, 1.0])
        b.require_poly_neg(block + bump, theta_lo, 1.0, margin=False)
    else:
        # periodic sampling recovered as the degenerate range
        block = blockmat([
            [S.at(1.0).scale(-1.0), off],
            [off.T, S.at(0.0).scale(-1.0)],
        ])
        b.require_neg(block, margin=True)
    anchor = S.at(0.0)
    b.require_psd(anchor, margin=True)
    b.fix_trace(anchor, float(N))
    floor = AffMatPoly.constant(S_FLOOR * np.eye(N))
    b.require_poly_psd(S - floor, 0.0, 1.0, margin=False)

    margin, x = max_margin(b.finalize())
    feasible = margin >= MARGIN_THRESHOLD
    res = SampledSynthesisResult(feasible=feasible, margin=float(margin),
                                 tmin=tmin, tmax=tmax, k2_zero=k2_zero)
    if not feasible:
        return res

    if k2_zero:
        c0 = hS0.extract(x).coeffs[0]
        if hSrest is not None:
            coeffs = hSrest.extract(x).coeffs.copy()
            coeffs[0] += c0      # constant part of the general block is pinned to 0
        else:
            coeffs = c0[None]
        Spoly = PolyMat(coeffs, symmetric=True)
        Yv = hY.extract(x).coeffs[0]
        S11 = Spoly.eval(0.0)[:n, :n]
        K1 = np.linalg.solve(S11.T, Yv[:, :n].T).T
        K2 = np.zeros((m, m))
    else:
        Spoly = hS.extract(x)
        Yv = hY.extract(x).coeffs[0]
        S0 = Spoly.eval(0.0)
        K = np.linalg.solve(S0.T, Yv.T).T
        K1, K2 = K[:, :n], K[:, n:]
        if spectral_radius(K2) >= 1.0:
            warnings.warn("designed K2 is not Schur: the control law is not "
                          "BIBO-stable as a map from x samples to u")
    res.K1, res.K2, res.S, res.Y = K1, K2, Spoly, Yv
    res.residuals = _synthesis_audit(A_list, B, j0, b0, res, L, theta_lo)
    return res


def _synthesis_audit(A_list, B, j0, b0, res: SampledSynthesisResult,
                     L: float, theta_lo: float, grid: int = 100) -> dict:
    """Independent spectral check of the designed loop: the lifted monodromy
    e^{Abar theta} (J0 + B0 K) must be Schur across the sampling range."""
    out: dict[str, float] = {}
    K = res.K
    worst = -np.inf
    for i, Ai in enumerate(A_list):
        lf = lift(SampledDataSystem(Ai, B))
        Jcl = lf.j0 + lf.b0 @ K
        rhos = [spectral_radius(expm(lf.abar, th) @ Jcl)
                for th in np.linspace(theta_lo * L, L, grid)]
        out[f"max_rho[{i}]" if len(A_list) > 1 else "max_rho"] = float(max(rhos))
        worst = max(worst, max(rhos))
    out["schur_margin"] = 1.0 - worst
    return out
