"""Stability tests and dwell-time bound searches for linear impulsive systems.

Each certificate operation assembles the matrix-inequality conditions of
the corresponding stability statement, reduces them to one semidefinite
program (sum-of-squares or piecewise-linear discretization), maximizes a
common strictness margin, and re-checks the extracted witness pointwise.
A feasible certificate is additionally cross-checked against the exact
spectral test; disagreement raises :class:`ConsistencyError` because it
can only be caused by a bug, never by the input.

Conventions used throughout: the scalar epsilon of the jump conditions is
fixed to 1 (the conditions are jointly homogeneous of degree one in the
witness and epsilon, so this is a normalization, not a restriction), the
witness is bounded through a trace cap on its anchor value, and all
encodings run on the normalized time sigma = tau / domain_scale in [0, 1].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConsistencyError, InputError, NumericalFailureError, SearchError
from .linalg import expm, min_eig_sym, spectral_radius, sym
from .polymat import PolyMat
from .sdp import MARGIN_THRESHOLD, max_margin
from .sos import (
    AffMatPoly,
    DEFAULT_VERIFY_TOL,
    PwlMat,
    PwlUnknown,
    SdpBuilder,
    discretize_encode,
    verify_pointwise,
)
from .systems import DwellSpec, ImpulsiveSystem, PolytopicSystem

# Bisection tolerance for dwell-time bound searches.
DEFAULT_BISECT_TOL = 1e-4
# Upper bracket cap for threshold searches.
SEARCH_CAP = 1e3
# Grid used for witness residual reports and soundness cross-checks.
AUDIT_GRID = 50


# ---------------------------------------------------------------------------
# encoders
# ---------------------------------------------------------------------------

@dataclass
class SosEncoder:
    """Polynomial witness of the given degree, interval conditions certified
    by matrix sum-of-squares multipliers."""

    degree: int
    mult_degree: int | None = None

    kind = "sos"

    def describe(self) -> dict:
        return {"kind": "sos", "degree": self.degree,
                "mult_degree": self.mult_degree}


@dataclass
class DiscretizationEncoder:
    """Continuous piecewise-linear witness with the given number of segments,
    conditions imposed at both endpoints of every segment."""

    segments: int

    kind = "discretization"

    def describe(self) -> dict:
        return {"kind": "discretization", "segments": self.segments}


Encoder = SosEncoder | DiscretizationEncoder


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    """Feasibility witness for one stability statement.

    The witness lives on the normalized time sigma in [0, 1] with
    tau = domain_scale * sigma.  ``residuals`` maps condition names to the
    worst (most negative) eigenvalue residual of the re-checked condition;
    all conditions are stated so that nonnegative means satisfied.
    """

    theorem: str
    feasible: bool
    margin: float
    encoder: dict
    domain_scale: float
    dwell: DwellSpec
    system: dict
    witness: PolyMat | PwlMat | None = None
    residuals: dict = field(default_factory=dict)
    discrete_residual: float | None = None

    def witness_value(self, tau: float) -> np.ndarray:
        s = tau / self.domain_scale
        if isinstance(self.witness, PwlMat):
            return self.witness.eval(s)
        return self.witness.eval(s)

    def witness_derivative(self, tau: float) -> np.ndarray:
        """d/dtau of the witness (chain rule through the normalization)."""
        s = tau / self.domain_scale
        if isinstance(self.witness, PwlMat):
            return self.witness.derivative_at(s) / self.domain_scale
        return self.witness.derivative().eval(s) / self.domain_scale

    def residuals_pass(self, tol: float = DEFAULT_VERIFY_TOL) -> bool:
        vals = list(self.residuals.values())
        if self.discrete_residual is not None:
            vals.append(self.discrete_residual)
        return all(v >= -tol for v in vals)

    def to_json(self) -> dict:
        d = {
            "theorem": self.theorem,
            "feasible": self.feasible,
            "margin": self.margin,
            "encoder": self.encoder,
            "domain_scale": self.domain_scale,
            "dwell": self.dwell.to_json(),
            "system": self.system,
            "residuals": self.residuals,
            "discrete_residual": self.discrete_residual,
        }
        if self.witness is not None:
            d["witness"] = self.witness.to_json()
            d["witness_kind"] = "pwl" if isinstance(self.witness, PwlMat) else "poly"
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Certificate":
        witness = None
        if "witness" in d:
            if d.get("witness_kind") == "pwl":
                witness = PwlMat.from_json(d["witness"])
            else:
                witness = PolyMat.from_json(d["witness"])
        return cls(
            theorem=d["theorem"], feasible=d["feasible"], margin=d["margin"],
            encoder=d["encoder"], domain_scale=d["domain_scale"],
            dwell=DwellSpec.from_json(d["dwell"]), system=d["system"],
            witness=witness, residuals=dict(d.get("residuals", {})),
            discrete_residual=d.get("discrete_residual"),
        )


# ---------------------------------------------------------------------------
# exact (oracle-grade) tests
# ---------------------------------------------------------------------------

def periodic_exact(sys: ImpulsiveSystem, tbar: float) -> bool:
    """Schur test of the monodromy matrix e^{A tbar} J."""
    if not tbar > 0:
        raise InputError("tbar must be positive")
    return spectral_radius(expm(sys.A, tbar) @ sys.J) < 1.0


def variable_count(n: int, d_R: int, d_Z: int) -> tuple[int, int]:
    """Decision-variable counts of this certificate family versus the
    looped-functional family, as functions of the polynomial degrees."""
    if min(n, d_R, d_Z) < 0:
        raise InputError("counts must be nonnegative")
    n_current = (d_R + 1) * n * (n + 1) // 2
    n_looped = n * (n + 1) // 2 + (d_Z + 1) * 3 * n * (3 * n + 1) // 2
    return n_current, n_looped


# ---------------------------------------------------------------------------
# condition assembly (shared by all certificate operations)
# ---------------------------------------------------------------------------

class _Recipe:
    """Conditions of one theorem, built against either encoder backend."""

    def __init__(self, theorem: str, vertices: list, dwell: DwellSpec):
        self.theorem = theorem
        self.vertices = vertices
        self.dwell = dwell
        self.L = dwell.horizon
        self.n = vertices[0][0].shape[0]
        # Orientation: R-forms march forward (+dR), S-forms backward (-dS).
        self.backward = theorem.split("-")[-1] in ("e", "c")
        self.strict_flow = dwell.mode in ("minimum", "maximum")
        self.strict_sign = -1.0 if dwell.mode == "maximum" else 1.0
        if dwell.mode == "ranged":
            self.theta_lo = dwell.tmin / self.L
        else:
            self.theta_lo = 1.0

    # -- names ------------------------------------------------------------
    def _sfx(self, i: int) -> str:
        return f"[{i}]" if len(self.vertices) > 1 else ""

    # -- SOS route ---------------------------------------------------------
    def build_sos(self, builder: SdpBuilder, degree: int,
                  mult_degree: int | None):
        R, handle = builder.sym_poly_var(self.n, degree)
        dRds = R.deriv().scale(1.0 / self.L)
        if self.backward:
            dRds = dRds.scale(-1.0)
        anchor_pt = 1.0 if self.backward else 0.0
        jump_from = R.at(1.0 if self.backward else 0.0)
        for i, (A, J) in enumerate(self.vertices):
            flow = R.lmul(A.T) + R.rmul(A) + dRds
            # flow conditions are non-strict; margins live on the jump,
            # the anchors and the genuinely strict conditions only
            builder.require_poly_neg(flow, 0.0, 1.0, margin=False,
                                     mult_degree=mult_degree)
            if self.strict_flow:
                at = R.at(anchor_pt)
                extra = (at.lmul(A.T) + at.rmul(A)).scale(self.strict_sign)
                builder.require_neg(extra, margin=True)
            # the margin variable plays the epsilon of the jump condition
            jump_f = jump_from.lmul(J.T).rmul(J)
            if self.dwell.mode == "ranged" and self.theta_lo < 1.0 - 1e-12:
                # Margin weighted by sigma: the admissible jump slack shrinks
                # proportionally to the dwell time when J carries unit-modulus
                # eigenvalues (the lifted sampled-data case), so a uniform
                # margin would collapse to the smallest slack on the interval.
                bump = builder.margin_profile(self.n, [0.0, 1.0])
                builder.require_poly_neg(jump_f - R + bump, self.theta_lo, 1.0,
                                         margin=False, mult_degree=mult_degree)
            elif self.dwell.mode == "ranged":
                # degenerate range: a point condition, as in the periodic case
                builder.require_neg(jump_f - R.at(1.0), margin=True)
            else:
                target = R.at(0.0 if self.backward else 1.0)
                builder.require_neg(jump_f - target, margin=True)
        anchor = R.at(anchor_pt)
        builder.require_psd(anchor, margin=True)
        builder.fix_trace(anchor, float(self.n))
        return handle

    # -- discretization route ----------------------------------------------
    def build_pwl(self, builder: SdpBuilder, segments: int):
        pwl = PwlUnknown(builder, self.n, segments, 0.0, 1.0)
        sgn = -1.0 if self.backward else 1.0
        anchor = pwl.value(segments if self.backward else 0)
        for i, (A, J) in enumerate(self.vertices):
            discretize_encode(
                builder, pwl,
                lambda V, dV, A=A: V.lmul(A.T) + V.rmul(A)
                + dV.scale(sgn / self.L),
                margin=False)
            if self.strict_flow:
                extra = (anchor.lmul(A.T) + anchor.rmul(A)).scale(self.strict_sign)
                builder.require_neg(extra, margin=True)
            jump_from = pwl.value(segments if self.backward else 0)
            jump_f = jump_from.lmul(J.T).rmul(J)
            if self.dwell.mode == "ranged" and self.theta_lo < 1.0 - 1e-12:
                for s in pwl.knots_within(self.theta_lo, 1.0):
                    bump = builder.margin_profile(self.n, [s])
                    builder.require_neg(jump_f - pwl.at(s) + bump, margin=False)
            elif self.dwell.mode == "ranged":
                builder.require_neg(jump_f - pwl.value(segments), margin=True)
            else:
                target = pwl.value(0 if self.backward else segments)
                builder.require_neg(jump_f - target, margin=True)
        builder.require_psd(anchor, margin=True)
        builder.fix_trace(anchor, float(self.n))
        return pwl

    # -- residual audit ------------------------------------------------------
    def audit(self, cert: Certificate, grid: int = AUDIT_GRID) -> dict:
        """Re-evaluate every condition of the statement on a grid, straight
        from the witness (no encoder, no solver)."""
        L = self.L
        res: dict[str, float] = {}
        val = cert.witness_value
        der = cert.witness_derivative
        for i, (A, J) in enumerate(self.vertices):
            sfx = self._sfx(i)

            def flow_res(tau):
                # flow condition as a >=0 form: -(A^T R + R A +/- dR)
                M = A.T @ val(tau) + val(tau) @ A
                M = M + (-der(tau) if self.backward else der(tau))
                return -M

            r, arg = verify_pointwise(flow_res, 0.0, L, grid)
            res[f"flow{sfx}"] = r
            if self.strict_flow:
                pt = L if self.backward else 0.0
                M = A.T @ val(pt) + val(pt) @ A
                res[f"strict_flow{sfx}"] = float(
                    np.linalg.eigvalsh(sym(-self.strict_sign * M))[0])
            Wfrom = val(L if self.backward else 0.0)
            if self.dwell.mode == "ranged":
                def jump_res(theta):
                    return -(J.T @ Wfrom @ J - val(theta))
                r, arg = verify_pointwise(jump_res, self.dwell.tmin, L, grid)
                res[f"jump{sfx}"] = r
            else:
                target = val(0.0 if self.backward else L)
                M = J.T @ Wfrom @ J - target
                res[f"jump{sfx}"] = float(np.linalg.eigvalsh(sym(-M))[0])
        anchor = val(L if self.backward else 0.0)
        res["anchor_pd"] = float(np.linalg.eigvalsh(sym(anchor))[0])

        def positivity(tau):
            return val(tau)

        r, _ = verify_pointwise(positivity, 0.0, L, grid)
        res["witness_positive"] = r
        return res


_THEOREM_BY_MODE = {"periodic": "periodic", "ranged": "ranged",
                    "minimum": "minimum", "maximum": "maximum"}


def _certificate(vertices: list, dwell: DwellSpec, encoder: Encoder,
                 form: str | None, system_json: dict,
                 robust: bool) -> Certificate:
    base = _THEOREM_BY_MODE[dwell.mode]
    if dwell.mode == "periodic":
        form = form or "d"
        if form not in ("d", "e"):
            raise InputError("periodic form must be 'd' or 'e'")
        theorem = f"periodic-{form}"
    elif dwell.mode in ("minimum", "maximum"):
        form = form or "b"
        if form not in ("b", "c"):
            raise InputError("dwell form must be 'b' or 'c'")
        theorem = f"{base}-{form}"
    else:
        if form not in (None, "b"):
            raise InputError("ranged mode has a single (R) form")
        theorem = "ranged"
    if robust:
        theorem = "robust-" + theorem

    recipe = _Recipe(theorem, vertices, dwell)
    builder = SdpBuilder()
    if encoder.kind == "sos":
        handle = recipe.build_sos(builder, encoder.degree, encoder.mult_degree)
    else:
        handle = recipe.build_pwl(builder, encoder.segments)
    margin, x = max_margin(builder.finalize())
    feasible = margin >= MARGIN_THRESHOLD

    witness = handle.extract(x) if np.isfinite(margin) else None
    cert = Certificate(
        theorem=theorem, feasible=feasible, margin=float(margin),
        encoder=encoder.describe(), domain_scale=dwell.horizon,
        dwell=dwell, system=system_json, witness=witness,
    )
    if feasible:
        cert.residuals = recipe.audit(cert)
        jump_keys = [k for k in cert.residuals if k.startswith("jump")]
        cert.discrete_residual = min(cert.residuals[k] for k in jump_keys)
        _soundness_check(vertices, dwell, cert)
    return cert


def _soundness_check(vertices, dwell: DwellSpec, cert: Certificate) -> None:
    """A feasible certificate must imply the exact spectral test at every
    vertex; a violation is an internal bug, never an input property."""
    if dwell.mode == "periodic":
        thetas = [dwell.tbar]
    elif dwell.mode == "ranged":
        thetas = np.linspace(dwell.tmin, dwell.tmax, AUDIT_GRID)
    elif dwell.mode == "minimum":
        thetas = np.linspace(dwell.tbar, 3.0 * dwell.tbar, AUDIT_GRID)
    else:
        thetas = np.linspace(dwell.tbar / AUDIT_GRID, dwell.tbar, AUDIT_GRID)
    for A, J in vertices:
        for th in thetas:
            if spectral_radius(expm(A, th) @ J) >= 1.0 + 1e-9:
                raise ConsistencyError(
                    f"certificate {cert.theorem} is feasible but the exact "
                    f"spectral test fails at theta={th}")


# ---------------------------------------------------------------------------
# public certificate operations
# ---------------------------------------------------------------------------

def periodic_certificate(sys: ImpulsiveSystem, tbar: float,
                         encoder: Encoder = SosEncoder(6),
                         form: str = "d") -> Certificate:
    """Lyapunov-function certificate of periodic stability with period tbar."""
    dwell = DwellSpec.periodic(tbar)
    return _certificate([(sys.A, sys.J)], dwell, encoder, form,
                        sys.to_json(), robust=False)


def ranged_certificate(sys: ImpulsiveSystem, tmin: float, tmax: float,
                       encoder: Encoder = SosEncoder(6)) -> Certificate:
    """Certificate of stability for every dwell sequence in [tmin, tmax]."""
    dwell = DwellSpec.ranged(tmin, tmax)
    return _certificate([(sys.A, sys.J)], dwell, encoder, None,
                        sys.to_json(), robust=False)


def min_dwell_certificate(sys: ImpulsiveSystem, tbar: float,
                          encoder: Encoder = SosEncoder(6),
                          maximum: bool = False,
                          form: str = "b") -> Certificate:
    """Certificate of stability under minimum (or maximum) dwell time tbar."""
    dwell = DwellSpec.maximum(tbar) if maximum else DwellSpec.minimum(tbar)
    return _certificate([(sys.A, sys.J)], dwell, encoder, form,
                        sys.to_json(), robust=False)


def robust_certificate(psys: PolytopicSystem, dwell: DwellSpec,
                       encoder: Encoder = SosEncoder(6),
                       form: str | None = None) -> Certificate:
    """Quadratic-stability certificate with a common witness across all
    polytope vertices."""
    return _certificate(list(psys.vertices), dwell, encoder, form,
                        psys.to_json(), robust=True)


# ---------------------------------------------------------------------------
# exact minimum dwell time (parameter-free LMI route)
# ---------------------------------------------------------------------------

def _hurwitz(A: np.ndarray) -> bool:
    return float(np.max(np.linalg.eigvals(A).real)) < 0.0


def _min_dwell_lmi_feasible(sys: ImpulsiveSystem, tbar: float) -> bool:
    """Joint feasibility of the two constant LMIs of the exact minimum
    dwell-time statement, decided by margin maximization."""
    b = SdpBuilder()
    P, _ = b.sym_poly_var(sys.n, 0)
    P0 = P.at(0.0)
    b.require_neg(P0.lmul(sys.A.T) + P0.rmul(sys.A), margin=True)
    M = expm(sys.A, tbar) @ sys.J
    b.require_neg(P0.lmul(M.T).rmul(M) - P0, margin=True)
    b.require_psd(P0, margin=True)
    b.fix_trace(P0, float(sys.n))
    t, _ = max_margin(b.finalize())
    return t >= MARGIN_THRESHOLD


def exact_min_dwell(sys: ImpulsiveSystem, tol: float = 1e-3,
                    cap: float = SEARCH_CAP) -> float:
    """Smallest tbar for which the exact (parameter-free) minimum dwell-time
    LMIs are feasible, located by doubling plus bisection.

    Requires A Hurwitz (hypothesis of the statement); refuses otherwise.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    if not _hurwitz(sys.A):
        raise InputError("exact minimum dwell-time test requires Hurwitz A")
    lo = tol
    if _min_dwell_lmi_feasible(sys, lo):
        return lo
    hi = max(2 * tol, 0.125)
    while not _min_dwell_lmi_feasible(sys, hi):
        hi *= 2.0
        if hi > cap:
            raise SearchError(f"no feasible dwell time below {cap}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _min_dwell_lmi_feasible(sys, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# bound searches over certificate feasibility
# ---------------------------------------------------------------------------

def _guarded(feasible: Callable[..., bool]) -> Callable[..., bool]:
    """Treat a numerically-failed probe as infeasible (the conservative
    verdict: stability is never claimed on a failed solve) and surface it."""

    def probe(*args) -> bool:
        try:
            return feasible(*args)
        except NumericalFailureError as exc:
            warnings.warn(f"probe {args} failed numerically ({exc}); "
                          "treated as infeasible")
            return False

    return probe


def _sweep_is_monotone(feasible: Callable[[float], bool], lo: float,
                       hi: float, step: float = 0.01) -> bool:
    """Linear sweep fallback: checks the single-threshold assumption of the
    bisection on a coarse grid."""
    probes = np.arange(lo, hi + step, step)
    flags = [feasible(float(t)) for t in probes]
    return sum(1 for a, b in zip(flags, flags[1:]) if a != b) <= 1


def search_min_dwell(sys: ImpulsiveSystem, encoder: Encoder = SosEncoder(6),
                     tol: float = DEFAULT_BISECT_TOL,
                     cap: float = SEARCH_CAP, maximum: bool = False,
                     form: str = "b", check_monotone: bool = False) -> float:
    """Smallest tbar with a feasible minimum dwell-time certificate (largest
    feasible tbar when ``maximum``), located by doubling plus bisection."""

    feas = _guarded(lambda t: min_dwell_certificate(
        sys, t, encoder, maximum=maximum, form=form).feasible)

    if not maximum:
        lo = tol
        if feas(lo):
            return lo
        hi = 0.125
        while not feas(hi):
            hi *= 2.0
            if hi > cap:
                raise SearchError(f"no feasible dwell time below {cap}")
        if check_monotone and not _sweep_is_monotone(feas, lo, hi):
            warnings.warn("feasibility is not single-threshold on the bracket")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if feas(mid):
                hi = mid
            else:
                lo = mid
        return hi
    # maximum dwell time: feasibility holds for small tbar, bisect upward.
    lo = tol
    if not feas(lo):
        raise SearchError("maximum dwell-time certificate infeasible even "
                          f"at tbar={lo}")
    hi = 0.125
    while feas(hi) and hi <= cap:
        lo, hi = hi, 2.0 * hi
    if hi > cap:
        raise SearchError(f"feasible beyond the search cap {cap}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feas(mid):
            lo = mid
        else:
            hi = mid
    return lo


def search_range(sys: ImpulsiveSystem, encoder: Encoder = SosEncoder(6),
                 seed: float | None = None,
                 tol: float = DEFAULT_BISECT_TOL,
                 tmin_floor: float = 1e-3,
                 tmax_cap: float = SEARCH_CAP) -> tuple[float, float]:
    """Maximal certified dwell-time range around a periodically-stable seed.

    First pushes the lower endpoint down (holding tmax at the seed), then
    the upper endpoint up (holding the found tmin); each probe is one
    ranged certificate.  When the certified intervals form a genuine
    trade-off frontier between the two endpoints, this order reports the
    widest-tmin point of the frontier.  The result always contains the seed.
    """
    if seed is None:
        raise InputError("search_range needs a seed dwell time")
    if not periodic_exact(sys, seed):
        raise InputError(f"seed {seed} is not periodically stable")

    feas = _guarded(lambda a, b: ranged_certificate(sys, a, b, encoder).feasible)

    if not feas(seed, seed):
        raise InputError(f"seed {seed} infeasible at this encoder setting")

    # lower endpoint: halving expansion, then bisection
    lo, hi = 0.5 * seed, seed
    while lo >= tmin_floor and feas(lo, seed):
        lo, hi = 0.5 * lo, lo
    if lo < tmin_floor:
        # feasible all the way down; settle the floor itself
        tmin = tmin_floor if feas(tmin_floor, seed) else hi
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if feas(mid, seed):
                hi = mid
            else:
                lo = mid
        tmin = hi
    # upper endpoint: doubling expansion, then bisection
    lo, hi = seed, 2.0 * seed
    while hi <= tmax_cap and feas(tmin, hi):
        lo, hi = hi, 2.0 * hi
    if hi > tmax_cap:
        tmax = lo
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if feas(tmin, mid):
                lo = mid
            else:
                hi = mid
        tmax = lo
    return tmin, tmax
