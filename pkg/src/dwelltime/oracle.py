"""Independent brute-force verification.

Everything here re-derives its answers from the system matrices alone:
spectral sweeps locate exact stability regions, certificate audits
re-evaluate the stability conditions straight from the stored witness,
simulation integrates trajectories, and randomized falsification hunts
for destabilizing parameter trajectories of uncertain systems.  None of
it goes through the SDP machinery, so agreement with the certificate
route is meaningful evidence rather than a tautology.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .linalg import expm, min_eig_sym, spectral_radius, sym
from .systems import DwellSpec, ImpulsiveSystem, PolytopicSystem

DEFAULT_SWEEP_GRID = 400
DEFAULT_REFINE_TOL = 1e-5
DEFAULT_AUDIT_GRID = 200
DEFAULT_AUDIT_TOL = 1e-6
# State-norm growth treated as divergence by simulation and falsification.
DIVERGENCE_FACTOR = 1e3
FALSIFY_EVENTS = 50


# ---------------------------------------------------------------------------
# dwell sequences and trajectories
# ---------------------------------------------------------------------------

@dataclass
class DwellSequence:
    """A concrete sequence of dwell times plus how it was generated."""

    times: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size and float(self.times.min()) <= 0:
            raise InputError("dwell times must be strictly positive")

    @classmethod
    def fixed(cls, tbar: float, count: int) -> "DwellSequence":
        return cls(np.full(count, float(tbar)),
                   {"kind": "fixed", "tbar": tbar, "count": count})

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int, seed: int) -> "DwellSequence":
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(lo, hi, size=count),
                   {"kind": "uniform", "lo": lo, "hi": hi,
                    "count": count, "seed": seed})


@dataclass
class Trajectory:
    """Sampled state history with impulse markers (1 = post-jump sample)."""

    t: np.ndarray
    x: np.ndarray                  # (len(t), n)
    impulse: np.ndarray            # (len(t),) of 0/1
    diverged_at: float | None = None

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    def to_csv(self, path_or_buf) -> None:
        n = self.x.shape[1]
        header = "t," + ",".join(f"x{i+1}" for i in range(n)) + ",impulse"
        data = np.column_stack([self.t, self.x, self.impulse])
        np.savetxt(path_or_buf, data, delimiter=",", header=header, comments="")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


# ---------------------------------------------------------------------------
# exact stability regions
# ---------------------------------------------------------------------------

def spectral_sweep(sys: ImpulsiveSystem, theta_lo: float, theta_hi: float,
                   grid: int = DEFAULT_SWEEP_GRID,
                   refine_tol: float = DEFAULT_REFINE_TOL) -> list[tuple[float, float]]:
    """Maximal intervals of theta in [theta_lo, theta_hi] on which the
    monodromy e^{A theta} J is Schur.

    Evaluates the spectral radius on a uniform grid, then refines every
    crossing of 1 by bisection down to ``refine_tol``.
    """
    if not (0 < theta_lo < theta_hi):
        raise InputError("need 0 < theta_lo < theta_hi")
    thetas = np.linspace(theta_lo, theta_hi, grid)
    rho = np.array([spectral_radius(expm(sys.A, t) @ sys.J) for t in thetas])
    stable = rho < 1.0

    def refine(a: float, b: float) -> float:
        fa = spectral_radius(expm(sys.A, a) @ sys.J) < 1.0
        while b - a > refine_tol:
            m = 0.5 * (a + b)
            if (spectral_radius(expm(sys.A, m) @ sys.J) < 1.0) == fa:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    intervals: list[tuple[float, float]] = []
    start = None
    for i in range(grid):
        if stable[i] and start is None:
            start = thetas[i] if i == 0 else refine(thetas[i - 1], thetas[i])
        elif not stable[i] and start is not None:
            intervals.append((start, refine(thetas[i - 1], thetas[i])))
            start = None
    if start is not None:
        intervals.append((start, theta_hi))
    return intervals


# ---------------------------------------------------------------------------
# certificate audit
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    theorem: str
    conditions: dict               # name -> worst residual (>= 0 is satisfied)
    passed: bool

    def worst(self) -> float:
        return min(self.conditions.values())


def verify_certificate(cert, sys: ImpulsiveSystem | PolytopicSystem,
                       grid: int = DEFAULT_AUDIT_GRID,
                       tol: float = DEFAULT_AUDIT_TOL) -> AuditReport:
    """Re-evaluate every condition of the certificate's stability statement
    on a grid, straight from the stored witness.

    The system must match the snapshot stored in the certificate; a
    mismatch raises :class:`InputError` rather than producing a vacuous
    PASS.  Conditions are reported as smallest-eigenvalue residuals of
    their >= 0 forms; the audit passes iff every residual is >= -tol.
    """
    if not cert.feasible or cert.witness is None:
        raise InputError("certificate carries no feasible witness to audit")
    if isinstance(sys, PolytopicSystem):
        vertices = list(sys.vertices)
        snap = sys.to_json()
    else:
        vertices = [(sys.A, sys.J)]
        snap = sys.to_json()
    stored = cert.system
    if not _same_system(stored, snap):
        raise InputError("certificate was issued for a different system")

    dwell: DwellSpec = cert.dwell
    L = cert.domain_scale
    theorem = cert.theorem.removeprefix("robust-")
    backward = theorem.split("-")[-1] in ("e", "c")
    conditions: dict[str, float] = {}
    taus = np.linspace(0.0, L, grid)

    val = cert.witness_value
    der = cert.witness_derivative
    for i, (A, J) in enumerate(vertices):
        sfx = f"[{i}]" if len(vertices) > 1 else ""
        worst = np.inf
        for tau in taus:
            M = A.T @ val(tau) + val(tau) @ A
            M = M + (-der(tau) if backward else der(tau))
            worst = min(worst, min_eig_sym(sym(-M)))
        conditions[f"flow{sfx}"] = float(worst)

        if dwell.mode in ("minimum", "maximum"):
            pt = L if backward else 0.0
            M = A.T @ val(pt) + val(pt) @ A
            sign = -1.0 if dwell.mode == "maximum" else 1.0
            conditions[f"strict_flow{sfx}"] = float(min_eig_sym(sym(-sign * M)))

        Wfrom = val(L if backward else 0.0)
        if dwell.mode == "ranged":
            worst = np.inf
            for th in np.linspace(dwell.tmin, dwell.tmax, grid):
                M = J.T @ Wfrom @ J - val(th)
                worst = min(worst, min_eig_sym(sym(-M)))
            conditions[f"jump{sfx}"] = float(worst)
        else:
            target = val(0.0 if backward else L)
            M = J.T @ Wfrom @ J - target
            conditions[f"jump{sfx}"] = float(min_eig_sym(sym(-M)))

    anchor = val(L if backward else 0.0)
    conditions["anchor_pd"] = float(min_eig_sym(sym(anchor)))
    conditions["witness_positive"] = float(
        min(min_eig_sym(sym(val(tau))) for tau in taus))
    passed = all(v >= -tol for v in conditions.values())
    return AuditReport(theorem=cert.theorem, conditions=conditions, passed=passed)


def _same_system(stored: dict, snap: dict) -> bool:
    if set(stored) != set(snap):
        return False
    for k, v in snap.items():
        a, b = np.asarray(stored[k], dtype=object), np.asarray(v, dtype=object)
        try:
            if not np.allclose(np.asarray(stored[k], dtype=float),
                               np.asarray(v, dtype=float), rtol=0, atol=0):
                return False
        except (TypeError, ValueError):
            if stored[k] != v:
                return False
    return True


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def simulate(sys: ImpulsiveSystem, seq: DwellSequence, x0,
             step: float = 1e-3, controller=None) -> Trajectory:
    """Integrate the impulsive system over the dwell sequence.

    RK4 with a fixed substep between impulses; the jump x <- J x^- (plus
    Bd K_d x^- with an attached controller) is applied at every impulse
    instant and the post-jump sample is flagged.  Divergence (state norm
    beyond DIVERGENCE_FACTOR times the initial norm, or a non-finite
    state) is recorded in ``diverged_at`` instead of raising.
    """
    if not step > 0:
        raise InputError("step must be positive")
    x = np.asarray(x0, dtype=float).ravel()
    if x.size != sys.n:
        raise InputError("x0 has the wrong dimension")
    A, J, Bc, Bd = sys.A, sys.J, sys.Bc, sys.Bd
    Kd = controller.Kd if controller is not None else None
    Jeff = J if (Kd is None or Bd is None) else J + Bd @ Kd
    norm0 = max(float(np.linalg.norm(x)), 1e-300)

    ts, xs, marks = [0.0], [x.copy()], [0]
    t = 0.0
    diverged_at = None

    def rhs(tau_local: float, xv: np.ndarray) -> np.ndarray:
        dx = A @ xv
        if controller is not None and Bc is not None:
            dx = dx + Bc @ (controller.gain(tau_local) @ xv)
        return dx

    for Tk in seq.times:
        nsub = max(1, int(np.ceil(Tk / step)))
        h = Tk / nsub
        for k in range(nsub):
            tau = k * h
            k1 = rhs(tau, x)
            k2 = rhs(tau + 0.5 * h, x + 0.5 * h * k1)
            k3 = rhs(tau + 0.5 * h, x + 0.5 * h * k2)
            k4 = rhs(tau + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
            ts.append(t)
            xs.append(x.copy())
            marks.append(0)
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_FACTOR * norm0:
                if diverged_at is None:
                    diverged_at = t
        if diverged_at is not None:
            break
        x = Jeff @ x
        ts.append(t)
        xs.append(x.copy())
        marks.append(1)
    return Trajectory(np.asarray(ts), np.asarray(xs), np.asarray(marks),
                      diverged_at=diverged_at)


# ---------------------------------------------------------------------------
# randomized robust falsification
# ---------------------------------------------------------------------------

def falsify_robust(psys: PolytopicSystem, spec: DwellSpec, trials: int,
                   seed: int, events: int = FALSIFY_EVENTS) -> dict | None:
    """Search for a destabilizing parameter trajectory of the polytope.

    Samples piecewise-constant vertex weights (exponential inter-switch
    times, mean dwell/5) and admissible dwell sequences, propagates the
    product of transition and jump maps over ``events`` impulses, and
    reports the first sample whose cumulative map norm grows by the
    divergence factor.  The first N trials hold the weight constant at
    each pure vertex, so a destabilizing vertex is always found.
    Deterministic for a fixed seed.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n, N = psys.n, psys.N
    t_ref = spec.tmax if spec.mode == "ranged" else spec.tbar
    mean_switch = t_ref / 5.0

    def draw_dwell() -> float:
        if spec.mode == "periodic":
            return spec.tbar
        if spec.mode == "ranged":
            return float(rng.uniform(spec.tmin, spec.tmax))
        if spec.mode == "minimum":
            return spec.tbar + float(rng.exponential(spec.tbar))
        return float(rng.uniform(spec.tbar * 1e-3, spec.tbar))

    def simplex_point() -> np.ndarray:
        w = rng.exponential(1.0, size=N)
        return w / w.sum()

    def Amix(lam: np.ndarray) -> np.ndarray:
        return sum(l * A for l, (A, _) in zip(lam, psys.vertices))

    def Jmix(lam: np.ndarray) -> np.ndarray:
        return sum(l * J for l, (_, J) in zip(lam, psys.vertices))

    for trial in range(trials):
        pure = trial if trial < N else None
        P = np.eye(n)
        growth = 0.0
        for _ in range(events):
            Tk = draw_dwell()
            # flow under piecewise-constant weights
            s = 0.0
            while s < Tk:
                seg = Tk - s if pure is not None else min(
                    float(rng.exponential(mean_switch)), Tk - s)
                lam = (np.eye(N)[pure] if pure is not None else simplex_point())
                P = expm(Amix(lam), seg) @ P
                s += seg
            lamJ = (np.eye(N)[pure] if pure is not None else simplex_point())
            P = Jmix(lamJ) @ P
            growth = float(np.linalg.norm(P, 2))
            if not np.isfinite(growth) or growth >= DIVERGENCE_FACTOR:
                return {"trial": trial,
                        "pure_vertex": pure,
                        "growth": growth,
                        "seed": seed}
    return None


# ---------------------------------------------------------------------------
# closed-loop minimum dwell-time sweep
# ---------------------------------------------------------------------------

def min_dwell_sweep_check(sys: ImpulsiveSystem, tbar: float, horizon: float,
                          grid: int = 50, controller=None,
                          steps: int | None = None) -> tuple[bool, float]:
    """Check rho(Phi(theta) (J + Bd Kd)) < 1 for theta on a grid of
    [tbar, horizon].

    Phi(theta) for theta > tbar uses the clamp identity
    Phi(tbar + d) = e^{Acl(tbar) d} Phi(tbar); with no controller the flow
    is the plain matrix exponential.  Returns (PASS, worst spectral radius).
    """
    if not (tbar > 0 and horizon > tbar):
        raise InputError("need 0 < tbar < horizon")
    if controller is None:
        Phi_T = expm(sys.A, tbar)
        Acl_T = sys.A
        Jeff = sys.J
    else:
        from .linalg import transition_matrix
        gmax = max(np.linalg.norm(controller.gain(t))
                   for t in np.linspace(0, tbar, 50))
        nsteps = steps or int(max(2000, 50 * gmax * tbar))
        Phi_T = transition_matrix(sys.A, sys.Bc,
                                  lambda t: controller.gain(t), tbar, nsteps)
        Acl_T = sys.A + sys.Bc @ controller.gain(tbar)
        Kd = controller.Kd
        Jeff = sys.J if (Kd is None or sys.Bd is None) else sys.J + sys.Bd @ Kd
    worst = 0.0
    for th in np.linspace(tbar, horizon, grid):
        Phi = expm(Acl_T, th - tbar) @ Phi_T
        worst = max(worst, spectral_radius(Phi @ Jeff))
    return worst < 1.0, worst
