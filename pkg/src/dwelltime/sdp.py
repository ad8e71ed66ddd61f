"""Small dense semidefinite-programming solver.

Solves

    maximize    c^T x
    subject to  F0_b + sum_i x_i F_i^b  >= 0   (PSD, one LMI block per b)
                E x = d

with an infeasible-start primal-dual interior-point method using
Nesterov-Todd scaling and a Mehrotra-style adaptive centering parameter.
Block sizes in this package stay below ~60, so every linear-algebra step
is dense (Cholesky / LU via LAPACK).  The iteration schedule is fixed and
free of randomization: identical inputs produce bitwise-identical output.

The dual problem used for gap reporting and infeasibility certificates is

    minimize    sum_b <F0_b, Y_b> + d^T mu
    subject to  c_i + sum_b <F_i^b, Y_b> - (E^T mu)_i = 0,   Y_b >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, InputError, NumericalFailureError

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_MAX_ITER = 200
# Margin level above which a strict-feasibility question is answered "yes".
# The certificate problems normalize the witness anchor trace and weight
# ranged jump margins by the dwell parameter; on lifted sampled-data jumps
# (unit-modulus eigenvalues at dwell zero) the achievable margin is then
# capped near the square root of the solver tolerance by a degenerate
# equality the optimizer can only approach.  The gate sits above observed
# solver noise (~1e-9) and below that structural ceiling.
MARGIN_THRESHOLD = 1e-8
# Fraction of the maximal step to the PSD boundary actually taken.
STEP_FRACTION = 0.98
# Iterations without complementarity progress tolerated before giving up.
STALL_LIMIT = 25
# Ceiling accepted for the dual residual and the relative gap once they
# stop improving.  On degenerate optimal faces their attainable accuracy is
# limited by the conditioning of the Nesterov-Todd scaling; the primal
# iterate keeps full accuracy and stays gated at feas_tol.
RELAXED_TOL = 1e-6
# Use the Mehrotra second-order correction.  Off by default: on the
# degenerate Gram-structured problems built here the plain predictor sigma
# heuristic is measurably more robust than the corrected direction.
SECOND_ORDER = False
# Print per-iteration diagnostics (debugging aid).
TRACE = False


@dataclass
class LmiBlock:
    """One PSD constraint F0 + sum_i x[var_idx[k]] * F[k] >= 0."""

    size: int
    F0: np.ndarray          # (size, size), symmetric
    var_idx: np.ndarray     # (k,) int
    F: np.ndarray           # (k, size, size), symmetric slices

    @classmethod
    def from_terms(cls, F0, terms: dict) -> "LmiBlock":
        F0 = np.atleast_2d(np.asarray(F0, dtype=float))
        idx = np.array(sorted(terms), dtype=int)
        if idx.size:
            F = np.stack([np.atleast_2d(np.asarray(terms[i], dtype=float)) for i in idx])
        else:
            F = np.zeros((0,) + F0.shape)
        return cls(size=F0.shape[0], F0=F0, var_idx=idx, F=F)

    def value(self, x: np.ndarray) -> np.ndarray:
        M = self.F0.copy()
        if self.var_idx.size:
            M = M + np.einsum("k,kij->ij", x[self.var_idx], self.F)
        return 0.5 * (M + M.T)


@dataclass
class SdpProblem:
    nvars: int
    blocks: list[LmiBlock]
    eq_A: np.ndarray | None = None      # (p, nvars)
    eq_b: np.ndarray | None = None      # (p,)
    objective: np.ndarray | None = None  # maximize; zeros = feasibility
    margin_var: int | None = None       # designated margin variable, if any

    def validate(self) -> None:
        if self.nvars < 1:
            raise InputError("problem needs at least one variable")
        if not self.blocks:
            raise InputError("problem needs at least one LMI block")
        for b in self.blocks:
            if b.F0.shape != (b.size, b.size):
                raise DimensionError("block constant has wrong shape")
            if b.F.shape[1:] != (b.size, b.size):
                raise DimensionError("block term has wrong shape")
            if b.var_idx.size and (b.var_idx.min() < 0 or b.var_idx.max() >= self.nvars):
                raise InputError("block references an unknown variable")
            if not (np.all(np.isfinite(b.F0)) and np.all(np.isfinite(b.F))):
                raise InputError("block data contains non-finite entries")
        if (self.eq_A is None) != (self.eq_b is None):
            raise InputError("eq_A and eq_b must be given together")
        if self.eq_A is not None and self.eq_A.shape != (self.eq_b.shape[0], self.nvars):
            raise DimensionError("equality system has wrong shape")


@dataclass
class SdpSolution:
    status: str                       # optimal | infeasible | unbounded | numerical-failure
    x: np.ndarray
    objective: float
    dual_objective: float
    primal_residual: float            # worst LMI/equality violation of returned x
    dual_residual: float
    duality_gap: float
    iterations: int
    # For status="infeasible": (Y_blocks, mu) normalized so that
    # <F0, Y> + d^T mu = -1 and A*(Y) = E^T mu within feas_tol.
    ray: tuple | None = field(default=None, repr=False)


def _chol(M: np.ndarray) -> np.ndarray:
    return np.linalg.cholesky(0.5 * (M + M.T))


def _max_step(L: np.ndarray, D: np.ndarray) -> float:
    """Largest alpha with S + alpha*D >= 0, given L = chol(S)."""
    T = sla.solve_triangular(L, D, lower=True)
    T = sla.solve_triangular(L, T.T, lower=True)
    lam = float(np.linalg.eigvalsh(0.5 * (T + T.T))[0])
    return np.inf if lam >= -1e-16 else -1.0 / lam


def _normalized(prob: SdpProblem) -> tuple[SdpProblem, np.ndarray, np.ndarray]:
    """Scale every block by max(1, |F0|_inf) and every equality row to unit
    inf-norm.  The feasible set, objective and dual objective are unchanged;
    the returned scale vectors map dual iterates back to original units."""
    bscale = np.array([max(1.0, float(np.max(np.abs(b.F0)))) for b in prob.blocks])
    blocks = [LmiBlock(b.size, b.F0 / s, b.var_idx, b.F / s)
              for b, s in zip(prob.blocks, bscale)]
    eq_A, eq_b = prob.eq_A, prob.eq_b
    escale = np.ones(0)
    if eq_A is not None and eq_A.shape[0]:
        escale = np.maximum(np.max(np.abs(eq_A), axis=1), 1e-300)
        eq_A = eq_A / escale[:, None]
        eq_b = eq_b / escale
    return (SdpProblem(prob.nvars, blocks, eq_A, eq_b, prob.objective,
                       prob.margin_var), bscale, escale)


class _Iterate:
    """Workspace for one interior-point run."""

    def __init__(self, prob: SdpProblem):
        self.prob = prob
        self.n = prob.nvars
        self.c = (np.zeros(self.n) if prob.objective is None
                  else np.asarray(prob.objective, dtype=float))
        if prob.eq_A is not None and prob.eq_A.shape[0] > 0:
            self.E = np.asarray(prob.eq_A, dtype=float)
            self.d = np.asarray(prob.eq_b, dtype=float)
        else:
            self.E = np.zeros((0, self.n))
            self.d = np.zeros(0)
        self.p = self.E.shape[0]
        self.N = sum(b.size for b in prob.blocks)

        self.x = (np.linalg.lstsq(self.E, self.d, rcond=None)[0]
                  if self.p else np.zeros(self.n))
        self.mu_eq = np.zeros(self.p)
        self.Z, self.Y = [], []
        for b in prob.blocks:
            beta = 1.0 + float(np.linalg.norm(b.F0))
            self.Z.append(beta * np.eye(b.size))
            self.Y.append(beta * np.eye(b.size))

    # ---- residuals ----------------------------------------------------
    def adjoint(self, mats: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.n)
        for b, M in zip(self.prob.blocks, mats):
            if b.var_idx.size:
                out[b.var_idx] += np.tensordot(b.F, M, axes=([1, 2], [0, 1]))
        return out

    def residuals(self):
        rz = [b.value(self.x) - Z for b, Z in zip(self.prob.blocks, self.Z)]
        rp = self.d - self.E @ self.x
        ay = self.adjoint(self.Y)
        et = self.E.T @ self.mu_eq
        rd = self.c + ay - et
        # Dual residual is judged relative to the size of the quantities
        # that cancel in it; equality multipliers grow large on degenerate
        # coefficient-matching systems and set the attainable floor.
        dual_scale = 1.0 + float(np.max(np.abs(self.c))) \
            + (float(np.max(np.abs(ay))) if self.n else 0.0) \
            + (float(np.max(np.abs(et))) if self.p else 0.0)
        gap = sum(float(np.tensordot(Y, Z)) for Y, Z in zip(self.Y, self.Z))
        return rz, rp, rd, gap, dual_scale


def solve(prob: SdpProblem,
          feas_tol: float = DEFAULT_FEAS_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    """Run the interior-point method on ``prob``.

    Returns a solution whose ``status`` is one of ``optimal``,
    ``infeasible``, ``unbounded`` or ``numerical-failure``.  The iteration
    cap is reported as ``numerical-failure``; feasibility is never guessed.
    """
    if not feas_tol > 0:
        raise InputError("feas_tol must be positive")
    prob.validate()
    orig = prob
    prob, bscale, escale = _normalized(prob)
    it = _Iterate(prob)
    blocks = prob.blocks
    n, p = it.n, it.p

    scale_d = 1.0 + (float(np.max(np.abs(it.d))) if p else 0.0)
    scale_F = [1.0 + float(np.max(np.abs(b.F0))) for b in blocks]

    best = None
    stall = 0
    best_mu = np.inf
    best_q = np.inf
    q_improved_at = 0

    for k in range(1, max_iter + 1):
        rz, rp, rd, gap, dual_scale = it.residuals()
        mu = gap / it.N
        pobj = float(it.c @ it.x)
        dobj = sum(float(np.tensordot(b.F0, Y)) for b, Y in zip(blocks, it.Y))
        dobj += float(it.d @ it.mu_eq)

        perr = max(
            max(float(np.max(np.abs(R))) / s for R, s in zip(rz, scale_F)),
            float(np.max(np.abs(rp))) / scale_d if p else 0.0,
        )
        derr = float(np.max(np.abs(rd))) / dual_scale
        gerr = gap / (1.0 + abs(pobj) + abs(dobj))
        best = (it.x.copy(), pobj, dobj, perr, derr, gerr, k)
        if TRACE:
            print(f"  it {k:3d}  mu={mu:9.2e}  perr={perr:9.2e}  "
                  f"derr={derr:9.2e}  gap={gerr:9.2e}  pobj={pobj:+.6e}  "
                  f"dobj={dobj:+.6e}")

        q = max(derr, gerr)
        if q < 0.9 * best_q:
            best_q = q
            q_improved_at = k
        converged = q <= feas_tol or (q <= RELAXED_TOL
                                      and k - q_improved_at >= 4)
        if perr <= feas_tol and converged:
            prim_res = _primal_violation(orig, it.x)
            return SdpSolution("optimal", it.x.copy(), pobj, dobj,
                               prim_res, derr, gerr, k - 1)

        # Primal-infeasibility certificate: improving dual ray.
        if dobj < -feas_tol:
            s = -1.0 / dobj
            hres = float(np.max(np.abs(s * (rd - it.c))))
            if hres <= feas_tol:
                ray = ([s * Y / sb for Y, sb in zip(it.Y, bscale)],
                       s * it.mu_eq / escale if p else s * it.mu_eq)
                return SdpSolution("infeasible", it.x.copy(), pobj, dobj,
                                   perr, hres, gerr, k - 1, ray=ray)

        # Unboundedness certificate: improving primal ray.
        if pobj > 1.0 / feas_tol:
            xh = it.x / pobj
            eray = float(np.max(np.abs(it.E @ xh))) if p else 0.0
            lray = min(float(np.linalg.eigvalsh(
                0.5 * (b.value(xh) + b.value(xh).T) - b.F0 * (1 - 1 / pobj))[0])
                for b in blocks)
            if eray <= feas_tol and lray >= -feas_tol:
                return SdpSolution("unbounded", it.x.copy(), pobj, dobj,
                                   perr, derr, gerr, k - 1)

        if mu > 0.999 * best_mu:
            stall += 1
            if stall > STALL_LIMIT:
                break
        else:
            stall = 0
        best_mu = min(best_mu, mu)

        # ---- Nesterov-Todd scaling per block --------------------------
        try:
            Lz = [_chol(Z) for Z in it.Z]
            Ly = [_chol(Y) for Y in it.Y]
        except np.linalg.LinAlgError:
            break
        Winv, Zinv, Dh, Dhinv, Vinv = [], [], [], [], []
        ok = True
        for b, L, Y in zip(blocks, Lz, it.Y):
            M = L.T @ Y @ L
            lam, Q = np.linalg.eigh(0.5 * (M + M.T))
            if lam[0] <= 0:
                ok = False
                break
            Msqrt = (Q * np.sqrt(lam)) @ Q.T
            Linv = sla.solve_triangular(L, np.eye(b.size), lower=True)
            Wi = Linv.T @ Msqrt @ Linv
            Winv.append(Wi)
            Zinv.append(Linv.T @ Linv)
            # W^{1/2} and friends for the second-order corrector
            W = L @ ((Q / np.sqrt(lam)) @ Q.T) @ L.T
            lw, Qw = np.linalg.eigh(0.5 * (W + W.T))
            if lw[0] <= 0:
                ok = False
                break
            Dh.append((Qw * np.sqrt(lw)) @ Qw.T)
            Dhinv.append((Qw / np.sqrt(lw)) @ Qw.T)
            V = Dh[-1] @ it.Y[len(Dh) - 1] @ Dh[-1]
            lv, Qv = np.linalg.eigh(0.5 * (V + V.T))
            if lv[0] <= 0:
                ok = False
                break
            Vinv.append((Qv / lv) @ Qv.T)
        if not ok:
            break

        # ---- Schur complement and KKT factorization --------------------
        H = np.zeros((n, n))
        for b, Wi in zip(blocks, Winv):
            if b.var_idx.size == 0:
                continue
            G = np.matmul(Wi, np.matmul(b.F, Wi))
            Hloc = np.tensordot(b.F, G, axes=([1, 2], [1, 2]))
            H[np.ix_(b.var_idx, b.var_idx)] += 0.5 * (Hloc + Hloc.T)
        KKT = np.zeros((n + p, n + p))
        KKT[:n, :n] = H
        if p:
            KKT[:n, n:] = it.E.T
            KKT[n:, :n] = it.E
        KKT[:n, :n] += 1e-13 * np.trace(H) / max(n, 1) * np.eye(n)
        try:
            lu = sla.lu_factor(KKT)
        except (ValueError, sla.LinAlgError):
            break

        def direction(nu: float, corr=None):
            Rc = [nu * Zi - Y for Zi, Y in zip(Zinv, it.Y)]
            if corr is not None:
                Rc = [R - C for R, C in zip(Rc, corr)]
            acc = [R - Wi @ Rz @ Wi for R, Wi, Rz in zip(Rc, Winv, rz)]
            r1 = rd + it.adjoint(acc)
            rhs = np.concatenate([r1, rp]) if p else r1
            sol = sla.lu_solve(lu, rhs)
            # Two rounds of iterative refinement keep the Newton-system
            # residual near machine precision even when the KKT matrix is
            # ill-conditioned close to the optimum; without them the solve
            # error becomes the floor of the dual residual.
            for _ in range(2):
                sol += sla.lu_solve(lu, rhs - KKT @ sol)
            dx, dmu = sol[:n], sol[n:]
            dZ, dY = [], []
            for b, Rz, R, Wi in zip(blocks, rz, Rc, Winv):
                DZ = Rz.copy()
                if b.var_idx.size:
                    DZ = DZ + np.einsum("k,kij->ij", dx[b.var_idx], b.F)
                DZ = 0.5 * (DZ + DZ.T)
                DY = R - Wi @ DZ @ Wi
                dZ.append(DZ)
                dY.append(0.5 * (DY + DY.T))
            return dx, dmu, dZ, dY

        def step_lengths(dZ, dY):
            ap = ad = np.inf
            for L, DZ in zip(Lz, dZ):
                ap = min(ap, _max_step(L, DZ))
            for L, DY in zip(Ly, dY):
                ad = min(ad, _max_step(L, DY))
            return ap, ad

        try:
            # Predictor (affine direction) fixes the centering parameter.
            dxa, dmua, dZa, dYa = direction(0.0)
            apa, ada = step_lengths(dZa, dYa)
            apa = min(1.0, STEP_FRACTION * apa)
            ada = min(1.0, STEP_FRACTION * ada)
            gap_aff = sum(float(np.tensordot(Y + ada * DY, Z + apa * DZ))
                          for Y, Z, DY, DZ in zip(it.Y, it.Z, dYa, dZa))
            sigma = min(1.0, max(1e-9, (max(gap_aff, 0.0) / gap) ** 3))

            # Mehrotra second-order correction, evaluated in the scaled
            # space where primal and dual slacks coincide.
            corr = None
            if SECOND_ORDER:
                corr = []
                for Di, Dinv, Vi, DZ, DY in zip(Dh, Dhinv, Vinv, dZa, dYa):
                    dZs = Dinv @ DZ @ Dinv
                    dYs = Di @ DY @ Di
                    M2 = dZs @ dYs
                    M2 = 0.5 * (M2 + M2.T)
                    C = 0.5 * (Vi @ M2 + M2 @ Vi)
                    corr.append(Dinv @ (0.5 * (C + C.T)) @ Dinv)

            dx, dmu, dZ, dY = direction(sigma * mu, corr)
            ap, ad = step_lengths(dZ, dY)
        except (np.linalg.LinAlgError, ValueError):
            break
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)
        if min(ap, ad) < 1e-13 or not np.all(np.isfinite(dx)):
            break

        it.x += ap * dx
        it.mu_eq += ad * dmu
        it.Z = [0.5 * (Z + ap * DZ + (Z + ap * DZ).T) for Z, DZ in zip(it.Z, dZ)]
        it.Y = [0.5 * (Y + ad * DY + (Y + ad * DY).T) for Y, DY in zip(it.Y, dY)]

    x, pobj, dobj, perr, derr, gerr, k = best if best is not None else (
        it.x.copy(), float(it.c @ it.x), 0.0, np.inf, np.inf, np.inf, 0)
    return SdpSolution("numerical-failure", x, pobj, dobj,
                       _primal_violation(orig, x), derr, gerr, k)


def _primal_violation(prob: SdpProblem, x: np.ndarray) -> float:
    """Worst constraint violation of x: max(-lambda_min) over blocks plus
    equality residuals.  Independent of solver internals."""
    worst = 0.0
    for b in prob.blocks:
        lam = float(np.linalg.eigvalsh(b.value(x))[0])
        worst = max(worst, -lam)
    if prob.eq_A is not None and prob.eq_A.shape[0]:
        worst = max(worst, float(np.max(np.abs(prob.eq_A @ x - prob.eq_b))))
    return worst


def max_margin(prob: SdpProblem,
               feas_tol: float = DEFAULT_FEAS_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, np.ndarray]:
    """Maximize the designated margin variable of ``prob``.

    The problem must carry ``margin_var`` (entering every strict block as
    ``-t*I``) and a boundedness cap ``t <= 1`` among its blocks.  Returns
    the optimal margin and the full variable vector; the caller declares
    strict feasibility iff the margin reaches :data:`MARGIN_THRESHOLD`.
    """
    if prob.margin_var is None:
        raise InputError("problem has no designated margin variable")
    obj = np.zeros(prob.nvars)
    obj[prob.margin_var] = 1.0
    prob.objective = obj
    sol = solve(prob, feas_tol=feas_tol, max_iter=max_iter)
    if sol.status == "infeasible":
        # Margin problems are feasible by construction for t << 0; an
        # infeasibility certificate still answers the caller's question.
        return -np.inf, sol.x
    if sol.status != "optimal":
        raise NumericalFailureError(
            f"margin solve ended with status {sol.status} "
            f"after {sol.iterations} iterations")
    return float(sol.x[prob.margin_var]), sol.x


def dump_sparse(prob: SdpProblem) -> str:
    """Debug dump: one line per nonzero, `block row col var value`, with
    var index -1 denoting the constant part.  Equalities and the objective
    are appended as comment-style sections for external cross-checking."""
    lines = []
    for bi, b in enumerate(prob.blocks):
        for (r, c) in zip(*np.nonzero(b.F0)):
            if r <= c:
                lines.append(f"{bi} {r} {c} -1 {b.F0[r, c]:.17g}")
        for kk, vi in enumerate(b.var_idx):
            Fk = b.F[kk]
            for (r, c) in zip(*np.nonzero(Fk)):
                if r <= c:
                    lines.append(f"{bi} {r} {c} {vi} {Fk[r, c]:.17g}")
    if prob.eq_A is not None and prob.eq_A.shape[0]:
        lines.append("# equalities: row var value rhs")
        for ri in range(prob.eq_A.shape[0]):
            for vi in np.nonzero(prob.eq_A[ri])[0]:
                lines.append(f"# {ri} {vi} {prob.eq_A[ri, vi]:.17g} {prob.eq_b[ri]:.17g}")
    if prob.objective is not None:
        lines.append("# objective: var value")
        for vi in np.nonzero(prob.objective)[0]:
            lines.append(f"# {vi} {prob.objective[vi]:.17g}")
    return "\n".join(lines) + "\n"
