"""Reduction of parameter-dependent LMIs to finite semidefinite programs.

A condition "M(tau; vars) >= 0 for all tau in [a, b]", polynomial in tau
and affine in scalar decision variables, is reduced either

* by matrix sum-of-squares multipliers:  M = S0(tau) + (tau-a)(b-tau) S1(tau)
  with S0, S1 Gram-represented PSD matrix polynomials (single-multiplier
  interval certificate), or
* by the piecewise-linear discretization: the unknown matrix function is
  replaced by a continuous piecewise-linear interpolant and the condition
  is imposed at both endpoints of every segment (sufficient because the
  admissible conditions are affine in tau on each segment).

Every encoding produced here is re-checkable pointwise with
:func:`verify_pointwise`, which never goes through the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EncodingError, InputError
from .linalg import min_eig_sym, sym
from .polymat import PolyMat
from .sdp import LmiBlock, SdpProblem

# Bound on the summed trace of all Gram blocks; keeps the margin problem's
# optimal face bounded without ever binding on desk-scale certificates.
GRAM_TRACE_CAP = 1e8
# Entry box |u| <= cap for rectangular unknowns (controller numerators).
ENTRY_CAP = 1e6

DEFAULT_GRID = 200
DEFAULT_VERIFY_TOL = 1e-6


# ---------------------------------------------------------------------------
# affine matrix polynomials
# ---------------------------------------------------------------------------

class AffMatPoly:
    """Matrix polynomial in one scalar parameter, affine in decision vars.

    Stored as a constant coefficient stack ``const[k]`` (the tau^k matrix)
    plus ``terms[v][k]``, the tau^k matrix multiplying decision variable v.
    """

    __slots__ = ("rows", "cols", "const", "terms")

    def __init__(self, rows: int, cols: int, const: np.ndarray, terms: dict):
        self.rows = rows
        self.cols = cols
        self.const = const          # (deg+1, rows, cols)
        self.terms = terms          # var index -> (deg+1, rows, cols)

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, M) -> "AffMatPoly":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(M.shape[0], M.shape[1], M[None, :, :].copy(), {})

    @classmethod
    def zero(cls, rows: int, cols: int, degree: int = 0) -> "AffMatPoly":
        return cls(rows, cols, np.zeros((degree + 1, rows, cols)), {})

    @property
    def degree(self) -> int:
        return self.const.shape[0] - 1

    def _pad(self, degree: int) -> "AffMatPoly":
        if degree <= self.degree:
            return self
        pad = ((0, degree - self.degree), (0, 0), (0, 0))
        return AffMatPoly(
            self.rows, self.cols, np.pad(self.const, pad),
            {v: np.pad(T, pad) for v, T in self.terms.items()})

    def trim(self) -> "AffMatPoly":
        """Drop trailing zero coefficient levels."""
        d = self.degree
        while d > 0:
            if np.any(self.const[d]) or any(np.any(T[d]) for T in self.terms.values()):
                break
            d -= 1
        if d == self.degree:
            return self
        return AffMatPoly(self.rows, self.cols, self.const[: d + 1].copy(),
                          {v: T[: d + 1].copy() for v, T in self.terms.items()})

    # -- algebra ---------------------------------------------------------
    def __add__(self, other: "AffMatPoly") -> "AffMatPoly":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise EncodingError("shape mismatch in expression")
        d = max(self.degree, other.degree)
        a, b = self._pad(d), other._pad(d)
        terms = {v: T.copy() for v, T in a.terms.items()}
        for v, T in b.terms.items():
            terms[v] = terms.get(v, 0) + T
        return AffMatPoly(self.rows, self.cols, a.const + b.const, terms)

    def __neg__(self) -> "AffMatPoly":
        return AffMatPoly(self.rows, self.cols, -self.const,
                          {v: -T for v, T in self.terms.items()})

    def __sub__(self, other: "AffMatPoly") -> "AffMatPoly":
        return self + (-other)

    def lmul(self, C) -> "AffMatPoly":
        """C @ self for a constant matrix C."""
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return AffMatPoly(C.shape[0], self.cols, C @ self.const,
                          {v: C @ T for v, T in self.terms.items()})

    def rmul(self, C) -> "AffMatPoly":
        """self @ C for a constant matrix C."""
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return AffMatPoly(self.rows, C.shape[1], self.const @ C,
                          {v: T @ C for v, T in self.terms.items()})

    def scale(self, alpha: float) -> "AffMatPoly":
        return AffMatPoly(self.rows, self.cols, alpha * self.const,
                          {v: alpha * T for v, T in self.terms.items()})

    @property
    def T(self) -> "AffMatPoly":
        return AffMatPoly(self.cols, self.rows, self.const.transpose(0, 2, 1),
                          {v: Tm.transpose(0, 2, 1) for v, Tm in self.terms.items()})

    def he(self) -> "AffMatPoly":
        """He(M) = M + M^T."""
        return self + self.T

    def deriv(self) -> "AffMatPoly":
        """d/dtau, degree drops by one (constant -> zero)."""
        if self.degree == 0:
            return AffMatPoly.zero(self.rows, self.cols)
        w = np.arange(1, self.degree + 1)[:, None, None]
        return AffMatPoly(self.rows, self.cols, w * self.const[1:],
                          {v: w * T[1:] for v, T in self.terms.items()})

    def at(self, s: float) -> "AffMatPoly":
        """Evaluate the parameter at s; the result is a degree-0 expression."""
        pw = s ** np.arange(self.degree + 1)
        const = np.tensordot(pw, self.const, axes=(0, 0))[None]
        return AffMatPoly(self.rows, self.cols, const,
                          {v: np.tensordot(pw, T, axes=(0, 0))[None]
                           for v, T in self.terms.items()})

    def trace(self) -> "AffMatPoly":
        tr = np.trace(self.const, axis1=1, axis2=2)[:, None, None]
        return AffMatPoly(1, 1, tr,
                          {v: np.trace(T, axis1=1, axis2=2)[:, None, None]
                           for v, T in self.terms.items()})

    def value(self, x: np.ndarray) -> PolyMat:
        """Substitute a solution vector; returns the numeric polynomial."""
        out = self.const.copy()
        for v, T in self.terms.items():
            out += x[v] * T
        return PolyMat(out, symmetric=False)


def blockmat(rows: list[list[AffMatPoly]]) -> AffMatPoly:
    """Assemble a block matrix of expressions (numpy.block analogue)."""
    degree = max(e.degree for r in rows for e in r)
    rows = [[e._pad(degree) for e in r] for r in rows]
    row_h = [r[0].rows for r in rows]
    col_w = [e.cols for e in rows[0]]
    R, C = sum(row_h), sum(col_w)
    const = np.zeros((degree + 1, R, C))
    terms: dict[int, np.ndarray] = {}
    r0 = 0
    for r, h in zip(rows, row_h):
        c0 = 0
        for e, w in zip(r, col_w):
            if e.rows != h or e.cols != w:
                raise EncodingError("inconsistent block sizes")
            const[:, r0:r0 + h, c0:c0 + w] += e.const
            for v, T in e.terms.items():
                if v not in terms:
                    terms[v] = np.zeros((degree + 1, R, C))
                terms[v][:, r0:r0 + h, c0:c0 + w] += T
            c0 += w
        r0 += h
    return AffMatPoly(R, C, const, terms)


@dataclass
class ParamLmi:
    """``expr(tau) >= 0`` required on [a, b]; ``strict`` marks the condition
    as margin-carrying (it then participates in the max-margin decision)."""

    expr: AffMatPoly
    a: float
    b: float
    strict: bool = True

    def __post_init__(self):
        if not self.b >= self.a:
            raise InputError("interval must satisfy b >= a")
        if self.expr.rows != self.expr.cols:
            raise EncodingError("LMI expression must be square")


# ---------------------------------------------------------------------------
# variable handles
# ---------------------------------------------------------------------------

@dataclass
class SymPolyVar:
    """Handle of a symmetric matrix-polynomial unknown; structurally zero
    entries carry index -1."""

    idx: np.ndarray  # (deg+1, n, n) variable indices, symmetric layout

    def extract(self, x: np.ndarray) -> PolyMat:
        vals = np.where(self.idx >= 0, x[np.maximum(self.idx, 0)], 0.0)
        return PolyMat(vals, symmetric=True)


@dataclass
class MatPolyVar:
    """Handle of a rectangular matrix-polynomial unknown; structurally zero
    entries carry index -1."""

    idx: np.ndarray  # (deg+1, r, c)

    def extract(self, x: np.ndarray) -> PolyMat:
        vals = np.where(self.idx >= 0, x[np.maximum(self.idx, 0)], 0.0)
        return PolyMat(vals, symmetric=False)


# ---------------------------------------------------------------------------
# problem builder
# ---------------------------------------------------------------------------

class SdpBuilder:
    """Accumulates LMI blocks, equalities and unknowns for one SDP."""

    def __init__(self):
        self.nvars = 0
        self.blocks: list[LmiBlock] = []
        self.eq_rows: list[dict] = []
        self.eq_rhs: list[float] = []
        self._margin: int | None = None
        self._gram_diag: list[int] = []

    # -- variables -------------------------------------------------------
    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        return v

    def margin(self) -> int:
        if self._margin is None:
            self._margin = self.new_var()
        return self._margin

    def sym_poly_var(self, n: int, degree: int) -> tuple[AffMatPoly, SymPolyVar]:
        idx = np.zeros((degree + 1, n, n), dtype=int)
        terms: dict[int, np.ndarray] = {}
        for k in range(degree + 1):
            for p in range(n):
                for q in range(p, n):
                    v = self.new_var()
                    idx[k, p, q] = idx[k, q, p] = v
                    T = np.zeros((degree + 1, n, n))
                    T[k, p, q] = 1.0
                    if p != q:
                        T[k, q, p] = 1.0
                    terms[v] = T
        return AffMatPoly(n, n, np.zeros((degree + 1, n, n)), terms), SymPolyVar(idx)

    def mat_poly_var(self, r: int, c: int, degree: int,
                     zero_cols: tuple[int, ...] = ()) -> tuple[AffMatPoly, MatPolyVar]:
        """Rectangular unknown; columns listed in ``zero_cols`` are fixed to
        zero structurally (no variable is allocated for them)."""
        idx = np.full((degree + 1, r, c), -1, dtype=int)
        terms: dict[int, np.ndarray] = {}
        for k in range(degree + 1):
            for p in range(r):
                for q in range(c):
                    if q in zero_cols:
                        continue
                    v = self.new_var()
                    idx[k, p, q] = v
                    T = np.zeros((degree + 1, r, c))
                    T[k, p, q] = 1.0
                    terms[v] = T
        return AffMatPoly(r, c, np.zeros((degree + 1, r, c)), terms), MatPolyVar(idx)

    def sym_var_with_zero_block(self, n: int, m: int) -> tuple[AffMatPoly, SymPolyVar]:
        """Symmetric (n+m) unknown whose upper-right n x m block (and hence
        the lower-left m x n block) is structurally zero."""
        N = n + m
        idx = np.full((1, N, N), -1, dtype=int)
        terms: dict[int, np.ndarray] = {}
        for p in range(N):
            for q in range(p, N):
                if p < n <= q:
                    continue
                v = self.new_var()
                idx[0, p, q] = idx[0, q, p] = v
                T = np.zeros((1, N, N))
                T[0, p, q] = 1.0
                if p != q:
                    T[0, q, p] = 1.0
                terms[v] = T
        return AffMatPoly(N, N, np.zeros((1, N, N)), terms), SymPolyVar(idx)

    # -- constraints -----------------------------------------------------
    def _with_margin(self, expr: AffMatPoly) -> AffMatPoly:
        t = self.margin()
        n = expr.rows
        T = np.zeros((expr.degree + 1, n, n))
        T[0] = -np.eye(n)
        bump = AffMatPoly(n, n, np.zeros_like(T), {t: T})
        return expr + bump

    def margin_profile(self, n: int, weight: list[float]) -> AffMatPoly:
        """The term t * w(tau) * I for a polynomial weight w (coefficient
        list).  Used when a condition's admissible strictness shrinks with
        the parameter, so that a uniform margin would force the decision
        variable to the scale of the smallest admissible slack."""
        t = self.margin()
        T = np.zeros((len(weight), n, n))
        for k, w in enumerate(weight):
            T[k] = w * np.eye(n)
        return AffMatPoly(n, n, np.zeros_like(T), {t: T})

    def require_psd(self, expr: AffMatPoly, margin: bool = False) -> None:
        """Add ``expr >= 0`` as a plain LMI block (degree-0 expressions only)."""
        expr = expr.trim()
        if expr.degree != 0:
            raise EncodingError("require_psd needs a parameter-free expression")
        if margin:
            expr = self._with_margin(expr)
        F0 = sym(expr.const[0])
        terms = {v: sym(T[0]) for v, T in expr.terms.items()}
        self.blocks.append(LmiBlock.from_terms(F0, terms))

    def require_neg(self, expr: AffMatPoly, margin: bool = True) -> None:
        """Add ``expr <= 0``."""
        self.require_psd(-expr, margin=margin)

    def require_poly_psd(self, expr: AffMatPoly, a: float, b: float,
                         margin: bool = False, mult_degree: int | None = None) -> None:
        """Add ``expr(tau) >= 0 for tau in [a, b]`` via the SOS encoding."""
        expr = expr.trim()
        if expr.degree == 0:
            self.require_psd(expr, margin=margin)
            return
        sos_encode(self, ParamLmi(expr, a, b, strict=margin), mult_degree)

    def require_poly_neg(self, expr: AffMatPoly, a: float, b: float,
                         margin: bool = True, mult_degree: int | None = None) -> None:
        self.require_poly_psd(-expr, a, b, margin=margin, mult_degree=mult_degree)

    def add_equality(self, coeffs: dict, rhs: float) -> None:
        if coeffs:
            self.eq_rows.append(dict(coeffs))
            self.eq_rhs.append(rhs)
        elif abs(rhs) > 0:
            raise EncodingError("contradictory constant equality in encoding")

    def bound_entries(self, handle: MatPolyVar, cap: float = ENTRY_CAP) -> None:
        """|u| <= cap for every allocated entry of a rectangular unknown."""
        for v in np.unique(handle.idx):
            if v < 0:
                continue
            self.blocks.append(LmiBlock.from_terms(
                np.array([[cap]]), {int(v): np.array([[-1.0]])}))
            self.blocks.append(LmiBlock.from_terms(
                np.array([[cap]]), {int(v): np.array([[1.0]])}))

    def cap_trace(self, expr: AffMatPoly, cap: float) -> None:
        """trace(expr) <= cap as a 1x1 block (expr must be degree 0)."""
        self.require_psd(AffMatPoly.constant(np.array([[cap]])) - expr.trace())

    def fix_trace(self, expr: AffMatPoly, value: float) -> None:
        """trace(expr) = value as an equality (expr must be degree 0).

        This is the scale normalization of the certificate problems: the
        stability conditions are jointly homogeneous in the witness, so
        pinning the anchor trace removes the scaling ray and keeps every
        variable O(1) even arbitrarily close to a feasibility boundary.
        """
        tr = expr.trim().trace()
        if tr.degree != 0:
            raise EncodingError("fix_trace needs a parameter-free expression")
        row = {v: float(T[0, 0, 0]) for v, T in tr.terms.items()}
        self.add_equality(row, value - float(tr.const[0, 0, 0]))

    def gram_block(self, size: int) -> tuple[np.ndarray, list[int]]:
        """Allocate a PSD Gram matrix; returns (index matrix, var list)."""
        idx = np.zeros((size, size), dtype=int)
        new = []
        terms = {}
        for p in range(size):
            for q in range(p, size):
                v = self.new_var()
                new.append(v)
                idx[p, q] = idx[q, p] = v
                T = np.zeros((size, size))
                T[p, q] = 1.0
                if p != q:
                    T[q, p] = 1.0
                terms[v] = T
                if p == q:
                    self._gram_diag.append(v)
        self.blocks.append(LmiBlock.from_terms(np.zeros((size, size)), terms))
        return idx, new

    # -- assembly ----------------------------------------------------------
    def finalize(self) -> SdpProblem:
        if self._margin is not None:
            # boundedness cap t <= 1
            self.blocks.append(LmiBlock.from_terms(
                np.array([[1.0]]), {self._margin: np.array([[-1.0]])}))
        if self._gram_diag:
            self.blocks.append(LmiBlock.from_terms(
                np.array([[GRAM_TRACE_CAP]]),
                {v: np.array([[-1.0]]) for v in self._gram_diag}))
        p = len(self.eq_rows)
        eq_A = eq_b = None
        if p:
            eq_A = np.zeros((p, self.nvars))
            for r, row in enumerate(self.eq_rows):
                for v, cval in row.items():
                    eq_A[r, v] = cval
            eq_b = np.asarray(self.eq_rhs, dtype=float)
        return SdpProblem(nvars=self.nvars, blocks=self.blocks,
                          eq_A=eq_A, eq_b=eq_b, margin_var=self._margin)


# ---------------------------------------------------------------------------
# sum-of-squares encoding
# ---------------------------------------------------------------------------

def _even_ceil(d: int) -> int:
    return d if d % 2 == 0 else d + 1


def sos_encode(builder: SdpBuilder, lmi: ParamLmi,
               mult_degree: int | None = None) -> None:
    """Encode ``lmi.expr(tau) >= 0 on [a, b]`` into ``builder``.

    The certificate is M(tau) = S0(tau) + (tau-a)(b-tau) S1(tau) with S0, S1
    Gram-represented PSD matrix polynomials; deg S0 = deg M rounded up to
    even, deg S1 = deg S0 - 2 unless ``mult_degree`` asks for more.
    """
    expr = lmi.expr.trim()
    if lmi.strict:
        expr = builder._with_margin(expr)
    n = expr.rows
    dM = expr.degree
    if dM == 0:
        builder.require_psd(expr)
        return
    if mult_degree is None:
        d1 = _even_ceil(dM) - 2
    else:
        if mult_degree < 0:
            raise EncodingError("mult_degree must be >= 0")
        d1 = _even_ceil(mult_degree)
    d0 = d1 + 2
    if d0 < dM:
        raise EncodingError(
            f"multiplier degree {d1} cannot reconcile condition degree {dM}")

    a, b = lmi.a, lmi.b
    m0, m1 = d0 // 2, d1 // 2
    G0, _ = builder.gram_block(n * (m0 + 1))
    G1, _ = builder.gram_block(n * (m1 + 1))

    # Gram-side coefficient of tau^k, entry (p, q) with p <= q, as {var: coef}.
    gram_side: list[list[dict]] = [
        [dict() for _ in range(n * (n + 1) // 2)] for _ in range(d0 + 1)]

    def entry_slot(p: int, q: int) -> int:
        # upper-triangle linear index, p <= q
        return p * n - p * (p - 1) // 2 + (q - p)

    def accumulate(G: np.ndarray, m: int, weights: list[tuple[int, float]]) -> None:
        # Gram var G[P, Q] with P = i*n + r, Q = j*n + c contributes to the
        # tau^(i+j) coefficient at entry (r, c), and (for P != Q) through its
        # mirror G[Q, P] at entry (c, r); ``weights`` lists (level shift,
        # factor) pairs of the interval multiplier polynomial.
        size = n * (m + 1)
        for P in range(size):
            i, r = divmod(P, n)
            for Q in range(P, size):
                j, c = divmod(Q, n)
                v = int(G[P, Q])
                base = i + j
                contrib = [(r, c, 1.0)]
                if P != Q:
                    contrib.append((c, r, 1.0))
                for (rr, cc, w) in contrib:
                    if rr > cc:
                        continue  # track upper triangle only (symmetric)
                    slot = entry_slot(rr, cc)
                    for shift, wmul in weights:
                        d = gram_side[base + shift][slot]
                        d[v] = d.get(v, 0.0) + w * wmul

    accumulate(G0, m0, [(0, 1.0)])
    # q(tau) = (tau-a)(b-tau) = -tau^2 + (a+b) tau - a*b
    accumulate(G1, m1, [(0, -a * b), (1, a + b), (2, -1.0)])

    expr = expr._pad(d0)
    if expr.degree > d0:
        raise EncodingError("internal degree bookkeeping error")
    for k in range(d0 + 1):
        for p in range(n):
            for q in range(p, n):
                row: dict[int, float] = {}
                for v, T in expr.terms.items():
                    cval = 0.5 * (T[k, p, q] + T[k, q, p])
                    if cval != 0.0:
                        row[v] = row.get(v, 0.0) + cval
                for v, cval in gram_side[k][entry_slot(p, q)].items():
                    if cval != 0.0:
                        row[v] = row.get(v, 0.0) - cval
                rhs = -0.5 * (expr.const[k, p, q] + expr.const[k, q, p])
                builder.add_equality(row, rhs)


# ---------------------------------------------------------------------------
# piecewise-linear discretization
# ---------------------------------------------------------------------------

@dataclass
class PwlMat:
    """Continuous piecewise-linear symmetric matrix function on [a, b]."""

    breaks: np.ndarray          # (N+1,) increasing
    values: np.ndarray          # (N+1, n, n)

    @property
    def segments(self) -> int:
        return len(self.breaks) - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def _locate(self, s: float) -> tuple[int, float]:
        k = int(np.clip(np.searchsorted(self.breaks, s, side="right") - 1,
                        0, self.segments - 1))
        h = self.breaks[k + 1] - self.breaks[k]
        return k, (s - self.breaks[k]) / h

    def eval(self, s: float) -> np.ndarray:
        k, w = self._locate(s)
        return (1 - w) * self.values[k] + w * self.values[k + 1]

    def derivative_at(self, s: float) -> np.ndarray:
        k, _ = self._locate(s)
        h = self.breaks[k + 1] - self.breaks[k]
        return (self.values[k + 1] - self.values[k]) / h

    def to_json(self) -> dict:
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "PwlMat":
        return cls(np.asarray(d["breaks"], dtype=float),
                   np.asarray(d["values"], dtype=float))


class PwlUnknown:
    """Piecewise-linear symmetric matrix unknown with N+1 breakpoint values."""

    def __init__(self, builder: SdpBuilder, n: int, segments: int,
                 a: float = 0.0, b: float = 1.0):
        if segments < 1:
            raise InputError("need at least one segment")
        self.builder = builder
        self.n = n
        self.a, self.b = a, b
        self.breaks = np.linspace(a, b, segments + 1)
        self._exprs = []
        self._handles = []
        for _ in range(segments + 1):
            e, h = builder.sym_poly_var(n, 0)
            self._exprs.append(e)
            self._handles.append(h)

    @property
    def segments(self) -> int:
        return len(self.breaks) - 1

    def value(self, k: int) -> AffMatPoly:
        return self._exprs[k]

    def slope(self, k: int) -> AffMatPoly:
        h = self.breaks[k + 1] - self.breaks[k]
        return (self._exprs[k + 1] - self._exprs[k]).scale(1.0 / h)

    def at(self, s: float) -> AffMatPoly:
        """Value at an arbitrary point: affine interpolation of unknowns."""
        k = int(np.clip(np.searchsorted(self.breaks, s, side="right") - 1,
                        0, self.segments - 1))
        h = self.breaks[k + 1] - self.breaks[k]
        w = (s - self.breaks[k]) / h
        return self._exprs[k].scale(1 - w) + self._exprs[k + 1].scale(w)

    def knots_within(self, lo: float, hi: float) -> list[float]:
        """Breakpoints inside [lo, hi] plus the interval ends themselves."""
        pts = [lo] + [float(t) for t in self.breaks if lo < t < hi] + [hi]
        return pts

    def extract(self, x: np.ndarray) -> PwlMat:
        vals = np.stack([h.extract(x).coeffs[0] for h in self._handles])
        return PwlMat(self.breaks.copy(), vals)


def discretize_encode(builder: SdpBuilder, pwl: PwlUnknown,
                      cond: Callable[[AffMatPoly, AffMatPoly], AffMatPoly],
                      margin: bool = True) -> None:
    """Impose ``cond(value, slope) <= 0`` at both endpoints of every segment.

    ``cond`` must return a parameter-free expression; any residual
    parameter dependence means the condition is outside what endpoint
    checking covers and is rejected.
    """
    for k in range(pwl.segments):
        s = pwl.slope(k)
        for e in (k, k + 1):
            expr = cond(pwl.value(e), s).trim()
            if expr.degree != 0:
                raise EncodingError(
                    "discretization supports only conditions whose parameter "
                    "dependence enters through the unknown and its derivative")
            builder.require_neg(expr, margin=margin)


# ---------------------------------------------------------------------------
# pointwise verification
# ---------------------------------------------------------------------------

def verify_pointwise(f: Callable[[float], np.ndarray], a: float, b: float,
                     grid: int = DEFAULT_GRID,
                     tol: float = DEFAULT_VERIFY_TOL) -> tuple[float, float]:
    """Minimum of lambda_min(f(tau)) over a uniform grid of [a, b].

    Returns (min residual, argmin tau); the caller passes iff the residual
    is >= -tol.  This check is independent of any encoder or solver.
    """
    if grid < 2:
        raise InputError("grid must be >= 2")
    taus = np.linspace(a, b, grid)
    worst, arg = np.inf, a
    for t in taus:
        lam = min_eig_sym(sym(np.asarray(f(t), dtype=float)))
        if lam < worst:
            worst, arg = lam, float(t)
    return float(worst), arg
