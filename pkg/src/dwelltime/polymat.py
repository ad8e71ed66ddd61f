"""Univariate polynomials with matrix coefficients.

``PolyMat`` is the common representation of the certificate functions
R(tau) and S(tau) (symmetric coefficients) and of rectangular controller
numerators U_c(tau).  Coefficients are stored in the monomial basis,
coefficient of tau^i at index i.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import DimensionError, InputError

# Symmetry tolerance for coefficients of symmetric-flagged polynomials.
COEFF_SYM_TOL = 1e-12


class PolyMat:
    """Matrix polynomial P(tau) = sum_i coeffs[i] * tau^i.

    Parameters
    ----------
    coeffs : sequence of (r, c) arrays, constant term first
    symmetric : bool
        When True every coefficient must be square and symmetric within
        ``COEFF_SYM_TOL`` (relative); this is the certificate case.
    """

    def __init__(self, coeffs, symmetric: bool = True):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim != 3:
            raise DimensionError("coeffs must be a sequence of matrices")
        if not np.all(np.isfinite(arr)):
            raise InputError("coefficients contain non-finite entries")
        if symmetric:
            if arr.shape[1] != arr.shape[2]:
                raise DimensionError("symmetric PolyMat needs square coefficients")
            scale = max(float(np.max(np.abs(arr))), 1.0)
            if float(np.max(np.abs(arr - arr.transpose(0, 2, 1)))) > COEFF_SYM_TOL * scale:
                raise InputError("coefficients are not symmetric within tolerance")
            arr = 0.5 * (arr + arr.transpose(0, 2, 1))
        self.coeffs = arr
        self.symmetric = bool(symmetric)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def constant(cls, M, symmetric: bool = True) -> "PolyMat":
        return cls([np.asarray(M, dtype=float)], symmetric=symmetric)

    def eval(self, tau: float) -> np.ndarray:
        """Evaluate by Horner's scheme."""
        if not np.isfinite(tau):
            raise InputError("tau must be finite")
        out = self.coeffs[-1].copy()
        for k in range(self.degree - 1, -1, -1):
            out = out * tau + self.coeffs[k]
        return out

    __call__ = eval

    def derivative(self) -> "PolyMat":
        """d/dtau; the power rule applied coefficient-wise."""
        if self.degree == 0:
            return PolyMat([np.zeros(self.shape)], symmetric=self.symmetric)
        d = [i * self.coeffs[i] for i in range(1, self.degree + 1)]
        return PolyMat(d, symmetric=self.symmetric)

    def reparametrize(self, a: float, b: float) -> "PolyMat":
        """Return Q with Q(s) = P(a*s + b), by exact binomial re-expansion.

        With (a, b) = (-1, T) this is the time reversal that maps witnesses
        between the two orientations of the periodic stability conditions.
        """
        d = self.degree
        out = np.zeros_like(self.coeffs)
        for i in range(d + 1):
            Pi = self.coeffs[i]
            for k in range(i + 1):
                out[k] += comb(i, k) * (a ** k) * (b ** (i - k)) * Pi
        return PolyMat(out, symmetric=self.symmetric)

    def __add__(self, other: "PolyMat") -> "PolyMat":
        if self.shape != other.shape:
            raise DimensionError("shape mismatch")
        d = max(self.degree, other.degree)
        out = np.zeros((d + 1,) + self.shape)
        out[: self.degree + 1] += self.coeffs
        out[: other.degree + 1] += other.coeffs
        return PolyMat(out, symmetric=self.symmetric and other.symmetric)

    def __neg__(self) -> "PolyMat":
        return PolyMat(-self.coeffs, symmetric=self.symmetric)

    def __sub__(self, other: "PolyMat") -> "PolyMat":
        return self + (-other)

    def scale(self, alpha: float) -> "PolyMat":
        return PolyMat(alpha * self.coeffs, symmetric=self.symmetric)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "symmetric": self.symmetric,
            "coeffs": self.coeffs.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "PolyMat":
        return cls(d["coeffs"], symmetric=d.get("symmetric", True))

    def __repr__(self) -> str:
        r, c = self.shape
        return f"PolyMat(degree={self.degree}, shape=({r},{c}), symmetric={self.symmetric})"
