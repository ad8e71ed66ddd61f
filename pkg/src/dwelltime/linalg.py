"""Dense real linear algebra used throughout the package.

Thin, validated wrappers around LAPACK-backed routines (matrix exponential
by scaling-and-squaring with a degree-13 Pade approximant, eigenvalue
moduli by Hessenberg + shifted QR) plus a fixed-step RK4 integrator for
state-transition matrices of time-varying closed loops.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, InputError, NumericalFailureError

# Relative asymmetry tolerated by min_eig_sym before the input is rejected.
SYM_TOL = 1e-10


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float array and reject non-finite entries."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


def as_square(M, name: str = "matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def expm(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{M t}.

    Scaling-and-squaring with the degree-13 Pade approximant (squaring
    threshold ||Mt||_1 <= 5.37), as implemented by LAPACK-backed
    ``scipy.linalg.expm``.

    Parameters
    ----------
    M : array_like, square
    t : float

    Returns
    -------
    ndarray of the same shape as M.
    """
    A = as_square(M, "M")
    if not np.isfinite(t):
        raise InputError("t must be finite")
    return sla.expm(A * t)


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a square matrix.

    Uses Hessenberg reduction followed by the shifted QR iteration
    (LAPACK dhseqr).  A failure of the QR iteration to converge is
    reported as :class:`NumericalFailureError`.
    """
    A = as_square(M, "M")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # QR iteration cap exceeded
        raise NumericalFailureError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    The input must be symmetric within ``SYM_TOL * ||M||``; larger
    asymmetry raises :class:`InputError` rather than being silently
    symmetrized.
    """
    A = as_square(M, "M")
    scale = float(np.linalg.norm(A))
    if float(np.linalg.norm(A - A.T)) > SYM_TOL * max(scale, 1.0):
        raise InputError("matrix is not symmetric within tolerance")
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


def transition_matrix(
    A,
    Bc,
    gain: Callable[[float], np.ndarray] | None,
    t_end: float,
    steps: int,
) -> np.ndarray:
    """State-transition matrix Phi(t_end) of dPhi/dtau = [A + Bc*K(tau)] Phi.

    Classical fourth-order Runge-Kutta with the fixed step t_end/steps.
    With ``gain`` equal to None (or identically zero) this reduces to
    ``expm(A, t_end)`` up to O(h^4).

    Parameters
    ----------
    A : array_like (n, n)
    Bc : array_like (n, m) or None when gain is None
    gain : callable tau -> (m, n) array, defined on [0, t_end]
    t_end : float, > 0
    steps : int, >= 1
    """
    A = as_square(A, "A")
    if not (np.isfinite(t_end) and t_end > 0):
        raise InputError("t_end must be positive and finite")
    if steps < 1:
        raise InputError("steps must be >= 1")
    n = A.shape[0]
    if gain is None:
        rhs = lambda tau: A  # noqa: E731
    else:
        B = as_matrix(Bc, "Bc")
        if B.shape[0] != n:
            raise DimensionError("Bc row count must match A")

        def rhs(tau: float) -> np.ndarray:
            K = np.asarray(gain(tau), dtype=float)
            if not np.all(np.isfinite(K)):
                raise InputError(f"gain({tau}) contains non-finite entries")
            return A + B @ K

    h = t_end / steps
    Phi = np.eye(n)
    for k in range(steps):
        tau = k * h
        M1 = rhs(tau)
        M2 = rhs(tau + 0.5 * h)
        M4 = rhs(tau + h)
        k1 = M1 @ Phi
        k2 = M2 @ (Phi + 0.5 * h * k1)
        k3 = M2 @ (Phi + 0.5 * h * k2)
        k4 = M4 @ (Phi + h * k3)
        Phi = Phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Phi


def sym(M: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T)/2."""
    return 0.5 * (M + M.T)
