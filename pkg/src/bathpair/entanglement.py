"""Logarithmic negativity of a two-mode Gaussian state.

Conventions (locked to the rest of the package): phase-space ordering
(Q1, Q2, P1, P2), covariance doubled so the two-oscillator ground state is
the 4x4 identity, and separability threshold 1 for the symplectic
eigenvalues of the partially transposed covariance.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SYMPLECTIC_FORM",
    "symplectic_form",
    "partial_transpose",
    "symplectic_eigenvalues",
    "log_negativity",
    "PairingError",
    "UnphysicalCovarianceError",
]


class PairingError(ValueError):
    """Eigenvalues of i*Sigma*C failed to come in +- pairs (corrupted input)."""


class UnphysicalCovarianceError(ValueError):
    """Covariance violates the uncertainty bound beyond tolerance."""


def _build_sigma() -> np.ndarray:
    s = np.zeros((4, 4))
    s[0, 2] = s[1, 3] = 1.0
    s[2, 0] = s[3, 1] = -1.0
    s.flags.writeable = False
    return s


#: Symplectic form for ordering (Q1, Q2, P1, P2): upper-right +I2, lower-left -I2.
SYMPLECTIC_FORM = _build_sigma()


def symplectic_form() -> np.ndarray:
    """Read-only 4x4 symplectic form matrix (Sigma^T = -Sigma, Sigma^2 = -I)."""
    return SYMPLECTIC_FORM


def _as_matrix(c) -> np.ndarray:
    arr = np.asarray(getattr(c, "entries", c), dtype=float)
    if arr.shape != (4, 4):
        raise ValueError(f"expected a 4x4 covariance, got shape {arr.shape}")
    return arr


def partial_transpose(c):
    """Time-reversal of the second oscillator: flip sign of row/column 4.

    The (4,4) entry flips twice and is unchanged; the map is an involution.
    CovarianceMatrix in gives CovarianceMatrix out, arrays give arrays.
    """
    arr = _as_matrix(c).copy()
    arr[3, :] *= -1.0
    arr[:, 3] *= -1.0
    if hasattr(c, "entries"):
        return type(c)(entries=arr, time_label=c.time_label)
    return arr


def _closed_form_pair(c: np.ndarray):
    """Two-mode closed form: lambda_pm^2 = (Delta +- sqrt(Delta^2 - 4 det C))/2.

    Blocks are taken in the per-mode ordering (Q_i, P_i); used as a
    cross-check of the eigenvalue route, not as the primary path.
    """
    a = c[np.ix_([0, 2], [0, 2])]
    b = c[np.ix_([1, 3], [1, 3])]
    off = c[np.ix_([0, 2], [1, 3])]
    delta = np.linalg.det(a) + np.linalg.det(b) + 2.0 * np.linalg.det(off)
    disc = delta * delta - 4.0 * np.linalg.det(c)
    disc = max(disc, 0.0)
    lam2_minus = 0.5 * (delta - math.sqrt(disc))
    lam2_plus = 0.5 * (delta + math.sqrt(disc))
    return math.sqrt(max(lam2_minus, 0.0)), math.sqrt(max(lam2_plus, 0.0))


def symplectic_eigenvalues(c) -> tuple[float, float]:
    """Symplectic eigenvalues of a (not necessarily physical) symmetric 4x4 C.

    Primary route: the moduli of the eigenvalues of i*Sigma*C, which come in
    two +- pairs; returned sorted ascending.  The two-mode closed form is
    evaluated alongside and a disagreement beyond 1e-8 (relative) raises,
    since that indicates a non-symmetric or otherwise corrupted input.
    """
    arr = _as_matrix(c)
    if np.max(np.abs(arr - arr.T)) > 1e-9 * max(1.0, np.max(np.abs(arr))):
        raise PairingError("covariance is not symmetric")
    ev = np.linalg.eigvals(1j * SYMPLECTIC_FORM @ arr)
    mods = np.sort(np.abs(ev))
    scale = max(1.0, mods[-1])
    if abs(mods[0] - mods[1]) > 1e-8 * scale or abs(mods[2] - mods[3]) > 1e-8 * scale:
        raise PairingError(f"eigenvalue moduli do not pair up: {mods}")
    lam = (0.5 * (mods[0] + mods[1]), 0.5 * (mods[2] + mods[3]))
    cf = _closed_form_pair(arr)
    if abs(cf[0] - lam[0]) > 1e-7 * scale or abs(cf[1] - lam[1]) > 1e-7 * scale:
        raise PairingError(
            f"eigen-decomposition {lam} disagrees with closed form {cf}")
    return lam


def symplectic_eigenvalues_closed_form(c) -> tuple[float, float]:
    """Closed-form (block determinant) symplectic eigenvalues, ascending."""
    return _closed_form_pair(_as_matrix(c))


def log_negativity(c, *, physical_tol: float = 1e-6) -> float:
    """E = -sum_j log2 min(1, lambda_j~) over the partial-transpose spectrum.

    The input must itself be physical (own symplectic eigenvalues
    >= 1 - physical_tol).  Values of lambda~ within 1e-12 of 1 count as
    exactly 1, so roundoff never produces spurious entanglement; E = 0
    if and only if the state is separable.
    """
    arr = _as_matrix(c)
    lam_own = symplectic_eigenvalues(arr)
    if lam_own[0] < 1.0 - physical_tol:
        raise UnphysicalCovarianceError(
            f"input covariance unphysical: min symplectic eigenvalue {lam_own[0]}")
    lam_pt = symplectic_eigenvalues(partial_transpose(arr))
    E = 0.0
    for lam in lam_pt:
        if lam < 1.0 - 1e-12:
            E -= math.log2(lam)
    return E
