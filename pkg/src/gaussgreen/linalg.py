"""Dense linear algebra kernel with explicit tolerance semantics.

Matrices are plain float64 ``numpy.ndarray`` squares.  Every sign decision
made downstream (nonnegativity, nonpositive off-diagonals, row-sum signs)
is three-valued: entries inside the zero band of a :class:`Tolerances`
instance count as zero, everything outside keeps its sign.  The band is
scaled by the magnitude of the matrix under test, so the default behaves
like ``1e-10 * max(1, |A|_max)``.

Positive definiteness is certified by an unblocked Cholesky factorization
with a pivot floor; general inversion goes through partially pivoted LU so
that ill-signed inverses of conjugated matrices do not sneak through a
symmetric-only path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "NotPositiveDefiniteError",
    "SingularMatrixError",
    "NoConvergenceError",
    "SpectralRadius",
    "NonnegCheck",
    "as_square_matrix",
    "as_covariance",
    "cholesky",
    "invert",
    "spectral_radius",
    "is_nonneg",
]


class NotPositiveDefiniteError(Exception):
    """Cholesky pivot at ``pivot_index`` fell below the pivot floor."""

    def __init__(self, pivot_index, pivot_value):
        self.pivot_index = int(pivot_index)
        self.pivot_value = float(pivot_value)
        super().__init__(
            f"matrix is not positive definite: pivot {pivot_index} is "
            f"{pivot_value:.3e}"
        )


class SingularMatrixError(Exception):
    """LU elimination met a pivot below the floor at ``index``."""

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"matrix is singular at pivot {index}")


class NoConvergenceError(Exception):
    """Power iteration did not converge; ``gershgorin`` stays a valid bound."""

    def __init__(self, iterations, gershgorin):
        self.iterations = int(iterations)
        self.gershgorin = float(gershgorin)
        super().__init__(
            f"power iteration did not converge in {iterations} iterations"
        )


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by all sign and definiteness decisions.

    Attributes
    ----------
    eps_zero : float
        Relative zero band; an entry of a matrix ``M`` counts as zero when
        its magnitude is at most ``eps_zero * max(1, |M|_max)``.
    eps_psd : float
        Pivot floor for Cholesky and LU elimination.
    sym_tol : float
        Slack allowed between ``M[i, j]`` and ``M[j, i]`` for matrices
        declared symmetric.
    """

    eps_zero: float = 1e-10
    eps_psd: float = 1e-12
    sym_tol: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.eps_zero < 1.0):
            raise ValueError("eps_zero must lie in (0, 1)")
        if self.eps_psd <= 0.0 or self.sym_tol <= 0.0:
            raise ValueError("eps_psd and sym_tol must be positive")

    def zero_threshold(self, M) -> float:
        """Absolute zero band for entries of ``M``."""
        M = np.asarray(M, dtype=float)
        scale = float(np.abs(M).max()) if M.size else 0.0
        return self.eps_zero * max(1.0, scale)

    def scaled(self, factor: float) -> "Tolerances":
        """Copy with the zero band widened (or narrowed) by ``factor``."""
        return Tolerances(
            eps_zero=min(self.eps_zero * factor, 0.5),
            eps_psd=self.eps_psd,
            sym_tol=self.sym_tol,
        )


DEFAULT_TOL = Tolerances()


class NonnegCheck(NamedTuple):
    """Outcome of an entrywise nonnegativity test."""

    ok: bool
    min_value: float
    index: tuple[int, int]


class SpectralRadius(NamedTuple):
    """Spectral-radius estimate with a certified enclosure.

    ``lower <= rho <= upper`` holds rigorously for entrywise-nonnegative
    input (the bounds are min/max ratios of one positive iterate, capped by
    the Gershgorin row-sum bound); ``estimate`` is the final Rayleigh
    quotient of the iteration.
    """

    estimate: float
    lower: float
    upper: float
    gershgorin: float
    iterations: int


def as_square_matrix(M, name="matrix") -> np.ndarray:
    """Validate and return ``M`` as a finite square float64 array."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if A.size and not np.isfinite(A).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def as_covariance(G, tol: Tolerances = DEFAULT_TOL, name="covariance") -> np.ndarray:
    """Validate ``G`` as a square matrix that is symmetric within ``sym_tol``."""
    A = as_square_matrix(G, name=name)
    if A.size:
        gap = np.abs(A - A.T)
        scale = np.maximum(1.0, np.abs(A))
        if (gap > tol.sym_tol * scale).any():
            i, j = np.unravel_index(np.argmax(gap / scale), A.shape)
            raise ValueError(
                f"{name} is not symmetric: |{name}[{i},{j}] - {name}[{j},{i}]|"
                f" = {gap[i, j]:.3e}"
            )
    return A


def cholesky(G, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == G``; certifies definiteness.

    Parameters
    ----------
    G : array_like
        Symmetric matrix (within ``tol.sym_tol``).
    tol : Tolerances
        ``eps_psd`` is the pivot floor.

    Raises
    ------
    NotPositiveDefiniteError
        If a pivot is at most ``eps_psd``; the failing column index is the
        first leading principal minor that is not positive.
    """
    A = as_covariance(G, tol)
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= tol.eps_psd:
            raise NotPositiveDefiniteError(j, pivot)
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def invert(A, tol: Tolerances = DEFAULT_TOL, inv_tol: float | None = None) -> np.ndarray:
    """Inverse through partially pivoted LU with a residual guarantee.

    Parameters
    ----------
    A : array_like
        Square nonsingular matrix.
    inv_tol : float, optional
        Bound demanded on ``|A @ M - I|_max``.  Defaults to ``1e-10`` times
        a one-norm condition estimate.

    Raises
    ------
    SingularMatrixError
        When a U pivot falls below ``eps_psd`` or the residual bound fails.
    """
    A = as_square_matrix(A)
    n = A.shape[0]
    if n == 0:
        return A.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A)
    pivots = np.abs(np.diag(lu))
    k = int(np.argmin(pivots))
    if pivots[k] <= tol.eps_psd:
        raise SingularMatrixError(k)
    M = lu_solve((lu, piv), np.eye(n))
    residual = float(np.abs(A @ M - np.eye(n)).max())
    if inv_tol is None:
        cond = np.linalg.norm(A, 1) * np.linalg.norm(M, 1)
        inv_tol = 1e-10 * max(1.0, cond)
    if residual > inv_tol:
        raise SingularMatrixError(
            k, f"inverse residual {residual:.3e} exceeds {inv_tol:.3e}"
        )
    return M


def spectral_radius(B, max_iter: int = 10_000, tol: float = 1e-12) -> SpectralRadius:
    """Dominant-eigenvalue bracket of ``|B|`` by power iteration.

    Iterates on the entrywise absolute value (for the nonnegative matrices
    used here, that is the matrix itself) until the Rayleigh quotient
    stabilizes to within ``tol`` relative change, then brackets the Perron
    root with min/max ratios of the final strictly positive iterate.

    Raises
    ------
    NoConvergenceError
        Carrying the Gershgorin bound for callers that want to fall back.
    """
    W = np.abs(as_square_matrix(B))
    n = W.shape[0]
    gersh = float(W.sum(axis=1).max()) if n else 0.0
    if n == 0 or gersh == 0.0:
        return SpectralRadius(0.0, 0.0, 0.0, gersh, 0)

    # Iterate with a scaled 16th power: same Perron direction, 16x the
    # spectral gap, so clustered top eigenvalues still converge quickly.
    M = W / gersh
    for _ in range(4):
        M = M @ M
        peak = M.max()
        if peak == 0.0:  # W is nilpotent
            return SpectralRadius(0.0, 0.0, 0.0, gersh, 0)
        M = M / peak

    x = np.full(n, 1.0 / n)
    rayleigh = 0.0
    for it in range(1, max_iter + 1):
        y = M @ x
        norm = y.max()
        if norm == 0.0:
            return SpectralRadius(0.0, 0.0, 0.0, gersh, it)
        x = y / norm
        z = W @ x
        new_rayleigh = float(x @ z) / float(x @ x)
        done = abs(new_rayleigh - rayleigh) <= tol * max(1.0, abs(new_rayleigh))
        rayleigh = new_rayleigh
        if done and it > 1:
            break
    else:
        raise NoConvergenceError(max_iter, gersh)

    xp = np.maximum(x, 1e-250)
    ratios = (W @ xp) / xp
    lower = max(0.0, float(ratios.min()))
    upper = min(float(ratios.max()), gersh)
    estimate = min(max(rayleigh, lower), upper)
    assert estimate <= gersh * (1.0 + 1e-12)
    return SpectralRadius(estimate, lower, upper, gersh, it)


def is_nonneg(A, eps_zero: float) -> NonnegCheck:
    """Entrywise ``A >= -eps_zero`` with the worst offender reported."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return NonnegCheck(True, 0.0, (0, 0))
    flat = int(np.argmin(A))
    index = tuple(int(v) for v in np.unravel_index(flat, A.shape))
    worst = float(A[index])
    return NonnegCheck(worst >= -eps_zero, worst, index)
