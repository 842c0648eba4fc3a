"""Explicit Markov-chain construction behind an infinitely divisible square.

Once ``S G S`` has an M-matrix inverse ``A = c I - B``, the positive vector
``u = (S G S) 𝟙`` satisfies ``A u = 𝟙``, so ``D = diag(1/u)`` makes
``D A D⁻¹`` row-sum positive.  The matrix ``T = D (B / c) D⁻¹`` is then a
strictly substochastic transition matrix, the killed chain it defines is
transient, and its expected-visit-count matrix ``g = (I - T)⁻¹`` reproduces
the covariance through ``c · D (S G S) D⁻¹ = g``.  This module builds that
object, verifies every identity it claims, and exposes the symmetric form
``g̃ = c · D (S G S) D`` together with the reference weights ``μ = u²``
under which the visit kernel is in detailed balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import IdVerdict, Signature, is_id_square
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_covariance,
    as_square_matrix,
    invert,
    spectral_radius,
)

__all__ = [
    "GreenDecomposition",
    "NotInfinitelyDivisibleError",
    "NonPositiveScalingError",
    "NumericalFailureError",
    "SymmetryViolationError",
    "row_sum_scaling",
    "decompose",
    "reconstruct",
    "symmetric_green",
]


class NotInfinitelyDivisibleError(Exception):
    """Decomposition requested for a covariance whose square law is not ID."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"covariance is not infinitely divisible: {witness}")


class NonPositiveScalingError(Exception):
    """A row-sum scaling entry was not strictly positive."""

    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(f"row-sum scaling u[{index}] = {value:.3e} is not positive")


class NumericalFailureError(Exception):
    """A constructed decomposition violated one of its own identities."""


class SymmetryViolationError(Exception):
    """The weighted visit kernel failed detailed balance."""

    def __init__(self, index, gap):
        self.index = index
        self.gap = float(gap)
        super().__init__(
            f"detailed balance violated at {index}: gap {gap:.3e}"
        )


@dataclass(frozen=True)
class GreenDecomposition:
    """Transient killed chain realizing a covariance as a scaled Green matrix.

    Attributes
    ----------
    signature : Signature
        Sign flips applied first; ``Gp = S G S`` is entrywise nonnegative.
    u : ndarray
        Positive scaling ``Gp @ 𝟙``; the conjugation below uses ``D = diag(1/u)``.
    c : float
        Jump rate; ``Gp⁻¹ = c I - B`` with ``B >= 0``.
    T : ndarray
        Substochastic transition matrix ``T_ij = B_ij u_j / (c u_i)``.
    kappa : ndarray
        Per-state killing probabilities ``1 - T @ 𝟙``.
    g : ndarray
        Expected visit counts ``(I - T)⁻¹``; equals ``c D Gp D⁻¹``.
    g_sym : ndarray
        Symmetric form ``c Gp_ij / (u_i u_j)``; density of the visit kernel
        with respect to ``mu_weights``.
    mu_weights : ndarray
        Reference weights ``u²`` satisfying ``g_ij μ_i = g_ji μ_j``.
    """

    signature: Signature
    u: np.ndarray
    c: float
    T: np.ndarray
    kappa: np.ndarray
    g: np.ndarray
    g_sym: np.ndarray
    mu_weights: np.ndarray

    @property
    def n(self) -> int:
        return self.T.shape[0]


def row_sum_scaling(Gp, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Row sums of a nonnegative covariance, checked strictly positive.

    For positive definite nonnegative ``Gp`` this realizes the diagonal
    conjugation that gives ``Gp⁻¹`` strictly positive row sums, because
    ``Gp⁻¹ (Gp 𝟙) = 𝟙``.
    """
    Gp = as_square_matrix(Gp, name="scaled covariance")
    thr = tol.zero_threshold(Gp)
    if Gp.size and Gp.min() < -thr:
        i, j = np.unravel_index(int(np.argmin(Gp)), Gp.shape)
        raise ValueError(
            f"row_sum_scaling expects a nonnegative matrix; entry "
            f"[{i},{j}] = {Gp[i, j]:.3e}"
        )
    u = Gp.sum(axis=1)
    if u.size and u.min() <= thr:
        k = int(np.argmin(u))
        raise NonPositiveScalingError(k, u[k])
    return u


def decompose(
    G,
    tol: Tolerances = DEFAULT_TOL,
    unit_scaling: bool = False,
    c_margin: float = 0.0,
    verdict: IdVerdict | None = None,
) -> GreenDecomposition:
    """Build the killed-chain decomposition of an ID covariance.

    Parameters
    ----------
    G : array_like
        Symmetric positive definite covariance with infinitely divisible
        square.
    unit_scaling : bool
        Force ``u = 𝟙`` (valid only when ``G⁻¹`` is row-sum dominant; then
        row sums of ``T`` may touch 1 while the chain stays transient).
    c_margin : float
        Optional additive slack on the rate ``c`` beyond ``max_i A_ii``.
    verdict : IdVerdict, optional
        Reuse a previously computed verdict instead of re-deciding.

    Raises
    ------
    NotInfinitelyDivisibleError
        When the verdict is negative.
    NumericalFailureError
        When any constructed identity fails its tolerance; nothing is
        clamped silently.
    """
    G = as_covariance(G, tol)
    if verdict is None:
        verdict = is_id_square(G, tol)
    if not verdict.is_id:
        raise NotInfinitelyDivisibleError(verdict.witness)
    if c_margin < 0.0:
        raise ValueError("c_margin must be nonnegative")

    sig = verdict.signature
    n = G.shape[0]
    Gp = sig.conjugate(G)
    _check_flip_invariance(Gp, sig, tol)

    A = invert(Gp, tol)
    A = 0.5 * (A + A.T)
    c = float(A.diagonal().max()) + float(c_margin)
    B = c * np.eye(n) - A

    if unit_scaling:
        u = np.ones(n)
        T = B / c
    else:
        u = row_sum_scaling(Gp, tol)
        T = B * u[None, :] / (c * u[:, None])
    kappa = 1.0 - T.sum(axis=1)
    g = invert(np.eye(n) - T, tol)
    g_sym = c * Gp / np.outer(u, u)
    mu = u**2

    dec = GreenDecomposition(
        signature=sig,
        u=u,
        c=c,
        T=T,
        kappa=kappa,
        g=g,
        g_sym=g_sym,
        mu_weights=mu,
    )
    _validate(dec, G, Gp, tol, unit_scaling)
    return dec


def _check_flip_invariance(Gp, sig: Signature, tol: Tolerances) -> None:
    """Cross-component entries of ``Gp`` must vanish, so that the free
    per-component sign flips cannot change ``Gp``."""
    if len(sig.components) <= 1:
        return
    n = Gp.shape[0]
    comp_id = np.empty(n, dtype=int)
    for k, comp in enumerate(sig.components):
        comp_id[list(comp)] = k
    cross = comp_id[:, None] != comp_id[None, :]
    if cross.any():
        worst = float(np.abs(Gp[cross]).max())
        if worst > n * tol.zero_threshold(Gp):
            raise NumericalFailureError(
                "cross-component covariance entries reach "
                f"{worst:.3e}; per-component sign flips would matter"
            )


def _validate(dec: GreenDecomposition, G, Gp, tol: Tolerances, unit_scaling: bool):
    thr = tol.zero_threshold(dec.T)
    resid_tol = 1e-10 * max(1.0, float(np.abs(dec.g).max()))

    if dec.T.size and dec.T.min() < -thr:
        raise NumericalFailureError(f"negative transition entry {dec.T.min():.3e}")
    if unit_scaling:
        if dec.kappa.min() < -thr:
            raise NumericalFailureError("row sums of T exceed 1")
        if dec.kappa.max() <= thr:
            raise NumericalFailureError("no killing anywhere: chain not transient")
        sr = spectral_radius(dec.T)
        if sr.upper >= 1.0:
            raise NumericalFailureError(
                f"cannot certify transience: rho(T) in [{sr.lower:.6f}, {sr.upper:.6f}]"
            )
    else:
        if dec.kappa.min() <= tol.eps_zero:
            raise NumericalFailureError("killing vector not strictly positive")
    if dec.kappa.max() > 1.0 + thr:
        raise NumericalFailureError("killing probability exceeds 1")

    n = dec.n
    eye = np.eye(n)
    if float(np.abs((eye - dec.T) @ dec.g - eye).max()) > resid_tol:
        raise NumericalFailureError("(I - T) g deviates from the identity")

    scaled = dec.c * Gp * dec.u[None, :] / dec.u[:, None]
    if float(np.abs(scaled - dec.g).max()) > resid_tol:
        raise NumericalFailureError("c D Gp D^-1 does not match g")

    gap = np.abs(dec.g_sym - dec.g_sym.T)
    if float(gap.max()) > tol.sym_tol * max(1.0, float(np.abs(dec.g_sym).max())):
        raise NumericalFailureError("symmetric visit kernel is not symmetric")

    rel = float(np.abs(reconstruct(dec) - G).max()) / max(
        1.0, float(np.abs(G).max())
    )
    if rel > 1e-9:
        raise NumericalFailureError(f"reconstruction error {rel:.3e}")


def reconstruct(dec: GreenDecomposition) -> np.ndarray:
    """Invert the decomposition: ``S diag(u) g diag(1/u) S / c``."""
    outer = dec.u[:, None] / dec.u[None, :]
    return dec.signature.conjugate(outer * dec.g) / dec.c


def symmetric_green(dec: GreenDecomposition, tol: Tolerances = DEFAULT_TOL):
    """Symmetric density of the visit kernel and its reference weights.

    Returns ``(g_sym, mu)`` with ``g_sym_ij = g_ij / mu_j`` symmetric, i.e.
    the detailed-balance identity ``g_ij μ_i = g_ji μ_j`` holds within
    tolerance.

    Raises
    ------
    SymmetryViolationError
        When detailed balance fails, which signals that the original input
        was not a symmetric covariance.
    """
    mu = dec.mu_weights
    g_sym = dec.g / mu[None, :]
    gap = np.abs(g_sym - g_sym.T)
    scale = max(1.0, float(np.abs(g_sym).max()))
    if float(gap.max()) > tol.sym_tol * scale:
        index = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise SymmetryViolationError(tuple(int(v) for v in index), gap[index])
    return g_sym, mu
