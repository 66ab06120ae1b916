"""Haar sampling on U(n) and on homogeneous Gaussian unitaries.

A homogeneous Gaussian unitary factors as passive x single-mode squeezing x
passive.  Its invariant measure is the product of a uniform phase, two
independent Haar unitaries and the squeezing weights lambda_k = cosh(2 s_k)
distributed with the pairwise-repulsion density prod |lambda_h - lambda_k|.
The squeezing directions are noncompact, so lambda is restricted to a cutoff
box [1, cutoff]^n; the cutoff is a run parameter that must dominate any
energy shell studied downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .symplectic import GaussianPureState, symplectic_form

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-10
ENVELOPE_SAFETY = 1.1
ENVELOPE_GRID = 50


class EnvelopeViolationError(RuntimeError):
    """The grid-estimated rejection envelope was exceeded at runtime."""


@dataclass(frozen=True)
class EulerGaussianUnitary:
    """Parameters (theta, U, s, U_prime) of a homogeneous Gaussian unitary."""

    theta: float
    U: np.ndarray
    s: np.ndarray
    U_prime: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        Up = np.asarray(self.U_prime, dtype=complex)
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        n = s.size
        eye = np.eye(n)
        for name, M in (("U", U), ("U_prime", Up)):
            if M.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
            if np.abs(M.conj().T @ M - eye).max() > UNITARITY_TOL:
                raise ValueError(f"{name} is not unitary")
        if np.any(s < 0):
            raise ValueError("squeezing parameters must be nonnegative")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "U_prime", Up)
        object.__setattr__(self, "s", s)

    @property
    def n_modes(self) -> int:
        return self.s.size


@dataclass(frozen=True)
class LambdaVector:
    """Squeezing weights lambda_k = cosh(2 s_k) >= 1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if np.any(values < 1.0):
            raise ValueError("lambda values must be >= 1")
        object.__setattr__(self, "values", values)

    @property
    def s(self) -> np.ndarray:
        return np.arccosh(self.values) / 2


def sample_haar_unitary(n: int, rng: np.random.Generator, size: int | None = None):
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The QR phase ambiguity is fixed so the triangular factor has positive
    real diagonal.  With ``size`` given, returns a stack of shape (size, n, n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = (n, n) if size is None else (size, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., np.newaxis, :]


def vandermonde_repulsion(lam: np.ndarray) -> np.ndarray:
    """Unnormalized density prod_{h<k} |lam_h - lam_k| along the last axis."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for h in range(n):
        for k in range(h + 1, n):
            out = out * np.abs(lam[..., h] - lam[..., k])
    return out


def _repulsion_envelope(n: int, cutoff: float) -> float:
    """Upper bound for the repulsion density on [1, cutoff]^n.

    Located on a coarse grid for n <= 3 (times a safety factor); for larger n
    the exact product bound (cutoff - 1)^(n(n-1)/2) is used instead, which is
    always safe but looser.
    """
    if n == 1:
        return 1.0
    if n > 3:
        return float((cutoff - 1.0) ** (n * (n - 1) / 2))
    axes = [np.linspace(1.0, cutoff, ENVELOPE_GRID)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return float(vandermonde_repulsion(grid).max() * ENVELOPE_SAFETY)


def sample_repulsive(
    n: int,
    lo: float,
    hi: float,
    count: int,
    rng: np.random.Generator,
    envelope: float | None = None,
) -> tuple[np.ndarray, float]:
    """Rejection-sample ``count`` vectors with density prod |x_h - x_k| on [lo, hi]^n.

    Returns (samples, acceptance_rate).  Raises EnvelopeViolationError if a
    proposal exceeds the envelope (the grid underestimated the maximum).
    """
    if hi <= lo:
        raise ValueError("need hi > lo")
    if envelope is None:
        envelope = _repulsion_envelope(n, hi - lo + 1.0)
    out = np.empty((count, n))
    have, proposed = 0, 0
    while have < count:
        batch = min(max(2048, 4 * (count - have)), 4_000_000)
        x = rng.uniform(lo, hi, size=(batch, n))
        dens = vandermonde_repulsion(x)
        if np.any(dens > envelope):
            raise EnvelopeViolationError(
                f"repulsion density {dens.max():.6g} exceeds envelope "
                f"{envelope:.6g}; the envelope grid underestimated the maximum"
            )
        keep = x[rng.uniform(0, envelope, batch) < dens]
        take = min(count - have, keep.shape[0])
        out[have : have + take] = keep[:take]
        have += take
        proposed += batch
    rate = count / proposed
    logger.debug("repulsive sampler acceptance rate %.3f (n=%d)", rate, n)
    return out, rate


def sample_lambda(
    n: int,
    cutoff: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Sample squeezing weights on [1, cutoff]^n with density prod |l_h - l_k|.

    Returns a LambdaVector, or an array of shape (size, n) when ``size`` is
    given.
    """
    if cutoff <= 1.0:
        raise ValueError("cutoff must be > 1")
    count = 1 if size is None else size
    samples, rate = sample_repulsive(n, 1.0, cutoff, count, rng)
    logger.info("sample_lambda acceptance rate %.3f (n=%d, cutoff=%g)", rate, n, cutoff)
    if size is None:
        return LambdaVector(values=samples[0])
    return samples


def sample_homogeneous_gaussian_unitary(
    n: int, cutoff: float, rng: np.random.Generator
) -> EulerGaussianUnitary:
    """Draw from the invariant measure restricted to lambda in [1, cutoff]^n."""
    lam = sample_lambda(n, cutoff, rng)
    return EulerGaussianUnitary(
        theta=float(rng.uniform(0.0, 2 * np.pi)),
        U=sample_haar_unitary(n, rng),
        s=lam.s,
        U_prime=sample_haar_unitary(n, rng),
    )


def passive_symplectic(U: np.ndarray) -> np.ndarray:
    """Orthogonal-symplectic matrix realizing the passive unitary U.

    Under a -> sum_h U_{kh} a_h the quadratures transform as
    x' = Re(U) x - Im(U) p, p' = Im(U) x + Re(U) p; this interleaves those
    blocks into the (x_1, p_1, ...) ordering.
    """
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    S = np.zeros((2 * n, 2 * n))
    S[0::2, 0::2] = U.real
    S[0::2, 1::2] = -U.imag
    S[1::2, 0::2] = U.imag
    S[1::2, 1::2] = U.real
    return S


def squeeze_symplectic(s) -> np.ndarray:
    """Direct sum of per-mode squeezers diag(e^{-2 s_k}, e^{+2 s_k}).

    The sign matches a generator s(a^2 - a^dag^2): x is squeezed, p is
    stretched.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    d = np.empty(2 * s.size)
    d[0::2] = np.exp(-2 * s)
    d[1::2] = np.exp(2 * s)
    return np.diag(d)


def euler_to_symplectic(g: EulerGaussianUnitary) -> np.ndarray:
    """Symplectic matrix of the Euler factorization; the phase theta drops out."""
    return (
        passive_symplectic(g.U)
        @ squeeze_symplectic(g.s)
        @ passive_symplectic(g.U_prime)
    )


def apply_to_vacuum(S: np.ndarray) -> GaussianPureState:
    """State obtained by acting with the symplectic matrix S on the vacuum."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0] // 2
    omega = symplectic_form(n).matrix
    scale = max(1.0, np.abs(S).max() ** 2)
    if np.abs(S @ omega @ S.T - omega).max() > SYMPLECTIC_TOL * scale:
        raise ValueError("matrix is not symplectic")
    return GaussianPureState(n_modes=n, covariance=S @ S.T)
