"""Closed-form densities of the symplectic eigenvalues and energy formulas.

Normalization constants have no closed form; they are computed once per
parameter set by adaptive quadrature (relative tolerance 1e-8) and cached in
a thread-safe memo.  Unnormalized log densities return -inf on their
algebraic zero sets so rejection samplers can evaluate them anywhere.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import integrate

from .haar import EulerGaussianUnitary
from .symplectic import Bipartition, GaussianPureState, reduced_covariance

QUAD_REL_TOL = 1e-8
QUAD_ABS_FLOOR = 1e-14
SIMPLEX_SLACK = 1e-9


@dataclass(frozen=True)
class EnergyConstraint:
    """Target mean energies of the two subsystems plus an MC shell width."""

    E_A: float
    E_B: float
    shell_width: float = 0.05

    def __post_init__(self):
        if self.shell_width <= 0:
            raise ValueError("shell_width must be positive")

    @property
    def min_energy(self) -> float:
        return min(self.E_A, self.E_B)


DensityKind = Literal[
    "unconstrained", "constrained_1p1", "constrained_2p2",
    "submanifold", "submanifold_energy",
]


@dataclass(frozen=True)
class DensitySpec:
    """Which analytic density to evaluate, with its dimensions and constraint."""

    kind: DensityKind
    n_A: int
    n_B: int
    constraint: Optional[EnergyConstraint] = None

    def __post_init__(self):
        if self.n_A < 1 or self.n_B < 1 or self.n_A > self.n_B:
            raise ValueError("need 1 <= n_A <= n_B")
        if self.kind == "constrained_1p1" and (self.n_A, self.n_B) != (1, 1):
            raise ValueError("constrained_1p1 requires n_A = n_B = 1")
        if self.kind == "constrained_2p2" and (self.n_A, self.n_B) != (2, 2):
            raise ValueError("constrained_2p2 requires n_A = n_B = 2")
        if self.kind.startswith("constrained") and self.constraint is None:
            raise ValueError(f"{self.kind} requires an energy constraint")


def _check_nu(nu: np.ndarray):
    if np.any(nu < 1.0):
        raise ValueError("symplectic eigenvalues must be >= 1")


def log_density_unconstrained(nu, n_A: int, n_B: int) -> float:
    """Unnormalized log of the invariant nu-density for an n_A + n_B split.

    log of prod_{h>k} (nu_h^2 - nu_k^2)^2 * prod_j nu_j^2 (nu_j^2-1)^(n_B-n_A);
    -inf on coincident eigenvalues, and at nu = 1 when n_B > n_A.
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if nu.size != n_A or n_A > n_B:
        raise ValueError("need len(nu) = n_A <= n_B")
    _check_nu(nu)
    sq = nu**2
    total = 0.0
    for h in range(n_A):
        for k in range(h + 1, n_A):
            gap = abs(sq[h] - sq[k])
            if gap == 0.0:
                return -np.inf
            total += 2 * np.log(gap)
    total += 2 * np.sum(np.log(nu))
    if n_B > n_A:
        shifted = sq - 1.0
        if np.any(shifted == 0.0):
            return -np.inf
        total += (n_B - n_A) * np.sum(np.log(shifted))
    return float(total)


def log_density_submanifold(nu, n_A: int, n_B: int) -> float:
    """Unnormalized log nu-density on the parametric-process submanifold.

    log of prod_{h<k} (nu_h - nu_k)^2 * prod_j (nu_j - 1)^(n_B-n_A); -inf on
    the zero set.
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if nu.size != n_A or n_A > n_B:
        raise ValueError("need len(nu) = n_A <= n_B")
    _check_nu(nu)
    total = 0.0
    for h in range(n_A):
        for k in range(h + 1, n_A):
            gap = abs(nu[h] - nu[k])
            if gap == 0.0:
                return -np.inf
            total += 2 * np.log(gap)
    if n_B > n_A:
        shifted = nu - 1.0
        if np.any(shifted == 0.0):
            return -np.inf
        total += (n_B - n_A) * np.sum(np.log(shifted))
    return float(total)


def mean_energy(U: np.ndarray, lam, nu) -> float:
    """Subsystem mean energy from mixing matrix U and weights (lambda, nu).

    (1/2) sum_{h,k} |U_{hk}|^2 lambda_h nu_k, for a balanced bipartition of
    n = 2 * len(nu) modes.
    """
    U = np.asarray(U, dtype=complex)
    lam = np.atleast_1d(np.asarray(getattr(lam, "values", lam), dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    m = nu.size
    if lam.size != m or U.shape != (m, m):
        raise ValueError("U, lambda and nu must share the subsystem dimension")
    return float(0.5 * np.sum(np.abs(U) ** 2 * np.outer(lam, nu)))


def energy_mixing_parameters(g: EulerGaussianUnitary):
    """Effective (U, lambda) under which ``mean_energy`` matches the state energy.

    For a local unitary with Euler factors (U, s, U'), the quadratic mean of
    each squeezed mode grows as cosh(4 s), and the passive factor adjacent to
    the canonical form, U', is the one that mixes the spectrum: conjugating
    sigma_A = S sigma_c,A S^T and tracing kills the outer orthogonal factor.
    Hence tr(sigma_A)/4 = mean_energy(U', cosh(4 s), nu) exactly.
    """
    return g.U_prime, np.cosh(4 * g.s)


def mean_energy_from_state(
    state: GaussianPureState, bipartition: Bipartition
) -> tuple[float, float]:
    """(E_A, E_B) as quarter-traces of the reduced covariance blocks."""
    if bipartition.n_modes != state.n_modes:
        raise ValueError("bipartition does not match the state's mode count")
    e_a = float(np.trace(reduced_covariance(state, bipartition.modes_a)) / 4)
    if bipartition.n_B == 0:
        return e_a, 0.0
    e_b = float(np.trace(reduced_covariance(state, bipartition.modes_b)) / 4)
    return e_a, e_b


def g_2p2(nu1: float, nu2: float, E: float):
    """Unnormalized energy-shell weight for a 2-mode subsystem.

    Proportional to [2E - (nu1+nu2)]^2 / (nu1 nu2 (nu1+nu2)) on
    nu1 + nu2 <= 2E, and 0 outside.  Supports array arguments.
    """
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    _check_nu(nu1)
    _check_nu(nu2)
    total = nu1 + nu2
    bracket = 2.0 * E - total
    val = np.where(bracket > 0, bracket**2 / (nu1 * nu2 * total), 0.0)
    return float(val) if val.ndim == 0 else val


def density_1p1(nu: float, constraint: EnergyConstraint):
    """Closed-form eigenvalue density for 1 + 1 modes at fixed mean energies.

    Uniform, 1 / (min(E_A, E_B) - 1) on [1, min(E_A, E_B)], zero outside.
    """
    top = constraint.min_energy
    if top <= 1.0:
        raise ValueError("min(E_A, E_B) must exceed 1 (empty support)")
    nu = np.asarray(nu, dtype=float)
    val = np.where((nu >= 1.0) & (nu <= top), 1.0 / (top - 1.0), 0.0)
    return float(val) if val.ndim == 0 else val


def _density_2p2_unnormalized(nu1, nu2, constraint: EnergyConstraint):
    total = nu1 + nu2
    support = (
        (nu1 >= 1.0)
        & (nu2 >= 1.0)
        & (total <= 2.0 * constraint.min_energy)
    )
    val = (
        (nu1 - nu2) ** 2
        * (2.0 * constraint.E_A - total) ** 2
        * (2.0 * constraint.E_B - total) ** 2
    )
    return np.where(support, val, 0.0)


class _NormalizationCache:
    """Memo for normalization constants: one computation per key."""

    def __init__(self):
        self._lock = threading.Lock()
        self._values: dict = {}
        self._key_locks: dict = {}

    def get(self, key, compute):
        with self._lock:
            if key in self._values:
                return self._values[key]
            klock = self._key_locks.setdefault(key, threading.Lock())
        with klock:
            with self._lock:
                if key in self._values:
                    return self._values[key]
            value = compute()
            with self._lock:
                self._values[key] = value
            return value


_norm_cache = _NormalizationCache()


def _norm_2p2(constraint: EnergyConstraint) -> float:
    top = 2.0 * constraint.min_energy

    def compute():
        val, _ = integrate.dblquad(
            lambda y, x: _density_2p2_unnormalized(x, y, constraint),
            1.0,
            top - 1.0,
            1.0,
            lambda x: top - x,
            epsabs=QUAD_ABS_FLOOR,
            epsrel=QUAD_REL_TOL,
        )
        return val

    return _norm_cache.get(("2p2", constraint.E_A, constraint.E_B), compute)


def density_2p2(nu1, nu2, constraint: EnergyConstraint):
    """Normalized eigenvalue density for 2 + 2 modes at fixed mean energies.

    Proportional to (nu1-nu2)^2 [2E_A - S]^2 [2E_B - S]^2 with S = nu1+nu2,
    on {nu >= 1, S <= 2 min(E_A, E_B)}.  Supports array arguments.
    """
    if constraint.min_energy <= 1.0:
        raise ValueError("min(E_A, E_B) must exceed 1 (empty support)")
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    _check_nu(nu1)
    _check_nu(nu2)
    val = _density_2p2_unnormalized(nu1, nu2, constraint) / _norm_2p2(constraint)
    return float(val) if val.ndim == 0 else val


def _vandermonde_sq(nu: np.ndarray) -> float:
    out = 1.0
    for h in range(nu.size):
        for k in range(h + 1, nu.size):
            out *= (nu[h] - nu[k]) ** 2
    return out


def _norm_submanifold_energy(m: int, E: float) -> float:
    """Integral of prod (nu_h - nu_k)^2 over {nu >= 1, sum nu = 2E}.

    Taken with respect to Lebesgue measure in the first m - 1 coordinates
    (the last one is eliminated by the energy constraint).
    """
    total = 2.0 * E

    def compute():
        if m == 1:
            return 1.0

        def integrand(*free):
            last = total - sum(free)
            if last < 1.0:
                return 0.0
            return _vandermonde_sq(np.array(free + (last,)))

        # nu_1 + ... + nu_{m-1} <= 2E - 1, each >= 1
        ranges = []
        for i in range(m - 1):
            def make(i=i):
                def rng_fn(*outer):
                    # remaining coordinates (incl. the eliminated one) need >= 1 each
                    return (1.0, total - sum(outer) - (m - 1 - i))
                return rng_fn
            ranges.append(make())
        val, _ = integrate.nquad(
            integrand, ranges, opts={"epsabs": QUAD_ABS_FLOOR, "epsrel": QUAD_REL_TOL}
        )
        return val

    return _norm_cache.get(("subm", m, E), compute)


def density_submanifold_energy(nu, E: float, n: int):
    """Eigenvalue density on the fixed-energy simplex of the submanifold.

    For n total modes in a balanced split (m = n/2 eigenvalues), proportional
    to prod (nu_h - nu_k)^2 on {nu_j >= 1, sum nu_j = 2E}, normalized with
    respect to Lebesgue measure in the first m - 1 coordinates.  For m = 1
    the simplex is a point and the density is the constant 1 at nu = 2E.
    """
    if n % 2 != 0 or n < 2:
        raise ValueError("n must be a positive even number of modes")
    m = n // 2
    if 2.0 * E < m:
        raise ValueError("2E < n/2: the energy simplex is empty")
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if nu.size != m:
        raise ValueError(f"need {m} eigenvalues, got {nu.size}")
    _check_nu(nu)
    if abs(nu.sum() - 2.0 * E) > SIMPLEX_SLACK * max(1.0, 2.0 * E):
        raise ValueError("nu does not lie on the simplex sum(nu) = 2E")
    if m == 1:
        return 1.0
    return _vandermonde_sq(nu) / _norm_submanifold_energy(m, E)
