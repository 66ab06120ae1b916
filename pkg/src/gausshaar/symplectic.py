"""Covariance-matrix representation of multimode Gaussian pure states.

Conventions used throughout the package:

* quadratures are interleaved, (x_1, p_1, ..., x_n, p_n);
* hbar = 1 and all mode frequencies are 1, so the vacuum covariance is the
  identity and the mean energy of a single mode is tr(sigma_mode) / 4;
* the two-mode squeezed vacuum has x-x correlation -sinh(2r) and p-p
  correlation +sinh(2r).  The opposite global sign is an equally valid
  convention and produces identical spectra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12
PURITY_TOL = 1e-8
SPECTRUM_PAIR_TOL = 1e-8
NU_CLAMP_TOL = 1e-9


class NotAGaussianPureStateError(ValueError):
    """Raised when a covariance matrix fails the pure-state invariants."""


@dataclass(frozen=True)
class SymplecticForm:
    """The standard symplectic form Omega on n modes, built exactly."""

    n_modes: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")


def symplectic_form(n_modes: int) -> SymplecticForm:
    """Block-diagonal Omega with 2x2 blocks [[0, 1], [-1, 0]] per mode."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    matrix = np.kron(np.eye(n_modes), block)
    return SymplecticForm(n_modes=n_modes, matrix=matrix)


@dataclass(frozen=True)
class GaussianPureState:
    """A pure Gaussian state: real covariance matrix plus displacement.

    The covariance of a pure state is a symmetric symplectic matrix; this is
    validated at construction time.
    """

    n_modes: int
    covariance: np.ndarray
    displacement: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise ValueError(
                f"covariance must be {2 * self.n_modes}x{2 * self.n_modes}, "
                f"got {cov.shape}"
            )
        if self.displacement is None:
            disp = np.zeros(2 * self.n_modes)
        else:
            disp = np.asarray(self.displacement, dtype=float)
            if disp.shape != (2 * self.n_modes,):
                raise ValueError("displacement has wrong length")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "displacement", disp)
        self._validate()

    def _validate(self):
        cov = self.covariance
        scale = max(1.0, np.abs(cov).max())
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise NotAGaussianPureStateError("covariance is not symmetric")
        omega = symplectic_form(self.n_modes).matrix
        defect = np.abs(cov @ omega @ cov.T - omega).max()
        if defect > PURITY_TOL * scale**2:
            raise NotAGaussianPureStateError(
                f"covariance is not symplectic (defect {defect:.3e}); "
                "the state is not pure"
            )
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0 or abs(logdet) > PURITY_TOL * 2 * self.n_modes * scale:
            raise NotAGaussianPureStateError("det(covariance) != 1")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise NotAGaussianPureStateError("covariance is not positive definite")


@dataclass(frozen=True)
class Bipartition:
    """A split of the modes into subsystems A and B.

    ``mode_assignment[k]`` is "A" or "B" for global mode index k.  Labels are
    swapped on construction if needed so that n_A <= n_B always holds.
    ``n_B == 0`` is allowed for the trivial bipartition that puts the whole
    system in A (used to extract the full-state symplectic spectrum).
    """

    n_A: int
    n_B: int
    mode_assignment: tuple = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_A < 1 or self.n_B < 0:
            raise ValueError("n_A must be positive and n_B nonnegative")
        if self.mode_assignment is None:
            assignment = ("A",) * self.n_A + ("B",) * self.n_B
        else:
            assignment = tuple(self.mode_assignment)
        if (assignment.count("A"), assignment.count("B")) != (self.n_A, self.n_B):
            raise ValueError("mode_assignment inconsistent with n_A, n_B")
        n_a, n_b = self.n_A, self.n_B
        if n_b and n_a > n_b:
            # canonical orientation: A is never the larger subsystem
            assignment = tuple("A" if x == "B" else "B" for x in assignment)
            n_a, n_b = n_b, n_a
        object.__setattr__(self, "n_A", n_a)
        object.__setattr__(self, "n_B", n_b)
        object.__setattr__(self, "mode_assignment", assignment)

    @property
    def n_modes(self) -> int:
        return self.n_A + self.n_B

    @property
    def modes_a(self) -> np.ndarray:
        return np.array([k for k, x in enumerate(self.mode_assignment) if x == "A"])

    @property
    def modes_b(self) -> np.ndarray:
        return np.array(
            [k for k, x in enumerate(self.mode_assignment) if x == "B"], dtype=int
        )


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues nu (sorted descending) and squeezings r.

    nu_k = cosh(2 r_k) >= 1 for every mode of the smaller subsystem.
    """

    nu: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        r = np.asarray(self.r, dtype=float)
        if nu.shape != r.shape or nu.ndim != 1:
            raise ValueError("nu and r must be 1-d arrays of equal length")
        if np.any(nu < 1.0):
            raise ValueError("symplectic eigenvalues must be >= 1")
        if np.any(np.diff(nu) > 0):
            raise ValueError("spectrum must be sorted descending")
        if np.abs(nu - np.cosh(2 * r)).max() > 1e-12 * max(1.0, nu.max()):
            raise ValueError("nu_k = cosh(2 r_k) violated")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "r", r)

    def __len__(self) -> int:
        return len(self.nu)


def quadrature_indices(modes) -> np.ndarray:
    """Row/column indices of the given modes in the interleaved ordering."""
    modes = np.asarray(modes, dtype=int)
    return np.stack([2 * modes, 2 * modes + 1], axis=1).ravel()


def tmsv_symplectic(r: float) -> np.ndarray:
    """Symplectic matrix of the two-mode squeezing generator at parameter r.

    Applied to the vacuum it reproduces ``tmsv_state(r)``.
    """
    c, s = np.cosh(r), np.sinh(r)
    return np.array(
        [
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, s],
            [-s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ]
    )


def tmsv_state(r: float) -> GaussianPureState:
    """Two-mode squeezed vacuum with squeezing parameter r >= 0."""
    if r < 0:
        raise ValueError("squeezing parameter must be nonnegative")
    S = tmsv_symplectic(r)
    return GaussianPureState(n_modes=2, covariance=S @ S.T)


def canonical_state(r, bipartition: Bipartition) -> GaussianPureState:
    """Canonical bipartite pure state: TMSV pairs plus spare vacua.

    The k-th A mode is paired with the k-th B mode at squeezing r[k]; the
    remaining n_B - n_A B modes stay in vacuum.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.shape != (bipartition.n_A,):
        raise ValueError(
            f"need one squeezing parameter per A mode: expected {bipartition.n_A}, "
            f"got {r.size}"
        )
    if np.any(r < 0):
        raise ValueError("squeezing parameters must be nonnegative")
    n = bipartition.n_modes
    cov = np.eye(2 * n)
    modes_a, modes_b = bipartition.modes_a, bipartition.modes_b
    for k, rk in enumerate(r):
        a, b = modes_a[k], modes_b[k]
        c, s = np.cosh(2 * rk), np.sinh(2 * rk)
        for q in (0, 1):
            cov[2 * a + q, 2 * a + q] = c
            cov[2 * b + q, 2 * b + q] = c
        cov[2 * a, 2 * b] = cov[2 * b, 2 * a] = -s
        cov[2 * a + 1, 2 * b + 1] = cov[2 * b + 1, 2 * a + 1] = s
    return GaussianPureState(n_modes=n, covariance=cov)


def reduced_covariance(state: GaussianPureState, modes) -> np.ndarray:
    """Covariance block of the given modes (partial trace in phase space)."""
    idx = quadrature_indices(modes)
    return state.covariance[np.ix_(idx, idx)]


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a positive-definite covariance block.

    These are the moduli of the eigenvalues of i Omega sigma, which come in
    +/- pairs; the pairs are deduplicated and returned sorted descending.
    """
    m = cov.shape[0] // 2
    if np.linalg.eigvalsh(cov).min() <= 0:
        raise ValueError("reduced covariance is not positive definite")
    omega = symplectic_form(m).matrix
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))[::-1]
    paired = moduli.reshape(m, 2)
    mismatch = np.abs(paired[:, 0] - paired[:, 1])
    if np.any(mismatch > SPECTRUM_PAIR_TOL * np.maximum(1.0, paired[:, 0])):
        raise ValueError("eigenvalues of i*Omega*sigma do not come in +/- pairs")
    return paired.mean(axis=1)


def williamson_spectrum(
    state: GaussianPureState, bipartition: Bipartition
) -> SymplecticSpectrum:
    """Symplectic spectrum of the reduced state of subsystem A."""
    if bipartition.n_modes != state.n_modes:
        raise ValueError("bipartition does not match the state's mode count")
    nu = symplectic_eigenvalues(reduced_covariance(state, bipartition.modes_a))
    below = nu < 1.0
    if np.any(nu < 1.0 - NU_CLAMP_TOL):
        raise ValueError(
            f"symplectic eigenvalue {nu[below].min():.12g} < 1 beyond "
            "round-off; input is not a valid reduced pure-state block"
        )
    nu = np.where(below, 1.0, nu)  # round-off at the vacuum boundary
    r = np.arccosh(nu) / 2
    return SymplecticSpectrum(nu=nu, r=r)


def reduced_spectrum(nu: float, j_max: int | None = None) -> np.ndarray:
    """Occupation probabilities of the thermal-like reduced single mode.

    p_j = (2 / (nu + 1)) * ((nu - 1) / (nu + 1))**j.  When j_max is omitted
    it is chosen so that the geometric tail mass is below 1e-12.
    """
    if nu < 1.0:
        raise ValueError("nu must be >= 1")
    q = (nu - 1.0) / (nu + 1.0)
    if j_max is None:
        if q == 0.0:
            j_max = 0
        else:
            # tail mass after j_max is q**(j_max + 1)
            j_max = int(np.ceil(np.log(1e-12) / np.log(q))) - 1
            j_max = max(j_max, 0)
    j = np.arange(j_max + 1)
    return (2.0 / (nu + 1.0)) * q**j


def entanglement_entropy(spectrum) -> float:
    """Entanglement entropy in nats across the bipartition.

    Sums, over the modes of the smaller subsystem, the entropy of the
    geometric reduced spectrum at nu_k; equals the Shannon entropy of
    ``reduced_spectrum`` per mode.
    """
    nu = np.asarray(
        spectrum.nu if isinstance(spectrum, SymplecticSpectrum) else spectrum,
        dtype=float,
    )
    if np.any(nu < 1.0):
        raise ValueError("nu must be >= 1")
    up = (nu + 1.0) / 2.0
    dn = (nu - 1.0) / 2.0
    # 0*log(0) -> 0 at nu = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        term = up * np.log(up) - np.where(dn > 0, dn * np.log(dn), 0.0)
    return float(np.sum(term))
