"""
One-particle correlation kernels of free fermion and boson states.

A free state on ``M`` discrete sites is fixed by its statistics and by the
Hermitian ``M x M`` matrix ``K(x, y) = <a_y^dagger a_x>``.  Fermi kernels have
spectrum in ``[0, 1]``, Bose kernels in ``[0, inf)``.  Everything here is a
pure function returning new immutable objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatchError,
    EigenvalueOutOfRangeError,
    EmptyRegionError,
    IndexOutOfRangeError,
    MuAboveSpectrumError,
    NotHermitianError,
    NotOrthonormalError,
    NotUnitaryError,
    RegionsOverlapError,
)

HERMITICITY_TOL = 1e-8
EIGENVALUE_TOL = 1e-9
ORTHONORMALITY_TOL = 1e-8
UNITARITY_TOL = 1e-8


class Statistics(str, enum.Enum):
    FERMI = "fermi"
    BOSE = "bose"

    @classmethod
    def parse(cls, value: Union[str, "Statistics"]) -> "Statistics":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown statistics {value!r}; expected 'fermi' or 'bose'") from None

    @property
    def sign(self) -> int:
        """Sign of the pair covariance a free state of this type must have."""
        return -1 if self is Statistics.FERMI else 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """A set of site indices, stored sorted and without duplicates."""

    sites: tuple[int, ...]

    def __init__(self, sites: Iterable[int]):
        idx = sorted({int(s) for s in sites})
        if idx and idx[0] < 0:
            raise IndexOutOfRangeError(f"negative site index {idx[0]}")
        object.__setattr__(self, "sites", tuple(idx))

    def __iter__(self):
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return site in self.sites

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.sites)) + "}"

    def check(self, dim: int) -> "Region":
        if self.sites and self.sites[-1] >= dim:
            raise IndexOutOfRangeError(f"site {self.sites[-1]} outside [0, {dim})")
        return self

    def index(self) -> np.ndarray:
        return np.asarray(self.sites, dtype=np.intp)


RegionLike = Union[Region, Iterable[int]]


def as_region(r: RegionLike, dim: Optional[int] = None) -> Region:
    region = r if isinstance(r, Region) else Region(r)
    if dim is not None:
        region.check(dim)
    return region


def check_disjoint(regions: Iterable[Region]) -> None:
    seen: dict[int, int] = {}
    for i, r in enumerate(regions):
        for s in r:
            if s in seen:
                raise RegionsOverlapError(f"site {s} belongs to regions {seen[s]} and {i}")
            seen[s] = i


# ---------------------------------------------------------------------
# Kernels and states
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Validated one-particle correlation matrix.

    Attributes
    ----------
    entries : ndarray, shape (M, M), complex128
        Read-only Hermitian matrix, ``entries[x, y] = K(x, y)``.
    statistics : Statistics
        Statistics under which the spectrum was validated.
    label : str, optional
        Free-form description carried into files and sample logs.
    """

    entries: np.ndarray
    statistics: Statistics
    label: Optional[str] = field(default=None)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KernelMatrix):
            return NotImplemented
        return self.statistics is other.statistics and np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"KernelMatrix(dim={self.dim}, statistics={self.statistics.value}, label={self.label!r})"


@dataclass(frozen=True)
class FreeState:
    """A free (quasi-free) state: statistics plus its kernel."""

    statistics: Statistics
    kernel: KernelMatrix

    def __post_init__(self):
        stats = Statistics.parse(self.statistics)
        object.__setattr__(self, "statistics", stats)
        if self.kernel.statistics is not stats:
            # re-validate so a Bose-only kernel cannot slip into a Fermi state
            object.__setattr__(self, "kernel", validate_kernel(self.kernel.entries, stats, self.kernel.label))

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def K(self) -> np.ndarray:
        return self.kernel.entries

    @classmethod
    def from_matrix(cls, entries, statistics, label=None) -> "FreeState":
        stats = Statistics.parse(statistics)
        return cls(stats, validate_kernel(entries, stats, label))

    @classmethod
    def of(cls, kernel: KernelMatrix) -> "FreeState":
        return cls(kernel.statistics, kernel)


def _as_square(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatchError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def _hermitize(a: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    asym = np.max(np.abs(a - a.conj().T))
    if asym > tol:
        raise NotHermitianError(f"max |K - K^dagger| = {asym:.3e} exceeds {tol:.0e}")
    return 0.5 * (a + a.conj().T)


def validate_kernel(entries, statistics, label: Optional[str] = None) -> KernelMatrix:
    """Check hermiticity and the spectral bounds of ``statistics``.

    Asymmetry up to ``HERMITICITY_TOL`` is removed by taking ``(K + K^dagger)/2``.
    Eigenvalues within ``EIGENVALUE_TOL`` outside the admissible interval are
    clamped onto it and the matrix is rebuilt from its eigendecomposition; when
    nothing needs clamping the symmetrized input is kept as is.

    Raises
    ------
    NotHermitianError, EigenvalueOutOfRangeError
    """
    stats = Statistics.parse(statistics)
    k = _hermitize(_as_square(entries))
    w, v = np.linalg.eigh(k)
    upper = 1.0 if stats is Statistics.FERMI else np.inf
    if w[0] < -EIGENVALUE_TOL or w[-1] > upper + EIGENVALUE_TOL:
        bound = "[0, 1]" if stats is Statistics.FERMI else "[0, inf)"
        raise EigenvalueOutOfRangeError(
            f"spectrum [{w[0]:.6g}, {w[-1]:.6g}] violates {stats.value} bounds {bound}"
        )
    if w[0] < 0.0 or w[-1] > upper:
        w = np.clip(w, 0.0, upper)
        k = (v * w) @ v.conj().T
        k = 0.5 * (k + k.conj().T)
    return KernelMatrix(_frozen(k), stats, label)


def slater_kernel(orbitals, label: Optional[str] = None) -> KernelMatrix:
    """Kernel of the Slater determinant built from the rows of ``orbitals``.

    ``orbitals`` has shape ``(r, M)``; row ``i`` is the wave function of the
    i-th occupied orbital.  The result is the orthogonal projection onto
    their span, ``K(x, y) = sum_i phi_i(x) conj(phi_i(y))``.
    """
    phi = np.asarray(orbitals, dtype=np.complex128)
    if phi.ndim == 1:
        phi = phi[None, :]
    if phi.ndim != 2 or phi.shape[1] < 1:
        raise DimensionMismatchError(f"orbitals must have shape (r, M), got {phi.shape}")
    r, m = phi.shape
    if r > m:
        raise NotOrthonormalError(f"{r} orbitals cannot be orthonormal in {m} dimensions")
    if r:
        gram = phi.conj() @ phi.T
        err = np.max(np.abs(gram - np.eye(r)))
        if err > ORTHONORMALITY_TOL:
            raise NotOrthonormalError(f"orbital Gram matrix deviates from identity by {err:.3e}")
    k = phi.T @ phi.conj()
    return validate_kernel(k, Statistics.FERMI, label)


def occupation_function(energies, beta: float, mu: float, statistics) -> np.ndarray:
    """Fermi-Dirac or Bose-Einstein mean occupation at the given energies."""
    stats = Statistics.parse(statistics)
    x = beta * (np.asarray(energies, dtype=float) - mu)
    if stats is Statistics.FERMI:
        return expit(-x)
    return 1.0 / np.expm1(x)


def thermal_kernel(h, beta: float, mu: float, statistics, label: Optional[str] = None) -> KernelMatrix:
    """Grand-canonical kernel ``f(h)`` of non-interacting particles.

    Parameters
    ----------
    h : array_like, shape (M, M)
        Hermitian single-particle Hamiltonian.
    beta : float
        Inverse temperature, strictly positive.
    mu : float
        Chemical potential.  Bose statistics require ``mu < min(spec(h))``.
    statistics : {'fermi', 'bose'}
    """
    stats = Statistics.parse(statistics)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    hm = _hermitize(_as_square(h))
    eps, v = np.linalg.eigh(hm)
    if stats is Statistics.BOSE and mu >= eps[0]:
        raise MuAboveSpectrumError(f"mu = {mu} must lie below the lowest level {eps[0]}")
    occ = occupation_function(eps, beta, mu, stats)
    k = (v * occ) @ v.conj().T
    return validate_kernel(k, stats, label)


def restrict_kernel(k: KernelMatrix, r: RegionLike) -> KernelMatrix:
    """Kernel of the process seen through the window ``r``.

    Returns the ``|r| x |r|`` principal submatrix, rows and columns in
    increasing site order.
    """
    region = as_region(r, k.dim)
    if not len(region):
        raise EmptyRegionError("observation window is empty")
    idx = region.index()
    sub = k.entries[np.ix_(idx, idx)]
    return validate_kernel(sub, k.statistics, k.label)


def check_unitary(u) -> np.ndarray:
    um = _as_square(u)
    err = np.max(np.abs(um @ um.conj().T - np.eye(um.shape[0])))
    if err > UNITARITY_TOL:
        raise NotUnitaryError(f"max |U U^dagger - I| = {err:.3e} exceeds {UNITARITY_TOL:.0e}")
    return um


@dataclass(frozen=True, eq=False)
class OneParticleUnitary:
    """Unitary acting on the one-particle space, validated on construction."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(check_unitary(self.entries)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def evolve_kernel(k: KernelMatrix, u) -> KernelMatrix:
    """Kernel after free one-particle dynamics, ``U K U^dagger``."""
    um = u.entries if isinstance(u, OneParticleUnitary) else check_unitary(u)
    if um.shape[0] != k.dim:
        raise DimensionMismatchError(f"unitary of dim {um.shape[0]} applied to kernel of dim {k.dim}")
    out = um @ k.entries @ um.conj().T
    return validate_kernel(out, k.statistics, k.label)


# ---------------------------------------------------------------------
# Random instances (used by the property sweeps and the demos)
# ---------------------------------------------------------------------


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_kernel(
    dim: int,
    statistics,
    rng: np.random.Generator,
    max_eigenvalue: float = 2.0,
    label: Optional[str] = None,
) -> KernelMatrix:
    """Kernel with Haar-random eigenvectors and uniform random eigenvalues.

    Fermi eigenvalues are uniform on ``[0, 1]``; Bose eigenvalues uniform on
    ``[0, max_eigenvalue]``.
    """
    stats = Statistics.parse(statistics)
    hi = 1.0 if stats is Statistics.FERMI else max_eigenvalue
    w = rng.uniform(0.0, hi, size=dim)
    v = random_unitary(dim, rng)
    return validate_kernel((v * w) @ v.conj().T, stats, label)


def random_projection_kernel(dim: int, rank: int, rng: np.random.Generator) -> KernelMatrix:
    v = random_unitary(dim, rng)
    return slater_kernel(v[:, :rank].T, label=f"random rank-{rank} projection")
