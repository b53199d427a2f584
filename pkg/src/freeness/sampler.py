"""
Exact samplers for free fermion, free boson and pure superposition states.

Every draw ``i`` of a batch owns an independent counter-based stream: a
Philox generator keyed by the batch seed with its counter offset by ``i``.
Draws therefore do not depend on how the batch is split across workers.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numba
import numpy as np

from .errors import FactorizationFailureError, InternalConsistencyError, WrongStatisticsError
from .fock_oracle import PureFockSuperposition, pure_state_distribution
from .kernels import FreeState, Statistics

DEFAULT_SEED = 20070515
INTENSITY_CLAMP_TOL = 1e-10
INTENSITY_ERROR_TOL = 1e-6
DROP_TOL = 1e-12
_SNAP_TOL = 1e-12


# ---------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF).generate_state(2, np.uint64)


def draw_generator(seed: int, index: int) -> np.random.Generator:
    """Generator for draw ``index`` of the batch seeded with ``seed``."""
    counter = np.array([0, 0, index, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_philox_key(seed), counter=counter))


def _draw_range(seed: int, start: int, stop: int, draw: Callable[[np.random.Generator], np.ndarray]) -> list:
    key = _philox_key(seed)
    out = []
    for i in range(start, stop):
        counter = np.array([0, 0, i, 0], dtype=np.uint64)
        out.append(draw(np.random.Generator(np.random.Philox(key=key, counter=counter))))
    return out


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), n)) if n else 1
    edges = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _map_chunks(n: int, workers: int, job: Callable[[int, int], np.ndarray]) -> np.ndarray:
    parts = _chunks(n, workers)
    if len(parts) == 1:
        return job(*parts[0])
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        results = list(pool.map(lambda ab: job(*ab), parts))
    return np.concatenate(results, axis=0)


# ---------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Configurations drawn from one source.

    Attributes
    ----------
    counts : ndarray, shape (n, M), int64
        Row ``i`` is draw ``i``.
    seed : int
    source : dict
        JSON-serializable description of the sampled state.
    statistics : Statistics
    """

    counts: np.ndarray
    seed: int
    source: dict
    statistics: Statistics
    _digest: Optional[str] = field(default=None, repr=False)

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.ndim != 2:
            raise ValueError(f"counts must be 2-d, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("negative counts")
        if Statistics.parse(self.statistics) is Statistics.FERMI and np.any(c > 1):
            raise ValueError("fermion counts must be 0 or 1")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "statistics", Statistics.parse(self.statistics))

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def dim(self) -> int:
        return self.counts.shape[1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleBatch):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.source == other.source
            and self.statistics is other.statistics
            and np.array_equal(self.counts, other.counts)
        )


def kernel_digest(entries: np.ndarray) -> str:
    a = np.ascontiguousarray(entries, dtype=np.complex128)
    return hashlib.sha256(a.tobytes()).hexdigest()[:16]


def _state_source(kind: str, state: FreeState) -> dict:
    return {
        "kind": kind,
        "label": state.kernel.label,
        "dim": state.dim,
        "kernel_sha256": kernel_digest(state.K),
    }


# ---------------------------------------------------------------------
# Free fermions: spectral selection + sequential chain rule
# ---------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _householder_first(b: np.ndarray, row: np.ndarray):
    """Right-multiply ``b`` by a Householder reflector whose first column is
    a unit multiple of ``conj(row) / |row|``.  ``row`` is the current row of
    ``b``; after the update only the first column has a nonzero entry in it."""
    k = row.shape[0]
    norm = np.sqrt(np.sum(np.abs(row) ** 2))
    a = np.conj(row) / norm
    phase = 1.0 + 0.0j
    if np.abs(a[0]) > 0.0:
        phase = a[0] / np.abs(a[0])
    alpha = -phase
    v = a.copy()
    v[0] -= alpha
    vnorm2 = np.sum(np.abs(v) ** 2)
    if vnorm2 == 0.0:
        return
    # b <- b (I - 2 v v^H / |v|^2)
    bv = b @ v
    coef = 2.0 / vnorm2
    for r in range(b.shape[0]):
        for j in range(k):
            b[r, j] -= coef * bv[r] * np.conj(v[j])


@numba.njit(cache=True, nogil=True)
def _fermion_kernel(eigvals, eigvecs, uniforms, out):
    """Fill ``out`` (n, M) with draws.  Returns the largest intensity overshoot
    seen (for the internal-consistency check)."""
    n, m = out.shape
    worst = 0.0
    for i in range(n):
        r = 0
        for j in range(m):
            if uniforms[i, j] < eigvals[j]:
                r += 1
        b = np.empty((m, r), dtype=np.complex128)
        c = 0
        for j in range(m):
            if uniforms[i, j] < eigvals[j]:
                b[:, c] = eigvecs[:, j]
                c += 1
        k = r
        for x in range(m):
            if k == 0:
                break
            if m - x == k:
                for y in range(x, m):
                    out[i, y] = 1
                break
            row = b[0, :k].copy()
            p = np.sum(np.abs(row) ** 2)
            if p > 1.0:
                worst = max(worst, p - 1.0)
                p = 1.0
            occupied = uniforms[i, m + x] < p
            if p > 0.0:
                sub = b[:, :k].copy()
                _householder_first(sub, row)
                b[:, :k] = sub
            if occupied:
                out[i, x] = 1
                # drop the direction of the occupied site; the other columns
                # vanish on row x and stay orthonormal on the remaining rows
                b = b[1:, 1:k].copy()
                k -= 1
            else:
                rest = 1.0 - p
                if p > 0.0:
                    if rest < 1e-12:
                        b = b[1:, 1:k].copy()
                        k -= 1
                    else:
                        b = b[1:, :k].copy()
                        s = 1.0 / np.sqrt(rest)
                        for y in range(b.shape[0]):
                            b[y, 0] *= s
                else:
                    b = b[1:, :k].copy()
    return worst


def _fermion_spectrum(state: FreeState):
    w, v = np.linalg.eigh(state.K)
    w = np.clip(w, 0.0, 1.0)
    w[w < _SNAP_TOL] = 0.0
    w[w > 1.0 - _SNAP_TOL] = 1.0
    return w, np.ascontiguousarray(v)


def sample_fermion(state: FreeState, n: int, seed: int = DEFAULT_SEED, workers: int = 1) -> SampleBatch:
    """Exact i.i.d. draws from the determinantal law of a free fermion state.

    Each eigenvector of ``K`` is kept with probability equal to its
    eigenvalue; the projection process of the kept orbitals is then sampled
    by scanning sites in index order, occupying site ``x`` with its
    conditional intensity and conditioning the orbital set on the outcome.
    The particle number of a draw equals the number of kept eigenvectors.
    """
    if state.statistics is not Statistics.FERMI:
        raise WrongStatisticsError("sample_fermion needs a fermi state")
    w, v = _fermion_spectrum(state)
    m = state.dim

    def job(start, stop):
        u = np.array(_draw_range(seed, start, stop, lambda g: g.random(2 * m))).reshape(stop - start, 2 * m)
        out = np.zeros((stop - start, m), dtype=np.int64)
        worst = _fermion_kernel(w, v, u, out)
        if worst > INTENSITY_ERROR_TOL:
            raise InternalConsistencyError(f"conditional intensity exceeded 1 by {worst:.3e}")
        return out

    counts = _map_chunks(int(n), workers, job)
    return SampleBatch(counts, int(seed), _state_source("fermion", state), Statistics.FERMI)


# ---------------------------------------------------------------------
# Free bosons: Cox process with complex Gaussian intensity
# ---------------------------------------------------------------------


def gaussian_factor(k: np.ndarray) -> np.ndarray:
    """``F`` with ``F F^dagger = K`` from the eigendecomposition."""
    w, v = np.linalg.eigh(k)
    if w[0] < -1e-9 * max(1.0, abs(w[-1])):
        raise FactorizationFailureError(f"kernel has negative eigenvalue {w[0]:.3e}")
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_boson(state: FreeState, n: int, seed: int = DEFAULT_SEED, workers: int = 1) -> SampleBatch:
    """Exact i.i.d. draws from the permanental law of a free boson state.

    ``zeta = F g`` with ``g`` standard circular complex Gaussian has
    covariance ``E[zeta_x conj(zeta_y)] = K(x, y)``; counts are then
    independent Poisson with means ``|zeta_x|^2``.
    """
    if state.statistics is not Statistics.BOSE:
        raise WrongStatisticsError("sample_boson needs a bose state")
    f = gaussian_factor(state.K)
    m = state.dim

    def one(g: np.random.Generator) -> np.ndarray:
        z = g.standard_normal((2, m))
        zeta = f @ ((z[0] + 1j * z[1]) / np.sqrt(2.0))
        return g.poisson(np.abs(zeta) ** 2)

    def job(start, stop):
        return np.array(_draw_range(seed, start, stop, one), dtype=np.int64).reshape(stop - start, m)

    counts = _map_chunks(int(n), workers, job)
    return SampleBatch(counts, int(seed), _state_source("boson", state), Statistics.BOSE)


def sample_free(state: FreeState, n: int, seed: int = DEFAULT_SEED, workers: int = 1) -> SampleBatch:
    if state.statistics is Statistics.FERMI:
        return sample_fermion(state, n, seed, workers)
    return sample_boson(state, n, seed, workers)


# ---------------------------------------------------------------------
# Pure superpositions: inverse CDF over the enumerated support
# ---------------------------------------------------------------------


def _psi_source(psi: PureFockSuperposition) -> dict:
    terms = [[[c.real, c.imag], list(occ)] for c, occ in psi.terms]
    digest = hashlib.sha256(json.dumps(terms).encode()).hexdigest()[:16]
    src = {"kind": "pure", "label": psi.label, "dim": psi.dim, "terms_sha256": digest}
    if psi.rotation is not None:
        src["rotation_sha256"] = kernel_digest(psi.rotation)
    return src


def sample_pure_state(psi: PureFockSuperposition, n: int, seed: int = DEFAULT_SEED, workers: int = 1) -> SampleBatch:
    """Draws from the exact configuration distribution of ``psi``."""
    dist = pure_state_distribution(psi)
    cdf = np.cumsum(dist.probabilities)
    cdf /= cdf[-1]
    support = dist.support
    last = len(cdf) - 1

    def job(start, stop):
        u = np.array(_draw_range(seed, start, stop, lambda g: g.random()))
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), last)
        return support[idx].reshape(stop - start, psi.dim)

    counts = _map_chunks(int(n), workers, job)
    return SampleBatch(counts, int(seed), _psi_source(psi), psi.statistics)
