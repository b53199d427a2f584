"""
Brute-force ground truth by explicit enumeration of occupation configurations.

Everything in this module is deliberately computed along a different route
from :mod:`freeness.exact_moments`:

* free fermions: probabilities of every subset via the chain rule of
  conditional kernels (site by site, exact also for projection kernels);
* free bosons: naive ``m!`` permanents for moments, and Fock-space
  probabilities ``perm(Q[n, n]) / (n! det(I + K))`` with ``Q = K (I + K)^-1``
  for the full distribution up to a particle-number cutoff;
* pure superpositions of Fock states: amplitudes ``sum_S c_S det(U[T, S])``.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.special import comb

from .errors import (
    BoseRotationUnsupportedError,
    DimensionMismatchError,
    SectorMismatchError,
    TooLargeError,
    TooManySitesError,
    WrongStatisticsError,
)
from .exact_moments import MAX_TUPLES, MomentSpec
from .kernels import (
    KernelMatrix,
    OneParticleUnitary,
    RegionLike,
    Statistics,
    as_region,
    check_disjoint,
    restrict_kernel,
)

MAX_FERMI_SITES = 20
MAX_PURE_PARTICLES = 8
MAX_PURE_SITES = 12
MAX_NAIVE_PERM = 9
MAX_BOSE_CONFIGS = 2_000_000
NORM_TOL = 1e-10
TAIL_TOL = 1e-10
INDEPENDENCE_TV_TOL = 1e-9
_BRANCH_EPS = 1e-14


def _lex_order(counts: np.ndarray) -> np.ndarray:
    """Permutation sorting count vectors lexicographically (site 0 first)."""
    if counts.shape[0] == 0:
        return np.arange(0)
    return np.lexsort(counts.T[::-1])


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """Probabilities of occupation configurations.

    Attributes
    ----------
    support : ndarray, shape (S, M), int
        Count vectors in lexicographic order.
    probabilities : ndarray, shape (S,)
    tail_mass : float
        Probability of configurations left out by a cutoff (0 when the
        support is complete).
    """

    support: np.ndarray
    probabilities: np.ndarray
    tail_mass: float = 0.0
    statistics: Optional[Statistics] = field(default=None)

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def total(self) -> float:
        return math.fsum(self.probabilities)

    def probability(self, counts) -> float:
        c = np.asarray(counts)
        hit = np.all(self.support == c, axis=1)
        return float(self.probabilities[hit].sum())

    def probability_of_set(self, sites) -> float:
        c = np.zeros(self.dim, dtype=np.int64)
        c[list(sites)] = 1
        return self.probability(c)

    def region_counts(self, r: RegionLike) -> np.ndarray:
        idx = as_region(r, self.dim).index()
        return self.support[:, idx].sum(axis=1)

    def moment(self, spec) -> float:
        """``E[prod_j N(E_j)]`` summed over the support."""
        if not isinstance(spec, MomentSpec):
            spec = MomentSpec(spec)
        prod = np.ones(len(self.probabilities))
        for r in spec.regions:
            prod = prod * self.region_counts(r)
        return math.fsum(prod * self.probabilities)

    def covariance(self, r1: RegionLike, r2: RegionLike) -> float:
        a, b = as_region(r1, self.dim), as_region(r2, self.dim)
        check_disjoint([a, b])
        return self.moment([a, b]) - self.moment([a]) * self.moment([b])

    def nonzero(self, tol: float = 0.0) -> "ExactDistribution":
        keep = self.probabilities > tol
        return ExactDistribution(self.support[keep], self.probabilities[keep], self.tail_mass, self.statistics)


def write_distribution(path, dist: ExactDistribution) -> None:
    """Tabular export: ``configuration,probability`` per line.

    Fermion configurations are written as bitstrings (site 0 first), boson
    configurations as space-separated counts.
    """
    bits = dist.statistics is Statistics.FERMI
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["configuration", "probability"])
        for c, p in zip(dist.support, dist.probabilities):
            cfg = "".join(map(str, c)) if bits else " ".join(map(str, c))
            w.writerow([cfg, f"{p:.17e}"])
        if dist.tail_mass:
            w.writerow(["#tail", f"{dist.tail_mass:.17e}"])


# ---------------------------------------------------------------------
# Free fermions
# ---------------------------------------------------------------------


def _require(k: KernelMatrix, stats: Statistics):
    if k.statistics is not stats:
        raise WrongStatisticsError(f"expected a {stats.value} kernel, got {k.statistics.value}")


def free_fermion_distribution(k: KernelMatrix) -> ExactDistribution:
    """Probability of every subset of sites for a free fermion kernel.

    Sites are decided in index order.  Given the decisions so far, site ``x``
    is occupied with probability ``K'(x, x)`` where ``K'`` is the conditional
    kernel; conditioning updates the remaining block by a rank-one Schur
    complement,

        occupied:  K' <- K'_rest - K'[rest, x] K'[x, rest] / K'(x, x)
        empty:     K' <- K'_rest + K'[rest, x] K'[x, rest] / (1 - K'(x, x))

    which stays exact when eigenvalues are 0 or 1.
    """
    _require(k, Statistics.FERMI)
    m = k.dim
    if m > MAX_FERMI_SITES:
        raise TooManySitesError(f"{m} sites exceed the enumeration cap {MAX_FERMI_SITES}")
    probs = np.zeros(1 << m)

    def visit(kc: np.ndarray, prob: float, code: int, depth: int):
        if depth == m:
            probs[code] = prob
            return
        p = min(max(kc[0, 0].real, 0.0), 1.0)
        if p < _BRANCH_EPS:
            p = 0.0
        elif p > 1.0 - _BRANCH_EPS:
            p = 1.0
        rest, col, row = kc[1:, 1:], kc[1:, 0], kc[0, 1:]
        shift = m - depth - 1
        if p < 1.0:
            visit(rest + np.outer(col, row) / (1.0 - p), prob * (1.0 - p), code, depth + 1)
        if p > 0.0:
            visit(rest - np.outer(col, row) / p, prob * p, code | (1 << shift), depth + 1)

    visit(np.array(k.entries), 1.0, 0, 0)
    codes = np.arange(1 << m)
    support = ((codes[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1).astype(np.int64)
    return ExactDistribution(support, probs, 0.0, Statistics.FERMI)


def l_ensemble_probability(k: KernelMatrix, sites: Sequence[int]) -> float:
    """``det(L_S) / det(I + L)`` with ``L = K (I - K)^-1``.

    Only defined when every eigenvalue of ``K`` is strictly below 1.
    """
    _require(k, Statistics.FERMI)
    kk = k.entries
    eye = np.eye(k.dim)
    lm = np.linalg.solve((eye - kk).T, kk.T).T
    idx = np.asarray(sorted(sites), dtype=np.intp)
    num = np.linalg.det(lm[np.ix_(idx, idx)]) if len(idx) else 1.0
    return float((num / np.linalg.det(eye + lm)).real)


def independence_check(k: KernelMatrix, r1: RegionLike, r2: RegionLike) -> bool:
    """Whether ``X n R1`` and ``X n R2`` are independent (TV distance <= 1e-9).

    The joint law is enumerated from the kernel seen through ``R1 u R2``.
    """
    _require(k, Statistics.FERMI)
    a, b = as_region(r1, k.dim), as_region(r2, k.dim)
    check_disjoint([a, b])
    if not len(a) or not len(b):
        return True
    if len(a) + len(b) > MAX_FERMI_SITES:
        raise TooManySitesError(f"{len(a) + len(b)} sites exceed the enumeration cap {MAX_FERMI_SITES}")
    window = sorted(a.sites + b.sites)
    dist = free_fermion_distribution(restrict_kernel(k, window))
    pos = {s: i for i, s in enumerate(window)}
    ia = [pos[s] for s in a]
    ib = [pos[s] for s in b]
    weights_a = 1 << np.arange(len(ia))
    weights_b = 1 << np.arange(len(ib))
    code_a = dist.support[:, ia] @ weights_a
    code_b = dist.support[:, ib] @ weights_b
    joint = np.zeros((1 << len(ia), 1 << len(ib)))
    np.add.at(joint, (code_a, code_b), dist.probabilities)
    product = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    tv = 0.5 * np.abs(joint - product).sum()
    return bool(tv <= INDEPENDENCE_TV_TOL)


# ---------------------------------------------------------------------
# Free bosons
# ---------------------------------------------------------------------


def naive_permanent(a: np.ndarray) -> complex:
    """Permanent as a plain sum over all ``n!`` permutations."""
    n = a.shape[0]
    if n > MAX_NAIVE_PERM:
        raise TooLargeError(f"naive permanent of order {n} exceeds {MAX_NAIVE_PERM}")
    rows = np.arange(n)
    return complex(sum(np.prod(a[rows, list(p)]) for p in itertools.permutations(range(n))))


def free_boson_moments(k: KernelMatrix, spec) -> float:
    """Bose product moment over disjoint regions from naive permanents."""
    _require(k, Statistics.BOSE)
    if not isinstance(spec, MomentSpec):
        spec = MomentSpec(spec)
    regs = [as_region(r, k.dim) for r in spec.regions]
    check_disjoint(regs)
    if len(regs) > MAX_NAIVE_PERM:
        raise TooLargeError(f"order {len(regs)} exceeds {MAX_NAIVE_PERM}")
    n_tuples = math.prod(len(r) for r in regs)
    if n_tuples > MAX_TUPLES:
        raise TooLargeError(f"{n_tuples} site tuples exceed the limit {MAX_TUPLES}")
    kk = k.entries
    terms = []
    for xs in itertools.product(*(r.sites for r in regs)):
        idx = list(xs)
        terms.append(naive_permanent(kk[np.ix_(idx, idx)]))
    return math.fsum(z.real for z in terms)


def _geometric_sum_pmf(eigenvalues: np.ndarray, n_max: int) -> np.ndarray:
    """pmf of the total particle number on ``0..n_max``: independent
    geometric occupations of the eigenmodes."""
    pmf = np.zeros(n_max + 1)
    pmf[0] = 1.0
    n = np.arange(n_max + 1)
    for lam in eigenvalues:
        if lam <= 0:
            continue
        q = lam / (1.0 + lam)
        g = (1.0 - q) * q**n
        pmf = np.convolve(pmf, g)[: n_max + 1]
    return pmf


def choose_boson_cutoff(k: KernelMatrix, tail_tol: float = TAIL_TOL, moment_order: int = 3) -> int:
    """Smallest total-particle cutoff whose left-out mass and left-out
    ``moment_order``-th moment of the total count are both below ``tail_tol``."""
    w = np.clip(k.eigenvalues(), 0.0, None)
    far = 64
    while True:
        pmf = _geometric_sum_pmf(w, far)
        n = np.arange(far + 1)
        weight = pmf * np.maximum(n, 1.0) ** moment_order
        # tail of the geometric-sum pmf beyond `far` is bounded by the last ratio
        tail = np.cumsum(weight[::-1])[::-1]
        if tail[-1] < 1e-3 * tail_tol:
            break
        far *= 2
        if far > 4096:
            raise TooLargeError("kernel occupations too large for Fock enumeration")
    ok = np.nonzero(tail < tail_tol)[0]
    return int(max(ok[0] - 1, 0))


def free_boson_distribution(k: KernelMatrix, n_total_max: Optional[int] = None) -> ExactDistribution:
    """Site-occupation distribution of a free boson state up to a cutoff.

    ``P(n) = perm(Q[n, n]) / (prod_x n_x! det(I + K))`` with
    ``Q = K (I + K)^-1``, where ``Q[n, n]`` repeats row and column ``x``
    ``n_x`` times.  The numerators are the Taylor coefficients of
    ``1 / det(I - Q Z)``, ``Z = diag(z)`` (MacMahon's master theorem), and are
    obtained from the recursion ``det(I - Q Z) * G(z) = 1``.

    All configurations with at most ``n_total_max`` particles are listed.  If
    the cutoff is omitted it is chosen so that the left-out probability and
    third moment are below ``1e-10``.  The exact left-out mass is reported as
    ``tail_mass``; the probabilities are renormalized only when it is below
    ``1e-10``.
    """
    _require(k, Statistics.BOSE)
    m = k.dim
    if n_total_max is None:
        n_total_max = choose_boson_cutoff(k)
    n_configs = math.comb(n_total_max + m, m)
    if n_configs > MAX_BOSE_CONFIGS or (n_total_max + 1) ** m > 50 * MAX_BOSE_CONFIGS:
        raise TooLargeError(f"{n_configs} configurations exceed the cap {MAX_BOSE_CONFIGS}")
    kk = k.entries
    eye = np.eye(m)
    q = np.linalg.solve((eye + kk).T, kk.T).T
    w = np.clip(k.eigenvalues(), 0.0, None)

    # coefficients of det(I - Q Z) = sum_S (-1)^|S| det(Q_SS) z^S
    d = np.zeros(1 << m)
    for mask in range(1, 1 << m):
        idx = [y for y in range(m) if mask >> y & 1]
        d[mask] = (-1) ** len(idx) * np.linalg.det(q[np.ix_(idx, idx)]).real
    g = _inverse_series(d, m, n_total_max)

    base = n_total_max + 1
    codes = np.arange(base**m)
    digits = (codes[:, None] // base ** np.arange(m - 1, -1, -1)[None, :]) % base
    keep = digits.sum(axis=1) <= n_total_max
    support = digits[keep].astype(np.int64)
    p = g[keep] * math.exp(-float(np.sum(np.log1p(w))))

    tail = max(1.0 - math.fsum(_geometric_sum_pmf(w, n_total_max)), 0.0)
    if tail < TAIL_TOL:
        p = p / math.fsum(p)
    else:
        warnings.warn(f"boson cutoff {n_total_max} leaves out mass {tail:.3e}; not renormalized", stacklevel=2)
    return ExactDistribution(support, p, tail, Statistics.BOSE)


@numba.njit(cache=True)
def _inverse_series(d, m, n_max):
    """Dense Taylor coefficients of ``1 / D(z)`` for multilinear ``D`` with
    ``D(0) = 1``, truncated at total degree ``n_max``.  Index digits are the
    exponents in base ``n_max + 1``, site 0 most significant."""
    base = n_max + 1
    size = base**m
    stride = np.empty(m, dtype=np.int64)
    for y in range(m):
        stride[y] = base ** (m - 1 - y)
    g = np.zeros(size)
    g[0] = 1.0
    digits = np.zeros(m, dtype=np.int64)
    for code in range(1, size):
        # increment the base-`base` counter
        y = m - 1
        while True:
            digits[y] += 1
            if digits[y] < base:
                break
            digits[y] = 0
            y -= 1
        if digits.sum() > n_max:
            continue
        acc = 0.0
        for mask in range(1, 1 << m):
            j = code
            ok = True
            for y in range(m):
                if mask >> y & 1:
                    if digits[y] == 0:
                        ok = False
                        break
                    j -= stride[y]
            if ok:
                acc -= d[mask] * g[j]
        g[code] = acc
    return g


def repeated_permanent(q: np.ndarray, n: np.ndarray) -> complex:
    """``perm(Q[n, n])``: Ryser's formula with columns grouped by site.

    Choosing ``s_y`` of the ``n_y`` copies of column ``y`` contributes
    ``C(n_y, s_y)`` identical subsets whose row sums are ``sum_y s_y Q[x, y]``.
    """
    total = int(n.sum())
    if total == 0:
        return 1.0 + 0j
    occ = np.nonzero(n)[0]
    grids = np.meshgrid(*[np.arange(n[y] + 1) for y in occ], indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)  # (G, len(occ))
    w = s @ q[np.ix_(occ, occ)].T  # row sums for each occupied row x
    weight = np.prod(comb(n[occ][None, :], s), axis=1) * (-1.0) ** (total - s.sum(axis=1))
    rows = np.prod(w ** n[occ][None, :], axis=1)
    return complex(np.sum(weight * rows))


# ---------------------------------------------------------------------
# Pure superpositions
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PureFockSuperposition:
    """``sum_S c_S |S>`` in a fixed orthonormal mode basis.

    Each term is ``(amplitude, occupation vector)``.  For fermions ``|S>`` is
    ``a^dagger_{s_1} ... a^dagger_{s_N} |0>`` with ``s_1 < ... < s_N``.  The
    optional ``rotation`` maps modes to measured sites: mode ``s`` is the
    site-space vector ``rotation[:, s]``.
    """

    statistics: Statistics
    dim: int
    terms: tuple[tuple[complex, tuple[int, ...]], ...]
    rotation: Optional[np.ndarray] = None
    label: Optional[str] = None

    def __post_init__(self):
        stats = Statistics.parse(self.statistics)
        object.__setattr__(self, "statistics", stats)
        terms = tuple((complex(c), tuple(int(v) for v in occ)) for c, occ in self.terms)
        if not terms:
            raise ValueError("superposition needs at least one term")
        for _, occ in terms:
            if len(occ) != self.dim:
                raise DimensionMismatchError(f"occupation {occ} does not have length {self.dim}")
            if min(occ) < 0 or (stats is Statistics.FERMI and max(occ) > 1):
                raise ValueError(f"invalid {stats.value} occupation {occ}")
        occs = [occ for _, occ in terms]
        if len(set(occs)) != len(occs):
            raise ValueError("occupation vectors must be pairwise distinct")
        sectors = {sum(occ) for occ in occs}
        if len(sectors) != 1:
            raise SectorMismatchError(f"terms mix particle numbers {sorted(sectors)}")
        norm = math.fsum(abs(c) ** 2 for c, _ in terms)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"sum |amplitude|^2 = {norm!r}, expected 1")
        object.__setattr__(self, "terms", terms)
        if self.rotation is not None:
            u = self.rotation.entries if isinstance(self.rotation, OneParticleUnitary) else self.rotation
            u = OneParticleUnitary(u).entries
            if u.shape[0] != self.dim:
                raise DimensionMismatchError(f"rotation of dim {u.shape[0]} for {self.dim} modes")
            object.__setattr__(self, "rotation", u)

    @property
    def n_particles(self) -> int:
        return sum(self.terms[0][1])

    def rotated(self, u) -> "PureFockSuperposition":
        """Same amplitudes, one-particle rotation ``u`` applied after the current one."""
        u = u.entries if isinstance(u, OneParticleUnitary) else np.asarray(u, dtype=np.complex128)
        new = u if self.rotation is None else u @ self.rotation
        return PureFockSuperposition(self.statistics, self.dim, self.terms, new, self.label)


def two_pair_state(dim: int = 5) -> PureFockSuperposition:
    """``(|1>^|2> + |3>^|4>) / sqrt(2)`` on modes 1..4; mode 0 (and any
    mode above 4) stays empty."""
    if dim < 5:
        raise DimensionMismatchError("the two-pair state uses modes 1..4, need dim >= 5")
    a = [0] * dim
    b = [0] * dim
    a[1] = a[2] = 1
    b[3] = b[4] = 1
    c = 1.0 / math.sqrt(2.0)
    return PureFockSuperposition(Statistics.FERMI, dim, ((c, tuple(a)), (c, tuple(b))), label="psi=(|12>+|34>)/sqrt2")


def slater_state(orbitals, label: Optional[str] = None) -> PureFockSuperposition:
    """Single-term superposition whose rotation carries the orbitals.

    The ``r`` orbitals (rows) are completed to a unitary; the state occupies
    the first ``r`` modes.
    """
    phi = np.atleast_2d(np.asarray(orbitals, dtype=np.complex128))
    r, m = phi.shape
    # complete the orbital columns to an orthonormal basis
    q, _ = np.linalg.qr(np.concatenate([phi.T, np.eye(m)], axis=1))
    u = q[:, :m].copy()
    u[:, :r] = phi.T
    occ = tuple([1] * r + [0] * (m - r))
    return PureFockSuperposition(Statistics.FERMI, m, ((1.0, occ),), u, label)


def _check_caps(psi: PureFockSuperposition):
    if psi.n_particles > MAX_PURE_PARTICLES or psi.dim > MAX_PURE_SITES:
        raise TooManySitesError(
            f"N={psi.n_particles}, M={psi.dim} exceed caps N<={MAX_PURE_PARTICLES}, M<={MAX_PURE_SITES}"
        )


def pure_state_distribution(psi: PureFockSuperposition) -> ExactDistribution:
    """Site-configuration distribution of a pure superposition.

    ``P(T) = |sum_S c_S det(U[T, S])|^2`` over the ``C(M, N)`` site sets ``T``
    (rows and columns in increasing index order).  Without a rotation this is
    ``|c_T|^2``.
    """
    _check_caps(psi)
    m, n = psi.dim, psi.n_particles
    if psi.statistics is Statistics.BOSE:
        if psi.rotation is not None and not np.allclose(psi.rotation, np.eye(m), atol=1e-12, rtol=0):
            raise BoseRotationUnsupportedError("rotated boson superpositions are not supported")
        support = np.asarray([occ for _, occ in psi.terms], dtype=np.int64)
        probs = np.asarray([abs(c) ** 2 for c, _ in psi.terms])
        order = _lex_order(support)
        return ExactDistribution(support[order], probs[order], 0.0, Statistics.BOSE)

    subsets = np.asarray(list(itertools.combinations(range(m), n)), dtype=np.intp).reshape(math.comb(m, n), n)
    support = np.zeros((len(subsets), m), dtype=np.int64)
    if n:
        np.put_along_axis(support, subsets, 1, axis=1)
    if psi.rotation is None:
        index = {tuple(row): i for i, row in enumerate(support.tolist())}
        amp = np.zeros(len(subsets), dtype=np.complex128)
        for c, occ in psi.terms:
            amp[index[occ]] += c
    else:
        u = psi.rotation
        amp = np.zeros(len(subsets), dtype=np.complex128)
        for c, occ in psi.terms:
            cols = np.nonzero(np.asarray(occ))[0]
            if n == 0:
                amp += c
                continue
            blocks = u[subsets[:, :, None], cols[None, None, :]]
            amp += c * np.linalg.det(blocks)
    probs = np.abs(amp) ** 2
    order = _lex_order(support)
    return ExactDistribution(support[order], probs[order], 0.0, Statistics.FERMI)


def pure_state_moments(psi: PureFockSuperposition, spec) -> float:
    return pure_state_distribution(psi).moment(spec)
