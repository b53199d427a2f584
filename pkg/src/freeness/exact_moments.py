"""
Exact joint count moments of free states.

For disjoint regions ``E_1, ..., E_m`` the product moment is

    E[prod_j N(E_j)] = sum_{x_1 in E_1} ... sum_{x_m in E_m} rho(x_1, ..., x_m)

with ``rho = det(K[x_i, x_j])`` for fermions and ``perm(K[x_i, x_j])`` for
bosons.  The enumeration is exact; it is chunked and summed in a fixed order
so results do not depend on how the work is split.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateSiteForFermiError,
    InternalConsistencyError,
    RegionsOverlapError,
    TooLargeError,
    WrongStatisticsError,
)
from .kernels import FreeState, Region, RegionLike, Statistics, as_region, check_disjoint
from .permanent import permanent_batch

MAX_TUPLES = 10**7
IMAG_TOL = 1e-10
SIGN_SLACK = 1e-10
CLOSED_FORM_TOL = 1e-10
_CHUNK = 1 << 15


@dataclass(frozen=True)
class MomentSpec:
    regions: tuple[Region, ...]
    require_disjoint: bool = True

    def __init__(self, regions: Iterable[RegionLike], require_disjoint: bool = True):
        regs = tuple(as_region(r) for r in regions)
        if require_disjoint:
            check_disjoint(regs)
        object.__setattr__(self, "regions", regs)
        object.__setattr__(self, "require_disjoint", require_disjoint)

    @property
    def n_tuples(self) -> int:
        return math.prod(len(r) for r in self.regions)


@dataclass(frozen=True)
class SignReport:
    """Exact pair covariances and whether each has the free-state sign."""

    statistics: Statistics
    pairs: tuple[tuple[int, int, float], ...]
    all_conforming: bool

    def violations(self) -> list[tuple[int, int, float]]:
        s = self.statistics.sign
        return [p for p in self.pairs if s * p[2] < -SIGN_SLACK]


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > IMAG_TOL * max(1.0, abs(z.real)):
        raise InternalConsistencyError(f"{what} has imaginary part {z.imag:.3e}")
    return float(z.real)


def _correlation_batch(k: np.ndarray, tuples: np.ndarray, statistics: Statistics) -> np.ndarray:
    """rho for each row of ``tuples`` (shape (T, m)); complex."""
    sub = k[tuples[:, :, None], tuples[:, None, :]]
    if statistics is Statistics.FERMI:
        return np.linalg.det(sub)
    return permanent_batch(sub)


def correlation_function(state: FreeState, sites: Sequence[int]) -> float:
    """m-point correlation ``det`` / ``perm`` of the kernel on ``sites``.

    Fermi sites must be distinct; Bose sites may repeat, which gives the
    factorial-moment density.
    """
    idx = np.asarray(list(sites), dtype=np.intp)
    as_region(idx.tolist(), state.dim)
    if state.statistics is Statistics.FERMI and len(set(idx.tolist())) != len(idx):
        raise DuplicateSiteForFermiError(f"repeated site in {tuple(idx)} for fermions")
    if len(idx) == 0:
        return 1.0
    z = complex(_correlation_batch(state.K, idx[None, :], state.statistics)[0])
    return _real(z, "correlation function")


def _tuple_chunks(regions: Sequence[Region]):
    it = itertools.product(*(r.sites for r in regions))
    m = len(regions)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp).reshape(len(block), m)


def product_moment(state: FreeState, spec) -> float:
    """``E[prod_j N(E_j)]`` over pairwise-disjoint regions.

    Raises
    ------
    RegionsOverlapError
        Overlapping regions, or a spec built with ``require_disjoint=False``
        whose regions overlap.
    TooLargeError
        More than ``MAX_TUPLES`` site tuples to enumerate.
    """
    if not isinstance(spec, MomentSpec):
        spec = MomentSpec(spec)
    check_disjoint(spec.regions)
    for r in spec.regions:
        r.check(state.dim)
    if not spec.regions:
        return 1.0
    if spec.n_tuples > MAX_TUPLES:
        raise TooLargeError(f"{spec.n_tuples} site tuples exceed the limit {MAX_TUPLES}")
    if any(len(r) == 0 for r in spec.regions):
        return 0.0
    if len(spec.regions) == 1:
        idx = spec.regions[0].index()
        return _real(complex(np.sum(np.diagonal(state.K)[idx])), "mean")
    partial = [
        complex(np.sum(_correlation_batch(state.K, chunk, state.statistics)))
        for chunk in _tuple_chunks(spec.regions)
    ]
    re = math.fsum(z.real for z in partial)
    im = math.fsum(z.imag for z in partial)
    return _real(complex(re, im), "product moment")


def mean_count(state: FreeState, r: RegionLike) -> float:
    return product_moment(state, MomentSpec([r]))


def closed_form_covariance(state: FreeState, r1: RegionLike, r2: RegionLike) -> float:
    """``-/+ sum_{x in R1, y in R2} |K(x, y)|^2`` for Fermi / Bose."""
    a = as_region(r1, state.dim).index()
    b = as_region(r2, state.dim).index()
    s = float(np.sum(np.abs(state.K[np.ix_(a, b)]) ** 2))
    return state.statistics.sign * s


def covariance(state: FreeState, r1: RegionLike, r2: RegionLike) -> float:
    """Exact ``<N1 N2> - <N1><N2>`` for disjoint regions.

    Computed from the product moments and checked against the closed form
    ``-/+ sum |K(x, y)|^2``; a disagreement beyond ``1e-10`` (relative to the
    size of the moments) raises :class:`InternalConsistencyError`.
    """
    a, b = as_region(r1, state.dim), as_region(r2, state.dim)
    check_disjoint([a, b])
    joint = product_moment(state, MomentSpec([a, b]))
    m1, m2 = mean_count(state, a), mean_count(state, b)
    cov = joint - m1 * m2
    closed = closed_form_covariance(state, a, b)
    scale = max(1.0, abs(joint), abs(m1 * m2))
    if abs(cov - closed) > CLOSED_FORM_TOL * scale:
        raise InternalConsistencyError(
            f"covariance {cov!r} disagrees with closed form {closed!r} on {a}, {b}"
        )
    return cov


def multi_region_bound_check(state: FreeState, regions: Sequence[RegionLike]) -> tuple[float, float, bool]:
    """Fermionic k-region bound ``E[prod N_i] <= prod E[N_i]``.

    Returns ``(lhs, rhs, conforming)`` with ``conforming = lhs <= rhs + 1e-10``.
    """
    if state.statistics is not Statistics.FERMI:
        raise WrongStatisticsError("the product bound holds for fermions only")
    regs = [as_region(r, state.dim) for r in regions]
    if len(regs) < 2:
        raise ValueError("need at least two regions")
    check_disjoint(regs)
    lhs = product_moment(state, MomentSpec(regs))
    rhs = math.prod(mean_count(state, r) for r in regs)
    return lhs, rhs, bool(lhs <= rhs + SIGN_SLACK)


def sign_scan(state: FreeState, regions: Sequence[RegionLike]) -> SignReport:
    """Exact covariance for every pair of ``regions`` and a sign verdict."""
    regs = [as_region(r, state.dim) for r in regions]
    check_disjoint(regs)
    pairs = tuple(
        (i, j, covariance(state, regs[i], regs[j]))
        for i, j in itertools.combinations(range(len(regs)), 2)
    )
    s = state.statistics.sign
    ok = all(s * c >= -SIGN_SLACK for _, _, c in pairs)
    return SignReport(state.statistics, pairs, ok)


def singletons(dim: int) -> list[Region]:
    return [Region([x]) for x in range(dim)]


# ---------------------------------------------------------------------
# CSV report
# ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def moment_report_rows(state: FreeState, regions: Sequence[RegionLike]) -> list[tuple[str, str, str]]:
    """Rows ``(region_ids, moment_kind, exact_value)`` for means, pair moments
    and pair covariances of ``regions``."""
    regs = [as_region(r, state.dim) for r in regions]
    check_disjoint(regs)
    rows = []
    for i, r in enumerate(regs):
        rows.append((str(i), "mean", _fmt(mean_count(state, r))))
    for i, j in itertools.combinations(range(len(regs)), 2):
        joint = product_moment(state, MomentSpec([regs[i], regs[j]]))
        rows.append((f"{i};{j}", "product", _fmt(joint)))
        rows.append((f"{i};{j}", "covariance", _fmt(covariance(state, regs[i], regs[j]))))
    return rows


def write_moment_report(path, state: FreeState, regions: Sequence[RegionLike]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_ids", "moment_kind", "exact_value"])
        w.writerows(moment_report_rows(state, regions))
