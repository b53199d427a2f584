"""
Count covariances from samples and the opposite-sign correlation test.

A free fermion state never shows a positive covariance between counts in
disjoint regions, a free boson state never a negative one.  Rejecting the
free-state sign for some pair therefore certifies that the state is not
free; failing to reject says nothing about freeness.
"""

from __future__ import annotations

import enum
import itertools
import json
import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.stats import norm

from .errors import TooFewSamplesError
from .kernels import Region, RegionLike, Statistics, as_region, check_disjoint
from .sampler import SampleBatch

log = logging.getLogger(__name__)

MIN_TEST_SAMPLES = 30
DEFAULT_BOOTSTRAP = 1000


class Correction(str, enum.Enum):
    BONFERRONI = "bonferroni"
    NONE = "none"


class Verdict(str, enum.Enum):
    NONFREE_DETECTED = "NonfreeDetected"
    CONSISTENT_WITH_FREE = "ConsistentWithFree"


class DegenerateVarianceWarning(UserWarning):
    """A covariance with the violating sign had zero estimated spread."""


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    n: int


@dataclass(frozen=True)
class RegionFamily:
    """At least two pairwise-disjoint regions."""

    regions: tuple[Region, ...]

    def __init__(self, regions: Iterable[RegionLike]):
        regs = tuple(as_region(r) for r in regions)
        if len(regs) < 2:
            raise ValueError("a region family needs at least two regions")
        check_disjoint(regs)
        object.__setattr__(self, "regions", regs)

    @classmethod
    def singletons(cls, dim: int) -> "RegionFamily":
        return cls([[x] for x in range(dim)])

    def check(self, dim: int) -> "RegionFamily":
        for r in self.regions:
            r.check(dim)
        return self

    def __iter__(self):
        return iter(self.regions)

    def __len__(self) -> int:
        return len(self.regions)

    def __str__(self) -> str:
        return ";".join(str(r) for r in self.regions)


@dataclass(frozen=True)
class PairResult:
    i: int
    j: int
    region_i: Region
    region_j: Region
    covariance: MomentEstimate
    z: float
    p_value: float
    p_corrected: float
    degenerate: bool = False


@dataclass(frozen=True)
class FreenessVerdict:
    statistics: Statistics
    pair_results: tuple[PairResult, ...]
    alpha: float
    correction: Correction
    verdict: Verdict
    n: int
    method: str = "delta"

    @property
    def detected(self) -> bool:
        return self.verdict is Verdict.NONFREE_DETECTED

    def violating_pairs(self) -> list[PairResult]:
        s = self.statistics.sign
        return [r for r in self.pair_results if r.p_corrected < self.alpha and s * r.covariance.value < 0]

    def to_dict(self) -> dict:
        return {
            "statistics": self.statistics.value,
            "n": self.n,
            "alpha": self.alpha,
            "correction": self.correction.value,
            "method": self.method,
            "verdict": self.verdict.value,
            "pairs": [
                {
                    "i": r.i,
                    "j": r.j,
                    "region_i": list(r.region_i.sites),
                    "region_j": list(r.region_j.sites),
                    "covariance": r.covariance.value,
                    "stderr": r.covariance.stderr,
                    "z": r.z,
                    "p_value": r.p_value,
                    "p_corrected": r.p_corrected,
                    "degenerate": r.degenerate,
                }
                for r in self.pair_results
            ],
        }


def write_verdict(path, verdict: FreenessVerdict) -> None:
    """JSON verdict report; floats are written with full round-trip precision."""
    with open(path, "w") as fh:
        json.dump(verdict.to_dict(), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


# ---------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------


def count_in_region(counts, r: RegionLike) -> int:
    """Number of particles of one configuration inside ``r``."""
    c = np.asarray(counts)
    idx = as_region(r, c.shape[-1]).index()
    return int(c[idx].sum())


def region_counts(batch: SampleBatch, r: RegionLike) -> np.ndarray:
    idx = as_region(r, batch.dim).index()
    return batch.counts[:, idx].sum(axis=1)


def _covariance_variance(mu22, cov, var_a, var_b, n):
    """Variance of the ``n - 1`` sample covariance from plug-in moments,

        (mu22 - (n - 2) / (n - 1) cov^2 + var_a var_b / (n - 1)) / n

    The leading term is the usual delta-method ``(mu22 - cov^2) / n``; the
    ``1/n^2`` terms keep the estimate positive when the leading term
    vanishes (e.g. two perfectly correlated fair coins)."""
    v = (mu22 - (n - 2) / (n - 1) * cov**2 + var_a * var_b / (n - 1)) / n
    return np.clip(v, 0.0, None)


def _delta_stderr(a: np.ndarray, b: np.ndarray, cov: float) -> float:
    n = len(a)
    da = a - a.mean()
    db = b - b.mean()
    mu22 = np.mean(da**2 * db**2)
    var_a = np.sum(da**2) / (n - 1)
    var_b = np.sum(db**2) / (n - 1)
    return float(np.sqrt(_covariance_variance(mu22, cov, var_a, var_b, n)))


def _bootstrap(a: np.ndarray, b: np.ndarray, resamples: int, rng: np.random.Generator) -> np.ndarray:
    n = len(a)
    out = np.empty(resamples)
    for t in range(resamples):
        idx = rng.integers(0, n, size=n)
        out[t] = np.cov(a[idx], b[idx], ddof=1)[0, 1]
    return out


def estimate_covariance(
    batch: SampleBatch,
    r1: RegionLike,
    r2: RegionLike,
    method: str = "delta",
    resamples: int = DEFAULT_BOOTSTRAP,
    seed: Optional[int] = None,
) -> MomentEstimate:
    """Sample covariance of the region counts (denominator ``n - 1``).

    ``method='delta'`` gives the plug-in fourth-moment stderr (see
    :func:`_covariance_variance`), ``'bootstrap'``
    the standard deviation of ``resamples`` percentile-bootstrap replicates.
    """
    a_reg, b_reg = as_region(r1, batch.dim), as_region(r2, batch.dim)
    check_disjoint([a_reg, b_reg])
    n = batch.n
    if n < 2:
        raise TooFewSamplesError(f"need at least 2 draws, got {n}")
    a = region_counts(batch, a_reg).astype(float)
    b = region_counts(batch, b_reg).astype(float)
    cov = float(np.sum((a - a.mean()) * (b - b.mean())) / (n - 1))
    if method == "delta":
        se = _delta_stderr(a, b, cov)
    elif method == "bootstrap":
        rng = np.random.default_rng(batch.seed if seed is None else seed)
        se = float(np.std(_bootstrap(a, b, resamples, rng), ddof=1))
    else:
        raise ValueError(f"unknown stderr method {method!r}")
    return MomentEstimate(cov, se, n)


def pair_correlation_map(batch: SampleBatch) -> np.ndarray:
    """``M x M`` sample covariance matrix of the site counts."""
    if batch.n < 2:
        raise TooFewSamplesError(f"need at least 2 draws, got {batch.n}")
    return np.atleast_2d(np.cov(batch.counts.T.astype(float), ddof=1))


def pair_correlation_stderr(batch: SampleBatch) -> np.ndarray:
    """Delta-method stderr for every entry of :func:`pair_correlation_map`."""
    c = batch.counts.astype(float)
    d = c - c.mean(axis=0)
    n = batch.n
    cov = d.T @ d / (n - 1)
    mu22 = (d**2).T @ (d**2) / n
    var = np.diagonal(cov)
    return np.sqrt(_covariance_variance(mu22, cov, var[:, None], var[None, :], n))


# ---------------------------------------------------------------------
# Test
# ---------------------------------------------------------------------


def _one_sided_p(value: float, se: float, stats: Statistics) -> tuple[float, float, bool]:
    """p-value against the free-state sign; returns ``(z, p, degenerate)``."""
    violating = stats.sign * value < 0
    if se == 0.0:
        if violating:
            return (np.inf if value > 0 else -np.inf), 0.0, True
        return 0.0, 1.0, False
    z = value / se
    # alternative: covariance > 0 for fermions, < 0 for bosons
    p = norm.sf(z) if stats is Statistics.FERMI else norm.cdf(z)
    return float(z), float(p), False


def freeness_test(
    batch: SampleBatch,
    statistics=None,
    family: Optional[RegionFamily] = None,
    alpha: float = 0.05,
    correction=Correction.BONFERRONI,
    method: str = "delta",
    resamples: int = DEFAULT_BOOTSTRAP,
) -> FreenessVerdict:
    """One-sided opposite-sign test over every pair of ``family``.

    For each pair ``H0`` is "the covariance has the free-state sign" (``<= 0``
    fermions, ``>= 0`` bosons), tested with ``z = cov / stderr`` against the
    standard normal.  Bonferroni multiplies each p-value by the number of
    pairs.  ``NonfreeDetected`` is returned when some corrected p-value is
    below ``alpha``; otherwise ``ConsistentWithFree``, which is a
    non-rejection and not evidence of freeness.

    Parameters
    ----------
    batch : SampleBatch
    statistics : {'fermi', 'bose'}, optional
        Defaults to the statistics recorded in the batch.
    family : RegionFamily, optional
        Defaults to all singleton sites.
    alpha : float
        Significance level in ``(0, 0.5]``.
    correction : {'bonferroni', 'none'}
    method : {'delta', 'bootstrap'}
    """
    stats = Statistics.parse(statistics if statistics is not None else batch.statistics)
    corr = Correction(correction)
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    if batch.n < MIN_TEST_SAMPLES:
        raise TooFewSamplesError(f"the test needs at least {MIN_TEST_SAMPLES} draws, got {batch.n}")
    fam = (family if family is not None else RegionFamily.singletons(batch.dim)).check(batch.dim)
    pairs = list(itertools.combinations(range(len(fam)), 2))
    factor = len(pairs) if corr is Correction.BONFERRONI else 1
    rng = np.random.default_rng(batch.seed)

    results = []
    for i, j in pairs:
        ri, rj = fam.regions[i], fam.regions[j]
        est = estimate_covariance(batch, ri, rj, method="delta")
        z, p, degenerate = _one_sided_p(est.value, est.stderr, stats)
        if method == "bootstrap" and not degenerate and est.stderr > 0:
            a = region_counts(batch, ri).astype(float)
            b = region_counts(batch, rj).astype(float)
            reps = _bootstrap(a, b, resamples, rng)
            est = MomentEstimate(est.value, float(np.std(reps, ddof=1)), est.n)
            free_side = reps <= 0 if stats is Statistics.FERMI else reps >= 0
            p = float((np.sum(free_side) + 1) / (resamples + 1))
        elif method not in ("delta", "bootstrap"):
            raise ValueError(f"unknown stderr method {method!r}")
        if degenerate:
            warnings.warn(
                f"pair ({ri}, {rj}): zero spread with violating covariance {est.value:.3e}; p set to 0",
                DegenerateVarianceWarning,
                stacklevel=2,
            )
        results.append(PairResult(i, j, ri, rj, est, z, p, min(1.0, p * factor), degenerate))

    s = stats.sign
    detected = any(r.p_corrected < alpha and s * r.covariance.value < 0 for r in results)
    verdict = Verdict.NONFREE_DETECTED if detected else Verdict.CONSISTENT_WITH_FREE
    log.info("freeness test: %s (%d pairs, n=%d)", verdict.value, len(results), batch.n)
    return FreenessVerdict(stats, tuple(results), float(alpha), corr, verdict, batch.n, method)
