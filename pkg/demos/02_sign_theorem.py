"""
Sign of count covariances in free states.

For disjoint regions the covariance of particle counts is
-sum |K(x, y)|^2 for fermions and +sum |K(x, y)|^2 for bosons.  The
script sweeps random kernels and reports the worst signed covariance,
along with the k-region product bound for fermions.

Run:
    python3 demos/02_sign_theorem.py [n_kernels]
"""

import sys

import numpy as np

from freeness import FreeState
from freeness.exact_moments import closed_form_covariance, multi_region_bound_check, sign_scan, singletons
from freeness.kernels import random_kernel

n_kernels = int(sys.argv[1]) if len(sys.argv) > 1 else 300
rng = np.random.default_rng(2)

for stats in ("fermi", "bose"):
    worst, gap = np.inf, 0.0
    for _ in range(n_kernels):
        m = int(rng.integers(2, 9))
        s = FreeState.of(random_kernel(m, stats, rng))
        report = sign_scan(s, singletons(m))
        assert report.all_conforming, report.violations()
        for i, j, cov in report.pairs:
            worst = min(worst, s.statistics.sign * cov)
            gap = max(gap, abs(cov - closed_form_covariance(s, [i], [j])))
    print(f"{stats}: {n_kernels} kernels, min signed covariance {worst:+.3e}, "
          f"max closed-form gap {gap:.1e}")

# fermions: E[N1 N2 N3] <= E[N1] E[N2] E[N3] for three disjoint blocks
s = FreeState.of(random_kernel(6, "fermi", rng))
blocks = [[0, 1], [2, 3], [4, 5]]
lhs, rhs, ok = multi_region_bound_check(s, blocks)
print(f"\nthree-block bound: {lhs:.6f} <= {rhs:.6f}  ({ok})")

# correlations are not always tiny: a single orbital spread over two sites
s = FreeState.from_matrix([[0.5, 0.5], [0.5, 0.5]], "fermi")
print("one fermion in (|0> + |1>)/sqrt(2): cov =", sign_scan(s, singletons(2)).pairs[0][2])
s = FreeState.from_matrix([[1.0, 0.5], [0.5, 1.0]], "bose")
print("bose pair kernel [[1, .5], [.5, 1]]:  cov =", sign_scan(s, singletons(2)).pairs[0][2])

