"""
Exact sampling and what it reproduces.

Draws configurations from a random free fermion kernel and a random free
boson kernel, then compares the empirical site means and pair
covariances against the exact values.  The last part shows that the
batch does not depend on the number of worker threads.

Run:
    python3 demos/03_sampling.py
"""

import itertools
import time

import numpy as np

from freeness import FreeState
from freeness.exact_moments import closed_form_covariance
from freeness.inference import estimate_covariance
from freeness.kernels import random_kernel, random_projection_kernel
from freeness.sampler import sample_free

rng = np.random.default_rng(3)
n = 100_000

for stats in ("fermi", "bose"):
    s = FreeState.of(random_kernel(4, stats, rng))
    t0 = time.perf_counter()
    batch = sample_free(s, n, seed=11, workers=4)
    print(f"\n{stats}: {n} draws in {time.perf_counter() - t0:.2f}s")
    c = batch.counts.astype(float)
    for x in range(s.dim):
        se = c[:, x].std(ddof=1) / np.sqrt(n)
        print(f"  <N_{x}>  exact {s.K[x, x].real:.4f}  sampled {c[:, x].mean():.4f}  (+/- {se:.4f})")
    for x, y in itertools.combinations(range(s.dim), 2):
        est = estimate_covariance(batch, [x], [y])
        exact = closed_form_covariance(s, [x], [y])
        print(f"  cov({x},{y}) exact {exact:+.4f}  sampled {est.value:+.4f}  "
              f"z = {(est.value - exact) / est.stderr:+.2f}")

# projections carry a fixed particle number
k = random_projection_kernel(6, 2, rng)
counts = sample_free(FreeState.of(k), 5000, seed=1).counts
print("\nrank-2 projection, particle numbers seen:", sorted(set(counts.sum(axis=1).tolist())))

s = FreeState.of(random_kernel(5, "fermi", rng))
same = all(sample_free(s, 2000, seed=5, workers=w) == sample_free(s, 2000, seed=5) for w in (2, 3, 8))
print("identical batches for 1, 2, 3 and 8 workers:", same)
