"""
Building kernels and looking at them through a window.

A free state on M sites is fixed by its one-particle kernel K.  Here we
build a Slater determinant, a thermal state on a tight-binding chain and
a rotated copy of each, and check that moments of the restricted kernel
agree with moments of the full one.

Run:
    python3 demos/01_kernels_and_windows.py
"""

import numpy as np

from freeness import FreeState
from freeness.exact_moments import covariance, mean_count, product_moment
from freeness.kernels import evolve_kernel, random_unitary, restrict_kernel, slater_kernel, thermal_kernel

rng = np.random.default_rng(7)
M = 6

# hopping chain with open ends
h = -(np.eye(M, k=1) + np.eye(M, k=-1))
energies, modes = np.linalg.eigh(h)

# ground state with the three lowest orbitals filled
slater = slater_kernel(modes[:, :3].T, label="half filling")
print("Slater trace (particle number):", round(np.trace(slater.entries).real, 12))
print("idempotent:", np.allclose(slater.entries @ slater.entries, slater.entries))

# the same chain at finite temperature, both statistics
fermi = thermal_kernel(h, beta=2.0, mu=0.0, statistics="fermi")
bose = thermal_kernel(h, beta=2.0, mu=energies[0] - 0.3, statistics="bose")
print("Fermi occupations:", np.round(np.diag(fermi.entries).real, 4))
print("Bose occupations: ", np.round(np.diag(bose.entries).real, 4))

# free dynamics keeps the spectrum
u = random_unitary(M, rng)
moved = evolve_kernel(fermi, u)
print("spectrum kept under U K U^+:", np.allclose(fermi.eigenvalues(), moved.eigenvalues(), atol=1e-12))

# a window R = {1, 2, 4}: the restricted kernel describes the same counts
window = [1, 2, 4]
sub = FreeState.of(restrict_kernel(fermi, window))
full = FreeState.of(fermi)
print()
print("window", window)
print("  <N_1> full / window:", mean_count(full, [1]), mean_count(sub, [0]))
print("  <N_1 N_2 N_4> full / window:",
      product_moment(full, [[1], [2], [4]]), product_moment(sub, [[0], [1], [2]]))
print("  cov({1},{2,4}) full / window:", covariance(full, [1], [2, 4]), covariance(sub, [0], [1, 2]))
