"""Free and nonfree many-particle occupation statistics on discrete modes.

Exact moments, exact samplers and brute-force oracles for determinantal
(free fermion) and permanental (free boson) states, and a test for
opposite-sign count correlations that certify a state is not free.
"""

from .errors import FreenessError
from .exact_moments import (
    MomentSpec,
    SignReport,
    correlation_function,
    covariance,
    multi_region_bound_check,
    product_moment,
    sign_scan,
)
from .fock_oracle import (
    ExactDistribution,
    PureFockSuperposition,
    free_boson_distribution,
    free_boson_moments,
    free_fermion_distribution,
    independence_check,
    pure_state_distribution,
    pure_state_moments,
    two_pair_state,
)
from .inference import (
    Correction,
    FreenessVerdict,
    MomentEstimate,
    RegionFamily,
    Verdict,
    count_in_region,
    estimate_covariance,
    freeness_test,
    pair_correlation_map,
)
from .kernels import (
    FreeState,
    KernelMatrix,
    OneParticleUnitary,
    Region,
    Statistics,
    evolve_kernel,
    restrict_kernel,
    slater_kernel,
    thermal_kernel,
    validate_kernel,
)
from .sampler import SampleBatch, sample_boson, sample_fermion, sample_free, sample_pure_state

__version__ = "0.1.0"
