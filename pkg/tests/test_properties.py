"""Hypothesis-driven invariants across modules."""

import itertools

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from freeness.cli import parse_region_spec
from freeness.exact_moments import closed_form_covariance, covariance, product_moment
from freeness.fileio import read_kernel, write_kernel
from freeness.fock_oracle import free_fermion_distribution, two_pair_state, pure_state_distribution, pure_state_moments
from freeness.inference import estimate_covariance, freeness_test
from freeness.kernels import FreeState, evolve_kernel, random_kernel, random_unitary, restrict_kernel
from freeness.sampler import SampleBatch, sample_free

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

seeds = st.integers(0, 2**32 - 1)
stats = st.sampled_from(["fermi", "bose"])


def kernel(seed, statistics, m):
    return random_kernel(m, statistics, np.random.default_rng(seed))


@st.composite
def partitions(draw, m, max_parts=3):
    """A tuple of 1..max_parts disjoint nonempty regions of range(m)."""
    labels = draw(st.lists(st.integers(-1, max_parts - 1), min_size=m, max_size=m))
    regions = [sorted(i for i, l in enumerate(labels) if l == p) for p in range(max_parts)]
    regions = [r for r in regions if r]
    return regions or [[0]]


@SETTINGS
@given(seeds, stats, st.integers(2, 6), st.data())
def test_covariance_sign_and_closed_form(seed, statistics, m, data):
    s = FreeState.of(kernel(seed, statistics, m))
    regs = data.draw(partitions(m, 2))
    if len(regs) < 2:
        return
    cov = covariance(s, *regs)
    assert abs(cov - closed_form_covariance(s, *regs)) <= 1e-10
    assert s.statistics.sign * cov >= -1e-10


@SETTINGS
@given(seeds, stats, st.integers(2, 6), st.data())
def test_site_permutation_invariance(seed, statistics, m, data):
    k = kernel(seed, statistics, m)
    regs = data.draw(partitions(m))
    perm = np.random.default_rng(seed).permutation(m)
    # site x of the original becomes site perm[x]
    inv = np.argsort(perm)
    permuted = FreeState.from_matrix(k.entries[np.ix_(inv, inv)], statistics)
    moved = [[int(perm[x]) for x in r] for r in regs]
    assert abs(product_moment(FreeState.of(k), regs) - product_moment(permuted, moved)) <= 1e-10


@SETTINGS
@given(seeds, stats, st.integers(2, 7), st.data())
def test_window_consistency(seed, statistics, m, data):
    k = kernel(seed, statistics, m)
    window = data.draw(st.lists(st.integers(0, m - 1), min_size=1, max_size=m, unique=True))
    sub = restrict_kernel(k, window)
    regs = data.draw(partitions(len(window)))
    back = sorted(window)
    full_regs = [[back[i] for i in r] for r in regs]
    assert abs(product_moment(FreeState.of(k), full_regs) - product_moment(FreeState.of(sub), regs)) <= 1e-10


@SETTINGS
@given(seeds, st.integers(1, 6))
def test_fermion_distribution_normalized(seed, m):
    assert abs(free_fermion_distribution(kernel(seed, "fermi", m)).total() - 1.0) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_rotated_psi_two_routes(seed):
    psi = two_pair_state().rotated(random_unitary(5, np.random.default_rng(seed)))
    dist = pure_state_distribution(psi)
    assert abs(dist.total() - 1.0) <= 1e-10
    for x, y in itertools.combinations(range(5), 2):
        via_moments = pure_state_moments(psi, [[x], [y]]) - pure_state_moments(psi, [[x]]) * pure_state_moments(psi, [[y]])
        assert abs(dist.covariance([x], [y]) - via_moments) <= 1e-10


@SETTINGS
@given(seeds, stats, st.integers(2, 5))
def test_evolution_preserves_spectrum(seed, statistics, m):
    rng = np.random.default_rng(seed)
    k = random_kernel(m, statistics, rng)
    w0, w1 = k.eigenvalues(), evolve_kernel(k, random_unitary(m, rng)).eigenvalues()
    assert np.all(np.abs(w0 - w1) <= 1e-10 * max(1.0, np.abs(w0).max()))


@SETTINGS
@given(st.integers(0, 2**63 - 1), stats, st.integers(1, 5), st.integers(2, 8))
def test_sampling_independent_of_workers(seed, statistics, m, workers):
    s = FreeState.of(kernel(seed % 2**32, statistics, m))
    assert sample_free(s, 37, seed, 1) == sample_free(s, 37, seed, workers)


@SETTINGS
@given(seeds, st.integers(2, 5), st.integers(30, 200))
def test_covariance_estimate_permutation_equivariant(seed, m, n):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 3, size=(n, m))
    a = SampleBatch(counts, 0, {}, "bose")
    b = SampleBatch(counts[rng.permutation(n)], 0, {}, "bose")
    for x, y in itertools.combinations(range(m), 2):
        ea, eb = estimate_covariance(a, [x], [y]), estimate_covariance(b, [x], [y])
        assert np.isclose(ea.value, eb.value, rtol=1e-12, atol=1e-14)
        assert np.isclose(ea.stderr, eb.stderr, rtol=1e-12, atol=1e-14)
    assert freeness_test(a).verdict == freeness_test(b).verdict


@SETTINGS
@given(seeds, st.integers(2, 6), st.data())
def test_region_spec_round_trip(seed, m, data):
    regs = data.draw(partitions(m, 4))
    if len(regs) < 2:
        return
    text = ";".join("{" + ",".join(map(str, r)) + "}" for r in regs)
    fam = parse_region_spec(text, m)
    assert [list(r.sites) for r in fam] == regs


@SETTINGS
@given(seeds, stats, st.integers(1, 6))
def test_kernel_file_round_trip(tmp_path_factory, seed, statistics, m):
    k = kernel(seed, statistics, m)
    p = tmp_path_factory.mktemp("k") / "k.json"
    write_kernel(p, k)
    assert np.array_equal(read_kernel(p).entries, k.entries)
