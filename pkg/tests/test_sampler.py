import numpy as np
import pytest

from freeness.errors import WrongStatisticsError
from freeness.fock_oracle import free_fermion_distribution, two_pair_state, slater_state
from freeness.kernels import FreeState, random_kernel, random_projection_kernel, slater_kernel, validate_kernel
from freeness.sampler import (
    SampleBatch,
    draw_generator,
    gaussian_factor,
    sample_boson,
    sample_fermion,
    sample_free,
    sample_pure_state,
)

from conftest import SYM_HALF, state


def within(emp, exact, se, k=5.0):
    return abs(emp - exact) <= k * se + 1e-12


class TestFermion:
    def test_zero_kernel(self):
        b = sample_fermion(state(np.zeros((3, 3)), "fermi"), 200, seed=1)
        assert not b.counts.any()

    def test_projection_has_fixed_particle_number(self, rng):
        for r in range(5):
            b = sample_fermion(FreeState.of(random_projection_kernel(5, r, rng)), 500, seed=r)
            assert set(b.counts.sum(axis=1).tolist()) == {r}

    def test_symmetric_orbital_frequency(self):
        n = 100_000
        b = sample_fermion(state(SYM_HALF, "fermi"), n, seed=11)
        exact = free_fermion_distribution(validate_kernel(SYM_HALF, "fermi")).probability([1, 0])
        freq = np.mean((b.counts[:, 0] == 1) & (b.counts[:, 1] == 0))
        assert within(freq, exact, np.sqrt(exact * (1 - exact) / n))
        assert set(b.counts.sum(axis=1).tolist()) == {1}

    def test_configuration_frequencies(self, rng):
        k = random_kernel(3, "fermi", rng)
        n = 50_000
        b = sample_fermion(FreeState.of(k), n, seed=5)
        dist = free_fermion_distribution(k)
        codes = b.counts @ np.array([4, 2, 1])
        for code, p in enumerate(dist.probabilities):
            freq = np.mean(codes == code)
            assert within(freq, p, np.sqrt(max(p * (1 - p), 1e-12) / n))

    def test_wrong_statistics(self, bose_pair):
        with pytest.raises(WrongStatisticsError):
            sample_fermion(bose_pair, 10)


class TestBoson:
    def test_zero_kernel(self):
        assert not sample_boson(state(np.zeros((2, 2)), "bose"), 100, seed=3).counts.any()

    def test_diagonal_is_geometric(self):
        lam = 1.3
        n = 100_000
        c = sample_boson(state([[lam]], "bose"), n, seed=4).counts[:, 0]
        var = lam + lam**2
        assert within(c.mean(), lam, np.sqrt(var / n))
        q = lam / (1 + lam)
        for k in range(4):
            p = (1 - q) * q**k
            assert within(np.mean(c == k), p, np.sqrt(p * (1 - p) / n))

    def test_pair_covariance(self, bose_pair):
        n = 100_000
        c = sample_boson(bose_pair, n, seed=8).counts.astype(float)
        d = c - c.mean(axis=0)
        emp = np.sum(d[:, 0] * d[:, 1]) / (n - 1)
        se = np.sqrt((np.mean(d[:, 0] ** 2 * d[:, 1] ** 2) - emp**2) / n)
        assert within(emp, 0.25, se)

    def test_gaussian_factor(self, rng):
        k = random_kernel(4, "bose", rng).entries
        f = gaussian_factor(k)
        np.testing.assert_allclose(f @ f.conj().T, k, atol=1e-12)

    def test_wrong_statistics(self, half_projection):
        with pytest.raises(WrongStatisticsError):
            sample_boson(half_projection, 10)


class TestPure:
    def test_psi_support(self):
        b = sample_pure_state(two_pair_state(), 2000, seed=9)
        rows = {tuple(r) for r in b.counts.tolist()}
        assert rows == {(0, 1, 1, 0, 0), (0, 0, 0, 1, 1)}

    def test_psi_frequency(self):
        n = 10_000
        b = sample_pure_state(two_pair_state(), n, seed=10)
        freq = np.mean(b.counts[:, 1] == 1)
        assert within(freq, 0.5, np.sqrt(0.25 / n))

    def test_single_slater_matches_fermion_sampler(self, rng):
        u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        phi = u[:, :2].T
        n = 40_000
        a = sample_pure_state(slater_state(phi), n, seed=1).counts.astype(float)
        b = sample_fermion(FreeState.of(slater_kernel(phi)), n, seed=2).counts.astype(float)
        se = np.sqrt(a.var(axis=0) / n + b.var(axis=0) / n)
        assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 5 * se + 1e-12)
        ca, cb = np.cov(a.T), np.cov(b.T)
        iu = np.triu_indices(4, 1)
        assert np.all(np.abs(ca[iu] - cb[iu]) <= 5 * np.sqrt(2 * 0.25 / n) + 1e-12)


class TestDeterminism:
    @pytest.mark.parametrize("stats", ["fermi", "bose"])
    def test_same_seed_same_batch(self, rng, stats):
        s = FreeState.of(random_kernel(4, stats, rng))
        a = sample_free(s, 300, seed=42)
        assert a == sample_free(s, 300, seed=42)
        assert a == sample_free(s, 300, seed=42, workers=4)
        assert not np.array_equal(a.counts, sample_free(s, 300, seed=43).counts)

    def test_prefix_stable(self, rng):
        s = FreeState.of(random_kernel(4, "fermi", rng))
        np.testing.assert_array_equal(sample_fermion(s, 50, seed=1).counts, sample_fermion(s, 120, seed=1).counts[:50])

    def test_draw_streams_are_distinct(self):
        assert draw_generator(1, 0).random() != draw_generator(1, 1).random()
        assert draw_generator(1, 5).random() == draw_generator(1, 5).random()


def test_batch_validation():
    with pytest.raises(ValueError):
        SampleBatch(np.array([[2, 0]]), 0, {}, "fermi")
    with pytest.raises(ValueError):
        SampleBatch(np.array([[-1, 0]]), 0, {}, "bose")


def test_boson_factorial_moments(rng):
    """Factorial moments up to order 3 against the permanent formulas."""
    from freeness.exact_moments import correlation_function

    s = FreeState.of(random_kernel(3, "bose", rng, max_eigenvalue=1.0))
    n = 100_000
    c = sample_boson(s, n, seed=21).counts.astype(float)
    checks = {
        (0,): c[:, 0],
        (1, 1): c[:, 1] * (c[:, 1] - 1),
        (0, 2): c[:, 0] * c[:, 2],
        (2, 2, 2): c[:, 2] * (c[:, 2] - 1) * (c[:, 2] - 2),
        (0, 0, 1): c[:, 0] * (c[:, 0] - 1) * c[:, 1],
        (0, 1, 2): c[:, 0] * c[:, 1] * c[:, 2],
    }
    for sites, f in checks.items():
        exact = correlation_function(s, sites)
        assert within(f.mean(), exact, f.std(ddof=1) / np.sqrt(n)), sites
