import itertools
import math

import numpy as np
import pytest

from freeness.errors import (
    BoseRotationUnsupportedError,
    SectorMismatchError,
    TooManySitesError,
    WrongStatisticsError,
    RegionsOverlapError,
)
from freeness.exact_moments import covariance, product_moment
from freeness.fock_oracle import (
    PureFockSuperposition,
    free_boson_distribution,
    free_boson_moments,
    free_fermion_distribution,
    independence_check,
    l_ensemble_probability,
    naive_permanent,
    two_pair_state,
    pure_state_distribution,
    pure_state_moments,
    repeated_permanent,
    slater_state,
    write_distribution,
)
from freeness.kernels import (
    FreeState,
    Statistics,
    evolve_kernel,
    random_kernel,
    random_unitary,
    slater_kernel,
    validate_kernel,
)

from conftest import SYM_HALF


class TestFreeFermion:
    def test_symmetric_orbital(self):
        d = free_fermion_distribution(validate_kernel(SYM_HALF, "fermi"))
        assert d.probability([1, 0]) == pytest.approx(0.5)
        assert d.probability([0, 1]) == pytest.approx(0.5)
        assert d.probability([0, 0]) == 0.0 and d.probability([1, 1]) == 0.0

    def test_vacuum(self):
        d = free_fermion_distribution(validate_kernel(np.zeros((3, 3)), "fermi"))
        assert d.probability([0, 0, 0]) == 1.0 and d.total() == 1.0

    def test_diagonal_is_bernoulli_product(self):
        p = np.array([0.1, 0.6, 0.35])
        d = free_fermion_distribution(validate_kernel(np.diag(p), "fermi"))
        for c in itertools.product([0, 1], repeat=3):
            expected = math.prod(p[i] if c[i] else 1 - p[i] for i in range(3))
            assert d.probability(c) == pytest.approx(expected, abs=1e-15)

    def test_l_ensemble_agreement(self, rng):
        for _ in range(20):
            m = int(rng.integers(1, 7))
            w = rng.uniform(0.05, 0.95, size=m)
            u = random_unitary(m, rng)
            k = validate_kernel((u * w) @ u.conj().T, "fermi")
            d = free_fermion_distribution(k)
            for row, p in zip(d.support, d.probabilities):
                assert abs(p - l_ensemble_probability(k, np.flatnonzero(row))) <= 1e-10

    def test_lexicographic_support(self, rng):
        d = free_fermion_distribution(random_kernel(3, "fermi", rng))
        assert ["".join(map(str, r)) for r in d.support] == [f"{i:03b}" for i in range(8)]

    def test_sums_to_one(self, rng):
        for _ in range(20):
            k = random_kernel(int(rng.integers(1, 9)), "fermi", rng)
            assert abs(free_fermion_distribution(k).total() - 1.0) <= 1e-10

    def test_moments_match_determinants(self, rng):
        for _ in range(20):
            m = int(rng.integers(2, 7))
            k = random_kernel(m, "fermi", rng)
            d = free_fermion_distribution(k)
            regs = [[0], list(range(1, m))]
            assert d.moment(regs) == pytest.approx(product_moment(FreeState.of(k), regs), abs=1e-10)

    def test_cap_and_statistics(self):
        with pytest.raises(TooManySitesError):
            free_fermion_distribution(validate_kernel(np.eye(21) * 0.5, "fermi"))
        with pytest.raises(WrongStatisticsError):
            free_fermion_distribution(validate_kernel([[1.0]], "bose"))


class TestFreeBoson:
    def test_repeated_region_rejected(self):
        with pytest.raises(RegionsOverlapError):
            free_boson_moments(validate_kernel([[1.0]], "bose"), [[0], [0]])

    def test_diagonal(self):
        lam = [0.5, 1.5, 3.0]
        k = validate_kernel(np.diag(lam), "bose")
        assert free_boson_moments(k, [[0], [1], [2]]) == pytest.approx(math.prod(lam))

    def test_pair_permanent(self):
        k = validate_kernel([[1.0, 0.5], [0.5, 1.0]], "bose")
        assert free_boson_moments(k, [[0], [1]]) == pytest.approx(1.25)

    def test_naive_permanent(self):
        assert naive_permanent(np.ones((4, 4))) == 24

    def test_single_mode_geometric(self):
        lam = 0.8
        d = free_boson_distribution(validate_kernel([[lam]], "bose"))
        q = lam / (1 + lam)
        for n in range(10):
            assert d.probability([n]) == pytest.approx((1 - q) * q**n, rel=1e-12)

    def test_probability_formula_against_grouped_ryser(self, rng):
        k = random_kernel(3, "bose", rng, max_eigenvalue=1.0)
        d = free_boson_distribution(k)
        q = np.linalg.solve(np.eye(3) + k.entries, k.entries)
        det = np.prod(1 + k.eigenvalues())
        for n in [(0, 0, 0), (1, 0, 2), (2, 2, 1), (0, 3, 0)]:
            expected = repeated_permanent(q, np.array(n)).real / det / math.prod(math.factorial(x) for x in n)
            assert d.probability(n) == pytest.approx(expected, rel=1e-10, abs=1e-16)

    def test_moments_match_permanents(self, rng):
        for _ in range(5):
            m = int(rng.integers(2, 5))
            k = random_kernel(m, "bose", rng, max_eigenvalue=1.0)
            d = free_boson_distribution(k)
            assert d.tail_mass < 1e-10
            assert abs(d.total() - 1.0) <= 1e-10
            regs = [[0], list(range(1, m))]
            assert d.moment(regs) == pytest.approx(product_moment(FreeState.of(k), regs), abs=1e-8)

    def test_explicit_cutoff_reports_tail(self):
        k = validate_kernel([[2.0]], "bose")
        with pytest.warns(UserWarning):
            d = free_boson_distribution(k, n_total_max=3)
        assert d.tail_mass == pytest.approx((2 / 3) ** 4)


class TestPureStates:
    def test_two_pair_state(self):
        d = pure_state_distribution(two_pair_state()).nonzero()
        assert d.probability_of_set({1, 2}) == pytest.approx(0.5)
        assert d.probability_of_set({3, 4}) == pytest.approx(0.5)
        assert len(d.probabilities) == 2

    def test_two_pair_state_moments(self):
        psi = two_pair_state()
        assert pure_state_moments(psi, [[1], [2]]) == pytest.approx(0.5)
        assert pure_state_moments(psi, [[1], [3]]) == 0.0
        for i in range(1, 5):
            assert pure_state_moments(psi, [[i]]) == pytest.approx(0.5)
        d = pure_state_distribution(psi)
        assert d.covariance([1], [2]) == pytest.approx(0.25)
        assert d.covariance([1], [3]) == pytest.approx(-0.25)

    def test_vacuum(self):
        psi = PureFockSuperposition("fermi", 3, [(1.0, (0, 0, 0))])
        assert pure_state_distribution(psi).probability([0, 0, 0]) == 1.0

    def test_single_slater_matches_determinantal(self, rng):
        for _ in range(10):
            m, r = int(rng.integers(2, 7)), None
            r = int(rng.integers(1, m + 1))
            u = random_unitary(m, rng)
            phi = u[:, :r].T
            direct = pure_state_distribution(slater_state(phi))
            oracle = free_fermion_distribution(slater_kernel(phi))
            for row, p in zip(direct.support, direct.probabilities):
                assert p == pytest.approx(oracle.probability(row), abs=1e-10)

    def test_rotated_slater_matches_evolved_kernel(self, rng):
        occ = (1, 0, 1, 0)
        psi = PureFockSuperposition("fermi", 4, [(1.0, occ)])
        u = random_unitary(4, rng)
        k = evolve_kernel(validate_kernel(np.diag(occ), "fermi"), u)
        d = pure_state_distribution(psi.rotated(u))
        oracle = free_fermion_distribution(k)
        for row, p in zip(d.support, d.probabilities):
            assert p == pytest.approx(oracle.probability(row), abs=1e-10)

    def test_rotated_psi_two_routes(self, rng):
        psi = two_pair_state()
        for _ in range(5):
            rot = psi.rotated(random_unitary(5, rng))
            d = pure_state_distribution(rot)
            assert abs(d.total() - 1) <= 1e-10
            for a, b in itertools.combinations(range(5), 2):
                direct = pure_state_moments(rot, [[a], [b]]) - pure_state_moments(rot, [[a]]) * pure_state_moments(rot, [[b]])
                assert abs(direct - d.covariance([a], [b])) <= 1e-10

    def test_number_states_conform(self, rng):
        for _ in range(20):
            occ = tuple(int(v) for v in rng.integers(0, 2, size=5))
            d = pure_state_distribution(PureFockSuperposition("fermi", 5, [(1j, occ)]))
            for a, b in itertools.combinations(range(5), 2):
                assert d.covariance([a], [b]) <= 1e-10

    def test_validation(self):
        with pytest.raises(SectorMismatchError):
            PureFockSuperposition("fermi", 3, [(0.6, (1, 0, 0)), (0.8, (1, 1, 0))])
        with pytest.raises(ValueError):
            PureFockSuperposition("fermi", 3, [(0.6, (1, 0, 0)), (0.6, (0, 1, 0))])
        with pytest.raises(ValueError):
            PureFockSuperposition("fermi", 2, [(1.0, (2, 0))])
        with pytest.raises(TooManySitesError):
            pure_state_distribution(PureFockSuperposition("fermi", 13, [(1.0, (1,) + (0,) * 12)]))

    def test_bose_superposition(self, rng):
        c = 1 / math.sqrt(2)
        psi = PureFockSuperposition("bose", 2, [(c, (2, 0)), (c, (0, 2))])
        d = pure_state_distribution(psi)
        assert d.covariance([0], [1]) == pytest.approx(-1.0)
        with pytest.raises(BoseRotationUnsupportedError):
            pure_state_distribution(psi.rotated(random_unitary(2, rng)))


class TestIndependence:
    def test_block_diagonal(self, rng):
        k = np.zeros((5, 5), dtype=complex)
        k[:2, :2] = random_kernel(2, "fermi", rng).entries
        k[2:, 2:] = random_kernel(3, "fermi", rng).entries
        assert independence_check(validate_kernel(k, "fermi"), [0, 1], [2, 3, 4])

    def test_symmetric_orbital(self):
        k = validate_kernel(SYM_HALF, "fermi")
        assert covariance(FreeState.of(k), [0], [1]) == pytest.approx(-0.25)
        assert not independence_check(k, [0], [1])

    def test_zero_covariance_implies_factorization(self, rng):
        # sites 0 and 3 decoupled from 1, 2 but regions also skip site 4
        k = np.zeros((5, 5), dtype=complex)
        a = random_kernel(3, "fermi", rng).entries
        b = random_kernel(2, "fermi", rng).entries
        ia, ib = [0, 3, 4], [1, 2]
        k[np.ix_(ia, ia)] = a
        k[np.ix_(ib, ib)] = b
        s = FreeState.from_matrix(k, "fermi")
        assert covariance(s, [0, 3], [1, 2]) == pytest.approx(0.0, abs=1e-15)
        assert independence_check(s.kernel, [0, 3], [1, 2])


def test_write_distribution(tmp_path):
    path = tmp_path / "d.csv"
    write_distribution(path, pure_state_distribution(two_pair_state()))
    lines = path.read_text().splitlines()
    assert lines[0] == "configuration,probability"
    rows = dict(l.split(",") for l in lines[1:])
    assert float(rows["01100"]) == pytest.approx(0.5) and float(rows["00011"]) == pytest.approx(0.5)
    assert len(lines) == 1 + math.comb(5, 2)
