import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sparcska import (CodeParams, HashSpec, SourceModel, SparseCoeffs, beta_to_bits, bits_to_beta,
                      choose_key_length, estimate_leakage, estimate_uniformity, secret_key_rate,
                      toeplitz_hash)
from sparcska.privacy import hex_to_key, independence_null_bound, key_to_hex, toeplitz_matrix
from sparcska.errors import DomainError, ShapeError, SizingError


def expected_plugin_tv(alphabet, samples):
    # exact mean of the plug-in distance for a truly uniform source
    b = np.arange(samples + 1)
    pmf = stats.binom.pmf(b, samples, 1.0 / alphabet)
    return 0.5 * alphabet * float(np.sum(pmf * np.abs(b / samples - 1.0 / alphabet)))


class TestBits:
    def test_big_endian(self):
        p = CodeParams(n=8, l_sections=2, m_per_section=8, m_inner=2)
        np.testing.assert_array_equal(beta_to_bits(SparseCoeffs((5, 1)), p), [1, 0, 1, 0, 0, 1])

    @given(st.lists(st.integers(0, 63), min_size=1, max_size=10))
    def test_round_trip(self, sections):
        p = CodeParams(n=8, l_sections=len(sections), m_per_section=64, m_inner=4)
        beta = SparseCoeffs(tuple(sections))
        bits = beta_to_bits(beta, p)
        assert bits.size == 6 * len(sections)
        assert bits_to_beta(bits, p) == beta

    def test_bad_length(self):
        p = CodeParams(n=8, l_sections=2, m_per_section=8, m_inner=2)
        with pytest.raises(ShapeError):
            bits_to_beta(np.zeros(5), p)


class TestToeplitz:
    def test_matrix_definition(self):
        spec = HashSpec(7, 4, seed=5)
        t = spec.diagonal_bits
        ref = np.array([[t[7 - 1 + i - j] for j in range(7)] for i in range(4)])
        np.testing.assert_array_equal(toeplitz_matrix(spec), ref)

    @given(st.integers(1, 40), st.integers(0, 40), st.integers(0, 2**32))
    def test_constant_diagonals(self, n_in, k, seed):
        k = min(k, n_in)
        m = toeplitz_matrix(HashSpec(n_in, k, seed))
        assert m.shape == (k, n_in)
        np.testing.assert_array_equal(m[1:, 1:], m[:-1, :-1])
        assert set(np.unique(m)) <= {0, 1}

    @given(st.integers(0, 2**32), st.data())
    def test_linear_over_gf2(self, seed, data):
        spec = HashSpec(24, 9, seed)
        a = np.array(data.draw(st.lists(st.integers(0, 1), min_size=24, max_size=24)), dtype=np.uint8)
        b = np.array(data.draw(st.lists(st.integers(0, 1), min_size=24, max_size=24)), dtype=np.uint8)
        np.testing.assert_array_equal(toeplitz_hash(spec, a ^ b),
                                      toeplitz_hash(spec, a) ^ toeplitz_hash(spec, b))

    def test_hash_values(self):
        spec = HashSpec(4, 2, seed=0)
        m = toeplitz_matrix(spec).astype(int)
        for v in range(16):
            x = np.array([(v >> (3 - i)) & 1 for i in range(4)], dtype=np.uint8)
            np.testing.assert_array_equal(toeplitz_hash(spec, x), (m @ x) % 2)

    def test_universal_collision_rate(self):
        # over a random seed, distinct inputs collide with probability 2^-k
        x1 = np.zeros(32, dtype=np.uint8)
        x2 = x1.copy()
        x2[[3, 17, 30]] = 1
        k, trials = 3, 4000
        coll = sum(np.array_equal(toeplitz_hash(HashSpec(32, k, s), x1),
                                  toeplitz_hash(HashSpec(32, k, s), x2)) for s in range(trials))
        sd = math.sqrt(trials * 0.125 * 0.875)
        assert abs(coll - trials / 8) < 4 * sd

    def test_empty_key(self):
        out = toeplitz_hash(HashSpec(8, 0), np.ones(8, dtype=np.uint8))
        assert out.shape == (0,)

    def test_validation(self):
        with pytest.raises(DomainError):
            HashSpec(8, 9)
        with pytest.raises(DomainError):
            HashSpec(0, 0)
        with pytest.raises(ShapeError):
            toeplitz_hash(HashSpec(8, 2), np.zeros(7, dtype=np.uint8))

    def test_reseeded(self):
        spec = HashSpec(8, 3, 1)
        assert spec.reseeded(2) == HashSpec(8, 3, 2)


class TestKeyLength:
    def test_rule(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=1024, l_sections=64, m_per_section=64, m_inner=64)
        rk = secret_key_rate(model, 1.0)
        assert choose_key_length(model, p, 1.0).k_bits == math.floor(1024 * rk / math.log(2))
        assert choose_key_length(model, p, 1.0, nu=0.01).k_bits == math.floor(1024 * (rk - 0.01) / math.log(2))
        assert choose_key_length(model, p, 1.0, nu=1.0).k_bits == 0

    def test_cap_at_within_bin_bits(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=1024, l_sections=8, m_per_section=64, m_inner=2)
        assert choose_key_length(model, p, 0.01).k_bits == 8

    def test_negative_margin(self):
        p = CodeParams(n=16, l_sections=2, m_per_section=4, m_inner=2)
        with pytest.raises(DomainError):
            choose_key_length(SourceModel(1, 0.1, 0.2), p, 1.0, nu=-0.1)


class TestHex:
    @given(st.lists(st.integers(0, 1), max_size=70))
    def test_round_trip(self, bits):
        bits = np.array(bits, dtype=np.uint8)
        text = key_to_hex(bits)
        assert len(text) == math.ceil(bits.size / 4)
        np.testing.assert_array_equal(hex_to_key(text, bits.size), bits)

    def test_values(self):
        assert key_to_hex([1, 0, 1, 0, 1]) == "15"
        assert key_to_hex([]) == ""


class TestEstimators:
    def test_uniform_plugin_tv_matches_exact_mean(self):
        rng = np.random.default_rng(0)
        vals = []
        for _ in range(20):
            keys = rng.integers(0, 2, size=(10_000, 8))
            vals.append(estimate_uniformity(keys).variational_distance)
        oracle = expected_plugin_tv(256, 10_000)
        assert oracle == pytest.approx(0.0637, abs=5e-4)
        assert np.mean(vals) == pytest.approx(oracle, rel=0.03)

    def test_uniform_entropy_deficit_small(self):
        keys = np.random.default_rng(1).integers(0, 2, size=(10_000, 8))
        assert estimate_uniformity(keys).entropy_deficit < 0.05

    def test_biased_key_detected(self):
        keys = np.random.default_rng(1).integers(0, 2, size=(10_000, 4))
        keys[:, 0] = 0
        est = estimate_uniformity(keys)
        assert est.variational_distance == pytest.approx(0.5, abs=0.02)
        assert est.entropy_deficit == pytest.approx(1.0, abs=0.01)

    def test_uniformity_sizing(self):
        with pytest.raises(SizingError):
            estimate_uniformity(np.zeros((100, 8)))
        with pytest.raises(ShapeError):
            estimate_uniformity(np.zeros(8))

    def test_leakage_independent_vs_copied(self):
        rng = np.random.default_rng(2)
        keys = rng.integers(0, 2, size=(20_000, 3))
        views = rng.integers(0, 16, size=(20_000, 1))
        leak = estimate_leakage(keys, views)
        assert leak < independence_null_bound(8, 16, 20_000)
        assert estimate_leakage(keys, keys) == pytest.approx(7 / 8, abs=0.02)

    def test_leakage_exact_small_table(self):
        keys = np.array([[0], [0], [1], [1]])
        views = np.array([[0], [1], [0], [1]])
        assert estimate_leakage(keys, views) == pytest.approx(0.0)
        assert estimate_leakage(keys, np.array([[0], [0], [1], [1]])) == pytest.approx(0.5)

    def test_leakage_shape(self):
        with pytest.raises(ShapeError):
            estimate_leakage(np.zeros((4, 1)), np.zeros((3, 1)))


class TestSpecificVectors:
    def test_bit_vectors(self):
        p = CodeParams(n=8, l_sections=2, m_per_section=4, m_inner=2)
        np.testing.assert_array_equal(beta_to_bits(SparseCoeffs((1, 2)), p), [0, 1, 1, 0])
        np.testing.assert_array_equal(beta_to_bits(SparseCoeffs((0, 0)), p), [0, 0, 0, 0])
        import itertools
        for s in itertools.product(range(4), repeat=2):
            assert bits_to_beta(beta_to_bits(SparseCoeffs(s), p), p).sections == s

    def test_zero_input_zero_key(self):
        for seed in range(20):
            assert not toeplitz_hash(HashSpec(16, 8, seed), np.zeros(16, dtype=np.uint8)).any()

    def test_key_length_vectors(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=1000, l_sections=100, m_per_section=64, m_inner=64)
        assert choose_key_length(model, p, 1.0).k_bits == math.floor(1000 * 0.0335696 / 0.693147) == 48
        assert choose_key_length(model, p, 1.0, nu=secret_key_rate(model, 1.0)).k_bits == 0
        for nu in (0.0, 0.1):
            assert choose_key_length(SourceModel(1, 0.3, 0.3), p, 0.5, nu).k_bits == 0

    def test_key_length_monotone(self):
        p = CodeParams(n=1000, l_sections=100, m_per_section=64, m_inner=64)
        base = lambda sb, se, nu: choose_key_length(SourceModel(1, sb, se), p, 0.3, nu).k_bits
        nus = [0.0, 0.01, 0.05, 0.1]
        sbs = [0.01, 0.05, 0.1, 0.2]
        ses = [0.2, 0.3, 0.5, 1.0]
        assert all(base(0.1, 0.4, a) >= base(0.1, 0.4, b) for a, b in zip(nus, nus[1:]))
        assert all(base(a, 0.4, 0) >= base(b, 0.4, 0) for a, b in zip(sbs, sbs[1:]))
        assert all(base(0.1, a, 0) <= base(0.1, b, 0) for a, b in zip(ses, ses[1:]))

    def test_point_mass_and_exact_uniform(self):
        k = 4
        same = np.zeros((160, k), dtype=np.uint8)
        assert estimate_uniformity(same).variational_distance == pytest.approx(1 - 2**-k)
        uniform = np.array([[(v >> (k - 1 - i)) & 1 for i in range(k)] for v in range(16)] * 10)
        est = estimate_uniformity(uniform)
        assert est.variational_distance == 0.0 and est.entropy_deficit == pytest.approx(0.0, abs=1e-12)

    def test_full_leak_k4(self):
        keys = np.random.default_rng(5).integers(0, 2, size=(5000, 4))
        assert estimate_leakage(keys, keys) >= 0.9
