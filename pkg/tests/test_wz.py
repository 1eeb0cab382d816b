import math

import numpy as np
import pytest

from sparcska import (CodeParams, SourceModel, WzConfig, alice_encode, bin_split, bob_decode,
                      build_dictionary, eve_decode, reconstruct, synthesize)
from sparcska.codebook import SparseCoeffs
from sparcska.errors import DomainError, ShapeError, SizingError
from sparcska.wz import default_power


def ml_bin_reference(y, bin_msg, cfg, d):
    # brute-force over the bin members via explicit synthesis
    from sparcska import enumerate_bin

    best, best_d = None, math.inf
    for beta in enumerate_bin(bin_msg, cfg.params, cfg.amplitude):
        r = y - cfg.xi * synthesize(d, beta)
        if r @ r < best_d:
            best, best_d = beta, float(r @ r)
    return best


@pytest.fixture
def setup():
    model = SourceModel(1.0, 0.1, 0.2)
    params = CodeParams(n=24, l_sections=4, m_per_section=8, m_inner=4, dict_seed=7)
    return model, WzConfig(0.5, params, model), build_dictionary(params)


class TestConfig:
    def test_defaults(self, setup):
        model, cfg, _ = setup
        assert cfg.xi == pytest.approx(1 / 1.5)
        p = cfg.params
        assert cfg.power == pytest.approx(1.5 * (1 - math.exp(-2 * p.r1)))
        assert cfg.amplitude == pytest.approx(math.sqrt(p.n * cfg.power / p.l_sections))
        assert default_power(model, 0.5, p) == cfg.power

    def test_explicit_power(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=24, l_sections=4, m_per_section=8, m_inner=4, amp_power=0.3)
        assert WzConfig(1.0, p, model).power == 0.3

    @pytest.mark.parametrize("q", [0.0, -1.0, math.inf, math.nan])
    def test_bad_q(self, setup, q):
        model, cfg, _ = setup
        with pytest.raises(DomainError):
            WzConfig(q, cfg.params, model)


class TestAlice:
    def test_bin_is_split_of_beta(self, setup):
        _, cfg, d = setup
        x = np.random.default_rng(0).standard_normal(24)
        beta, bin_msg, u = alice_encode(x, cfg, d, noise_seed=1)
        assert bin_split(beta, cfg.params)[0] == bin_msg
        # dither has the configured variance scale
        assert np.var(u - x) == pytest.approx(0.5, rel=0.8)

    def test_dither_override_and_determinism(self, setup):
        _, cfg, d = setup
        x = np.random.default_rng(0).standard_normal(24)
        a = alice_encode(x, cfg, d, noise_seed=3)
        b = alice_encode(x, cfg, d, noise_seed=3)
        assert a[0] == b[0] and np.array_equal(a[2], b[2])
        c = alice_encode(x, cfg, d, dither=np.zeros(24))
        np.testing.assert_array_equal(c[2], x)

    def test_shape(self, setup):
        _, cfg, d = setup
        with pytest.raises(ShapeError):
            alice_encode(np.zeros(23), cfg, d)


class TestBobDecode:
    def test_exhaustive_is_ml(self, setup):
        _, cfg, d = setup
        rng = np.random.default_rng(4)
        for _ in range(30):
            y = rng.standard_normal(24)
            beta = SparseCoeffs(tuple(rng.integers(0, 8, 4)), cfg.amplitude)
            bin_msg, _ = bin_split(beta, cfg.params)
            assert bob_decode(y, bin_msg, cfg, d, mode="exhaustive") == ml_bin_reference(y, bin_msg, cfg, d)

    def test_noiseless_recovery(self, setup):
        _, cfg, d = setup
        rng = np.random.default_rng(5)
        for _ in range(20):
            beta = SparseCoeffs(tuple(rng.integers(0, 8, 4)), cfg.amplitude)
            bin_msg, _ = bin_split(beta, cfg.params)
            y = cfg.xi * synthesize(d, beta)
            assert bob_decode(y, bin_msg, cfg, d, mode="exhaustive") == beta

    def test_greedy_stays_in_bin(self, setup):
        _, cfg, d = setup
        rng = np.random.default_rng(6)
        beta = SparseCoeffs((1, 6, 3, 4), cfg.amplitude)
        bin_msg, _ = bin_split(beta, cfg.params)
        out = bob_decode(rng.standard_normal(24), bin_msg, cfg, d, mode="greedy")
        assert bin_split(out, cfg.params)[0] == bin_msg

    def test_singleton_bin(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=16, l_sections=4, m_per_section=8, m_inner=1)
        cfg = WzConfig(1.0, p, model)
        d = build_dictionary(p)
        beta = SparseCoeffs((7, 0, 3, 5), cfg.amplitude)
        bin_msg, _ = bin_split(beta, p)
        assert bob_decode(np.zeros(16), bin_msg, cfg, d) == beta

    def test_auto_respects_cap(self, setup):
        _, cfg, d = setup
        y = np.random.default_rng(0).standard_normal(24)
        bin_msg = bin_split(SparseCoeffs((0, 0, 0, 0)), cfg.params)[0]
        assert bob_decode(y, bin_msg, cfg, d, cap=10) == bob_decode(y, bin_msg, cfg, d, mode="greedy")
        with pytest.raises(SizingError):
            bob_decode(y, bin_msg, cfg, d, mode="exhaustive", cap=10)
        with pytest.raises(ValueError):
            bob_decode(y, bin_msg, cfg, d, mode="bp")

    def test_eve_is_same_decoder(self, setup):
        _, cfg, d = setup
        z = np.random.default_rng(1).standard_normal(24)
        bin_msg = bin_split(SparseCoeffs((2, 5, 1, 7)), cfg.params)[0]
        assert eve_decode(z, bin_msg, cfg, d) == bob_decode(z, bin_msg, cfg, d)

    def test_better_side_information_decodes_more(self):
        model = SourceModel(1.0, 0.01, 1.0)
        p = CodeParams(n=48, l_sections=6, m_per_section=16, m_inner=4, dict_seed=1)
        cfg = WzConfig(0.01, p, model)
        d = build_dictionary(p)
        rng = np.random.default_rng(9)
        bob = eve = 0
        for _ in range(100):
            x = rng.standard_normal(48)
            beta, bin_msg, _ = alice_encode(x, cfg, d, noise_seed=rng.integers(2**32))
            y = x + rng.normal(0, 0.1, 48)
            z = x + rng.normal(0, 1.0, 48)
            bob += bob_decode(y, bin_msg, cfg, d) == beta
            eve += eve_decode(z, bin_msg, cfg, d) == beta
        assert bob > eve


def test_reconstruct(setup):
    _, cfg, d = setup
    beta = SparseCoeffs((0, 1, 2, 3), cfg.amplitude)
    np.testing.assert_allclose(reconstruct(beta, cfg, d), cfg.xi * synthesize(d, beta))


class TestSpecificVectors:
    def test_zero_amplitude_reconstruction(self, setup):
        model, cfg, d = setup
        p0 = CodeParams(n=24, l_sections=4, m_per_section=8, m_inner=4, amp_power=0.0, dict_seed=7)
        cfg0 = WzConfig(0.5, p0, model)
        x = np.random.default_rng(0).standard_normal(24)
        beta, _, _ = alice_encode(x, cfg0, d)
        xh = reconstruct(beta, cfg0, d)
        np.testing.assert_array_equal(xh, np.zeros(24))
        from sparcska import distortion_of
        assert distortion_of(x, xh) == pytest.approx(x @ x / 24)

    def test_fine_quantization_reconstructs_codeword(self, setup):
        model, cfg, d = setup
        cfg_fine = WzConfig(1e-12, cfg.params, model)
        beta = SparseCoeffs((1, 2, 3, 4), cfg_fine.amplitude)
        np.testing.assert_allclose(reconstruct(beta, cfg_fine, d), synthesize(d, beta), rtol=1e-11)

    def test_eve_equal_to_bob_on_equal_data(self):
        model = SourceModel(1.0, 0.2, 0.2)
        p = CodeParams(n=24, l_sections=4, m_per_section=8, m_inner=4, dict_seed=7)
        cfg = WzConfig(0.5, p, model)
        d = build_dictionary(p)
        y = np.random.default_rng(2).standard_normal(24)
        bin_msg = bin_split(SparseCoeffs((3, 2, 1, 0)), p)[0]
        for mode in ("exhaustive", "greedy"):
            assert eve_decode(y, bin_msg, cfg, d, mode=mode) == bob_decode(y, bin_msg, cfg, d, mode=mode)

    def test_singleton_bin_ignores_observation(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=16, l_sections=4, m_per_section=8, m_inner=1)
        cfg = WzConfig(1.0, p, model)
        d = build_dictionary(p)
        rng = np.random.default_rng(0)
        beta = SparseCoeffs((2, 4, 6, 1), cfg.amplitude)
        bin_msg = bin_split(beta, p)[0]
        for _ in range(5):
            assert eve_decode(rng.standard_normal(16) * 100, bin_msg, cfg, d) == beta

    def test_agreement_gives_identical_reconstruction(self, setup):
        _, cfg, d = setup
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.standard_normal(24)
            beta, bin_msg, _ = alice_encode(x, cfg, d, noise_seed=rng.integers(2**32))
            b = bob_decode(x + rng.normal(0, 0.05, 24), bin_msg, cfg, d)
            if b == beta:
                np.testing.assert_array_equal(reconstruct(b, cfg, d), reconstruct(beta, cfg, d))

    def test_ml_metric_equivalence_equal_power(self):
        # orthonormal columns make every codeword equally energetic
        from sparcska.codebook import Dictionary
        from sparcska.quantizer import min_distance_search
        import itertools

        p = CodeParams(n=16, l_sections=2, m_per_section=4, m_inner=2)
        q_mat, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((16, 8)))
        d = Dictionary(p, q_mat)
        rng = np.random.default_rng(1)
        for _ in range(50):
            y = rng.standard_normal(16)
            best = max(itertools.product(range(4), range(4)),
                       key=lambda s: float(y @ (q_mat[:, s[0]] + q_mat[:, 4 + s[1]])))
            choice, _ = min_distance_search(d, y, 0.7, [np.arange(4)] * 2)
            assert choice == best

    def test_greedy_never_beats_exhaustive(self):
        model = SourceModel(1.0, 0.1, 0.2)
        p = CodeParams(n=48, l_sections=6, m_per_section=16, m_inner=2, dict_seed=3)
        cfg = WzConfig(0.1, p, model)
        d = build_dictionary(p)
        rng = np.random.default_rng(4)
        err = {"exhaustive": 0, "greedy": 0}
        for _ in range(500):
            x = rng.standard_normal(48)
            beta, bin_msg, _ = alice_encode(x, cfg, d, noise_seed=rng.integers(2**32))
            y = x + rng.normal(0, math.sqrt(0.1), 48)
            for mode in err:
                err[mode] += bob_decode(y, bin_msg, cfg, d, mode=mode) != beta
        # statistical: allow three standard errors of the difference
        assert err["greedy"] >= err["exhaustive"] - 3 * math.sqrt(err["greedy"] + err["exhaustive"])

    def test_side_information_value(self):
        p = CodeParams(n=48, l_sections=6, m_per_section=16, m_inner=4, dict_seed=2)
        d = build_dictionary(p)
        rates = []
        for sb in (0.5, 0.1, 0.01):
            model = SourceModel(1.0, sb, 1.0)
            cfg = WzConfig(0.05, p, model)
            rng = np.random.default_rng(11)
            e = 0
            for _ in range(300):
                x = rng.standard_normal(48)
                beta, bin_msg, _ = alice_encode(x, cfg, d, noise_seed=rng.integers(2**32))
                e += bob_decode(x + rng.normal(0, math.sqrt(sb), 48), bin_msg, cfg, d) != beta
            rates.append(e / 300)
        assert rates[0] >= rates[1] >= rates[2]
