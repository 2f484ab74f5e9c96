"""Entropy estimation, set selection and construction pipeline tests."""

import numpy as np
import pytest

from polarshaping.codec import encode_batch
from polarshaping.construction import (
    binary_entropy_of_llr,
    build_code_spec,
    estimate_posterior_entropies,
    estimate_prior_entropies,
    measure_effective_distribution,
    select_sets,
)
from polarshaping.modulation import (
    InputDistribution,
    build_constellation,
    channel_from_snr,
    conditional_entropy,
    maxwell_boltzmann,
    uniform_distribution,
)
from polarshaping.streams import seed_stream


class TestEstimators:
    def test_uniform_prior_entropies_exactly_one(self):
        c = build_constellation("4-PAM")
        prof = estimate_prior_entropies(c, uniform_distribution(c), 8, 50, seed_stream(1, "t"))
        assert np.all(prof.h == 1.0)

    def test_point_mass_prior_entropies_zero(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.0, 0.0, 1.0, 0.0]))
        prof = estimate_prior_entropies(c, d, 8, 50, seed_stream(2, "t"))
        assert np.all(prof.h <= 1e-12)

    def test_prior_chain_rule(self):
        # sum_j H(U_j | prefix) = N * H(X) for iid symbols
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.3)
        N, trials = 16, 20_000
        prof = estimate_prior_entropies(c, d, N, trials, seed_stream(3, "t"))
        expect = N * d.entropy_bits()
        assert prof.h.sum() == pytest.approx(expect, rel=0.01)

    def test_posterior_high_snr_entropies_vanish(self):
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.2)
        prof = estimate_posterior_entropies(c, d, 8, 60.0, 200, seed_stream(4, "t"))
        assert np.all(prof.h < 1e-6)

    def test_posterior_chain_rule_matches_quadrature(self):
        # sum_j H(U_j | prefix, Y) = N * H(X|Y), H(X|Y) by Gauss-Hermite
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.25)
        N, trials, snr_db = 16, 20_000, 8.0
        prof = estimate_posterior_entropies(c, d, N, snr_db, trials, seed_stream(5, "t"))
        nv = channel_from_snr(c, d, snr_db).noise_var
        expect = N * conditional_entropy(c, d, nv)
        assert prof.h.sum() == pytest.approx(expect, rel=0.01)

    def test_entropy_dominance_per_index(self):
        # conditioning on Y can only reduce entropy (within noise)
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.25)
        N, trials, snr_db = 8, 20_000, 9.0
        prior = estimate_prior_entropies(c, d, N, trials, seed_stream(6, "a"))
        post = estimate_posterior_entropies(c, d, N, snr_db, trials, seed_stream(6, "b"))
        slack = 3.0 * np.sqrt(prior.se**2 + post.se**2)
        assert np.all(post.h <= prior.h + slack)

    def test_estimator_consistency_when_doubling_trials(self):
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.3)
        a = estimate_prior_entropies(c, d, 8, 10_000, seed_stream(7, "a"))
        b = estimate_prior_entropies(c, d, 8, 20_000, seed_stream(7, "b"))
        pooled = np.sqrt(a.se**2 + b.se**2)
        assert np.all(np.abs(a.h - b.h) <= 3.0 * pooled + 1e-9)

    def test_binary_entropy_of_llr(self):
        assert binary_entropy_of_llr(0.0) == 1.0
        assert binary_entropy_of_llr(40.0) <= 1e-12
        assert binary_entropy_of_llr(np.log(3.0)) == pytest.approx(
            -(0.75 * np.log2(0.75) + 0.25 * np.log2(0.25))
        )


class TestSelectSets:
    def test_trivial_all_info(self):
        h = np.linspace(0, 1, 16)
        f, i, d = select_sets(h, h, 0, 16)
        assert d.size == 0 and f.size == 0
        assert np.array_equal(i, np.arange(16))

    def test_partition_property(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = 32
            hp = rng.uniform(0, 1, n)
            hq = rng.uniform(0, 1, n)
            n_dm = int(rng.integers(0, 10))
            k = int(rng.integers(1, n - n_dm))
            f, i, d = select_sets(hp, hq, n_dm, k)
            together = np.concatenate([f, i, d])
            assert np.array_equal(np.sort(together), np.arange(n))
            assert d.size == n_dm and i.size == k

    def test_smallest_prior_goes_to_shaping(self):
        hp = np.array([0.9, 0.1, 0.5, 0.2])
        hq = np.array([0.3, 0.3, 0.3, 0.3])
        f, i, d = select_sets(hp, hq, 2, 1)
        assert np.array_equal(d, [1, 3])
        assert np.array_equal(i, [0])  # posterior tie breaks to smaller index

    def test_size_violation(self):
        with pytest.raises(ValueError):
            select_sets(np.zeros(4), np.zeros(4), 3, 2)


class TestEffectiveDistribution:
    def test_uniform_no_shaping_measures_uniform(self):
        from test_codec import small_uniform_spec

        spec = small_uniform_spec()
        d = measure_effective_distribution(spec, 20_000, seed_stream(9, "m"))
        tv = 0.5 * np.abs(d.probs - 0.25).sum()
        assert tv <= 0.01

    def test_repeat_same_seed_identical(self):
        from test_codec import small_shaped_spec

        spec = small_shaped_spec()
        a = measure_effective_distribution(spec, 5_000, seed_stream(10, "m"))
        b = measure_effective_distribution(spec, 5_000, seed_stream(10, "m"))
        assert np.array_equal(a.probs, b.probs)

    def test_shaped_spec_biases_low_energy_points(self):
        from test_codec import small_shaped_spec

        spec = small_shaped_spec(nu=0.4)
        d = measure_effective_distribution(spec, 20_000, seed_stream(11, "m"))
        assert d.probs[0] > d.probs[3]


class TestBuildCodeSpec:
    def test_small_pipeline_end_to_end(self):
        spec = build_code_spec(
            kind="4-PAM", n_symbols=8, k=9, crc_degree=3, n_dm=3,
            dsnr_db=10.0, kappa_db=-0.5, encoder_list=2, trials=4_000, seed=123,
        )
        assert spec.combined_len == 16
        assert spec.k == 9 and spec.n_dm == 3
        assert spec.frozen.size == 16 - 9 - 3
        assert spec.payload_bits == 6
        assert spec.nu > 0
        assert abs(spec.target.probs.sum() - 1) < 1e-12
        # encoder must run on the built spec
        data = np.zeros((4, spec.payload_bits), dtype=np.int8)
        u, _, symbols, _ = encode_batch(data, spec)
        assert u.shape == (4, 16)

    def test_deterministic_given_seed(self):
        kw = dict(kind="4-PAM", n_symbols=8, k=8, crc_degree=0, n_dm=2,
                  dsnr_db=10.0, kappa_db=0.0, encoder_list=1, trials=2_000, seed=9)
        a = build_code_spec(**kw)
        b = build_code_spec(**kw)
        assert np.array_equal(a.info, b.info)
        assert np.array_equal(a.shaping, b.shaping)
        assert np.array_equal(a.target.probs, b.target.probs)

    def test_uniform_flag(self):
        spec = build_code_spec(
            kind="4-PAM", n_symbols=8, k=8, crc_degree=0, n_dm=0,
            dsnr_db=12.0, kappa_db=0.0, encoder_list=1, trials=2_000, seed=5,
            uniform=True,
        )
        assert spec.nu == 0.0
        assert spec.n_dm == 0
