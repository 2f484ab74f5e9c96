"""Constellation, shaping distribution, channel and demapper tests."""

import itertools

import numpy as np
import pytest

from polarshaping.modulation import (
    ChannelParams,
    Constellation,
    DegenerateConditionError,
    InputDistribution,
    awgn,
    build_constellation,
    channel_from_snr,
    conditional_entropy,
    map_symbols,
    maxwell_boltzmann,
    mutual_information,
    optimize_nu,
    posterior_level_llr,
    posterior_llr_tables,
    prior_level_llr,
    prior_llr_tables,
    second_moment,
    uniform_distribution,
)


def subset_min_distance(points, indices):
    if len(indices) < 2:
        return np.inf
    vals = np.sort(points[list(indices)])
    return float(np.min(np.diff(vals)))


class TestConstellation:
    def test_4pam_points_and_labels(self):
        c = build_constellation("4-PAM")
        assert np.array_equal(c.points, [0.0, 1.0, 2.0, 3.0])
        assert np.array_equal(c.labels, [0, 1, 2, 3])
        assert c.levels == 2

    def test_8ask_points(self):
        c = build_constellation("8-ASK")
        assert np.array_equal(c.points, [-7, -5, -3, -1, 1, 3, 5, 7])
        assert c.levels == 3

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_constellation("16-QAM")

    @pytest.mark.parametrize("kind", ["4-PAM", "8-ASK"])
    def test_set_partitioning_distance_doubles(self, kind):
        # fixing each further label bit doubles the minimum intra-subset spacing
        c = build_constellation(kind)
        base = subset_min_distance(c.points, range(c.order))
        for level in range(1, c.levels + 1):
            dists = []
            for pattern in range(1 << level):
                idx = [k for k in range(c.order) if (c.labels[k] & ((1 << level) - 1)) == pattern]
                dists.append(subset_min_distance(c.points, idx))
            finite = [d for d in dists if np.isfinite(d)]
            if finite:
                assert min(finite) == base * 2**level

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            Constellation("x", np.arange(4.0), np.array([0, 1, 1, 3]))


class TestMaxwellBoltzmann:
    def test_nu_zero_uniform(self):
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.0)
        assert np.allclose(d.probs, 1 / 8)

    def test_large_nu_concentrates(self):
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 50.0)
        assert d.probs[0] == pytest.approx(1.0, abs=1e-12)

    def test_frozen_normalization_oracle(self):
        # independent evaluation of Z = sum exp(-nu x^2) at 50 digits
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.05)
        expected = [
            0.02199508687602777, 0.07302626015416035, 0.1625229308278225,
            0.24245572214198938, 0.24245572214198938, 0.1625229308278225,
            0.07302626015416035, 0.02199508687602777,
        ]
        assert np.allclose(d.probs, expected, rtol=1e-14)

    def test_negative_nu_rejected(self):
        with pytest.raises(ValueError):
            maxwell_boltzmann(build_constellation("4-PAM"), -0.1)


class TestChannel:
    def test_second_moment_definition(self):
        c = build_constellation("4-PAM")
        assert second_moment(c, uniform_distribution(c)) == pytest.approx(3.5)
        c8 = build_constellation("8-ASK")
        assert second_moment(c8, uniform_distribution(c8)) == pytest.approx(21.0)

    def test_channel_from_snr(self):
        c = build_constellation("4-PAM")
        ch = channel_from_snr(c, uniform_distribution(c), 10.0)
        assert ch.noise_var == pytest.approx(0.35)

    def test_awgn_determinism_and_stats(self):
        rng = np.random.default_rng(123)
        x = np.zeros(10**6)
        y1 = awgn(x, 2.5, np.random.default_rng(7))
        y2 = awgn(x, 2.5, np.random.default_rng(7))
        assert np.array_equal(y1, y2)
        noise = awgn(x, 2.5, rng) - x
        assert np.var(noise) == pytest.approx(2.5, rel=0.01)
        assert np.mean(noise) == pytest.approx(0.0, abs=0.01)

    def test_awgn_tiny_noise(self):
        x = np.array([1.0, -3.0, 5.0])
        y = awgn(x, 1e-12, np.random.default_rng(0))
        assert np.allclose(y, x, atol=1e-4)


class TestMapSymbols:
    def test_label_assembly(self):
        c = build_constellation("4-PAM")
        # level1 = 0, level2 = 1 -> label 10 -> point 2
        out = map_symbols(c, np.array([[0], [1]]))
        assert out[0] == 2.0

    def test_all_zero(self):
        c = build_constellation("8-ASK")
        out = map_symbols(c, np.zeros((3, 5), dtype=int))
        assert np.all(out == c.points[0])

    def test_roundtrip_bijection(self):
        c = build_constellation("8-ASK")
        rng = np.random.default_rng(5)
        bits = rng.integers(0, 2, size=(3, 64))
        pts = map_symbols(c, bits)
        idx = np.searchsorted(c.points, pts)
        labels = c.labels[idx]
        for l in range(3):
            assert np.array_equal((labels >> l) & 1, bits[l])

    def test_length_mismatch(self):
        c = build_constellation("4-PAM")
        with pytest.raises(ValueError):
            map_symbols(c, np.zeros((3, 8), dtype=int))


def mc_mutual_information(c, d, noise_var, n_samples, seed):
    """Monte-Carlo integration oracle for I(X;Y)."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(c.order, p=d.probs, size=n_samples)
    x = c.points[idx]
    y = x + rng.standard_normal(n_samples) * np.sqrt(noise_var)
    ll = -((y[:, None] - c.points[None, :]) ** 2) / (2 * noise_var)
    with np.errstate(divide="ignore"):
        logp = np.log(d.probs)
    mix = logp[None, :] + ll
    mx = mix.max(axis=1, keepdims=True)
    lse = mx[:, 0] + np.log(np.exp(mix - mx).sum(axis=1))
    own = -((y - x) ** 2) / (2 * noise_var)
    return float(np.mean(own - lse) / np.log(2.0))


class TestMutualInformation:
    def test_noiseless_limit(self):
        c = build_constellation("4-PAM")
        assert mutual_information(c, uniform_distribution(c), 1e-9) == pytest.approx(2.0, abs=1e-6)

    def test_high_noise_limit(self):
        c = build_constellation("4-PAM")
        assert mutual_information(c, uniform_distribution(c), 1e9) == pytest.approx(0.0, abs=1e-4)

    def test_against_mc_oracle_uniform_8ask_13db(self):
        c = build_constellation("8-ASK")
        d = uniform_distribution(c)
        nv = channel_from_snr(c, d, 13.0).noise_var
        gh = mutual_information(c, d, nv)
        mc = mc_mutual_information(c, d, nv, 10**6, seed=42)
        assert gh == pytest.approx(mc, abs=5e-3)

    @pytest.mark.parametrize(
        "kind,nu,snr_db",
        [("4-PAM", 0.0, 8.0), ("4-PAM", 0.3, 16.0), ("8-ASK", 0.05, 13.0), ("8-ASK", 0.0, 18.0)],
    )
    def test_gh_mc_agreement_grid(self, kind, nu, snr_db):
        c = build_constellation(kind)
        d = maxwell_boltzmann(c, nu)
        nv = channel_from_snr(c, d, snr_db).noise_var
        gh = mutual_information(c, d, nv)
        mc = mc_mutual_information(c, d, nv, 10**6, seed=hash((kind, nu)) % 2**31)
        assert gh == pytest.approx(mc, abs=5e-3)


class TestOptimizeNu:
    def test_high_snr_uniform_optimal(self):
        c = build_constellation("4-PAM")
        nu = optimize_nu(c, 40.0)
        assert nu < 0.01

    def test_local_optimality(self):
        c = build_constellation("8-ASK")
        snr_db = 12.0
        nu = optimize_nu(c, snr_db)
        snr_lin = 10 ** (snr_db / 10)

        def mi_at(v):
            d = maxwell_boltzmann(c, v)
            return mutual_information(c, d, second_moment(c, d) / snr_lin)

        assert mi_at(nu) >= mi_at(nu + 0.01) - 1e-9
        assert mi_at(max(nu - 0.01, 0.0)) <= mi_at(nu) + 1e-9

    def test_against_grid_sweep(self):
        c = build_constellation("8-ASK")
        snr_db = 12.0
        snr_lin = 10 ** (snr_db / 10)

        def mi_at(v):
            d = maxwell_boltzmann(c, v)
            return mutual_information(c, d, second_moment(c, d) / snr_lin)

        grid = np.arange(0.0, 0.2, 1e-3)
        best = grid[int(np.argmax([mi_at(v) for v in grid]))]
        nu = optimize_nu(c, snr_db)
        assert abs(nu - best) <= 2e-3


class TestPriorLlr:
    def test_uniform_zero_everywhere(self):
        c = build_constellation("8-ASK")
        d = uniform_distribution(c)
        for level in (1, 2, 3):
            for lower in itertools.product((0, 1), repeat=level - 1):
                assert prior_level_llr(c, d, level, lower) == 0.0

    def test_marginalization_oracle(self):
        # 4-PAM MB nu=0.3, level 1: log[(p0+p2)/(p1+p3)] at 50 digits
        c = build_constellation("4-PAM")
        d = maxwell_boltzmann(c, 0.3)
        assert prior_level_llr(c, d, 1, []) == pytest.approx(0.47644631518408154, rel=1e-13)

    def test_point_mass_clips(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.0, 0.0, 1.0, 0.0]))  # point 2, label 10
        assert prior_level_llr(c, d, 1, []) == 40.0        # level-1 bit is 0
        assert prior_level_llr(c, d, 2, [0]) == -40.0      # level-2 bit is 1

    def test_degenerate_both_sides(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.0, 0.0, 1.0, 0.0]))
        with pytest.raises(DegenerateConditionError):
            prior_level_llr(c, d, 2, [1])  # no point has level-1 bit 1 under d

    def test_marginalization_consistency(self):
        # conditional masses at level l sum to the mass of the lower pattern
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.08)
        for level in (2, 3):
            for lower in itertools.product((0, 1), repeat=level - 1):
                q = sum(b << i for i, b in enumerate(lower))
                mask_low = (c.labels & ((1 << (level - 1)) - 1)) == q
                mass_low = d.probs[mask_low].sum()
                m0 = d.probs[mask_low & (((c.labels >> (level - 1)) & 1) == 0)].sum()
                m1 = d.probs[mask_low & (((c.labels >> (level - 1)) & 1) == 1)].sum()
                assert m0 + m1 == pytest.approx(mass_low, rel=1e-12)
                expect = np.log(m0 / m1)
                assert prior_level_llr(c, d, level, lower) == pytest.approx(expect, rel=1e-12)


class TestPosteriorLlr:
    def test_symmetry_midpoint(self):
        # uniform prior, 4-PAM level 2 after level-1 bit 0 (points {0, 2}), y = 1
        c = build_constellation("4-PAM")
        d = uniform_distribution(c)
        assert posterior_level_llr(c, d, 1.0, 2, [0], 0.7) == pytest.approx(0.0, abs=1e-12)

    def test_zero_mass_side_clips(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.5, 0.0, 0.5, 0.0]))  # only level-1 bit 0
        assert posterior_level_llr(c, d, 0.9, 1, [], 1.0) == 40.0

    def test_extended_precision_oracle(self):
        # 8-ASK, MB nu=0.05, y=0.3, level 1, sigma^2=1; mpmath 50-digit subset sums
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.05)
        got = posterior_level_llr(c, d, 0.3, 1, [], 1.0)
        assert got == pytest.approx(0.563743296225788, rel=1e-12)

    def test_converges_to_prior_at_high_noise(self):
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.06)
        for level in (1, 2, 3):
            for lower in itertools.product((0, 1), repeat=level - 1):
                post = posterior_level_llr(c, d, 0.4, level, lower, 1e6)
                prior = prior_level_llr(c, d, level, lower)
                assert post == pytest.approx(prior, abs=1e-3)

    def test_degenerate_both_sides(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.5, 0.0, 0.5, 0.0]))
        with pytest.raises(DegenerateConditionError):
            posterior_level_llr(c, d, 0.9, 2, [1], 1.0)


class TestLlrTables:
    def test_prior_tables_match_scalar(self):
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.07)
        tables = prior_llr_tables(c, d)
        for level in (1, 2, 3):
            for lower in itertools.product((0, 1), repeat=level - 1):
                q = sum(b << i for i, b in enumerate(lower))
                assert tables[level - 1][q] == pytest.approx(
                    prior_level_llr(c, d, level, lower), rel=1e-14
                )

    def test_posterior_tables_match_scalar(self):
        c = build_constellation("8-ASK")
        d = maxwell_boltzmann(c, 0.05)
        rng = np.random.default_rng(9)
        y = rng.normal(0, 4, size=6)
        tables = posterior_llr_tables(c, d, y, 1.3)
        for level in (1, 2, 3):
            for k in range(len(y)):
                for lower in itertools.product((0, 1), repeat=level - 1):
                    q = sum(b << i for i, b in enumerate(lower))
                    assert tables[level - 1][k, q] == pytest.approx(
                        posterior_level_llr(c, d, y[k], level, lower, 1.3), rel=1e-13
                    )

    def test_unreachable_pattern_is_zero(self):
        c = build_constellation("4-PAM")
        d = InputDistribution(np.array([0.5, 0.0, 0.5, 0.0]))
        tables = prior_llr_tables(c, d)
        assert tables[1][1] == 0.0  # conditioning on impossible level-1 bit 1
