"""Monte-Carlo code construction.

Bit-channel entropies are estimated with genie-aided SC passes: decisions are
forced to the true bits and each index accumulates the binary entropy of its
conditional (h_b of the logistic-mapped decision LLR), which has the same
expectation as the -log2 estimator at lower variance.  Shaping positions take
the smallest prior entropies, information positions the smallest posterior
entropies among the rest, and the effective channel input distribution is
measured from encoder output before the final reliability pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import CodeSpec, encode_batch
from .crc import CrcConfig, DEFAULT_POLYNOMIALS
from .kernel import FORCED, IndexPolicy, log1pexp, polar_transform, scl_run_batch
from .modulation import (
    Constellation,
    InputDistribution,
    awgn,
    build_constellation,
    channel_from_snr,
    maxwell_boltzmann,
    optimize_nu,
    posterior_llr_tables,
    prior_llr_tables,
    uniform_distribution,
)

_CHUNK = 4096  # fixed sub-stream granularity; results independent of scheduling


@dataclass
class EntropyProfile:
    """Per-combined-index conditional entropy estimates in bits."""

    h: np.ndarray        # (combined_len,) in [0, 1]
    se: np.ndarray       # standard error per index
    source: str          # "prior" or "posterior"
    samples: int
    params: dict


def binary_entropy_of_llr(llr: np.ndarray) -> np.ndarray:
    """h_b(sigmoid(llr)) in bits, numerically stable for large |llr|."""
    llr = np.asarray(llr, dtype=np.float64)
    p0 = 1.0 / (1.0 + np.exp(-np.abs(llr)))
    h_nats = p0 * log1pexp(-np.abs(llr)) + (1.0 - p0) * log1pexp(np.abs(llr))
    return np.clip(h_nats / np.log(2.0), 0.0, 1.0)


def _pattern_index(lower_bits: np.ndarray) -> np.ndarray:
    n_lower = lower_bits.shape[-2]
    if n_lower == 0:
        return np.zeros(lower_bits.shape[:-2] + lower_bits.shape[-1:], dtype=np.int64)
    weights = (1 << np.arange(n_lower)).reshape(-1, 1)
    return np.sum(lower_bits.astype(np.int64) * weights, axis=-2)


def _genie_pass(source, forced_u: np.ndarray, n_symbols: int, levels: int) -> np.ndarray:
    """Forced SC over a batch; returns decision LLRs (batch, combined)."""
    batch = forced_u.shape[0]
    policy = IndexPolicy(np.full(levels * n_symbols, FORCED, dtype=np.uint8))
    res = scl_run_batch(
        source,
        policy,
        1,
        n_symbols=n_symbols,
        n_levels=levels,
        batch=batch,
        forced=forced_u,
        record_llrs=True,
    )
    return res.decision_llrs


def _symbols_to_forced_u(c: Constellation, idx: np.ndarray) -> np.ndarray:
    """True combined words for sampled point indices (batch, N)."""
    labels = c.labels[idx]
    levels = c.levels
    bits = np.stack([(labels >> l) & 1 for l in range(levels)], axis=1).astype(np.int8)
    u = polar_transform(bits)  # self-inverse: per-level u from level bits
    return u.reshape(idx.shape[0], levels * idx.shape[1])


def estimate_prior_entropies(
    c: Constellation,
    dist: InputDistribution,
    n_symbols: int,
    trials: int,
    rng: np.random.Generator,
) -> EntropyProfile:
    """H(U_j | U_prefix) profile for symbols drawn iid from dist."""
    if trials < 1:
        raise ValueError("need at least one trial")
    combined = c.levels * n_symbols
    tables = prior_llr_tables(c, dist)

    def source(level, lower):
        return tables[level][_pattern_index(lower)]

    total = np.zeros(combined)
    total_sq = np.zeros(combined)
    done = 0
    streams = rng.spawn(-(-trials // _CHUNK))
    for sub in streams:
        size = min(_CHUNK, trials - done)
        idx = sub.choice(c.order, p=dist.probs, size=(size, n_symbols))
        llrs = _genie_pass(source, _symbols_to_forced_u(c, idx), n_symbols, c.levels)
        h = binary_entropy_of_llr(llrs)
        total += h.sum(axis=0)
        total_sq += (h * h).sum(axis=0)
        done += size
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0)
    return EntropyProfile(
        h=np.clip(mean, 0.0, 1.0),
        se=np.sqrt(var / trials),
        source="prior",
        samples=trials,
        params={"nu": dist.nu},
    )


def estimate_posterior_entropies(
    c: Constellation,
    dist: InputDistribution,
    n_symbols: int,
    dsnr_db: float,
    trials: int,
    rng: np.random.Generator,
) -> EntropyProfile:
    """H(U_j | U_prefix, Y) profile from AWGN samples at the design SNR."""
    if trials < 1:
        raise ValueError("need at least one trial")
    combined = c.levels * n_symbols
    noise_var = channel_from_snr(c, dist, dsnr_db).noise_var
    total = np.zeros(combined)
    total_sq = np.zeros(combined)
    done = 0
    streams = rng.spawn(-(-trials // _CHUNK))
    for sub in streams:
        size = min(_CHUNK, trials - done)
        idx = sub.choice(c.order, p=dist.probs, size=(size, n_symbols))
        y = awgn(c.points[idx], noise_var, sub)
        tables = posterior_llr_tables(c, dist, y, noise_var)

        def source(level, lower, tables=tables):
            q = _pattern_index(lower)
            return np.take_along_axis(tables[level][:, None, :, :], q[..., None], axis=3)[..., 0]

        llrs = _genie_pass(source, _symbols_to_forced_u(c, idx), n_symbols, c.levels)
        h = binary_entropy_of_llr(llrs)
        total += h.sum(axis=0)
        total_sq += (h * h).sum(axis=0)
        done += size
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0)
    return EntropyProfile(
        h=np.clip(mean, 0.0, 1.0),
        se=np.sqrt(var / trials),
        source="posterior",
        samples=trials,
        params={"nu": dist.nu, "dsnr_db": float(dsnr_db)},
    )


def select_sets(
    h_prior: np.ndarray, h_posterior: np.ndarray, n_dm: int, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(F, I, D): D takes the n_dm smallest prior entropies, I the k smallest
    posterior entropies among the rest; ties break to the smaller index."""
    h_prior = np.asarray(h_prior)
    h_posterior = np.asarray(h_posterior)
    combined = h_prior.shape[0]
    if h_posterior.shape[0] != combined:
        raise ValueError("profile lengths differ")
    if n_dm + k > combined:
        raise ValueError("n_dm + k exceeds the combined length")
    d_set = np.sort(np.argsort(h_prior, kind="stable")[:n_dm])
    remaining = np.setdiff1d(np.arange(combined), d_set)
    order = remaining[np.argsort(h_posterior[remaining], kind="stable")]
    i_set = np.sort(order[:k])
    f_set = np.sort(order[k:])
    return f_set, i_set, d_set


def measure_effective_distribution(
    spec: CodeSpec, trials: int, rng: np.random.Generator
) -> InputDistribution:
    """Empirical symbol distribution of the encoder over uniform random data."""
    counts = np.zeros(spec.constellation.order, dtype=np.int64)
    done = 0
    streams = rng.spawn(-(-trials // _CHUNK))
    points = spec.constellation.points
    for sub in streams:
        size = min(_CHUNK, trials - done)
        data = sub.integers(0, 2, size=(size, spec.payload_bits), dtype=np.int8)
        _, _, symbols, _ = encode_batch(data, spec)
        idx = np.searchsorted(points, symbols.ravel())
        counts += np.bincount(idx, minlength=points.shape[0])
        done += size
    return InputDistribution(counts / counts.sum(), nu=None)


def build_code_spec(
    kind: str,
    n_symbols: int,
    k: int,
    crc_degree: int,
    n_dm: int,
    dsnr_db: float,
    kappa_db: float,
    encoder_list: int,
    trials: int = 100_000,
    seed: int = 20250810,
    crc_poly: str | None = None,
    uniform: bool = False,
    name: str = "",
) -> CodeSpec:
    """Full construction pipeline at the design SNR.

    The shaping target is the mutual-information-optimal Maxwell-Boltzmann
    distribution at dsnr_db + kappa_db (or uniform when requested).  A first
    posterior pass under the target picks a provisional information set so
    the effective distribution can be measured; the final information set
    comes from a second posterior pass under the measured distribution.
    """
    from .streams import seed_stream

    c = build_constellation(kind)
    combined = c.levels * n_symbols
    if n_dm + k > combined:
        raise ValueError("n_dm + k exceeds the combined index space")
    nu = 0.0 if uniform else optimize_nu(c, dsnr_db + kappa_db)
    target_design = maxwell_boltzmann(c, nu) if nu > 0 else uniform_distribution(c)

    h_prior = estimate_prior_entropies(
        c, target_design, n_symbols, trials, seed_stream(seed, "prior")
    )
    h_post_first = estimate_posterior_entropies(
        c, target_design, n_symbols, dsnr_db, trials, seed_stream(seed, "posterior-design")
    )
    f_prov, i_prov, d_set = select_sets(h_prior.h, h_post_first.h, n_dm, k)

    crc_cfg = (
        CrcConfig.from_string(crc_poly)
        if crc_poly is not None
        else CrcConfig(crc_degree)
    )
    if crc_cfg.degree != crc_degree:
        raise ValueError("crc_poly degree disagrees with crc_degree")

    provisional = CodeSpec(
        n_symbols=n_symbols,
        constellation=c,
        target=target_design,
        frozen=f_prov,
        info=i_prov,
        shaping=d_set,
        crc=crc_cfg,
        encoder_list=encoder_list,
        design_snr_db=dsnr_db,
        kappa_db=kappa_db,
        nu=nu,
    )
    effective = measure_effective_distribution(
        provisional, trials, seed_stream(seed, "measure")
    )
    h_post = estimate_posterior_entropies(
        c, effective, n_symbols, dsnr_db, trials, seed_stream(seed, "posterior-effective")
    )
    f_set, i_set, d_check = select_sets(h_prior.h, h_post.h, n_dm, k)
    assert np.array_equal(d_set, d_check)

    return CodeSpec(
        n_symbols=n_symbols,
        constellation=c,
        target=effective,
        frozen=f_set,
        info=i_set,
        shaping=d_set,
        crc=crc_cfg,
        encoder_list=encoder_list,
        design_snr_db=float(dsnr_db),
        kappa_db=float(kappa_db),
        nu=float(nu),
        name=name,
        metadata={
            "construction_trials": int(trials),
            "construction_seed": int(seed),
            "uniform_target": bool(uniform),
        },
    )


# Canonical configurations used throughout the docs and the test suite.
PRESETS = {
    "pam4_shaped_sc": dict(
        kind="4-PAM", n_symbols=64, k=80, crc_degree=0, n_dm=24,
        dsnr_db=18.1, kappa_db=-0.9, encoder_list=1,
    ),
    "pam4_shaped_scl32": dict(
        kind="4-PAM", n_symbols=64, k=80, crc_degree=0, n_dm=24,
        dsnr_db=18.1, kappa_db=-0.9, encoder_list=32,
    ),
    "pam4_uniform": dict(
        kind="4-PAM", n_symbols=64, k=80, crc_degree=0, n_dm=0,
        dsnr_db=19.25, kappa_db=0.0, encoder_list=1, uniform=True,
    ),
    "ask8_shaped_crc7": dict(
        kind="8-ASK", n_symbols=64, k=119, crc_degree=7, n_dm=23,
        dsnr_db=13.0, kappa_db=-1.0, encoder_list=32,
    ),
    "ask8_shaped_crc5": dict(
        kind="8-ASK", n_symbols=64, k=117, crc_degree=5, n_dm=23,
        dsnr_db=13.0, kappa_db=-1.0, encoder_list=32,
    ),
    "ask8_uniform_crc7": dict(
        kind="8-ASK", n_symbols=64, k=119, crc_degree=7, n_dm=0,
        dsnr_db=13.0, kappa_db=0.0, encoder_list=1, uniform=True,
    ),
}


def build_preset(preset: str, trials: int = 100_000, seed: int = 20250810) -> CodeSpec:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    return build_code_spec(name=preset, trials=trials, seed=seed, **PRESETS[preset])
