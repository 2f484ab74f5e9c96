"""Constellations, shaped input distributions, AWGN and bit-level LLRs.

Labels follow the set-partitioning convention: the label of a point is the
natural binary value of its index in ascending point order, and level 1 is
the least significant label bit (decoded first by multistage decoding).
Fixing one more label bit doubles the minimum spacing inside each subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import LLR_CLIP

LN2 = float(np.log(2.0))


class DegenerateConditionError(ValueError):
    """Raised when a conditional puts zero mass on both bit values."""


@dataclass(frozen=True)
class Constellation:
    """Real modulation alphabet with per-level set-partitioning labels."""

    kind: str
    points: np.ndarray  # (M,) strictly increasing
    labels: np.ndarray  # (M,) labels[k] = label of points[k], a permutation of 0..M-1

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("constellation points must be strictly increasing")
        if sorted(self.labels.tolist()) != list(range(self.order)):
            raise ValueError("labels must be a permutation of 0..M-1")

    @property
    def order(self) -> int:
        return int(self.points.shape[0])

    @property
    def levels(self) -> int:
        return int(self.order).bit_length() - 1

    def label_inverse(self) -> np.ndarray:
        inv = np.empty(self.order, dtype=np.int64)
        inv[self.labels] = np.arange(self.order)
        return inv


def build_constellation(kind: str) -> Constellation:
    """Built-in alphabets: 4-PAM = {0,1,2,3}, 8-ASK = {+-1,+-3,+-5,+-7}."""
    key = kind.strip().lower()
    if key in ("4-pam", "4pam", "pam4"):
        points = np.arange(4.0)
        name = "4-PAM"
    elif key in ("8-ask", "8ask", "ask8"):
        points = np.arange(-7.0, 8.0, 2.0)
        name = "8-ASK"
    else:
        raise ValueError(f"unknown constellation kind: {kind!r}")
    return Constellation(name, points, np.arange(points.shape[0]))


@dataclass(frozen=True)
class InputDistribution:
    """Probabilities over constellation points, in point order."""

    probs: np.ndarray
    nu: float | None = None  # Maxwell-Boltzmann parameter when constructed from one

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")

    def entropy_bits(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log2(p)).sum())


def uniform_distribution(c: Constellation) -> InputDistribution:
    return InputDistribution(np.full(c.order, 1.0 / c.order), nu=0.0)


def maxwell_boltzmann(c: Constellation, nu: float) -> InputDistribution:
    """P(x) proportional to exp(-nu * x^2)."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    w = np.exp(-nu * c.points**2)
    return InputDistribution(w / w.sum(), nu=float(nu))


def second_moment(c: Constellation, d: InputDistribution) -> float:
    return float(np.sum(d.probs * c.points**2))


@dataclass(frozen=True)
class ChannelParams:
    """Operating point of the real AWGN channel Y = X + N."""

    snr_db: float
    noise_var: float

    def __post_init__(self):
        if self.noise_var <= 0:
            raise ValueError("noise variance must be positive")


def channel_from_snr(c: Constellation, d: InputDistribution, snr_db: float) -> ChannelParams:
    """SNR is E[X^2]/E[N^2] (second moment, also for non-zero-mean alphabets)."""
    noise_var = second_moment(c, d) / 10.0 ** (snr_db / 10.0)
    return ChannelParams(float(snr_db), noise_var)


def awgn(x: np.ndarray, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x + rng.standard_normal(x.shape) * np.sqrt(noise_var)


def map_symbols(c: Constellation, level_bits: np.ndarray) -> np.ndarray:
    """Assemble labels from per-level bits (level 1 = LSB) and emit points.

    level_bits has shape (..., m, N).
    """
    bits = np.asarray(level_bits)
    if bits.shape[-2] != c.levels:
        raise ValueError(f"expected {c.levels} bit levels, got {bits.shape[-2]}")
    weights = (1 << np.arange(c.levels)).reshape(-1, 1)
    label = np.sum(bits.astype(np.int64) * weights, axis=-2)
    return c.points[c.label_inverse()[label]]


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    """Max-shift LSE; rows that are entirely -inf stay -inf (no NaN)."""
    mx = np.max(a, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.squeeze(shift, axis) + np.log(np.sum(np.exp(a - shift), axis=axis))
    return np.where(np.isfinite(np.squeeze(mx, axis)), out, -np.inf)


def mutual_information(
    c: Constellation, d: InputDistribution, noise_var: float, n_nodes: int = 64
) -> float:
    """I(X;Y) in bits over the AWGN channel, by Gauss-Hermite quadrature."""
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    active = d.probs > 0
    px = d.probs[active]
    x = c.points[active]
    with np.errstate(divide="ignore"):
        logpx = np.log(d.probs)
    # y grid per conditional: y = x_k + sqrt(2*noise_var) * z_i
    y = x[:, None] + np.sqrt(2.0 * noise_var) * nodes[None, :]
    # log p(y|x) with the Gaussian normalizer dropped (it cancels in the ratio)
    ll_all = -((y[:, :, None] - c.points[None, None, :]) ** 2) / (2.0 * noise_var)
    ll_own = -((y - x[:, None]) ** 2) / (2.0 * noise_var)
    ll_mix = _logsumexp(logpx[None, None, :] + ll_all, axis=2)
    integrand = (ll_own - ll_mix) / LN2  # bits
    per_symbol = integrand @ weights / np.sqrt(np.pi)
    return float(np.sum(px * per_symbol))


def conditional_entropy(
    c: Constellation, d: InputDistribution, noise_var: float, n_nodes: int = 64
) -> float:
    """H(X|Y) in bits for the AWGN channel."""
    return d.entropy_bits() - mutual_information(c, d, noise_var, n_nodes)


def optimize_nu(
    c: Constellation,
    snr_db: float,
    lo: float = 0.0,
    hi: float = 2.0,
    tol: float = 1e-4,
) -> float:
    """Maxwell-Boltzmann parameter maximizing I(X;Y) at the given SNR.

    The noise variance is re-pinned for every candidate nu so that
    E[X^2]/noise_var matches snr_db.  Golden-section search on [lo, hi].
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    snr_lin = 10.0 ** (snr_db / 10.0)

    def objective(nu: float) -> float:
        dist = maxwell_boltzmann(c, nu)
        return mutual_information(c, dist, second_moment(c, dist) / snr_lin)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = objective(x2)
    return float((a + b) / 2.0)


def _level_masks(c: Constellation, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pattern point masks for one level.

    Returns (agree, bit) where agree[q, k] is True when point k's label
    matches lower-bit pattern q (q packs levels 1..level-1, level 1 = LSB)
    and bit[k] is point k's bit at this level.  level is 1-based.
    """
    n_pat = 1 << (level - 1)
    lab = c.labels
    low = lab & (n_pat - 1)
    agree = low[None, :] == np.arange(n_pat)[:, None]
    bit = (lab >> (level - 1)) & 1
    return agree, bit


def _llr_from_sides(lse0: np.ndarray, lse1: np.ndarray, clip: float) -> np.ndarray:
    """Combine subset masses into a clipped LLR; double-empty maps to 0."""
    with np.errstate(invalid="ignore"):
        diff = np.where(np.isneginf(lse1), clip, np.where(np.isneginf(lse0), -clip, lse0 - lse1))
    return np.where(
        np.isneginf(lse0) & np.isneginf(lse1), 0.0, np.clip(diff, -clip, clip)
    )


def prior_llr_tables(
    c: Constellation, d: InputDistribution, clip: float = LLR_CLIP
) -> list[np.ndarray]:
    """Per-level prior LLR lookup tables.

    tables[l][q] = log P(B_{l+1}=0 | pattern q) - log P(B_{l+1}=1 | pattern q)
    with q packing the lower-level bits (level 1 = LSB of q).  Conditionals
    with zero mass on one side clip to +-clip; zero mass on both sides maps
    to 0 (such patterns are unreachable under the distribution).
    """
    with np.errstate(divide="ignore"):
        logp = np.log(d.probs)
    tables = []
    for level in range(1, c.levels + 1):
        agree, bit = _level_masks(c, level)
        w = np.where(agree, logp[None, :], -np.inf)
        lse0 = _logsumexp(np.where(bit[None, :] == 0, w, -np.inf), axis=1)
        lse1 = _logsumexp(np.where(bit[None, :] == 1, w, -np.inf), axis=1)
        tables.append(_llr_from_sides(lse0, lse1, clip))
    return tables


def posterior_llr_tables(
    c: Constellation,
    d: InputDistribution,
    y: np.ndarray,
    noise_var: float,
    clip: float = LLR_CLIP,
) -> list[np.ndarray]:
    """Per-level posterior LLR lookup tables for observations y (..., N).

    tables[l][..., k, q] is the level-(l+1) LLR of symbol k under lower-bit
    pattern q.  Computed with masked log-sum-exp over the point axis.
    """
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logp = np.log(d.probs)
    logw = logp - (y[..., None] - c.points) ** 2 / (2.0 * noise_var)  # (..., N, M)
    tables = []
    for level in range(1, c.levels + 1):
        agree, bit = _level_masks(c, level)
        n_pat = agree.shape[0]
        table = np.empty(y.shape + (n_pat,), dtype=np.float64)
        for q in range(n_pat):
            w = np.where(agree[q], logw, -np.inf)
            lse0 = _logsumexp(np.where(bit == 0, w, -np.inf), axis=-1)
            lse1 = _logsumexp(np.where(bit == 1, w, -np.inf), axis=-1)
            table[..., q] = _llr_from_sides(lse0, lse1, clip)
        tables.append(table)
    return tables


def _pattern_index(lower_bits: np.ndarray) -> np.ndarray:
    """Pack lower-level bits (..., level-1, N) into pattern indices (..., N)."""
    n_lower = lower_bits.shape[-2]
    if n_lower == 0:
        return np.zeros(lower_bits.shape[:-2] + lower_bits.shape[-1:], dtype=np.int64)
    weights = (1 << np.arange(n_lower)).reshape(-1, 1)
    return np.sum(lower_bits.astype(np.int64) * weights, axis=-2)


def prior_level_llr(
    c: Constellation,
    d: InputDistribution,
    level: int,
    lower_bits,
    clip: float = LLR_CLIP,
) -> float:
    """log P(B_l = 0 | lower bits) - log P(B_l = 1 | lower bits) under d."""
    lower = np.asarray(lower_bits, dtype=np.int64).reshape(-1)
    if not 1 <= level <= c.levels:
        raise ValueError(f"level must be in 1..{c.levels}")
    if lower.shape[0] != level - 1:
        raise ValueError(f"expected {level - 1} lower bits, got {lower.shape[0]}")
    q = int(np.sum(lower * (1 << np.arange(level - 1)))) if level > 1 else 0
    agree, bit = _level_masks(c, level)
    with np.errstate(divide="ignore"):
        logp = np.log(d.probs)
    w = np.where(agree[q], logp, -np.inf)
    lse0 = _logsumexp(np.where(bit == 0, w, -np.inf), axis=0)
    lse1 = _logsumexp(np.where(bit == 1, w, -np.inf), axis=0)
    if np.isneginf(lse0) and np.isneginf(lse1):
        raise DegenerateConditionError(
            f"zero conditional mass for both bit values at level {level}"
        )
    return float(_llr_from_sides(np.asarray(lse0), np.asarray(lse1), clip))


def posterior_level_llr(
    c: Constellation,
    d: InputDistribution,
    y: float,
    level: int,
    lower_bits,
    noise_var: float,
    clip: float = LLR_CLIP,
) -> float:
    """Bit-level posterior LLR for one observation, via log-sum-exp."""
    lower = np.asarray(lower_bits, dtype=np.int64).reshape(-1)
    if not 1 <= level <= c.levels:
        raise ValueError(f"level must be in 1..{c.levels}")
    if lower.shape[0] != level - 1:
        raise ValueError(f"expected {level - 1} lower bits, got {lower.shape[0]}")
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    q = int(np.sum(lower * (1 << np.arange(level - 1)))) if level > 1 else 0
    agree, bit = _level_masks(c, level)
    with np.errstate(divide="ignore"):
        logp = np.log(d.probs)
    logw = logp - (float(y) - c.points) ** 2 / (2.0 * noise_var)
    w = np.where(agree[q], logw, -np.inf)
    lse0 = _logsumexp(np.where(bit == 0, w, -np.inf), axis=0)
    lse1 = _logsumexp(np.where(bit == 1, w, -np.inf), axis=0)
    if np.isneginf(lse0) and np.isneginf(lse1):
        raise DegenerateConditionError(
            f"zero conditional mass for both bit values at level {level}"
        )
    return float(_llr_from_sides(np.asarray(lse0), np.asarray(lse1), clip))
