"""Shaped multilevel polar encoding and the three list decoders.

A code is described by a :class:`CodeSpec`: disjoint index sets F (frozen),
I (information) and D (shaping) over the combined index space of m levels of
length-N polar transforms (combined index j = level*N + i, level-major).

The encoder forces F to zero, places data plus CRC on I, and chooses D bits
from the prior of the shaping target (argmax chain for list size 1, list
search with prior path metrics otherwise), so every emitted word is a
deterministic function of the data.  Decoders differ in how they treat D:

- standard: branch on I and D, pick the best CRC-passing candidate;
- dynfrozen: treat D as dynamic frozen bits, reproducing the encoder rule on
  a duplicated prior-state tree (valid for codes encoded with list size 1);
- reencode: standard list, then validate candidates best-first by re-encoding
  their data with the transmitter's encoder and comparing words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import yaml

from . import crc as crcmod
from .kernel import (
    ARGMAX_RULE,
    BRANCH,
    FORCED,
    LLR_CLIP,
    IndexPolicy,
    SclResult,
    scl_run_batch,
)
from .modulation import (
    ChannelParams,
    Constellation,
    InputDistribution,
    build_constellation,
    map_symbols,
    maxwell_boltzmann,
    posterior_llr_tables,
    prior_llr_tables,
    second_moment,
)


@dataclass
class CodeSpec:
    """Complete description of one shaped multilevel polar code."""

    n_symbols: int
    constellation: Constellation
    target: InputDistribution  # effective channel input distribution (decoder prior)
    frozen: np.ndarray
    info: np.ndarray
    shaping: np.ndarray
    crc: crcmod.CrcConfig
    encoder_list: int
    design_snr_db: float
    kappa_db: float
    nu: float  # Maxwell-Boltzmann parameter of the encoder's shaping target
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frozen = np.sort(np.asarray(self.frozen, dtype=np.int64))
        self.info = np.sort(np.asarray(self.info, dtype=np.int64))
        self.shaping = np.sort(np.asarray(self.shaping, dtype=np.int64))
        self.validate()

    def validate(self) -> None:
        n = self.n_symbols
        if n < 2 or n & (n - 1):
            raise ValueError("n_symbols must be a power of two >= 2")
        total = np.concatenate([self.frozen, self.info, self.shaping])
        if len(np.unique(total)) != self.combined_len or len(total) != self.combined_len:
            raise ValueError("F, I, D must partition the combined index set")
        if total.size and (total.min() < 0 or total.max() >= self.combined_len):
            raise ValueError("set indices out of range")
        if self.payload_bits <= 0:
            raise ValueError("need more information positions than CRC bits")
        if self.encoder_list < 1:
            raise ValueError("encoder list size must be >= 1")
        if self.target.probs.shape[0] != self.constellation.order:
            raise ValueError("target distribution does not match the constellation")

    @property
    def levels(self) -> int:
        return self.constellation.levels

    @property
    def combined_len(self) -> int:
        return self.levels * self.n_symbols

    @property
    def k(self) -> int:
        return int(self.info.shape[0])

    @property
    def payload_bits(self) -> int:
        return self.k - self.crc.degree

    @property
    def n_dm(self) -> int:
        return int(self.shaping.shape[0])

    @property
    def rate(self) -> float:
        return self.payload_bits / self.n_symbols

    @cached_property
    def shaping_target(self) -> InputDistribution:
        return maxwell_boltzmann(self.constellation, self.nu)

    @cached_property
    def crc_matrix(self) -> np.ndarray:
        return crcmod.generator_matrix(self.crc, self.payload_bits)

    @cached_property
    def _prior_tables(self) -> list[np.ndarray]:
        return prior_llr_tables(self.constellation, self.shaping_target)

    def channel(self, snr_db: float) -> ChannelParams:
        """Operating point with noise variance from the effective distribution."""
        noise_var = second_moment(self.constellation, self.target) / 10.0 ** (snr_db / 10.0)
        return ChannelParams(float(snr_db), noise_var)


@dataclass
class Codeword:
    u: np.ndarray           # (combined_len,)
    level_bits: np.ndarray  # (levels, n_symbols), symbol order
    symbols: np.ndarray     # (n_symbols,)
    metric: float           # -log P_X^N(x) under the shaping target


@dataclass
class DecodeResult:
    data: np.ndarray     # (payload_bits,)
    u_hat: np.ndarray    # (combined_len,)
    metric: float
    valid: bool
    lam: int | None = None  # re-encodings performed (reencode decoder only)


def _pattern_index(lower_bits: np.ndarray) -> np.ndarray:
    n_lower = lower_bits.shape[-2]
    if n_lower == 0:
        return np.zeros(lower_bits.shape[:-2] + lower_bits.shape[-1:], dtype=np.int64)
    weights = (1 << np.arange(n_lower)).reshape(-1, 1)
    return np.sum(lower_bits.astype(np.int64) * weights, axis=-2)


def _prior_source(spec: CodeSpec):
    tables = spec._prior_tables

    def src(level, lower):
        return tables[level][_pattern_index(lower)]

    return src


def _posterior_source(spec: CodeSpec, y: np.ndarray, noise_var: float):
    tables = posterior_llr_tables(spec.constellation, spec.target, y, noise_var)

    def src(level, lower):
        q = _pattern_index(lower)  # (B, P, N)
        t = tables[level]          # (B, N, patterns)
        return np.take_along_axis(t[:, None, :, :], q[..., None], axis=3)[..., 0]

    return src


def _encode_policy(spec: CodeSpec, list_size: int) -> IndexPolicy:
    kinds = np.full(spec.combined_len, FORCED, dtype=np.uint8)
    kinds[spec.shaping] = ARGMAX_RULE if list_size == 1 else BRANCH
    return IndexPolicy(kinds)


def _forced_matrix(spec: CodeSpec, data: np.ndarray) -> np.ndarray:
    checksum = crcmod.crc_compute_batch(data, spec.crc, spec.crc_matrix)
    forced = np.zeros((data.shape[0], spec.combined_len), dtype=np.int8)
    forced[:, spec.info] = np.concatenate([data, checksum], axis=1)
    return forced


def encode_batch(data: np.ndarray, spec: CodeSpec, list_size: int | None = None):
    """Encode a batch of payloads; returns (u, level_bits, symbols, metric)."""
    data = np.asarray(data, dtype=np.int8)
    if data.ndim != 2 or data.shape[1] != spec.payload_bits:
        raise ValueError(f"data must be (batch, {spec.payload_bits})")
    L = spec.encoder_list if list_size is None else int(list_size)
    src = _prior_source(spec)
    res = scl_run_batch(
        src,
        _encode_policy(spec, L),
        L,
        n_symbols=spec.n_symbols,
        n_levels=spec.levels,
        batch=data.shape[0],
        forced=_forced_matrix(spec, data),
        rule_source=src if L == 1 else None,
    )
    u = res.decisions[:, 0]
    level_bits = res.level_bits[:, 0]
    symbols = map_symbols(spec.constellation, level_bits)
    return u, level_bits, symbols, res.metrics[:, 0]


def encode(data, spec: CodeSpec, list_size: int | None = None) -> Codeword:
    """Deterministic shaped encoding of one payload."""
    data = np.asarray(data, dtype=np.int8).reshape(1, -1)
    u, level_bits, symbols, metric = encode_batch(data, spec, list_size)
    return Codeword(u[0], level_bits[0], symbols[0], float(metric[0]))


@dataclass
class CandidateList:
    """Sorted decoder output list plus CRC bookkeeping."""

    decisions: np.ndarray  # (B, L, combined_len)
    metrics: np.ndarray    # (B, L)
    payload: np.ndarray    # (B, L, payload_bits)
    crc_ok: np.ndarray     # (B, L) bool


def run_standard_list(
    y: np.ndarray,
    spec: CodeSpec,
    list_size: int,
    channel: ChannelParams,
    shaping_mode: str = "branch",
) -> CandidateList:
    """Plain SCL decoding: branch on I and D (or hard-decide D per path)."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    kinds = np.full(spec.combined_len, FORCED, dtype=np.uint8)
    kinds[spec.info] = BRANCH
    if shaping_mode == "branch":
        kinds[spec.shaping] = BRANCH
    elif shaping_mode == "hard":
        # non-default alternative: hard-decide D per path from the posterior
        kinds[spec.shaping] = ARGMAX_RULE
    else:
        raise ValueError(f"unknown shaping mode {shaping_mode!r}")
    src = _posterior_source(spec, y, channel.noise_var)
    res = scl_run_batch(
        src,
        IndexPolicy(kinds),
        list_size,
        n_symbols=spec.n_symbols,
        n_levels=spec.levels,
        batch=y.shape[0],
        rule_source=src if shaping_mode == "hard" else None,
    )
    return _candidates_from(res, spec)


def run_dynfrozen_list(
    y: np.ndarray, spec: CodeSpec, list_size: int, channel: ChannelParams
) -> CandidateList:
    """Modified SCL: D bits follow the encoder's prior argmax rule per path.

    Matches the transmitter only when the code was encoded with list size 1.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    kinds = np.full(spec.combined_len, FORCED, dtype=np.uint8)
    kinds[spec.info] = BRANCH
    kinds[spec.shaping] = ARGMAX_RULE
    res = scl_run_batch(
        _posterior_source(spec, y, channel.noise_var),
        IndexPolicy(kinds),
        list_size,
        n_symbols=spec.n_symbols,
        n_levels=spec.levels,
        batch=y.shape[0],
        rule_source=_prior_source(spec),
    )
    return _candidates_from(res, spec)


def _candidates_from(res: SclResult, spec: CodeSpec) -> CandidateList:
    cand_info = res.decisions[:, :, spec.info]
    payload = cand_info[:, :, : spec.payload_bits]
    checksum = cand_info[:, :, spec.payload_bits:]
    crc_ok = crcmod.crc_check_batch(payload, checksum, spec.crc, spec.crc_matrix)
    return CandidateList(res.decisions, res.metrics, payload, crc_ok)


def select_by_crc(cands: CandidateList):
    """Best-metric CRC-passing candidate per trial, else best metric flagged invalid.

    Returns (data, u_hat, metric, valid) arrays.
    """
    batch, _ = cands.metrics.shape
    any_ok = cands.crc_ok.any(axis=1)
    first_ok = np.where(any_ok, np.argmax(cands.crc_ok, axis=1), 0)
    b_idx = np.arange(batch)
    return (
        cands.payload[b_idx, first_ok],
        cands.decisions[b_idx, first_ok],
        cands.metrics[b_idx, first_ok],
        any_ok,
    )


def decode_standard(
    y, spec: CodeSpec, list_size: int, channel: ChannelParams, shaping_mode: str = "branch"
) -> DecodeResult:
    cands = run_standard_list(y, spec, list_size, channel, shaping_mode)
    data, u_hat, metric, valid = select_by_crc(cands)
    return DecodeResult(data[0], u_hat[0], float(metric[0]), bool(valid[0]))


def decode_dynfrozen(y, spec: CodeSpec, list_size: int, channel: ChannelParams) -> DecodeResult:
    cands = run_dynfrozen_list(y, spec, list_size, channel)
    data, u_hat, metric, valid = select_by_crc(cands)
    return DecodeResult(data[0], u_hat[0], float(metric[0]), bool(valid[0]))


def reencode_validate(
    cands: CandidateList,
    spec: CodeSpec,
    tx_data: np.ndarray | None = None,
    tx_u: np.ndarray | None = None,
):
    """Sequential re-encoding validity check over a decoded candidate list.

    Candidates are visited in ascending metric order; CRC failures are skipped
    without a re-encoding; the first candidate whose re-encoded word matches
    is accepted.  Passing the transmitted (tx_data, tx_u) pair enables an
    exact shortcut: a candidate whose payload equals tx_data re-encodes to
    tx_u by encoder determinism, so the encoder call is skipped.  Results are
    bit-identical with or without the shortcut.

    Returns (data, u_hat, metric, valid, lam) arrays.
    """
    batch, list_size = cands.metrics.shape
    data = cands.payload[:, 0].copy()
    u_hat = cands.decisions[:, 0].copy()
    metric = cands.metrics[:, 0].copy()
    valid = np.zeros(batch, dtype=bool)
    lam = np.zeros(batch, dtype=np.int64)
    resolved = np.zeros(batch, dtype=bool)

    # rank[b, r] = list position of the r-th CRC-passing candidate of trial b
    order = np.argsort(~cands.crc_ok, axis=1, kind="stable")
    n_ok = cands.crc_ok.sum(axis=1)

    for r in range(list_size):
        active = (~resolved) & (r < n_ok)
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        pos = order[rows, r]
        cand_data = cands.payload[rows, pos]
        cand_u = cands.decisions[rows, pos]
        lam[rows] += 1
        if tx_data is not None:
            shortcut = np.all(cand_data == tx_data[rows], axis=1)
        else:
            shortcut = np.zeros(rows.shape[0], dtype=bool)
        reenc = np.empty_like(cand_u)
        if shortcut.any():
            reenc[shortcut] = tx_u[rows[shortcut]]
        if (~shortcut).any():
            reenc[~shortcut] = encode_batch(cand_data[~shortcut], spec)[0]
        match = np.all(reenc == cand_u, axis=1)
        hit = rows[match]
        resolved[hit] = True
        valid[hit] = True
        data[hit] = cand_data[match]
        u_hat[hit] = cand_u[match]
        metric[hit] = cands.metrics[hit, pos[match]]

    # unresolved trials keep the best-metric candidate, flagged invalid
    return data, u_hat, metric, valid, lam


def decode_reencode(y, spec: CodeSpec, list_size: int, channel: ChannelParams) -> DecodeResult:
    cands = run_standard_list(y, spec, list_size, channel)
    data, u_hat, metric, valid, lam = reencode_validate(cands, spec)
    return DecodeResult(data[0], u_hat[0], float(metric[0]), bool(valid[0]), int(lam[0]))


def is_valid_codeword(u_hat, spec: CodeSpec) -> bool:
    """True iff u_hat is reproduced by the transmitter's encoder and passes CRC."""
    u_hat = np.asarray(u_hat, dtype=np.int8).reshape(-1)
    if u_hat.shape[0] != spec.combined_len:
        raise ValueError(f"expected {spec.combined_len} bits")
    word_info = u_hat[spec.info]
    if not crcmod.crc_check(word_info, spec.crc):
        return False
    cw = encode(word_info[: spec.payload_bits], spec)
    return bool(np.array_equal(cw.u, u_hat))


# ---------------------------------------------------------------------------
# CodeSpec serialization (nested key-value YAML)
# ---------------------------------------------------------------------------


def spec_to_dict(spec: CodeSpec) -> dict:
    return {
        "name": spec.name,
        "symbols": int(spec.n_symbols),
        "levels": int(spec.levels),
        "constellation": {
            "kind": spec.constellation.kind,
            "points": [float(p) for p in spec.constellation.points],
            "labels": [int(l) for l in spec.constellation.labels],
        },
        "target": {
            "probs": [float(p) for p in spec.target.probs],
            "nu": None if spec.target.nu is None else float(spec.target.nu),
        },
        "sets": {
            "frozen": [int(i) for i in spec.frozen],
            "info": [int(i) for i in spec.info],
            "shaping": [int(i) for i in spec.shaping],
        },
        "crc": {"degree": int(spec.crc.degree), "polynomial": spec.crc.poly_string()},
        "encoder_list": int(spec.encoder_list),
        "design": {
            "design_snr_db": float(spec.design_snr_db),
            "kappa_db": float(spec.kappa_db),
            "nu": float(spec.nu),
            "n_info": int(spec.k),
            "n_shaping": int(spec.n_dm),
        },
        "metadata": {str(k): v for k, v in spec.metadata.items()},
    }


def spec_from_dict(doc: dict) -> CodeSpec:
    cst = doc["constellation"]
    constellation = Constellation(
        cst["kind"], np.array(cst["points"]), np.array(cst["labels"])
    )
    tgt = doc["target"]
    target = InputDistribution(np.array(tgt["probs"]), tgt.get("nu"))
    crc_cfg = crcmod.CrcConfig.from_string(doc["crc"]["polynomial"])
    if crc_cfg.degree != doc["crc"]["degree"]:
        raise ValueError("CRC degree does not match the polynomial")
    design = doc["design"]
    return CodeSpec(
        n_symbols=int(doc["symbols"]),
        constellation=constellation,
        target=target,
        frozen=np.array(doc["sets"]["frozen"], dtype=np.int64),
        info=np.array(doc["sets"]["info"], dtype=np.int64),
        shaping=np.array(doc["sets"]["shaping"], dtype=np.int64),
        crc=crc_cfg,
        encoder_list=int(doc["encoder_list"]),
        design_snr_db=float(design["design_snr_db"]),
        kappa_db=float(design["kappa_db"]),
        nu=float(design["nu"]),
        name=doc.get("name", ""),
        metadata=doc.get("metadata", {}) or {},
    )


def save_spec(spec: CodeSpec, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(spec_to_dict(spec), fh, sort_keys=False, default_flow_style=None)


def load_spec(path) -> CodeSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(yaml.safe_load(fh))
