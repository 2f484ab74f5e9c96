"""Seeded Monte-Carlo FER sweeps with reproducible stopping and CSV output.

Every trial owns a generator derived from (seed, snr_index, trial_index), so
results are a pure function of the configuration: batching, scheduling and
worker count cannot change them.  A sweep point stops at the smallest trial
index at which every requested decoder has accumulated min_frame_errors
frame errors (or at max_trials); statistics are truncated to that index
before aggregation.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .codec import (
    CodeSpec,
    encode_batch,
    load_spec,
    reencode_validate,
    run_dynfrozen_list,
    run_standard_list,
    select_by_crc,
)
from .modulation import awgn
from .streams import seed_stream

DECODER_ORDER = ("standard", "dynfrozen", "reencode")
_BLOCK = 4096     # trials per worker task
_SUB_BATCH = 256  # trials per vectorized engine pass

WORKERS_ENV = "POLARSHAPING_WORKERS"


@dataclass
class SweepConfig:
    spec_path: str
    snr_db: list[float]
    decoders: list[str] = field(default_factory=lambda: ["standard"])
    decoder_list: int = 32
    min_frame_errors: int = 100
    max_trials: int = 3_000_000
    seed: int = 1
    workers: int = 1
    shaping_mode: str = "branch"
    stop_on: str = "frame_errors"  # or "scl_failures"
    out: str = "sweep"

    def __post_init__(self):
        if not self.snr_db:
            raise ValueError("snr grid must be non-empty")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.max_trials < 1:
            raise ValueError("zero trials configured")
        bad = [d for d in self.decoders if d not in DECODER_ORDER]
        if bad:
            raise ValueError(f"unknown decoders: {bad}")
        self.decoders = [d for d in DECODER_ORDER if d in self.decoders]
        if self.stop_on not in ("frame_errors", "scl_failures"):
            raise ValueError("stop_on must be 'frame_errors' or 'scl_failures'")


def load_sweep_config(path, overrides: dict | None = None) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f for f in SweepConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return SweepConfig(**doc)


@dataclass
class DecoderOutcome:
    success: bool
    valid: bool
    metric: float


@dataclass
class TrialRecord:
    trial_index: int
    outcomes: dict[str, DecoderOutcome]
    scl_would_fail: bool | None = None
    lam: int | None = None


@dataclass
class FerPoint:
    snr_db: float
    decoder: str
    encoder_list: int
    decoder_list: int
    trials: int
    frame_errors: int
    fer: float
    fer_ci_low: float
    fer_ci_high: float
    mean_lambda_fail: float | None
    lambda_hist: np.ndarray | None  # counts for lambda = 0..decoder_list


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% binomial confidence interval (Wilson score)."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _decode_block(
    spec: CodeSpec,
    snr_db: float,
    decoders: tuple[str, ...],
    decoder_list: int,
    shaping_mode: str,
    data: np.ndarray,
    y: np.ndarray,
    tx_u: np.ndarray,
):
    """Decode one batch with every requested decoder on the same y."""
    channel = spec.channel(snr_db)
    need_list = "standard" in decoders or "reencode" in decoders
    out = {}
    scl_fail = None
    lam = None
    if need_list:
        cands = run_standard_list(y, spec, decoder_list, channel, shaping_mode)
        s_data, s_uhat, _, s_valid = select_by_crc(cands)
        # word-level failure governs the re-encoding workload: a data-correct
        # candidate with wrong shaping bits is still an invalid word
        scl_fail = np.any(s_uhat != tx_u, axis=1) | ~s_valid
        if "standard" in decoders:
            out["standard"] = np.any(s_data != data, axis=1) | ~s_valid
        if "reencode" in decoders:
            r_data, _, _, r_valid, lam = reencode_validate(cands, spec, tx_data=data, tx_u=tx_u)
            out["reencode"] = np.any(r_data != data, axis=1) | ~r_valid
    if "dynfrozen" in decoders:
        cands = run_dynfrozen_list(y, spec, decoder_list, channel)
        d_data, _, _, d_valid = select_by_crc(cands)
        out["dynfrozen"] = np.any(d_data != data, axis=1) | ~d_valid
    return out, scl_fail, lam


def _run_block(spec, cfg_tuple, snr_index: int, t0: int, t1: int):
    """Worker task: trials [t0, t1) at one SNR point; returns flag arrays."""
    snr_db, decoders, decoder_list, shaping_mode, seed = cfg_tuple
    n = t1 - t0
    err = {d: np.zeros(n, dtype=bool) for d in decoders}
    scl_fail = np.zeros(n, dtype=bool)
    has_fail = "standard" in decoders or "reencode" in decoders
    lam = np.zeros(n, dtype=np.int16)
    channel = spec.channel(snr_db)
    for s0 in range(0, n, _SUB_BATCH):
        s1 = min(s0 + _SUB_BATCH, n)
        size = s1 - s0
        data = np.empty((size, spec.payload_bits), dtype=np.int8)
        noise = np.empty((size, spec.n_symbols))
        for r in range(size):
            # one generator per trial: draw order is data, then noise
            rng = seed_stream(seed, snr_index, t0 + s0 + r)
            data[r] = rng.integers(0, 2, spec.payload_bits, dtype=np.int8)
            noise[r] = rng.standard_normal(spec.n_symbols)
        tx_u, _, symbols, _ = encode_batch(data, spec)
        y = symbols + noise * np.sqrt(channel.noise_var)
        out, sf, lm = _decode_block(
            spec, snr_db, decoders, decoder_list, shaping_mode, data, y, tx_u
        )
        for d, flags in out.items():
            err[d][s0:s1] = flags
        if sf is not None:
            scl_fail[s0:s1] = sf
        if lm is not None:
            lam[s0:s1] = lm
    return err, (scl_fail if has_fail else None), lam


_POOL_SPEC = None


def _pool_init(spec):
    global _POOL_SPEC
    _POOL_SPEC = spec


def _pool_task(args):
    cfg_tuple, snr_index, t0, t1 = args
    return t0, _run_block(_POOL_SPEC, cfg_tuple, snr_index, t0, t1)


def run_trial(
    spec: CodeSpec,
    snr_db: float,
    decoders,
    rng: np.random.Generator,
    decoder_list: int = 32,
    shaping_mode: str = "branch",
    trial_index: int = 0,
) -> TrialRecord:
    """One end-to-end trial; every requested decoder sees the same y."""
    decoders = tuple(d for d in DECODER_ORDER if d in decoders)
    channel = spec.channel(snr_db)
    data = rng.integers(0, 2, spec.payload_bits, dtype=np.int8)[None, :]
    tx_u, _, symbols, _ = encode_batch(data, spec)
    y = awgn(symbols, channel.noise_var, rng)

    need_list = "standard" in decoders or "reencode" in decoders
    outcomes = {}
    scl_fail = None
    lam_val = None
    if need_list:
        cands = run_standard_list(y, spec, decoder_list, channel, shaping_mode)
        s_data, s_uhat, s_metric, s_valid = select_by_crc(cands)
        scl_fail = not (bool(s_valid[0]) and bool(np.all(s_uhat[0] == tx_u[0])))
        if "standard" in decoders:
            ok = bool(s_valid[0]) and bool(np.all(s_data[0] == data[0]))
            outcomes["standard"] = DecoderOutcome(ok, bool(s_valid[0]), float(s_metric[0]))
        if "reencode" in decoders:
            r_data, _, r_metric, r_valid, lam = reencode_validate(cands, spec)
            lam_val = int(lam[0])
            ok_r = bool(r_valid[0]) and bool(np.all(r_data[0] == data[0]))
            outcomes["reencode"] = DecoderOutcome(ok_r, bool(r_valid[0]), float(r_metric[0]))
    if "dynfrozen" in decoders:
        cands = run_dynfrozen_list(y, spec, decoder_list, channel)
        d_data, _, d_metric, d_valid = select_by_crc(cands)
        ok_d = bool(d_valid[0]) and bool(np.all(d_data[0] == data[0]))
        outcomes["dynfrozen"] = DecoderOutcome(ok_d, bool(d_valid[0]), float(d_metric[0]))
    return TrialRecord(trial_index, outcomes, scl_fail, lam_val)


def _stop_index(stop_flags: np.ndarray, min_events: int) -> int | None:
    """Smallest index t with min_events True values in [0..t], else None."""
    csum = np.cumsum(stop_flags)
    if csum.size == 0 or csum[-1] < min_events:
        return None
    return int(np.searchsorted(csum, min_events))


def run_point(
    spec: CodeSpec,
    snr_db: float,
    snr_index: int,
    cfg: SweepConfig,
    pool=None,
) -> tuple[list[FerPoint], int]:
    """All requested decoders at one SNR; returns rows and the trial count."""
    decoders = tuple(cfg.decoders)
    cfg_tuple = (float(snr_db), decoders, cfg.decoder_list, cfg.shaping_mode, cfg.seed)
    err = {d: np.zeros(0, dtype=bool) for d in decoders}
    track_fail = "standard" in decoders or "reencode" in decoders
    scl_fail = np.zeros(0, dtype=bool)
    lam = np.zeros(0, dtype=np.int16)
    next_t = 0
    round_blocks = max(1, cfg.workers)

    def stop_flags():
        if cfg.stop_on == "scl_failures":
            return [scl_fail]
        return [err[d] for d in decoders]

    t_stop = None
    while True:
        t_end = min(next_t + round_blocks * _BLOCK, cfg.max_trials)
        tasks = [
            (cfg_tuple, snr_index, t0, min(t0 + _BLOCK, t_end))
            for t0 in range(next_t, t_end, _BLOCK)
        ]
        if pool is not None:
            results = sorted(pool.map(_pool_task, tasks))
            results = [r for _, r in results]
        else:
            results = [_run_block(spec, *task) for task in tasks]
        for block_err, block_fail, block_lam in results:
            for d in decoders:
                err[d] = np.concatenate([err[d], block_err[d]])
            if track_fail:
                scl_fail = np.concatenate([scl_fail, block_fail])
                lam = np.concatenate([lam, block_lam])
        next_t = t_end

        candidates = [_stop_index(f, cfg.min_frame_errors) for f in stop_flags()]
        if all(c is not None for c in candidates):
            t_stop = max(candidates)
            break
        if next_t >= cfg.max_trials:
            t_stop = cfg.max_trials - 1
            break
        round_blocks = min(2 * round_blocks, 16 * max(1, cfg.workers))

    trials = t_stop + 1
    rows = []
    for d in decoders:
        flags = err[d][:trials]
        k = int(flags.sum())
        lo, hi = wilson_interval(k, trials)
        mean_lam = None
        hist = None
        if d == "reencode":
            fail_lam = lam[:trials][scl_fail[:trials]]
            hist = np.bincount(fail_lam, minlength=cfg.decoder_list + 1)
            mean_lam = float(fail_lam.mean()) if fail_lam.size else None
        rows.append(
            FerPoint(
                snr_db=float(snr_db),
                decoder=d,
                encoder_list=spec.encoder_list,
                decoder_list=cfg.decoder_list,
                trials=trials,
                frame_errors=k,
                fer=k / trials,
                fer_ci_low=lo,
                fer_ci_high=hi,
                mean_lambda_fail=mean_lam,
                lambda_hist=hist,
            )
        )
    return rows, trials


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_fer_csv(path, rows: list[FerPoint]) -> None:
    header = (
        "snr_db,decoder,encoder_list,decoder_list,trials,frame_errors,"
        "fer,fer_ci_low,fer_ci_high,mean_lambda_fail"
    )
    lines = [header]
    for r in rows:
        lam = "" if r.mean_lambda_fail is None else _fmt(r.mean_lambda_fail)
        lines.append(
            f"{_fmt(r.snr_db)},{r.decoder},{r.encoder_list},{r.decoder_list},"
            f"{r.trials},{r.frame_errors},{_fmt(r.fer)},{_fmt(r.fer_ci_low)},"
            f"{_fmt(r.fer_ci_high)},{lam}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_lambda_csv(path, rows: list[FerPoint]) -> None:
    lines = ["snr_db,lambda,count"]
    for r in rows:
        if r.lambda_hist is None:
            continue
        for lam_value, count in enumerate(r.lambda_hist):
            lines.append(f"{_fmt(r.snr_db)},{lam_value},{int(count)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def resolve_workers(cfg_workers: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, cfg_workers)


def run_sweep(cfg: SweepConfig, spec: CodeSpec | None = None) -> list[FerPoint]:
    """Run the whole grid and write '<out>_fer.csv' and '<out>_lambda.csv'."""
    if spec is None:
        spec = load_spec(cfg.spec_path)
    if "dynfrozen" in cfg.decoders and spec.encoder_list != 1:
        raise ValueError("dynfrozen decoding requires a code encoded with list size 1")
    workers = resolve_workers(cfg.workers)
    rows: list[FerPoint] = []
    pool = None
    try:
        if workers > 1:
            pool = mp.get_context("fork").Pool(workers, initializer=_pool_init, initargs=(spec,))
        for snr_index, snr_db in enumerate(cfg.snr_db):
            point_rows, _ = run_point(spec, snr_db, snr_index, cfg, pool)
            rows.extend(point_rows)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    write_fer_csv(f"{cfg.out}_fer.csv", rows)
    write_lambda_csv(f"{cfg.out}_lambda.csv", rows)
    return rows
