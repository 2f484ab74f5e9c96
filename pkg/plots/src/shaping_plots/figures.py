"""Render sweep CSVs into deterministic SVG/PNG figures.

Consumes the two CSV schemas emitted by the simulation harness:

  FER rows:    snr_db,decoder,encoder_list,decoder_list,trials,frame_errors,
               fer,fer_ci_low,fer_ci_high,mean_lambda_fail
  lambda rows: snr_db,lambda,count

Output is byte-stable for identical inputs: a fixed SVG hash salt, no
embedded timestamps, and curve order fixed by sorted (decoder, encoder_list).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FER_COLUMNS = (
    "snr_db", "decoder", "encoder_list", "decoder_list", "trials",
    "frame_errors", "fer", "fer_ci_low", "fer_ci_high", "mean_lambda_fail",
)
LAMBDA_COLUMNS = ("snr_db", "lambda", "count")

# fixed styles per decoder; unknown names fall back to a cycling table
DECODER_STYLES = {
    "standard": dict(color="#1f77b4", marker="o"),
    "dynfrozen": dict(color="#d62728", marker="s"),
    "reencode": dict(color="#2ca02c", marker="d"),
}
FALLBACK_STYLES = (
    dict(color="#9467bd", marker="^"),
    dict(color="#8c564b", marker="v"),
    dict(color="#e377c2", marker="*"),
)


class SchemaError(ValueError):
    """Input CSV does not match the sweep output contract."""


@dataclass
class PlotJob:
    inputs: list[str]
    output: str
    kind: str  # "fer" or "lambda"
    labels: dict[str, str] = field(default_factory=dict)  # curve key -> label

    def __post_init__(self):
        if self.kind not in ("fer", "lambda"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("no input CSVs given")


def read_csv_rows(path, required: tuple[str, ...]) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [col for col in required if col not in header]
            if missing:
                raise SchemaError(f"{path}: missing columns {missing}")
            return list(reader)
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _deterministic_rc():
    plt.rcParams["svg.hashsalt"] = "shaping-plots"
    plt.rcParams["svg.fonttype"] = "path"


def _save(fig, output: str) -> None:
    _deterministic_rc()
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)


def _parse_fer_rows(paths) -> dict[tuple[str, int], list[tuple]]:
    curves: dict[tuple[str, int], list[tuple]] = {}
    for path in paths:
        for row in read_csv_rows(path, FER_COLUMNS):
            try:
                key = (row["decoder"], int(row["encoder_list"]))
                point = (
                    float(row["snr_db"]),
                    float(row["fer"]),
                    float(row["fer_ci_low"]),
                    float(row["fer_ci_high"]),
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed row {row}") from exc
            curves.setdefault(key, []).append(point)
    for pts in curves.values():
        pts.sort()
    return curves


def plot_fer(job: PlotJob) -> None:
    """Semilog-y FER vs SNR with binomial confidence whiskers."""
    curves = _parse_fer_rows(job.inputs)
    if not curves:
        raise SchemaError("no FER rows found")
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    fallback = 0
    for key in sorted(curves):
        decoder, enc_list = key
        pts = [p for p in curves[key] if p[1] > 0]
        if not pts:
            continue
        snr = [p[0] for p in pts]
        fer = [p[1] for p in pts]
        err_lo = [max(p[1] - p[2], 0.0) for p in pts]
        err_hi = [max(p[3] - p[1], 0.0) for p in pts]
        style = DECODER_STYLES.get(decoder)
        if style is None:
            style = FALLBACK_STYLES[fallback % len(FALLBACK_STYLES)]
            fallback += 1
        label = job.labels.get(
            f"{decoder}/{enc_list}", f"{decoder} (enc. list {enc_list})"
        )
        ax.errorbar(
            snr, fer, yerr=[err_lo, err_hi], label=label, capsize=2.5,
            linewidth=1.2, markersize=5, **style,
        )
    ax.set_yscale("log")
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("FER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, job.output)


def plot_lambda(job: PlotJob) -> None:
    """Grouped per-SNR histogram of re-encoding counts, normalized per SNR."""
    groups: dict[float, dict[int, int]] = {}
    for path in job.inputs:
        for row in read_csv_rows(path, LAMBDA_COLUMNS):
            try:
                snr = float(row["snr_db"])
                lam = int(row["lambda"])
                count = int(row["count"])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed row {row}") from exc
            groups.setdefault(snr, {})[lam] = groups.setdefault(snr, {}).get(lam, 0) + count
    if not groups:
        raise SchemaError("no histogram rows found")
    snrs = sorted(groups)
    max_lam = max(max(g) for g in groups.values())
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    width = 0.8 / len(snrs)
    for pos, snr in enumerate(snrs):
        total = sum(groups[snr].values())
        if total == 0:
            continue
        lams = sorted(groups[snr])
        probs = [groups[snr][l] / total for l in lams]
        offset = (pos - (len(snrs) - 1) / 2) * width
        label = job.labels.get(f"{snr:g}", f"SNR {snr:g} dB")
        ax.bar([l + offset for l in lams], probs, width=width, label=label)
    ax.set_xlabel("re-encodings per failed list decode")
    ax.set_ylabel("conditional probability")
    ax.set_xlim(-0.5, max_lam + 0.5)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, job.output)
