"""Cyclic redundancy checks for the outer code.

Generators are given MSB-first as binary coefficient strings (monic, degree
p).  p = 0 means no CRC: the checksum is empty and every check passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Degree -> default generator, MSB first.  The short outer codes here use
# standard minimum-distance-friendly generators; all are configurable.
DEFAULT_POLYNOMIALS = {
    0: "",
    3: "1011",       # x^3 + x + 1
    5: "110101",     # x^5 + x^4 + x^2 + 1
    7: "11100101",   # x^7 + x^6 + x^5 + x^2 + 1
}


@dataclass(frozen=True)
class CrcConfig:
    degree: int
    poly: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("CRC degree must be >= 0")
        poly = self.poly
        if poly is None:
            if self.degree not in DEFAULT_POLYNOMIALS:
                raise ValueError(f"no default generator for degree {self.degree}")
            poly = np.array([int(b) for b in DEFAULT_POLYNOMIALS[self.degree]], dtype=np.int8)
        poly = np.asarray(poly, dtype=np.int8)
        if self.degree == 0:
            poly = np.zeros(0, dtype=np.int8)
        else:
            if poly.shape[0] != self.degree + 1:
                raise ValueError("generator must have degree+1 coefficients")
            if poly[0] != 1:
                raise ValueError("generator must be monic")
        object.__setattr__(self, "poly", poly)

    @classmethod
    def from_string(cls, bits: str) -> "CrcConfig":
        coeffs = np.array([int(b) for b in bits.strip()], dtype=np.int8) if bits.strip() else None
        degree = 0 if coeffs is None else coeffs.shape[0] - 1
        return cls(degree, coeffs)

    def poly_string(self) -> str:
        return "".join(str(int(b)) for b in self.poly)


def crc_compute(bits, cfg: CrcConfig) -> np.ndarray:
    """Remainder of bits * x^p modulo the generator, via a shift register."""
    if cfg.degree == 0:
        return np.zeros(0, dtype=np.int8)
    bits = np.asarray(bits, dtype=np.int8).reshape(-1)
    taps = cfg.poly[1:]
    reg = np.zeros(cfg.degree, dtype=np.int8)
    for b in bits:
        feedback = b ^ reg[0]
        reg[:-1] = reg[1:]
        reg[-1] = 0
        if feedback:
            reg ^= taps
    return reg


def crc_check(bits_with_checksum, cfg: CrcConfig) -> bool:
    """True iff the trailing p bits equal the CRC of the leading bits."""
    bits = np.asarray(bits_with_checksum, dtype=np.int8).reshape(-1)
    if bits.shape[0] < cfg.degree:
        raise ValueError("word shorter than the checksum")
    if cfg.degree == 0:
        return True
    payload, checksum = bits[: -cfg.degree], bits[-cfg.degree:]
    return bool(np.array_equal(crc_compute(payload, cfg), checksum))


def generator_matrix(cfg: CrcConfig, length: int) -> np.ndarray:
    """(length, p) matrix A with crc_compute(bits) = bits @ A mod 2.

    Valid because the all-zero register makes the CRC linear in the message.
    """
    rows = np.zeros((length, max(cfg.degree, 1)), dtype=np.int8)[:, : cfg.degree]
    for i in range(length):
        e = np.zeros(length, dtype=np.int8)
        e[i] = 1
        rows[i] = crc_compute(e, cfg)
    return rows


def crc_compute_batch(bits: np.ndarray, cfg: CrcConfig, matrix: np.ndarray | None = None) -> np.ndarray:
    """Checksums for a batch of equal-length messages, shape (B, length)."""
    bits = np.asarray(bits, dtype=np.int8)
    if cfg.degree == 0:
        return np.zeros((bits.shape[0], 0), dtype=np.int8)
    if matrix is None:
        matrix = generator_matrix(cfg, bits.shape[1])
    return (bits.astype(np.int64) @ matrix.astype(np.int64) % 2).astype(np.int8)


def crc_check_batch(
    payload: np.ndarray, checksum: np.ndarray, cfg: CrcConfig, matrix: np.ndarray | None = None
) -> np.ndarray:
    """Vectorized check over leading batch axes; payload (..., k), checksum (..., p)."""
    if cfg.degree == 0:
        return np.ones(payload.shape[:-1], dtype=bool)
    if matrix is None:
        matrix = generator_matrix(cfg, payload.shape[-1])
    expect = payload.astype(np.int64) @ matrix.astype(np.int64) % 2
    return np.all(expect == checksum, axis=-1)
