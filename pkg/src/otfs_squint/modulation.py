"""Gray-coded QPSK / 16QAM alphabets, bit mapping and hard demapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import OtfsParams


@dataclass(frozen=True)
class ModAlphabet:
    """Unit-energy constellation. ``points[i]`` carries the bit label ``i`` (MSB first)."""

    name: str
    points: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(len(self.points)))

    @property
    def order(self) -> int:
        return len(self.points)

    def labels(self) -> np.ndarray:
        """Bit labels as a ``(Q, bits_per_symbol)`` 0/1 array."""
        b = self.bits_per_symbol
        idx = np.arange(self.order)
        return (idx[:, None] >> np.arange(b - 1, -1, -1)) & 1


# per-axis Gray code for 4-PAM: label -> level
_PAM4_GRAY = {0b00: -3, 0b01: -1, 0b11: 1, 0b10: 3}


def _qpsk():
    # first bit -> sign of I, second bit -> sign of Q
    pts = [complex(1 - 2 * (i >> 1), 1 - 2 * (i & 1)) for i in range(4)]
    return np.array(pts) / np.sqrt(2)


def _qam16():
    pts = [complex(_PAM4_GRAY[i >> 2], _PAM4_GRAY[i & 0b11]) for i in range(16)]
    return np.array(pts) / np.sqrt(10)


QPSK = ModAlphabet("QPSK", _qpsk())
QAM16 = ModAlphabet("16QAM", _qam16())

ALPHABETS = {"QPSK": QPSK, "16QAM": QAM16}


def get_alphabet(name: str) -> ModAlphabet:
    try:
        return ALPHABETS[name.upper()]
    except KeyError:
        raise ParameterError(f"unknown alphabet {name!r}; choose from {sorted(ALPHABETS)}") from None


def map_bits(bits, a: ModAlphabet, p: OtfsParams) -> np.ndarray:
    """Fill an ``(N, M)`` delay-Doppler grid row-major with Gray-mapped symbols."""
    bits = np.asarray(bits).astype(np.int64).ravel()
    b = a.bits_per_symbol
    need = p.N * p.M * b
    if bits.size != need:
        raise ParameterError(f"expected {need} bits for a {p.N}x{p.M} {a.name} frame, got {bits.size}")
    idx = bits.reshape(-1, b) @ (1 << np.arange(b - 1, -1, -1))
    return a.points[idx].reshape(p.N, p.M)


def demap_symbols(x_hat, a: ModAlphabet) -> np.ndarray:
    """Minimum-distance hard decision; ties go to the lower label index."""
    x = np.asarray(x_hat).ravel()
    d2 = np.abs(x[:, None] - a.points[None, :]) ** 2
    idx = np.argmin(d2, axis=1)
    return a.labels()[idx].ravel().astype(np.int8)
