"""Noise injection, per-bin LMMSE equalization and BER counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class NoiseSpec:
    """Per-sample complex noise variance ``sigma2``.

    Conventions: ``SNR_p = |x_p|^2 / sigma2`` for pilot frames and
    ``Eb/N0 = sigma_s2 / (sigma2 log2 Q)`` for data frames.
    """

    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ParameterError("sigma2 must be positive")

    @classmethod
    def from_ebn0(cls, ebn0_db, bits_per_symbol, sigma_s2=1.0):
        return cls(sigma_s2 / (bits_per_symbol * 10 ** (ebn0_db / 10)))

    @classmethod
    def from_snr_p(cls, snr_p_db, x_p):
        return cls(abs(x_p) ** 2 / 10 ** (snr_p_db / 10))


def add_noise(Y, ns: NoiseSpec, seed=None) -> np.ndarray:
    """Add CN(0, sigma2) samples; ``seed`` may be an int or a ``numpy.random.Generator``."""
    Y = np.asarray(Y)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
    return Y + v * np.sqrt(ns.sigma2 / 2)


def lmmse_equalize(Y, H, ns: NoiseSpec, sigma_s2=1.0) -> np.ndarray:
    H = np.asarray(H)
    return H.conj() * np.asarray(Y) / (np.abs(H) ** 2 + ns.sigma2 / sigma_s2)


def ber(bits_hat, bits_ref) -> float:
    a = np.asarray(bits_hat).ravel()
    b = np.asarray(bits_ref).ravel()
    if a.shape != b.shape:
        raise ParameterError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.count_nonzero(a != b) / a.size)
