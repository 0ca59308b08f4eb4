"""Time-domain rectangular-pulse OTFS chain used as an independent oracle.

The transmitter synthesizes the Heisenberg waveform with the pulse
``1/sqrt(T)`` on ``[0, T)`` at ``osf * M * delta_f`` samples per second; the
channel delays, Doppler-shifts *and* time-scales that waveform per path; the
receiver evaluates the matched-filter integral by a Riemann sum at the same
rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import ParameterError
from .grid import OtfsParams

INTERP_TAPS = 64
KAISER_BETA = 8.0


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray
    rate: float
    osf: int
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.samples)) / self.rate


def heisenberg_rect(X, p: OtfsParams, osf: int = 4) -> SampledWaveform:
    """Transmit waveform ``s(t) = sum_{n,m} X[n,m] g(t - nT) exp(j2pi m df (t - nT))``."""
    if osf < 1 or int(osf) != osf:
        raise ParameterError("osf must be a positive integer")
    X = np.asarray(X)
    if X.shape != p.shape:
        raise ParameterError(f"grid shape {X.shape} does not match {p.shape}")
    Q = osf * p.M
    padded = np.zeros((p.N, Q), complex)
    padded[:, : p.M] = X
    blocks = np.fft.ifft(padded, axis=1) * Q / np.sqrt(p.T)
    return SampledWaveform(blocks.ravel(), osf * p.M * p.delta_f, osf)


def _kaiser(x, half):
    z = np.clip(1 - (x / half) ** 2, 0, None)
    return np.i0(KAISER_BETA * np.sqrt(z)) / np.i0(KAISER_BETA)


def interpolate(samples, pos, taps: int = INTERP_TAPS):
    """Kaiser-windowed-sinc interpolation of ``samples`` at fractional indices ``pos``.

    Indices outside ``[0, len(samples))`` read as zero.
    """
    samples = np.asarray(samples)
    pos = np.asarray(pos, float)
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    half = taps // 2
    offs = np.arange(-half + 1, half + 1)
    idx = base[:, None] + offs[None, :]
    d = frac[:, None] - offs[None, :]
    w = np.sinc(d) * _kaiser(d, half)
    valid = (idx >= 0) & (idx < len(samples))
    vals = np.where(valid, samples[np.clip(idx, 0, len(samples) - 1)], 0)
    out = np.sum(w * vals, axis=1)
    # exactly grid-aligned reads are passed through untouched
    exact = frac == 0
    if np.any(exact):
        b = base[exact]
        ok = (b >= 0) & (b < len(samples))
        out[np.flatnonzero(exact)[ok]] = samples[b[ok]]
        out[np.flatnonzero(exact)[~ok]] = 0
    return out


def apply_ltv_channel_time(s: SampledWaveform, ch: ChannelRealization) -> SampledWaveform:
    """``r(t) = sum_i beta_i exp(j2pi nu_i t) s((1 + nu_i/f_c) t - tau_i)``.

    ``beta_i`` already contains the carrier phase ``exp(-j2pi f_c tau_i)``.
    Paths are accumulated in list order so results are reproducible.
    """
    t = s.times
    q = np.arange(len(s.samples))
    r = np.zeros(len(s.samples), complex)
    for path in ch.paths:
        pos = (1 + path.inv_p) * (q + s.t0 * s.rate) - path.tau * s.rate - s.t0 * s.rate
        # grid-aligned delays computed in floating point land a few ulps off the sample
        near = np.round(pos)
        pos = np.where(np.abs(pos - near) < 1e-9, near, pos)
        r += path.beta * np.exp(2j * np.pi * path.nu * t) * interpolate(s.samples, pos)
    return SampledWaveform(r, s.rate, s.osf, s.t0)


def wigner_rect(r: SampledWaveform, p: OtfsParams) -> np.ndarray:
    """Matched-filter samples ``Y[n, m]`` by a Riemann sum over each slot."""
    Q = r.osf * p.M
    if r.t0 != 0 or len(r.samples) < Q * p.N:
        raise ParameterError("waveform must cover [0, NT) starting at t = 0")
    blocks = np.asarray(r.samples[: Q * p.N]).reshape(p.N, Q)
    return np.fft.fft(blocks, axis=1)[:, : p.M] * np.sqrt(p.T) / Q
