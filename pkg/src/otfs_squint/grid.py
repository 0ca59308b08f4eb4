"""OTFS grid geometry and the symplectic finite Fourier transform pair.

Grids are stored as ``(N, M)`` complex arrays everywhere in the package:
row index is Doppler ``k`` (delay-Doppler grids) or time slot ``n``
(time-frequency grids); column index is delay ``l`` or subcarrier ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class OtfsParams:
    """Frame geometry and carrier configuration.

    ``l_max`` and ``k_max`` are the delay and Doppler caps in grid units; they
    need not be integers. The slot duration ``T`` is derived from the
    subcarrier spacing so that ``T * delta_f == 1``.
    """

    M: int
    N: int
    delta_f: float = 15e3
    f_c: float = 4e9
    l_max: float = 20
    k_max: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N or self.M < 1 or self.N < 1:
            raise ParameterError(f"M and N must be positive integers, got M={self.M}, N={self.N}")
        if self.M * self.N >= 1_000_000:
            raise ParameterError(f"M*N = {self.M * self.N} is outside the MN < 1e6 operating regime")
        if self.delta_f <= 0 or self.f_c <= 0:
            raise ParameterError("delta_f and f_c must be positive")
        if not 1 < self.l_max <= self.M - 1:
            raise ParameterError(f"need 1 < l_max <= M-1, got l_max={self.l_max}, M={self.M}")
        # k_max = 0 is accepted so that static (v = 0) scenarios can be expressed.
        if not 0 <= self.k_max < self.N / 2:
            raise ParameterError(f"need 0 <= k_max < N/2, got k_max={self.k_max}, N={self.N}")

    @property
    def T(self) -> float:
        return 1.0 / self.delta_f

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.M)

    @property
    def tau_max(self) -> float:
        return self.l_max * self.T / self.M

    @property
    def nu_max(self) -> float:
        return self.k_max * self.delta_f / self.N

    @classmethod
    def from_speed(cls, M, N, speed_kmh, *, delta_f=15e3, f_c=4e9, l_max=20):
        """Build parameters whose Doppler cap follows from a UE speed in km/h."""
        nu_max = speed_kmh / 3.6 / SPEED_OF_LIGHT * f_c
        return cls(M=M, N=N, delta_f=delta_f, f_c=f_c, l_max=l_max, k_max=nu_max * N / delta_f)


def _check_shape(a, p):
    a = np.asarray(a)
    if a.ndim != 2:
        raise ParameterError(f"expected a 2-D grid, got shape {a.shape}")
    if p is not None and a.shape != p.shape:
        raise ParameterError(f"grid shape {a.shape} does not match (N, M) = {p.shape}")
    return a


def isfft(x, p: OtfsParams | None = None) -> np.ndarray:
    """Delay-Doppler grid -> time-frequency grid.

    ``X[n, m] = 1/sqrt(NM) * sum_{k,l} x[k, l] exp(j2pi(nk/N - ml/M))``:
    an inverse DFT along the Doppler axis and a forward DFT along delay.
    """
    x = _check_shape(x, p)
    return np.fft.fft(np.fft.ifft(x, axis=0, norm="ortho"), axis=1, norm="ortho")


def sfft(Y, p: OtfsParams | None = None) -> np.ndarray:
    """Time-frequency grid -> delay-Doppler grid; exact inverse of :func:`isfft`."""
    Y = _check_shape(Y, p)
    return np.fft.ifft(np.fft.fft(Y, axis=0, norm="ortho"), axis=1, norm="ortho")
