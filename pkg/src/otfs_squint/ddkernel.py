"""Delay-Doppler channel kernels with the Doppler-squint correction.

``dd_kernel_ideal`` is the closed-form kernel for ideal pulses; a pilot at
the origin sees ``y[k, l] = x_p * h[k, l]``. ``RectKernel`` holds the
rectangular-pulse kernel ``h_{k,l}[k', l']`` of a single path, which splits
into separable delay and Doppler factors on each of its two branches
(inter-symbol and inter-carrier interference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, PathParams
from .errors import DomainError, ParameterError
from .grid import OtfsParams


def dirichlet(x, L, norm=None):
    """``sin(pi L x) / (norm sin(pi x))`` with ``norm`` defaulting to ``L``.

    The argument is reduced to ``x = r + f`` with integer ``r`` and
    ``|f| <= 1/2``; at ``f == 0`` the analytic limit ``(-1)^(r(L-1)) L/norm``
    is used instead of dividing (a short series covers ``L |f| < 1e-5``).
    """
    norm = L if norm is None else norm
    x = np.asarray(x, float)
    r = np.round(x)
    f = x - r
    sign = np.where((r * (L - 1)) % 2 == 0, 1.0, -1.0)
    tiny = np.abs(f) * L < 1e-5
    safe = np.where(tiny, 0.5, f)
    val = np.sin(np.pi * L * safe) / (norm * np.sin(np.pi * safe))
    # near the singular points: two-term series, exact to double precision for L |f| < 1e-5
    series = L / norm * (1 - (np.pi * f) ** 2 * (L * L - 1) / 6)
    return sign * np.where(tiny, series, val)


def dd_kernel_ideal(path: PathParams, p: OtfsParams, k=None, l=None):
    """Ideal-pulse delay-Doppler kernel ``h[k, l]`` (full ``(N, M)`` grid by default)."""
    if k is None:
        k = np.arange(p.N)[:, None]
    if l is None:
        l = np.arange(p.M)[None, :]
    k = np.asarray(k, float)
    l = np.asarray(l, float)
    M, N, ip = p.M, p.N, path.inv_p
    dl = path.l - l
    dk = path.k - k
    return (path.beta_prime
            * np.exp(-1j * np.pi * (M - 1) * dl / M)
            * np.exp(1j * np.pi * (N - 1) * dk / N)
            * np.exp(1j * np.pi * (M - 1) * (N - 1) / 2 * ip)
            * dirichlet(dl / M - (N - 1) / 2 * ip, M)
            * dirichlet(dk / N + (M - 1) / 2 * ip, N))


def dd_grid_ideal(ch: ChannelRealization) -> np.ndarray:
    return sum(dd_kernel_ideal(q, ch.params) for q in ch.paths)


def _isi_start(l_i, sign, M):
    # first delay column whose contribution comes from the previous time slot
    return M - l_i + 1 if sign > 0 else M - l_i


def index_sets(path: PathParams, M: int):
    """Delay columns split into the ISI and ICI branches of the rectangular kernel."""
    if path.is_static:
        raise DomainError("index sets are defined for moving paths only")
    if path.l != int(path.l) or path.l < 1:
        raise DomainError(f"need an integer delay index l >= 1, got {path.l}")
    start = _isi_start(int(path.l), np.sign(path.nu), M)
    return np.arange(start, M), np.arange(0, start)


@dataclass(frozen=True)
class RectKernel:
    """Rectangular-pulse kernel of one path in separable form.

    ``h_{k,l}[k',l'] = A[l, l'] B[k, k']`` with ``(A, B) = (A_isi, B_isi)``
    when ``l'`` is in the ISI set and ``(A_ici, B_ici)`` otherwise.
    """

    A_isi: np.ndarray
    B_isi: np.ndarray
    A_ici: np.ndarray
    B_ici: np.ndarray
    isi_cols: np.ndarray  # boolean mask over l'

    @property
    def A(self):
        return self.A_isi, self.A_ici

    def dense(self) -> np.ndarray:
        """Full kernel as an ``(N, M, N, M)`` array indexed ``[k, l, k', l']``."""
        isi = np.einsum("ab,cd->acbd", self.B_isi, self.A_isi)
        ici = np.einsum("ab,cd->acbd", self.B_ici, self.A_ici)
        return np.where(self.isi_cols[None, None, None, :], isi, ici)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        xi = np.where(self.isi_cols[None, :], x, 0)
        xc = x - xi
        return self.B_isi @ xi @ self.A_isi.T + self.B_ici @ xc @ self.A_ici.T

    def taps(self, threshold=1e-3):
        """Kernel entries above ``threshold`` times the peak modulus.

        Returns ``(index, values)`` with ``index`` an ``(n, 4)`` array of
        ``(k, l, k', l')``.
        """
        d = self.dense()
        mag = np.abs(d)
        idx = np.argwhere(mag > threshold * mag.max())
        return idx, d[tuple(idx.T)]


def rect_kernel(path: PathParams, p: OtfsParams, *, _allow_l0=False) -> RectKernel:
    """Separable factors of the rectangular-pulse kernel for one path."""
    if path.l != int(path.l):
        raise DomainError(f"rectangular kernel needs an integer delay index, got l = {path.l}")
    if path.l < 1 and not _allow_l0:
        raise DomainError("rectangular kernel needs l >= 1")
    M, N, ip = p.M, p.N, path.inv_p
    l = np.arange(M)[:, None]
    lp = np.arange(M)[None, :]
    k = np.arange(N)[:, None]
    kp = np.arange(N)[None, :]
    dl = path.l + lp - l
    dk = path.k + kp - k
    common = (path.beta_prime * np.exp(-1j * np.pi * (M - 1) * dl / M)
              * np.exp(2j * np.pi * path.nu * lp * p.T / M))
    A_isi = common * dirichlet(dl / M - (N - 2) / 2 * ip, M)
    A_ici = common * dirichlet(dl / M - (N - 1) / 2 * ip, M)
    B_isi = (dirichlet(dk / N + (M - 1) / 2 * ip, N - 1, N)
             * np.exp(1j * np.pi * dk)
             * np.exp(1j * np.pi * (N - 2) * (M - 1) / 2 * ip)
             * np.exp(-2j * np.pi * (path.k + kp) / N))
    B_ici = (dirichlet(dk / N + (M - 1) / 2 * ip, N)
             * np.exp(1j * np.pi * (N - 1) * dk / N)
             * np.exp(1j * np.pi * (N - 1) * (M - 1) / 2 * ip))
    # a static path is treated as the p -> +inf limit
    sign = -1 if path.nu < 0 else 1
    isi = np.arange(M) >= _isi_start(int(path.l), sign, M)
    return RectKernel(A_isi, B_isi, A_ici, B_ici, isi)


def dd_kernel_rect(path: PathParams, p: OtfsParams, k, l, k2, l2):
    """Single entry (or broadcast array) of the rectangular kernel ``h_{k,l}[k2, l2]``."""
    K = rect_kernel(path, p)
    k, l, k2, l2 = (np.asarray(a) for a in (k, l, k2, l2))
    return np.where(K.isi_cols[l2], K.B_isi[k, k2] * K.A_isi[l, l2], K.B_ici[k, k2] * K.A_ici[l, l2])


def apply_rect_channel_dd(x, ch: ChannelRealization, truncate: float | None = None) -> np.ndarray:
    """Received delay-Doppler frame for rectangular pulses.

    With ``truncate`` set, only kernel entries above that fraction of each
    path's peak are kept (tap-list mode); otherwise the full sum is used.
    """
    p = ch.params
    x = np.asarray(x)
    if x.shape != p.shape:
        raise ParameterError(f"grid shape {x.shape} does not match {p.shape}")
    y = np.zeros(p.shape, complex)
    for q in ch.paths:
        K = rect_kernel(q, p)
        if truncate is None:
            y += K.apply(x)
        else:
            idx, val = K.taps(truncate)
            np.add.at(y, (idx[:, 0], idx[:, 1]), val * x[idx[:, 2], idx[:, 3]])
    return y
