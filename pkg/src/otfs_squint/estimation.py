"""Impulse-pilot channel estimation: sensing dictionaries, OMP and the 3-sigma baseline.

Vectors over a grid use the ordering ``index = n + m N`` (time/Doppler index
fastest), i.e. ``grid.ravel(order="F")``.

Dictionary column ``(k, l)`` is the diagonal time-frequency response
``exp(-j2pi ml/M) exp(j2pi kn/N) exp(j2pi mnk df/(N f_c))`` of a path at
delay ``l`` and Doppler ``k`` with unit ``beta'``. Recovered weights are in
that ``beta'`` convention; :meth:`EstimationResult.paths` converts back to the
physical gain ``beta = beta' exp(-j2pi kl/(NM))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .channel import PathParams
from .coeffs import CoeffModel, tf_coeff_approx
from .ddkernel import dd_kernel_ideal, rect_kernel
from .errors import DomainError, ParameterError
from .grid import OtfsParams, isfft, sfft


def vec(grid) -> np.ndarray:
    return np.asarray(grid).ravel(order="F")


def unvec(v, p: OtfsParams) -> np.ndarray:
    return np.asarray(v).reshape(p.shape, order="F")


# --------------------------------------------------------------------------
# pilot

@dataclass(frozen=True)
class PilotConfig:
    x_p: complex
    snr_p_db: float

    @classmethod
    def from_snr(cls, snr_p_db, sigma2=1.0):
        """Pilot amplitude giving ``|x_p|^2 / sigma2 = 10^(snr/10)``."""
        return cls(math.sqrt(sigma2 * 10 ** (snr_p_db / 10)), snr_p_db)

    @property
    def sigma2(self) -> float:
        return abs(self.x_p) ** 2 / 10 ** (self.snr_p_db / 10)


def build_pilot(pc: PilotConfig, p: OtfsParams) -> np.ndarray:
    x = np.zeros(p.shape, complex)
    x[0, 0] = pc.x_p
    return x


# --------------------------------------------------------------------------
# dictionaries

def dictionary_k_max(v, p: OtfsParams) -> int:
    """Doppler extent of the dictionary, ``ceil(nu_max N T)`` for speed ``v`` (m/s)."""
    from .channel import doppler_bounds
    _, k = doppler_bounds(v, p)
    return int(math.ceil(k - 1e-12))


@dataclass
class SensingMatrix:
    """``NM x D`` dictionary with column ``j`` <-> ``col_map[j] = (k, l)``.

    Columns are ordered ``j = (k + k_max) + l (2 k_max + 1)``. The TF
    dictionary is never stored densely (it is applied through FFTs); DD
    dictionaries built from closed-form kernels are dense.
    """

    params: OtfsParams
    k_max: int
    l_max: int
    domain: str
    model: CoeffModel
    x_p: complex = 1.0
    _dense: np.ndarray | None = field(default=None, repr=False)
    _phase: np.ndarray | None = field(default=None, repr=False)

    @property
    def col_map(self) -> np.ndarray:
        K = 2 * self.k_max + 1
        j = np.arange(self.shape[1])
        return np.stack([j % K - self.k_max, j // K], axis=1)

    @property
    def shape(self):
        return (self.params.N * self.params.M, (2 * self.k_max + 1) * (self.l_max + 1))

    @property
    def scale(self) -> complex:
        """``c_alpha``: the received pilot vector is ``scale * Phi beta + noise``."""
        if self.domain == "tf":
            return self.x_p / math.sqrt(self.params.M * self.params.N)
        return self.x_p

    def col_index(self, k, l) -> int:
        return int((k + self.k_max) + l * (2 * self.k_max + 1))

    def beta_factor(self) -> np.ndarray:
        """``beta' / beta = exp(j2pi kl/(NM))`` per column."""
        k, l = self.col_map.T
        return np.exp(2j * np.pi * k * l / (self.params.N * self.params.M))

    # -- column synthesis -------------------------------------------------
    def _tf_grid(self, k, l):
        p = self.params
        path = PathParams.from_grid(1.0, l, k, p)
        # unit beta' (not beta): divide out exp(j2pi tau nu)
        return tf_coeff_approx(path, p, include_dse=True) / np.exp(2j * np.pi * path.tau * path.nu)

    def _grid(self, k, l):
        p = self.params
        tf = self.domain == "tf"
        if tf or self.model is CoeffModel.IDEAL_APPROX:
            g = self._tf_grid(k, l)
            return g if tf else sfft(g) / math.sqrt(p.M * p.N)
        path = PathParams.from_grid(1.0, l, k, p)
        unit = 1 / path.beta_prime
        if self.model is CoeffModel.DD_CLOSED:
            return dd_kernel_ideal(path, p) * unit
        if self.model is CoeffModel.RECT:
            K = rect_kernel(path, p, _allow_l0=True)
            return (K.B_isi[:, 0:1] * K.A_isi[None, :, 0] if K.isi_cols[0]
                    else K.B_ici[:, 0:1] * K.A_ici[None, :, 0]) * unit
        raise ParameterError(f"model {self.model} cannot build a delay-Doppler dictionary")

    def columns(self, idx) -> np.ndarray:
        idx = np.atleast_1d(idx)
        if self._dense is not None:
            return self._dense[:, idx]
        cm = self.col_map
        out = np.empty((self.shape[0], len(idx)), complex)
        for i, j in enumerate(idx):
            out[:, i] = vec(self._grid(*cm[j]))
        return out

    def dense(self) -> np.ndarray:
        if self._dense is None:
            return self.columns(np.arange(self.shape[1]))
        return self._dense

    def matvec(self, beta) -> np.ndarray:
        beta = np.asarray(beta)
        nz = np.flatnonzero(beta)
        if nz.size == 0:
            return np.zeros(self.shape[0], complex)
        return self.columns(nz) @ beta[nz]

    def rmatvec(self, r) -> np.ndarray:
        """``Phi^H r`` (fast path for TF and SFFT-consistent DD dictionaries)."""
        p = self.params
        r = np.asarray(r)
        if self._dense is not None:
            return self._dense.conj().T @ r
        if self.domain == "dd":
            # Phi_dd = SFFT Phi_tf / sqrt(NM), SFFT unitary
            r = vec(isfft(unvec(r, p))) / math.sqrt(p.M * p.N)
        if self._phase is None:
            ks = np.arange(-self.k_max, self.k_max + 1)[:, None, None]
            n = np.arange(p.N)[None, :, None]
            m = np.arange(p.M)[None, None, :]
            self._phase = np.exp(-2j * np.pi * ks * n * (1 / p.N + m * p.delta_f / (p.N * p.f_c)))
        s = np.einsum("knm,nm->km", self._phase, unvec(r, p))
        psi = np.fft.ifft(s, axis=1)[:, : self.l_max + 1] * p.M  # (K, l_max+1)
        return psi.T.ravel()  # j = k_idx + l K

    def to_csv(self, path):
        """Write the dense dictionary with a ``k``/``l`` metadata header."""
        D = self.dense()
        cm = self.col_map
        with open(path, "w") as fh:
            fh.write("# k," + ",".join(str(k) for k in cm[:, 0]) + "\n")
            fh.write("# l," + ",".join(str(l) for l in cm[:, 1]) + "\n")
            fh.write("row," + ",".join(f"re{j},im{j}" for j in range(D.shape[1])) + "\n")
            for i, row in enumerate(D):
                fh.write(f"{i}," + ",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) + "\n")


def _check_extent(p, k_max, l_max):
    if int(k_max) != k_max or int(l_max) != l_max or k_max < 0 or l_max < 0:
        raise ParameterError("dictionary extents must be non-negative integers")
    if 2 * k_max + 1 > p.N or l_max > p.M - 1:
        raise ParameterError(f"dictionary extent (k_max={k_max}, l_max={l_max}) exceeds the grid")


def build_sensing_tf(p: OtfsParams, k_max: int, l_max: int, x_p=1.0) -> SensingMatrix:
    _check_extent(p, k_max, l_max)
    S = SensingMatrix(p, int(k_max), int(l_max), "tf", CoeffModel.IDEAL_APPROX, x_p)
    if S.shape[1] > S.shape[0]:
        warnings.warn("over-complete dictionary (D > NM)")
    return S


def build_sensing_dd(p: OtfsParams, k_max: int, l_max: int, model=CoeffModel.DD_CLOSED,
                     x_p=1.0, dense=None) -> SensingMatrix:
    """Delay-Doppler dictionary.

    ``IDEAL_APPROX`` columns are the exact SFFT images of the TF columns (so
    OMP in either domain solves the same problem); ``DD_CLOSED`` uses the
    closed-form ideal-pulse kernel and ``RECT`` the rectangular-pulse kernel
    seen by a pilot at the origin.
    """
    _check_extent(p, k_max, l_max)
    if model not in (CoeffModel.IDEAL_APPROX, CoeffModel.DD_CLOSED, CoeffModel.RECT):
        raise ParameterError(f"model {model} cannot build a delay-Doppler dictionary")
    S = SensingMatrix(p, int(k_max), int(l_max), "dd", model, x_p)
    if dense is None:
        dense = model is not CoeffModel.IDEAL_APPROX
    if dense:
        S._dense = S.columns(np.arange(S.shape[1]))
    return S


# --------------------------------------------------------------------------
# OMP

@dataclass
class EstimationResult:
    support: list
    beta_hat: np.ndarray
    h_hat: np.ndarray
    residual_norms: list
    iterations: int
    degenerate: bool = False
    col_map: np.ndarray | None = None
    NM: int = 1

    def paths(self):
        """Recovered ``(k, l, beta)`` triples in the physical gain convention."""
        out = []
        for j, b in zip(self.support, self.beta_hat):
            k, l = self.col_map[j]
            out.append((int(k), int(l), b * np.exp(-2j * np.pi * k * l / self.NM)))
        return out


def omp_estimate(y, Phi: SensingMatrix, max_iter: int, eps: float = 0.0) -> EstimationResult:
    """Orthogonal matching pursuit on ``y = Phi beta`` (``y`` already divided by ``c_alpha``).

    Stops after ``max_iter`` iterations, when ``||r|| < eps``, or when the
    residual is exactly zero. A newly selected atom that makes the support
    numerically rank-deficient is dropped and ``degenerate`` is set.
    """
    y = np.asarray(y, complex)
    if y.shape != (Phi.shape[0],):
        raise ParameterError(f"y must have length {Phi.shape[0]}")
    support: list = []
    beta = np.zeros(0, complex)
    r = y.copy()
    norms: list = []
    degenerate = False
    cols = np.zeros((len(y), 0), complex)
    rnorm = np.linalg.norm(r)
    while len(support) < max_iter and rnorm > 0 and not rnorm < eps:
        psi = np.abs(Phi.rmatvec(r))
        psi[support] = -1.0
        q = int(np.argmax(psi))
        trial = np.hstack([cols, Phi.columns([q])])
        Q, R = np.linalg.qr(trial)
        d = np.abs(np.diag(R))
        if d[-1] <= 1e-10 * d.max():
            degenerate = True
            break
        support.append(q)
        cols = trial
        beta = linalg.solve_triangular(R, Q.conj().T @ y)
        r = y - cols @ beta
        rnorm = np.linalg.norm(r)
        norms.append(rnorm)
    h = cols @ beta if support else np.zeros_like(y)
    return EstimationResult(support, beta, h, norms, len(support), degenerate,
                            Phi.col_map, Phi.params.N * Phi.params.M)


def tf_channel_from_result(res: EstimationResult, p: OtfsParams) -> np.ndarray:
    """Time-frequency CSI rebuilt from recovered ``(k, l, beta')`` with the dictionary's model."""
    S = SensingMatrix(p, 0, 0, "tf", CoeffModel.IDEAL_APPROX)
    H = np.zeros(p.shape, complex)
    for j, b in zip(res.support, res.beta_hat):
        k, l = res.col_map[j]
        H += b * S._tf_grid(k, l)
    return H


# --------------------------------------------------------------------------
# threshold baseline and scoring

def threshold_estimate(y_dd, sigma, pc: PilotConfig) -> np.ndarray:
    """Classical impulse-model estimate: keep DD samples with ``|y| > 3 sigma``.

    Returns the estimated delay-Doppler channel grid ``h_dd`` (taps divided
    by ``x_p``); :func:`threshold_tf_csi` turns it into TF CSI.
    """
    y = np.asarray(y_dd)
    return np.where(np.abs(y) > 3 * sigma, y / pc.x_p, 0)


def threshold_tf_csi(h_dd) -> np.ndarray:
    h = np.asarray(h_dd)
    return isfft(h) * math.sqrt(h.size)


def nmse(h, h_hat) -> float:
    h = np.asarray(h).ravel()
    h_hat = np.asarray(h_hat).ravel()
    if h.shape != h_hat.shape:
        raise ParameterError("h and h_hat must have equal lengths")
    den = np.vdot(h, h).real
    if den == 0:
        raise DomainError("NMSE undefined for a zero channel")
    d = h - h_hat
    return float(np.vdot(d, d).real / den)
