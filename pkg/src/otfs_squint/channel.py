"""Random multipath channels and their continuous responses.

A path is described by its complex gain ``beta`` (carrier phase already
folded in), delay ``tau`` and carrier Doppler ``nu``. The squint ratio
``p = f_c / nu`` controls every Doppler-squint correction; static paths
(``nu == 0``) carry ``p = inf`` and ``is_static = True``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import SPEED_OF_LIGHT, OtfsParams


@dataclass(frozen=True)
class PathParams:
    beta: complex
    tau: float
    nu: float
    l: float
    k: float
    f_c: float

    @classmethod
    def from_grid(cls, beta, l, k, p: OtfsParams):
        """Path at delay index ``l`` and (possibly fractional) Doppler index ``k``."""
        return cls(beta=complex(beta), tau=l * p.T / p.M, nu=k * p.delta_f / p.N,
                   l=float(l), k=float(k), f_c=p.f_c)

    @property
    def is_static(self) -> bool:
        return self.nu == 0

    @property
    def inv_p(self) -> float:
        """``1/p = nu/f_c``; zero for a static path."""
        return self.nu / self.f_c

    @property
    def p(self) -> float:
        return np.inf if self.is_static else self.f_c / self.nu

    @property
    def beta_prime(self) -> complex:
        return self.beta * np.exp(2j * np.pi * self.tau * self.nu)


@dataclass(frozen=True)
class ChannelRealization:
    paths: tuple
    params: OtfsParams
    seed: int | None = None

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ConfigurationError("a channel needs at least one path")
        ls = [q.l for q in self.paths]
        if len(set(ls)) != len(ls):
            raise ConfigurationError(f"path delays must be distinct, got l = {ls}")
        limit = max(1e6, self.params.M * self.params.N)
        for q in self.paths:
            if not q.is_static and abs(q.p) <= limit:
                raise DomainError(f"|p| = {abs(q.p):.3g} violates |p| > max(1e6, MN)")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def to_json(self) -> str:
        rec = {
            "seed": self.seed,
            "params": {"M": self.params.M, "N": self.params.N, "delta_f": self.params.delta_f,
                       "f_c": self.params.f_c, "l_max": self.params.l_max, "k_max": self.params.k_max},
            "paths": [{"beta_re": q.beta.real, "beta_im": q.beta.imag, "l": q.l, "k": q.k}
                      for q in self.paths],
        }
        return json.dumps(rec, indent=2)

    @classmethod
    def from_json(cls, text: str):
        rec = json.loads(text)
        p = OtfsParams(**rec["params"])
        paths = tuple(PathParams.from_grid(complex(d["beta_re"], d["beta_im"]), d["l"], d["k"], p)
                      for d in rec["paths"])
        return cls(paths=paths, params=p, seed=rec["seed"])


def kmh_to_mps(v_kmh):
    return v_kmh / 3.6


def doppler_bounds(v, p: OtfsParams):
    """Maximum Doppler shift (Hz) and its grid index for a speed ``v`` in m/s."""
    if v < 0:
        raise ConfigurationError("speed must be non-negative")
    nu_max = v / SPEED_OF_LIGHT * p.f_c
    return nu_max, nu_max * p.N * p.T


def draw_channel(p: OtfsParams, n_paths: int, v, seed=None, *, doppler="grid") -> ChannelRealization:
    """Draw a random ``n_paths``-path channel for a UE moving at ``v`` m/s.

    Gains are CN(0, 1/n_paths); delays are distinct integers in
    ``1..floor(l_max)``. ``doppler="grid"`` draws integer Doppler indices in
    ``±floor(k_max(v))``; ``doppler="continuous"`` draws ``nu`` uniformly in
    ``±nu_max`` (for coefficient analysis only).
    """
    l_top = int(np.floor(p.l_max))
    if n_paths < 1 or n_paths > l_top:
        raise ConfigurationError(f"need 1 <= N_P <= l_max, got N_P={n_paths}, l_max={p.l_max}")
    rng = np.random.default_rng(seed)
    beta = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) * np.sqrt(0.5 / n_paths)
    ls = rng.choice(np.arange(1, l_top + 1), size=n_paths, replace=False)
    nu_max, k_max = doppler_bounds(v, p)
    if doppler == "grid":
        kk = int(np.floor(k_max))
        ks = rng.integers(-kk, kk + 1, size=n_paths).astype(float)
    elif doppler == "continuous":
        ks = rng.uniform(-nu_max, nu_max, size=n_paths) * p.N / p.delta_f
    else:
        raise ConfigurationError(f"unknown doppler mode {doppler!r}")
    paths = tuple(PathParams.from_grid(b, l, k, p) for b, l, k in zip(beta, ls, ks))
    return ChannelRealization(paths=paths, params=p, seed=seed if isinstance(seed, (int, np.integer)) else None)


def tf_response(path: PathParams, t, f):
    """Time-frequency response of one path; the Doppler shift scales with ``f_c + f``."""
    t = np.asarray(t, float)
    f = np.asarray(f, float)
    return path.beta * np.exp(2j * np.pi * path.inv_p * (path.f_c + f) * t) * np.exp(-2j * np.pi * f * path.tau)


def dd_response(path: PathParams, tau, nu):
    """Delay-Doppler response of a moving path: constant modulus ``|beta p|``.

    For a static path the response is a delta distribution; check
    ``path.is_static`` first.
    """
    if path.is_static:
        raise DomainError("static path: the delay-Doppler response is a delta (use path.is_static)")
    tau = np.asarray(tau, float)
    nu = np.asarray(nu, float)
    return path.beta * abs(path.p) * np.exp(2j * np.pi * path.p * (tau - path.tau) * (nu - path.nu))
