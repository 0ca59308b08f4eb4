"""Time-frequency channel coefficients for ideal (bi-orthogonal) pulses.

Three generators are provided:

* :func:`tf_coeff_exact` -- adaptive quadrature of the truncated-sinc
  Fourier integral that defines the coefficient between TF bins ``(n', m')``
  and ``(n, m)``;
* :func:`tf_coeff_ideal` -- its closed-form diagonal value;
* :func:`tf_coeff_approx` -- the small-``1/p`` approximation with the
  Doppler-squint phase ``exp(j2pi mn nu/f_c)`` optionally switched off.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import ChannelRealization, PathParams
from .errors import DomainError, ParameterError, QuadratureError, WrongModelError
from .grid import OtfsParams


class CoeffModel(enum.Enum):
    IGNORE_DSE = "ignore-dse"
    IDEAL_EXACT = "ideal-exact"
    IDEAL_APPROX = "ideal-approx"
    DD_CLOSED = "dd-closed"
    RECT = "rect"


# --------------------------------------------------------------------------
# pulse constraints

@dataclass(frozen=True)
class PulseConstraints:
    """Half-supports of the ideal cross-ambiguity function in time and frequency."""

    t_max: float
    f_max: float


def default_constraints(p: OtfsParams) -> PulseConstraints:
    """Midpoints of the feasible intervals, using the negative-Doppler-safe bound."""
    t_max = (p.tau_max + 2 * p.T / p.M + p.T / 2) / 2
    f_max = (2 * p.nu_max + p.delta_f / p.N + p.delta_f / 2) / 2
    return PulseConstraints(t_max, f_max)


@dataclass
class ConstraintReport:
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __str__(self):
        return "\n".join(f"{'PASS' if v else 'FAIL'}  {k}" for k, v in self.checks.items())


def validate_constraints(p: OtfsParams, pc: PulseConstraints, ch: ChannelRealization | None = None) -> ConstraintReport:
    """Check the support constraints that make the ideal-pulse channel diagonal.

    ``tau_max`` and ``nu_max`` are taken from the parameter caps. When the
    channel contains a negative Doppler shift the lower ``t_max`` bound is
    tightened by one extra delay bin.
    """
    neg = ch is not None and any(q.nu < 0 for q in ch.paths)
    margin = (2 if neg else 1) * p.T / p.M
    checks = {
        f"tau_max + {'2' if neg else ''}T/M < t_max": p.tau_max + margin < pc.t_max,
        "t_max < T/2": pc.t_max < p.T / 2,
        "2 nu_max + delta_f/N < f_max": 2 * p.nu_max + p.delta_f / p.N < pc.f_max,
        "f_max < delta_f/2": pc.f_max < p.delta_f / 2,
    }
    if ch is not None:
        checks["paths within delay/Doppler caps"] = all(
            q.tau <= p.tau_max * (1 + 1e-12) and abs(q.nu) <= p.nu_max * (1 + 1e-12) for q in ch.paths)
    return ConstraintReport(checks)


# --------------------------------------------------------------------------
# closed forms

def _nm(p: OtfsParams, n=None, m=None):
    if n is None:
        n = np.arange(p.N)[:, None]
    if m is None:
        m = np.arange(p.M)[None, :]
    return np.asarray(n, float), np.asarray(m, float)


def tf_coeff_ideal(path: PathParams, p: OtfsParams, n=None, m=None):
    """Closed-form diagonal coefficient ``H[n, m]`` (broadcasts; full grid by default).

    Evaluated in the algebraically equivalent form
    ``beta/|1+1/p| * exp(j2pi (tau nu - m df tau + n T nu + mn nu/f_c)/(1+1/p))``,
    which avoids cancelling two ``O(tau f_c)`` phases and reduces to
    ``beta exp(-j2pi tau m df)`` for a static path.
    """
    n, m = _nm(p, n, m)
    ip = path.inv_p
    num = path.tau * path.nu - m * p.delta_f * path.tau + n * p.T * path.nu + m * n * p.delta_f * p.T * ip
    return path.beta / abs(1 + ip) * np.exp(2j * np.pi * num / (1 + ip))


def tf_coeff_approx(path: PathParams, p: OtfsParams, n=None, m=None, include_dse=True):
    """Approximate diagonal coefficient; ``include_dse=False`` gives the classical model."""
    n, m = _nm(p, n, m)
    h = path.beta_prime * np.exp(2j * np.pi * (path.nu * n * p.T - path.tau * m * p.delta_f))
    if include_dse:
        h = h * np.exp(2j * np.pi * m * n * p.delta_f * p.T * path.inv_p)
    return h


def dse_max_phase(v, p: OtfsParams, *, exact_extent=False):
    """Largest squint phase ``2pi mn nu/f_c`` over the frame (radians).

    By default uses ``M N`` as the grid extent (the usual headline figure);
    ``exact_extent=True`` uses the largest indices ``(M-1)(N-1)``.
    """
    from .channel import doppler_bounds
    nu_max, _ = doppler_bounds(v, p)
    ext = (p.M - 1) * (p.N - 1) if exact_extent else p.M * p.N
    return 2 * np.pi * ext * p.delta_f * p.T * nu_max / p.f_c


def tf_grid(ch: ChannelRealization, model: CoeffModel) -> np.ndarray:
    """Sum of per-path diagonal coefficients on the full ``(N, M)`` grid."""
    p = ch.params
    H = np.zeros(p.shape, complex)
    for q in ch.paths:
        if model is CoeffModel.IDEAL_EXACT:
            H += tf_coeff_ideal(q, p)
        elif model is CoeffModel.IDEAL_APPROX:
            H += tf_coeff_approx(q, p, include_dse=True)
        elif model is CoeffModel.IGNORE_DSE:
            H += tf_coeff_approx(q, p, include_dse=False)
        else:
            raise WrongModelError(f"{model} has no diagonal time-frequency representation")
    return H


def apply_ideal_channel(X, ch: ChannelRealization, model: CoeffModel) -> np.ndarray:
    """``Y = H * X`` elementwise for the ideal-pulse coefficient models."""
    X = np.asarray(X)
    if X.shape != ch.params.shape:
        raise ParameterError(f"grid shape {X.shape} does not match {ch.params.shape}")
    return tf_grid(ch, model) * X


# --------------------------------------------------------------------------
# exact coefficient by quadrature

def _sinc_fourier(a, lam, u1, u2, tol):
    # QUADPACK round-off notices are superseded by the returned error bound
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _sinc_fourier_impl(a, lam, u1, u2, tol)


def _sinc_fourier_impl(a, lam, u1, u2, tol):
    """``int_{u1}^{u2} sin(2pi a u)/(pi u) exp(-j2pi lam u) du`` for ``u1 < u2``.

    The integrand is split into sine and cosine parts with ``1/u`` weight;
    away from the origin QUADPACK's oscillatory (QAWO) rule handles the
    ``1/u`` amplitude, and a small window around ``u = 0`` (where the
    combined integrand is smooth) is done with plain adaptive Gauss-Kronrod.
    """
    wp = 2 * np.pi * (a + lam)
    wm = 2 * np.pi * (a - lam)

    def smooth_re(u):
        return (np.sinc(2 * (a + lam) * u) * (a + lam) + np.sinc(2 * (a - lam) * u) * (a - lam))

    def smooth_im(u):
        # -(cos(wm u) - cos(wp u)) / (2 pi u), written without the 1/u singularity
        return -2 * np.sin((wp + wm) * u / 2) * np.sin((wp - wm) * u / 2) / (2 * np.pi * u) if u != 0 else 0.0

    tol = max(tol, 1e-13)  # QUADPACK's floor on the relative tolerance
    delta = min(4.0 / (abs(a) + abs(lam)), (u2 - u1))
    c1, c2 = max(u1, -delta), min(u2, delta)
    re = im = 0.0
    err = 0.0
    opts = dict(epsabs=0.0, epsrel=tol, limit=400)
    if c1 < c2:
        r, e = integrate.quad(smooth_re, c1, c2, **opts)
        re += r; err += e
        r, e = integrate.quad(smooth_im, c1, c2, **opts)
        im += r; err += e
    for lo, hi in ((u1, min(u2, c1)), (max(u1, c2), u2)):
        if hi <= lo:
            continue
        inv = lambda u: 1.0 / (2 * np.pi * u)
        for w, sgn, part in ((wp, 1, "re"), (wm, 1, "re"), (wm, -1, "im"), (wp, 1, "im")):
            kind = "sin" if part == "re" else "cos"
            if kind == "sin" and w < 0:
                w, sgn = -w, -sgn
            r, e = integrate.quad(inv, lo, hi, weight=kind, wvar=abs(w), epsabs=0.0, epsrel=tol, limit=400)
            if part == "re":
                re += sgn * r
            else:
                im += sgn * r
            err += abs(e)
    return complex(re, im), err


def tf_coeff_exact(path: PathParams, p: OtfsParams, n, m, n2, m2, pc: PulseConstraints | None = None, tol=1e-8):
    """Coefficient from TF bin ``(n2, m2)`` to ``(n, m)`` by adaptive quadrature.

    Tolerance is relative to the diagonal scale ``|beta p/(1+p)|``; a
    :class:`QuadratureError` carrying the estimate is raised otherwise.
    """
    if path.is_static:
        raise DomainError("static path: the coefficient is an exact delta, no integral to evaluate")
    if tol <= 0:
        raise ValueError("tol must be positive")
    pc = pc or default_constraints(p)
    P = path.p
    dm = m - m2
    c = P * path.tau - n2 * p.T
    F = p.f_c + m2 * p.delta_f - P * dm * p.delta_f
    lam = F / (1 + P)
    t1 = (n - n2) * p.T - pc.t_max
    t2 = (n - n2) * p.T + pc.t_max
    u1 = (1 + P) * t1 - c
    u2 = (1 + P) * t2 - c
    lo, hi = min(u1, u2), max(u1, u2)
    val, err = _sinc_fourier(pc.f_max, lam, lo, hi, tol)
    pref = path.beta * abs(P) / abs(1 + P)
    # |1+P| absorbs the orientation of the substitution u = (1+P) tau - c
    phase = 2 * np.pi * (P * path.tau * (path.nu - dm * p.delta_f)) - 2 * np.pi * F * c / (1 + P)
    out = pref * np.exp(1j * np.mod(phase, 2 * np.pi)) * val
    scale = abs(path.beta) * abs(P) / abs(1 + P)
    if err * scale > 10 * tol * max(scale, abs(out)):
        raise QuadratureError(f"quadrature error {err:.3g} above tolerance {tol}", out, err * scale)
    return out


def exact_integrand(path: PathParams, p: OtfsParams, n, m, n2, m2, tau):
    """Full exact-coefficient integrand (including the outer prefactor) at delay ``tau``."""
    P = path.p
    dm = m - m2
    x = (P * path.tau - n2 * p.T)
    arg = (1 + P) * np.asarray(tau, float) - x
    pc = default_constraints(p)
    kern = 2 * pc.f_max * np.sinc(2 * pc.f_max * arg)
    F = p.f_c + m2 * p.delta_f - P * dm * p.delta_f
    return (path.beta * abs(P) * np.exp(2j * np.pi * P * path.tau * (path.nu - dm * p.delta_f))
            * kern * np.exp(-2j * np.pi * np.asarray(tau) * F))
