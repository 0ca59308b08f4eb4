"""Scenario runners and the cross-model validation suite.

Every runner expands its configuration into independent trial tasks. A
task's randomness comes only from ``trial_seed(base_seed, index)`` split
into named sub-streams, so tables are identical for any worker count.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .channel import ChannelRealization, PathParams, draw_channel, kmh_to_mps
from .coeffs import CoeffModel, default_constraints, tf_coeff_exact, tf_coeff_ideal, tf_grid
from .config import ExperimentConfig
from .ddkernel import apply_rect_channel_dd, dd_grid_ideal, dd_kernel_ideal, rect_kernel
from .estimation import (PilotConfig, build_pilot, build_sensing_dd, build_sensing_tf, dictionary_k_max,
                         nmse, omp_estimate, tf_channel_from_result, threshold_estimate, threshold_tf_csi,
                         vec)
from .grid import OtfsParams, isfft, sfft
from .link import NoiseSpec, add_noise, lmmse_equalize
from .modulation import demap_symbols, get_alphabet, map_bits
from .results import ResultTable, run_tasks, seed_range, trial_seed
from .waveform import apply_ltv_channel_time, heisenberg_rect, wigner_rect

_STREAMS = {"channel": 0, "pilot_noise": 1, "bits": 2, "data_noise": 3}


def _rng(seed: int, stream: str, *extra):
    return np.random.default_rng(np.random.SeedSequence([seed, _STREAMS[stream], *extra]))


def _params(cfg: ExperimentConfig, M, N=None):
    return cfg.params(M=M, N=N)


def _mean_row(table, cfg, values, **cols):
    v = np.asarray(values, float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    table.add(scenario=cfg.scenario, mean=float(v.mean()), stderr=se, trial_count=int(v.size),
              n_samples=int(v.size), seed_range=seed_range(cfg.base_seed, cfg.trials), **cols)


def _ber_row(table, cfg, errors, bits, **cols):
    e = np.asarray(errors, float)
    b = np.asarray(bits, float)
    per = e / b
    se = float(per.std(ddof=1) / math.sqrt(per.size)) if per.size > 1 else 0.0
    table.add(scenario=cfg.scenario, mean=float(e.sum() / b.sum()), stderr=se, trial_count=int(e.size),
              n_samples=int(b.sum()), seed_range=seed_range(cfg.base_seed, cfg.trials), **cols)


def _meta(cfg):
    return {"config": cfg.to_dict(), "trial_seeds": f"base_seed XOR trial index, base_seed={cfg.base_seed}"}


# --------------------------------------------------------------------------
# signal-model NMSE (perfect path knowledge)

def _sig_nmse_task(task):
    cfg, M, v, t = task
    p = _params(cfg, M)
    ch = draw_channel(p, cfg.num_paths, kmh_to_mps(v), _rng(trial_seed(cfg.base_seed, t), "channel"),
                      doppler=cfg.doppler)
    scale = math.sqrt(p.M * p.N)
    h = sfft(tf_grid(ch, CoeffModel.IDEAL_EXACT)) / scale
    h_ign = sfft(tf_grid(ch, CoeffModel.IGNORE_DSE)) / scale
    h_cf = dd_grid_ideal(ch)
    return nmse(h, h_ign), nmse(h, h_cf)


def run_sig_nmse(cfg: ExperimentConfig, workers=1) -> ResultTable:
    table = ResultTable(cfg.scenario, metadata=_meta(cfg))
    points = [(M, v) for v in cfg.speeds_kmh for M in cfg.m_sweep]
    tasks = [(cfg, M, v, t) for M, v in points for t in range(cfg.trials)]
    out = run_tasks(_sig_nmse_task, tasks, workers)
    for i, (M, v) in enumerate(points):
        chunk = np.array(out[i * cfg.trials:(i + 1) * cfg.trials])
        for j, name in enumerate(("nmse_ignore_dse", "nmse_closed_form")):
            _mean_row(table, cfg, chunk[:, j], speed_kmh=v, M=M, N=cfg.num_slots, sweep_name="M",
                      sweep_value=M, metric=name)
    return table


# --------------------------------------------------------------------------
# BER with perfect path knowledge

def _sig_ber_task(task):
    cfg, v, t = task
    p = _params(cfg, cfg.num_subcarriers)
    a = get_alphabet(cfg.alphabet)
    seed = trial_seed(cfg.base_seed, t)
    ch = draw_channel(p, cfg.num_paths, kmh_to_mps(v), _rng(seed, "channel"))
    H = tf_grid(ch, CoeffModel.IDEAL_EXACT)
    csi = {"exact": H, "ignore_dse": tf_grid(ch, CoeffModel.IGNORE_DSE),
           "approx": tf_grid(ch, CoeffModel.IDEAL_APPROX)}
    out = []
    for e_i, ebn0 in enumerate(cfg.ebn0_db):
        ns = NoiseSpec.from_ebn0(ebn0, a.bits_per_symbol)
        errs = dict.fromkeys(csi, 0)
        nbits = 0
        for f in range(cfg.frames_per_channel):
            bits = _rng(seed, "bits", e_i, f).integers(0, 2, p.M * p.N * a.bits_per_symbol)
            Y = add_noise(H * isfft(map_bits(bits, a, p)), ns, _rng(seed, "data_noise", e_i, f))
            for name, Hh in csi.items():
                errs[name] += int(np.count_nonzero(demap_symbols(sfft(lmmse_equalize(Y, Hh, ns)), a) != bits))
            nbits += bits.size
        out.append((errs, nbits))
    return out


def run_sig_ber(cfg: ExperimentConfig, workers=1) -> ResultTable:
    table = ResultTable(cfg.scenario, metadata=_meta(cfg))
    for v in cfg.speeds_kmh:
        out = run_tasks(_sig_ber_task, [(cfg, v, t) for t in range(cfg.trials)], workers)
        for e_i, ebn0 in enumerate(cfg.ebn0_db):
            for name in ("exact", "ignore_dse", "approx"):
                _ber_row(table, cfg, [o[e_i][0][name] for o in out], [o[e_i][1] for o in out],
                         speed_kmh=v, M=cfg.num_subcarriers, N=cfg.num_slots, sweep_name="ebn0_db",
                         sweep_value=ebn0, metric=f"ber_{name}_csi")
    return table


# --------------------------------------------------------------------------
# channel estimation

@lru_cache(maxsize=8)
def _dictionary(p: OtfsParams, k_max: int, l_max: int):
    return build_sensing_tf(p, k_max, l_max)


def _estimate(p, H, pc: PilotConfig, v, l_max, n_paths, noise_rng):
    """Pilot frame -> (OMP TF CSI, threshold TF CSI)."""
    ns = NoiseSpec(pc.sigma2)
    S = _dictionary(p, dictionary_k_max(kmh_to_mps(v), p), int(l_max))
    Yp = add_noise(H * isfft(build_pilot(pc, p)), ns, noise_rng)
    c_tf = pc.x_p / math.sqrt(p.M * p.N)
    res = omp_estimate(vec(Yp) / c_tf, S, n_paths)
    H_omp = tf_channel_from_result(res, p)
    H_thr = threshold_tf_csi(threshold_estimate(sfft(Yp), math.sqrt(ns.sigma2), pc))
    return H_omp, H_thr


def _est_nmse_task(task):
    cfg, M, N, v, t = task
    p = _params(cfg, M, N)
    seed = trial_seed(cfg.base_seed, t)
    ch = draw_channel(p, cfg.num_paths, kmh_to_mps(v), _rng(seed, "channel"))
    H = tf_grid(ch, cfg.coeff_model)
    out = []
    for s_i, snr in enumerate(cfg.snr_p_db):
        pc = PilotConfig.from_snr(snr)
        H_omp, H_thr = _estimate(p, H, pc, v, cfg.l_max, cfg.num_paths, _rng(seed, "pilot_noise"))
        out.append((nmse(H, H_omp), nmse(H, H_thr)))
    return out


def run_est_nmse_snr(cfg: ExperimentConfig, workers=1) -> ResultTable:
    table = ResultTable(cfg.scenario, metadata=_meta(cfg))
    M, N = cfg.num_subcarriers, cfg.num_slots
    for v in cfg.speeds_kmh:
        out = np.array(run_tasks(_est_nmse_task, [(cfg, M, N, v, t) for t in range(cfg.trials)], workers))
        for s_i, snr in enumerate(cfg.snr_p_db):
            for j, name in enumerate(("nmse_omp", "nmse_threshold")):
                _mean_row(table, cfg, out[:, s_i, j], speed_kmh=v, M=M, N=N, sweep_name="snr_p_db",
                          sweep_value=snr, metric=name)
    return table


def run_est_nmse_m(cfg: ExperimentConfig, workers=1) -> ResultTable:
    table = ResultTable(cfg.scenario, metadata=_meta(cfg))
    N = cfg.num_slots
    for v in cfg.speeds_kmh:
        for M in cfg.m_sweep:
            out = np.array(run_tasks(_est_nmse_task, [(cfg, M, N, v, t) for t in range(cfg.trials)], workers))
            for j, name in enumerate(("nmse_omp", "nmse_threshold")):
                _mean_row(table, cfg, out[:, 0, j], speed_kmh=v, M=M, N=N, sweep_name="M",
                          sweep_value=M, metric=name)
    return table


def _est_ber_task(task):
    cfg, v, t = task
    p = _params(cfg, cfg.num_subcarriers)
    a = get_alphabet(cfg.alphabet)
    seed = trial_seed(cfg.base_seed, t)
    ch = draw_channel(p, cfg.num_paths, kmh_to_mps(v), _rng(seed, "channel"))
    H = tf_grid(ch, cfg.coeff_model)
    pc = PilotConfig.from_snr(cfg.snr_p_db[0])
    H_omp, H_thr = _estimate(p, H, pc, v, cfg.l_max, cfg.num_paths, _rng(seed, "pilot_noise"))
    csi = {"perfect": H, "omp": H_omp, "threshold": H_thr}
    out = []
    for e_i, ebn0 in enumerate(cfg.ebn0_db):
        ns = NoiseSpec.from_ebn0(ebn0, a.bits_per_symbol)
        errs = dict.fromkeys(csi, 0)
        nbits = 0
        for f in range(cfg.frames_per_channel):
            bits = _rng(seed, "bits", e_i, f).integers(0, 2, p.M * p.N * a.bits_per_symbol)
            Y = add_noise(H * isfft(map_bits(bits, a, p)), ns, _rng(seed, "data_noise", e_i, f))
            for name, Hh in csi.items():
                errs[name] += int(np.count_nonzero(demap_symbols(sfft(lmmse_equalize(Y, Hh, ns)), a) != bits))
            nbits += bits.size
        out.append((errs, nbits))
    return out


def run_est_ber(cfg: ExperimentConfig, workers=1) -> ResultTable:
    table = ResultTable(cfg.scenario, metadata=_meta(cfg))
    for v in cfg.speeds_kmh:
        out = run_tasks(_est_ber_task, [(cfg, v, t) for t in range(cfg.trials)], workers)
        for e_i, ebn0 in enumerate(cfg.ebn0_db):
            for name in ("perfect", "omp", "threshold"):
                _ber_row(table, cfg, [o[e_i][0][name] for o in out], [o[e_i][1] for o in out],
                         speed_kmh=v, M=cfg.num_subcarriers, N=cfg.num_slots, sweep_name="ebn0_db",
                         sweep_value=ebn0, metric=f"ber_{name}_csi")
    return table


# --------------------------------------------------------------------------
# validation suite

TOLERANCES = {
    "quadrature_vs_closed_form": 1e-2,
    "quadrature_offdiagonal": 1e-2,
    "closed_dd_vs_sfft": 5e-2,
    "rect_vs_waveform": 5e-2,
    "tf_dd_omp_equivalence": 1e-8,
    "classical_limit": 1e-9,
}


def validate_quadrature(cfg=None, tol=1e-8):
    """Max relative error of the quadrature against the closed form on a 16 x 8 grid,
    and the largest off-diagonal/diagonal ratio on a probe set."""
    p = OtfsParams(M=16, N=8, l_max=5, k_max=1.2)
    paths = [PathParams.from_grid(0.8 * np.exp(0.3j), 3, 1, p), PathParams.from_grid(0.5 * np.exp(-2j), 5, -1, p)]
    pc = default_constraints(p)
    diag_err = 0.0
    off = 0.0
    for q in paths:
        for n in range(p.N):
            for m in range(p.M):
                ex = tf_coeff_exact(q, p, n, m, n, m, pc, tol)
                cf = tf_coeff_ideal(q, p, n, m)
                diag_err = max(diag_err, abs(ex - cf) / abs(cf))
        d = abs(tf_coeff_exact(q, p, 3, 7, 3, 7, pc, tol))
        for n2, m2 in [(2, 7), (4, 7), (3, 6), (3, 8), (0, 0), (7, 15), (2, 6)]:
            off = max(off, abs(tf_coeff_exact(q, p, 3, 7, n2, m2, pc, tol)) / d)
    return diag_err, off


def validate_closed_dd(seed=0, trials=20):
    """Worst Frobenius-relative error of the closed-form DD kernel vs SFFT of the approximate TF grid."""
    worst = 0.0
    rng = np.random.default_rng(seed)
    for M, N in [(16, 8), (32, 16), (64, 32)]:
        p = OtfsParams.from_speed(M, N, 500, l_max=min(20, M - 1))
        kk = int(np.floor(p.k_max))
        for _ in range(trials):
            q = PathParams.from_grid(1.0, int(rng.integers(1, int(p.l_max) + 1)), int(rng.integers(-kk, kk + 1)), p)
            if q.k == 0:
                continue
            ref = sfft(tf_grid(ChannelRealization((q,), p), CoeffModel.IDEAL_APPROX)) / math.sqrt(M * N)
            worst = max(worst, np.linalg.norm(dd_kernel_ideal(q, p) - ref) / np.linalg.norm(ref))
    return worst


def rect_oracle_error(ch: ChannelRealization, x, osf=4, kernel=None):
    """Relative error between the rectangular DD kernel and the waveform chain on TF rows 1..N-1."""
    p = ch.params
    y_model = kernel(x, ch) if kernel is not None else apply_rect_channel_dd(x, ch)
    Y = wigner_rect(apply_ltv_channel_time(heisenberg_rect(isfft(x), p, osf), ch), p)
    Ym = isfft(y_model)
    return float(np.linalg.norm((Y - Ym)[1:]) / np.linalg.norm(Ym[1:]))


def validate_rect(osf=4, seed=0, kernel=None):
    """Worst oracle error over a set of single-path and multipath integer channels at M=32, N=16."""
    p = OtfsParams.from_speed(32, 16, 500, l_max=8)
    rng = np.random.default_rng(seed)
    x = (rng.standard_normal(p.shape) + 1j * rng.standard_normal(p.shape)) / math.sqrt(2)
    chans = [ChannelRealization((PathParams.from_grid(1.0, l, k, p),), p) for l, k in [(3, 1), (2, -1), (5, 0)]]
    chans.append(draw_channel(p, 4, kmh_to_mps(500), rng))
    return max(rect_oracle_error(ch, x, osf, kernel) for ch in chans)


def validate_tf_dd_omp(trials=100, seed=0):
    """Fraction of noiseless trials where TF- and DD-domain OMP agree, and the worst gain mismatch."""
    p = OtfsParams.from_speed(32, 16, 500, l_max=8)
    kk = int(np.floor(p.k_max))
    S_tf = build_sensing_tf(p, kk, 8)
    S_dd = build_sensing_dd(p, kk, 8, CoeffModel.IDEAL_APPROX)
    agree = 0
    worst = 0.0
    scale = math.sqrt(p.M * p.N)
    for t in range(trials):
        ch = draw_channel(p, 4, kmh_to_mps(500), trial_seed(seed, t))
        H = tf_grid(ch, CoeffModel.IDEAL_APPROX)
        r1 = omp_estimate(vec(H), S_tf, 4)
        r2 = omp_estimate(vec(sfft(H)) / scale, S_dd, 4)
        if r1.support == r2.support:
            agree += 1
            worst = max(worst, float(np.max(np.abs(r1.beta_hat - r2.beta_hat))))
        else:
            worst = np.inf
    return agree / trials, worst


def validate_limits():
    """DSE kernels at |p| = 1e15 vs their static (classical) forms."""
    p = OtfsParams(M=16, N=8, l_max=5, k_max=2.0)
    f_c_huge = 1e15 * 2 * p.delta_f / p.N
    pp = OtfsParams(M=16, N=8, l_max=5, k_max=2.0, f_c=f_c_huge)
    moving = PathParams.from_grid(0.7 - 0.2j, 3, 2, pp)
    static = PathParams(beta=moving.beta, tau=moving.tau, nu=moving.nu, l=3, k=2, f_c=np.inf)
    e1 = np.max(np.abs(dd_kernel_ideal(moving, pp) - dd_kernel_ideal(static, pp)))
    e2 = np.max(np.abs(rect_kernel(moving, pp).dense() - rect_kernel(static, pp).dense()))
    return float(max(e1, e2) / abs(moving.beta))


def run_validate(cfg: ExperimentConfig | None = None, workers=1) -> ResultTable:
    cfg = cfg or ExperimentConfig(scenario="validate")
    table = ResultTable("validate", metadata=_meta(cfg))
    diag, off = validate_quadrature()
    agree, gain_err = validate_tf_dd_omp(cfg.trials, cfg.base_seed)
    clean = validate_rect(cfg.osf, cfg.base_seed)
    corrupted = validate_rect(cfg.osf, cfg.base_seed, kernel=lambda x, ch: -apply_rect_channel_dd(x, ch))
    measured = {
        "quadrature_vs_closed_form": diag,
        "quadrature_offdiagonal": off,
        "closed_dd_vs_sfft": validate_closed_dd(cfg.base_seed),
        "rect_vs_waveform": clean,
        "tf_dd_omp_equivalence": gain_err if agree == 1.0 else np.inf,
        "classical_limit": validate_limits(),
    }
    for name, val in measured.items():
        tol = TOLERANCES[name]
        for metric, value in (("error", float(val)), ("tolerance", tol), ("pass", float(val < tol))):
            table.add(scenario="validate", sweep_name="suite", sweep_value=name, metric=metric, mean=value,
                      trial_count=1, n_samples=1, seed_range=seed_range(cfg.base_seed, 1))
    # negative control: a sign-flipped kernel must be caught by the waveform suite
    caught = corrupted > TOLERANCES["rect_vs_waveform"] and corrupted > 2 * clean
    table.add(scenario="validate", sweep_name="suite", sweep_value="negative_control", metric="pass",
              mean=float(caught), trial_count=1, n_samples=1, seed_range=seed_range(cfg.base_seed, 1))
    return table


def validate_passed(table: ResultTable) -> bool:
    return all(r["mean"] == 1.0 for r in table.rows if r["metric"] == "pass")


# --------------------------------------------------------------------------
# coefficient dumps

def analyze(cfg: ExperimentConfig) -> np.ndarray:
    """Coefficient grid of one random channel under ``cfg.model``.

    TF models give the diagonal ``H[n, m]``; ``dd-closed`` the ideal-pulse DD
    kernel; ``rect`` the rectangular-pulse response to a unit pilot at the origin.
    """
    p = cfg.params()
    ch = draw_channel(p, cfg.num_paths, kmh_to_mps(max(cfg.speeds_kmh)), _rng(cfg.base_seed, "channel"),
                      doppler=cfg.doppler)
    model = cfg.coeff_model
    if model is CoeffModel.DD_CLOSED:
        return dd_grid_ideal(ch)
    if model is CoeffModel.RECT:
        x = np.zeros(p.shape, complex)
        x[0, 0] = 1
        return apply_rect_channel_dd(x, ch)
    return tf_grid(ch, model)


RUNNERS = {
    "sig-nmse": run_sig_nmse,
    "sig-ber": run_sig_ber,
    "est-nmse-snr": run_est_nmse_snr,
    "est-nmse-m": run_est_nmse_m,
    "est-ber": run_est_ber,
    "validate": run_validate,
}
