import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otfs_squint.channel import ChannelRealization, PathParams, draw_channel, kmh_to_mps
from otfs_squint.coeffs import CoeffModel, tf_grid
from otfs_squint.ddkernel import (apply_rect_channel_dd, dd_kernel_ideal, dd_kernel_rect, dirichlet, index_sets,
                                  rect_kernel)
from otfs_squint.errors import DomainError
from otfs_squint.grid import OtfsParams, sfft
from conftest import crandn


def dirichlet_sum(x, L, norm=None):
    """sin(pi L x)/(norm sin(pi x)) as the explicit geometric sum (defined everywhere)."""
    norm = L if norm is None else norm
    q = np.arange(L)
    x = np.atleast_1d(np.asarray(x, float))
    return (np.exp(1j * np.pi * (2 * q[None, :] - (L - 1)) * x[:, None]).sum(axis=1) / norm).real


@pytest.mark.parametrize("L", [2, 7, 8, 15, 16, 64])
def test_dirichlet_singular_points(L):
    x = np.arange(-5, 6, dtype=float)
    assert np.allclose(dirichlet(x, L), dirichlet_sum(x, L), atol=1e-12)
    assert np.allclose(np.abs(dirichlet(x, L)), 1.0)
    assert np.allclose(dirichlet(x, L - 1, L), dirichlet_sum(x, L - 1, L), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20, allow_nan=False), st.integers(2, 64))
def test_dirichlet_matches_sum(x, L):
    assert abs(dirichlet(x, L) - dirichlet_sum(x, L)[0]) < 1e-9


def test_dirichlet_near_singular_continuity():
    for r in (0, 1, 3):
        for e in (1e-9, 1e-12, -1e-11):
            assert abs(dirichlet(r + e, 16) - dirichlet(float(r), 16)) < 1e-6


# ---------------------------------------------------------------- ideal kernel

def test_static_kernel_is_impulse():
    p = OtfsParams(M=16, N=8, l_max=6, k_max=2.5)
    q = PathParams.from_grid(0.4 + 0.2j, 5, 0, p)
    h = dd_kernel_ideal(q, p)
    assert np.isclose(abs(h[0, 5]), abs(q.beta))
    h[0, 5] = 0
    assert np.allclose(h, 0, atol=1e-14)


def test_squint_spreads_kernel():
    p = OtfsParams.from_speed(512, 128, 500)
    q = PathParams.from_grid(1.0, 5, 15, p)
    h = dd_kernel_ideal(q, p)
    assert np.abs(h[15, 6]) > 1e-4
    assert np.unravel_index(np.argmax(np.abs(h)), h.shape) == (15, 5)


@pytest.mark.parametrize("M,N", [(16, 8), (32, 16), (64, 32)])
def test_closed_form_vs_sfft_oracle(M, N, rng):
    p = OtfsParams.from_speed(M, N, 500, l_max=min(20, M - 1))
    kk = int(p.k_max)
    for _ in range(10):
        q = PathParams.from_grid(crandn(rng, ()), int(rng.integers(1, int(p.l_max) + 1)),
                                 int(rng.integers(-kk, kk + 1)), p)
        ref = sfft(tf_grid(ChannelRealization((q,), p), CoeffModel.IDEAL_APPROX)) / math.sqrt(M * N)
        h = dd_kernel_ideal(q, p)
        assert np.linalg.norm(h - ref) / np.linalg.norm(ref) < 5e-2
        k_i = int(q.k) % N
        assert np.unravel_index(np.argmax(np.abs(h)), h.shape) == (k_i, int(q.l))


# ---------------------------------------------------------------- index sets

def test_index_set_examples():
    p = OtfsParams(M=8, N=4, l_max=5, k_max=1.0)
    isi, ici = index_sets(PathParams.from_grid(1, 3, 1, p), 8)
    assert list(isi) == [6, 7] and list(ici) == [0, 1, 2, 3, 4, 5]
    isi, ici = index_sets(PathParams.from_grid(1, 3, -1, p), 8)
    assert list(isi) == [5, 6, 7] and list(ici) == [0, 1, 2, 3, 4]
    with pytest.raises(DomainError):
        index_sets(PathParams.from_grid(1, 0, 1, p), 8)
    with pytest.raises(DomainError):
        index_sets(PathParams.from_grid(1, 3, 0, p), 8)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 512), st.data(), st.sampled_from([-1, 1]))
def test_index_sets_partition(M, data, sign):
    l = data.draw(st.integers(1, M - 1))
    q = PathParams(beta=1, tau=0.0, nu=sign * 100.0, l=float(l), k=0.0, f_c=4e9)
    isi, ici = index_sets(q, M)
    assert len(np.intersect1d(isi, ici)) == 0
    assert len(isi) + len(ici) == M
    assert sorted(np.concatenate([isi, ici])) == list(range(M))


# ---------------------------------------------------------------- rectangular kernel

def rect_oracle(q, p, k, l, k2, l2):
    """Scalar transcription of the rectangular kernel with geometric-sum Dirichlet ratios."""
    M, N, ip = p.M, p.N, q.nu / q.f_c
    dl, dk = q.l + l2 - l, q.k + k2 - k
    common = q.beta_prime * np.exp(-1j * np.pi * (M - 1) * dl / M) * np.exp(2j * np.pi * q.nu * l2 * p.T / M)
    start = M - q.l + 1 if q.nu >= 0 else M - q.l
    if l2 >= start:
        return common * (dirichlet_sum(dl / M - (N - 2) / 2 * ip, M)[0]
                         * dirichlet_sum(dk / N + (M - 1) / 2 * ip, N - 1, N)[0]
                         * np.exp(1j * np.pi * dk) * np.exp(1j * np.pi * (N - 2) * (M - 1) / 2 * ip)
                         * np.exp(-2j * np.pi * (q.k + k2) / N))
    return common * (dirichlet_sum(dl / M - (N - 1) / 2 * ip, M)[0]
                     * dirichlet_sum(dk / N + (M - 1) / 2 * ip, N)[0]
                     * np.exp(1j * np.pi * (N - 1) * dk / N) * np.exp(1j * np.pi * (N - 1) * (M - 1) / 2 * ip))


@pytest.mark.parametrize("k_i", [2, -1, 0])
def test_rect_kernel_matches_scalar_oracle(k_i, rng):
    p = OtfsParams.from_speed(16, 8, 500, l_max=6)
    q = PathParams.from_grid(0.5 - 0.7j, 4, k_i, p)
    for _ in range(200):
        k, k2 = rng.integers(0, p.N, 2)
        l, l2 = rng.integers(0, p.M, 2)
        assert abs(dd_kernel_rect(q, p, k, l, k2, l2) - rect_oracle(q, p, k, l, k2, l2)) < 1e-12


def test_rect_branch_selection():
    p = OtfsParams.from_speed(16, 8, 500, l_max=6)
    K = rect_kernel(PathParams.from_grid(1, 4, 1, p), p)
    assert not K.isi_cols[0]
    assert list(np.flatnonzero(K.isi_cols)) == list(range(13, 16))


def test_rect_classical_limit():
    p = OtfsParams(M=16, N=8, l_max=5, k_max=2.0)
    f_c = 1e15 * 2 * p.delta_f / p.N
    pp = OtfsParams(M=16, N=8, l_max=5, k_max=2.0, f_c=f_c)
    q = PathParams.from_grid(1.0, 3, 2, pp)
    assert abs(q.p - 1e15) / 1e15 < 1e-12
    classical = PathParams(beta=q.beta, tau=q.tau, nu=q.nu, l=3, k=2, f_c=np.inf)
    assert np.abs(rect_kernel(q, pp).dense() - rect_kernel(classical, pp).dense()).max() < 1e-9
    assert np.abs(dd_kernel_ideal(q, pp) - dd_kernel_ideal(classical, pp)).max() < 1e-9
    # classical ICI entries: e^{j pi (N-1) dk / N} times the two Dirichlet ratios, no offsets
    K = rect_kernel(classical, pp)
    k, l, k2, l2 = 5, 7, 1, 2
    dk, dl = 2 + k2 - k, 3 + l2 - l
    ref = (q.beta_prime * np.exp(-1j * np.pi * 15 * dl / 16) * np.exp(2j * np.pi * q.nu * l2 * pp.T / 16)
           * np.exp(1j * np.pi * 7 * dk / 8) * dirichlet(dl / 16, 16) * dirichlet(dk / 8, 8))
    assert abs(K.B_ici[k, k2] * K.A_ici[l, l2] - ref) < 1e-12


def test_apply_rect_pilot_and_zero_and_truncation(rng):
    p = OtfsParams.from_speed(16, 8, 500, l_max=6)
    ch = draw_channel(p, 3, kmh_to_mps(500), 9)
    x = np.zeros(p.shape, complex)
    x[0, 0] = 1
    y = apply_rect_channel_dd(x, ch)
    ref = sum(np.array([[dd_kernel_rect(q, p, k, l, 0, 0) for l in range(p.M)] for k in range(p.N)])
              for q in ch.paths)
    assert np.allclose(y, ref)
    zero = ChannelRealization(tuple(PathParams.from_grid(0, q.l, q.k, p) for q in ch.paths), p)
    assert np.all(apply_rect_channel_dd(crandn(rng, p.shape), zero) == 0)
    x = crandn(rng, p.shape)
    full = apply_rect_channel_dd(x, ch)
    dense = sum(np.einsum("abcd,cd->ab", rect_kernel(q, p).dense(), x) for q in ch.paths)
    assert np.allclose(full, dense)
    trunc = apply_rect_channel_dd(x, ch, truncate=1e-3)
    assert np.linalg.norm(trunc - full) / np.linalg.norm(full) < 1e-2


def test_rect_rejects_fractional_delay():
    p = OtfsParams.from_speed(16, 8, 500, l_max=6)
    with pytest.raises(DomainError):
        rect_kernel(PathParams.from_grid(1, 2.5, 1, p), p)


def test_dirichlet_near_singular_points():
    for L in (4, 64, 2048):
        for x in (5e-324, 1e-300, 1e-12, 3 + 1e-9):
            f = x - round(x)
            ref = float(np.sum(np.exp(2j * np.pi * f * (np.arange(L) - (L - 1) / 2))).real) / L
            ref *= (-1) ** (round(x) * (L - 1))
            assert abs(dirichlet(x, L) - ref) < 1e-12
