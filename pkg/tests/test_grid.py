import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otfs_squint.errors import ParameterError
from otfs_squint.grid import OtfsParams, isfft, sfft
from conftest import crandn


def isfft_oracle(x):
    """Direct double sum: X[n,m] = 1/sqrt(NM) sum_{k,l} x[k,l] exp(j2pi(nk/N - ml/M))."""
    N, M = x.shape
    X = np.zeros_like(x, complex)
    for n in range(N):
        for m in range(M):
            for k in range(N):
                for l in range(M):
                    X[n, m] += x[k, l] * np.exp(2j * np.pi * (n * k / N - m * l / M))
    return X / np.sqrt(N * M)


def sfft_oracle(Y):
    N, M = Y.shape
    y = np.zeros_like(Y, complex)
    for k in range(N):
        for l in range(M):
            for n in range(N):
                for m in range(M):
                    y[k, l] += Y[n, m] * np.exp(-2j * np.pi * (n * k / N - m * l / M))
    return y / np.sqrt(N * M)


def test_impulse_spreads_flat():
    x = np.zeros((4, 8), complex)
    x[0, 0] = 2.5
    assert np.allclose(isfft(x), 2.5 / np.sqrt(32))


def test_zero_grid():
    assert np.all(isfft(np.zeros((4, 8))) == 0)


def test_isfft_matches_double_sum(rng):
    x = crandn(rng, (2, 4))
    X = isfft(x)
    assert np.allclose(X, isfft_oracle(x), atol=1e-13)
    assert np.isclose(np.linalg.norm(X), np.linalg.norm(x))


def test_sfft_matches_double_sum(rng):
    Y = crandn(rng, (2, 4))
    assert np.allclose(sfft(Y), sfft_oracle(Y), atol=1e-13)
    Y = crandn(rng, (4, 8))
    assert np.allclose(sfft(Y), sfft_oracle(Y), atol=1e-12)


def test_flat_grid_to_impulse():
    y = sfft(np.full((4, 8), 3.0 + 1j))
    assert np.isclose(y[0, 0], (3 + 1j) * np.sqrt(32))
    y[0, 0] = 0
    assert np.allclose(y, 0, atol=1e-13)


def test_round_trip(rng):
    x = crandn(rng, (4, 8))
    assert np.allclose(sfft(isfft(x)), x, atol=1e-14)


@pytest.mark.parametrize("M", [2, 4, 8, 64, 512])
@pytest.mark.parametrize("N", [2, 16, 128])
def test_unitarity_all_sizes(M, N, rng):
    x = crandn(rng, (N, M))
    X = isfft(x)
    assert abs(np.linalg.norm(X) - np.linalg.norm(x)) / np.linalg.norm(x) < 1e-10
    assert np.linalg.norm(sfft(X) - x) / np.linalg.norm(x) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    x1, x2 = crandn(rng, (8, 16)), crandn(rng, (8, 16))
    assert np.allclose(isfft(a * x1 + b * x2), a * isfft(x1) + b * isfft(x2), atol=1e-12)


def test_shape_mismatch():
    p = OtfsParams(M=8, N=4, l_max=3)
    with pytest.raises(ParameterError):
        isfft(np.zeros((8, 4)), p)
    with pytest.raises(ParameterError):
        sfft(np.zeros(8), p)


def test_params_derived_and_validated():
    p = OtfsParams(M=512, N=128, l_max=20, k_max=15.8)
    assert p.T * p.delta_f == 1.0
    assert p.shape == (128, 512)
    for bad in [dict(M=8, N=4, l_max=1), dict(M=8, N=4, l_max=8), dict(M=8, N=4, l_max=3, k_max=2),
                dict(M=1024, N=1024, l_max=3), dict(M=0, N=4, l_max=3)]:
        with pytest.raises(ParameterError):
            OtfsParams(**bad)


def test_from_speed():
    p = OtfsParams.from_speed(512, 128, 500)
    assert 15.7 < p.k_max < 15.9
