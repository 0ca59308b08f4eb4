import numpy as np
import pytest

from otfs_squint.errors import ParameterError
from otfs_squint.grid import OtfsParams, sfft
from otfs_squint.link import NoiseSpec, add_noise, ber, lmmse_equalize
from conftest import crandn


def test_noise_spec_validation_and_conventions():
    with pytest.raises(ParameterError):
        NoiseSpec(0.0)
    with pytest.raises(ParameterError):
        NoiseSpec(-1.0)
    # Eb/N0 = sigma_s^2 / (sigma^2 log2 Q)
    assert np.isclose(NoiseSpec.from_ebn0(10, 4).sigma2, 1 / 40)
    assert np.isclose(NoiseSpec.from_ebn0(0, 2, sigma_s2=2.0).sigma2, 1.0)
    # SNR_p = |x_p|^2 / sigma^2
    assert np.isclose(NoiseSpec.from_snr_p(30, 10.0).sigma2, 0.1)


def test_vanishing_noise(rng):
    Y = crandn(rng, (16, 32))
    assert np.max(np.abs(add_noise(Y, NoiseSpec(1e-30), 3) - Y)) < 1e-12


def test_noise_variance_calibration():
    for s2 in (0.01, 1.0, 7.5):
        v = add_noise(np.zeros(10 ** 6), NoiseSpec(s2), 42)
        assert 0.99 * s2 <= np.var(v) <= 1.01 * s2
        # circular symmetry: real and imaginary halves each carry sigma2 / 2
        assert abs(np.var(v.real) - s2 / 2) < 0.01 * s2
        assert abs(np.mean(v.real * v.imag)) < 0.01 * s2


def test_noise_statistics_survive_sfft():
    p = OtfsParams(M=256, N=128, l_max=20, k_max=1.0)
    s2 = 0.3
    V = add_noise(np.zeros(p.shape, complex), NoiseSpec(s2), 5)
    Vd = sfft(V)
    n = V.size
    # two-sample variance check: ratio within ~4 standard errors of 1
    ratio = np.var(Vd) / np.var(V)
    assert abs(ratio - 1) < 4 * np.sqrt(2 * 2 / n)
    assert 0.98 * s2 < np.var(Vd) < 1.02 * s2
    # still white: lag-one correlation along both axes is negligible
    assert abs(np.mean(Vd[:, 1:] * Vd[:, :-1].conj())) < 0.02 * s2
    assert abs(np.mean(Vd[1:] * Vd[:-1].conj())) < 0.02 * s2


def test_noise_determinism():
    a = add_noise(np.zeros((8, 8)), NoiseSpec(1.0), 9)
    b = add_noise(np.zeros((8, 8)), NoiseSpec(1.0), np.random.default_rng(9))
    c = add_noise(np.zeros((8, 8)), NoiseSpec(1.0), 10)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_lmmse_examples(rng):
    Y = crandn(rng, (4, 8))
    H = crandn(rng, (4, 8))
    assert np.allclose(lmmse_equalize(Y, H, NoiseSpec(1e-30)), Y / H)
    H0 = H.copy()
    H0[1, 2] = 0
    out = lmmse_equalize(Y, H0, NoiseSpec(0.5))
    assert out[1, 2] == 0 and np.all(np.isfinite(out))
    Hu = np.exp(2j * np.pi * rng.random((4, 8)))
    assert np.allclose(lmmse_equalize(Y, Hu, NoiseSpec(1.0)), Hu.conj() * Y / 2)
    assert np.allclose(lmmse_equalize(Y, Hu, NoiseSpec(2.0), sigma_s2=2.0), Hu.conj() * Y / 2)


def test_lmmse_never_amplifies(rng):
    for s2 in (1e-4, 0.1, 3.0):
        Y = crandn(rng, 1000)
        H = crandn(rng, 1000) * rng.random(1000) ** 3
        X = lmmse_equalize(Y, H, NoiseSpec(s2))
        assert np.all(np.abs(X) <= np.abs(Y) * np.abs(H) / s2 * (1 + 1e-12))
        assert np.all(np.abs(X) <= np.abs(Y) / np.abs(H) * (1 + 1e-12))


def test_ber_counting():
    rng = np.random.default_rng(0)
    b = rng.integers(0, 2, 1000)
    assert ber(b, b) == 0
    assert ber(1 - b, b) == 1
    c = b.copy()
    c[[3, 500, 999]] ^= 1
    assert ber(c, b) == 0.003
    with pytest.raises(ParameterError):
        ber(b[:10], b)
