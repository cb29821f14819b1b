import numpy as np
import pytest

from somri import ConfigError, ShapeError, psnr, ssim
from somri.metrics import PSNR_CAP_DB


def test_psnr_identical_images_capped(rng):
    img = rng.standard_normal((32, 32))
    assert psnr(img, img) == PSNR_CAP_DB == 300.0


def test_psnr_hand_value():
    # 64 of 100 pixels differ by 0.125 (exact dyadic): MSE = 64 * 0.015625 / 100,
    # which is bit-exactly the double 0.01, so the result is exactly 20 dB
    ref = np.zeros((10, 10))
    est = np.zeros((10, 10))
    est.ravel()[:64] = 0.125
    assert np.mean((ref - est) ** 2) == 0.01
    assert psnr(ref, est, peak=1.0) == 20.0


def test_psnr_scale_invariant(rng):
    ref = rng.uniform(0.1, 1.0, (32, 32))
    est = ref + rng.standard_normal((32, 32)) * 0.05
    base = psnr(ref, est, peak=1.0)
    scaled = psnr(3.0 * ref, 3.0 * est, peak=3.0)
    assert abs(base - scaled) < 1e-9


def test_psnr_default_peak_is_reference_max(rng):
    ref = rng.uniform(0.0, 2.0, (16, 16))
    est = rng.uniform(0.0, 2.0, (16, 16))
    assert psnr(ref, est) == psnr(ref, est, peak=float(ref.max()))


def test_psnr_validation(rng):
    with pytest.raises(ShapeError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ConfigError):
        psnr(np.zeros((4, 4)), np.ones((4, 4)))  # default peak 0


def test_ssim_identical_images(rng):
    img = rng.uniform(0, 1, (32, 32))
    assert abs(ssim(img, img) - 1.0) < 1e-9


def test_ssim_constant_pair_is_one():
    a = np.full((16, 16), 0.7)
    assert abs(ssim(a, a.copy(), peak=0.7) - 1.0) < 1e-9


def test_ssim_negated_zero_mean_reference_is_negative():
    # fine checkerboard: local means vanish under the window, so the sign is
    # carried by the covariance term, and cov(x, -x) < 0
    i, j = np.meshgrid(np.arange(48), np.arange(48), indexing="ij")
    ref = 0.5 * (-1.0) ** (i + j)
    value = ssim(ref, -ref, peak=0.5)
    assert value < 0.0


def test_ssim_in_range(rng):
    for _ in range(5):
        a = rng.uniform(0, 1, (24, 24))
        b = rng.uniform(0, 1, (24, 24))
        assert -1.0 <= ssim(a, b) <= 1.0


def test_ssim_penalizes_noise(rng):
    ref = rng.uniform(0.2, 0.8, (32, 32))
    noisy = ref + 0.2 * rng.standard_normal((32, 32))
    assert ssim(ref, noisy) < ssim(ref, ref + 0.01)


def test_ssim_window_validation(rng):
    img = rng.uniform(0, 1, (8, 8))
    with pytest.raises(ConfigError):
        ssim(img, img, window=11)
    with pytest.raises(ShapeError):
        ssim(np.zeros((16, 16)), np.zeros((16, 12)))
