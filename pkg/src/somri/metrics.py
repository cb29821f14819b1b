"""Reconstruction quality metrics: PSNR and SSIM on real-valued images."""

import numpy as np
from scipy.ndimage import correlate

from .errors import ConfigError, ShapeError

#: value reported for a zero-MSE (identical) image pair
PSNR_CAP_DB = 300.0


def psnr(reference, estimate, peak=None):
    """Peak signal-to-noise ratio in decibels: 10 * log10(peak^2 / MSE).

    ``peak`` defaults to the reference maximum.  Identical images report the
    cap of 300 dB.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise ShapeError(f"image shapes differ: {ref.shape} vs {est.shape}")
    if peak is None:
        peak = float(ref.max())
    if peak <= 0:
        raise ConfigError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * np.log10(peak * peak / mse)


def ssim(reference, estimate, window=11, sigma=1.5, k1=0.01, k2=0.03, peak=None):
    """Mean local structural similarity with a Gaussian window.

    Local means, variances, and covariance are computed under an 11x11
    Gaussian window (sigma 1.5) with symmetric boundary handling, then
    combined with the usual stabilizers C1 = (k1 * peak)^2 and
    C2 = (k2 * peak)^2.  Result lies in [-1, 1]; identical inputs give 1.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise ShapeError(f"image shapes differ: {ref.shape} vs {est.shape}")
    if window > min(ref.shape):
        raise ConfigError(
            f"window {window} exceeds image extent {min(ref.shape)}"
        )
    if peak is None:
        peak = float(ref.max())
    if peak <= 0:
        raise ConfigError(f"peak must be > 0, got {peak}")

    win = _gaussian_window(window, sigma)

    def smooth(img):
        return correlate(img, win, mode="reflect")

    mu_x = smooth(ref)
    mu_y = smooth(est)
    var_x = smooth(ref * ref) - mu_x * mu_x
    var_y = smooth(est * est) - mu_y * mu_y
    cov = smooth(ref * est) - mu_x * mu_y

    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(ssim_map.mean())


def _gaussian_window(size, sigma):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()
