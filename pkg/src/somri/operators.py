"""MRI forward operator, adjoint, measurement simulation, and data consistency.

The forward operator A maps an image to per-coil masked k-space:

    single-coil:  y   = m * fft2c(x)
    multi-coil:   y_c = m * fft2c(s_c * x)

Measurements are stored as an (n_coils, H, W) complex array (n_coils = 1 for
single-coil) with unsampled bins exactly zero.  The adjoint A^H is

    single-coil:  x = ifft2c(m * y)
    multi-coil:   x = sum_c conj(s_c) * ifft2c(m * y_c)

Data consistency replaces sampled k-space bins of the current iterate with
the acquired values.  The replacement itself is exact (bit-level); the
image-domain result picks up one FFT round trip of double-precision noise.
A soft variant blends instead of replacing: with weight w the sampled bins
become (k + w*y) / (1 + w), recovering hard replacement as w -> inf.
"""

from dataclasses import dataclass

import numpy as np

from ._checks import check_complex_field
from .errors import ConfigError, ShapeError
from .fourier import fft2c, ifft2c
from .masks import SampleMask

COIL_NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class ForwardConfig:
    """Sampling mask plus optional normalized coil sensitivities."""

    mask: SampleMask
    coil_maps: np.ndarray | None = None  # (n_coils, H, W) complex

    def __post_init__(self):
        if self.coil_maps is not None:
            maps = np.asarray(self.coil_maps)
            if maps.ndim != 3 or maps.shape[1:] != self.mask.bits.shape:
                raise ShapeError(
                    f"coil maps shape {maps.shape} does not match mask "
                    f"{self.mask.bits.shape}"
                )
            ssq = np.sum(np.abs(maps) ** 2, axis=0)
            if np.max(np.abs(ssq - 1.0)) > COIL_NORMALIZATION_TOL:
                raise ConfigError(
                    "coil maps are not normalized: max |sum_c|s_c|^2 - 1| = "
                    f"{np.max(np.abs(ssq - 1.0)):.3e}"
                )

    @property
    def mode(self):
        return "single_coil" if self.coil_maps is None else "multi_coil"

    @property
    def n_coils(self):
        return 1 if self.coil_maps is None else self.coil_maps.shape[0]


def forward(cfg: ForwardConfig, image) -> np.ndarray:
    """Apply the forward operator; returns (n_coils, H, W) masked k-space."""
    x = check_complex_field(image, "image")
    if x.shape != cfg.mask.bits.shape:
        raise ShapeError(
            f"image shape {x.shape} does not match mask {cfg.mask.bits.shape}"
        )
    m = cfg.mask.bits
    if cfg.coil_maps is None:
        return (m * fft2c(x))[None]
    out = np.empty((cfg.n_coils, *x.shape), dtype=np.complex128)
    for c in range(cfg.n_coils):
        out[c] = m * fft2c(cfg.coil_maps[c] * x)
    return out


def adjoint(cfg: ForwardConfig, y) -> np.ndarray:
    """Apply A^H to measurements; returns the (H, W) complex image."""
    meas = _check_measurements(cfg, y)
    m = cfg.mask.bits
    if cfg.coil_maps is None:
        return ifft2c(m * meas[0])
    out = np.zeros(cfg.mask.bits.shape, dtype=np.complex128)
    for c in range(cfg.n_coils):
        out += np.conj(cfg.coil_maps[c]) * ifft2c(m * meas[c])
    return out


def data_consistency_kspace(k, y_coil, mask_bits, weight=None):
    """Replace (or blend) sampled bins of one coil's k-space with measurements.

    Hard replacement (``weight=None``) copies measured bins bit-exactly.
    """
    out = k.copy()
    if weight is None:
        out[mask_bits] = y_coil[mask_bits]
    else:
        if weight < 0:
            raise ConfigError(f"dc weight must be >= 0, got {weight}")
        out[mask_bits] = (k[mask_bits] + weight * y_coil[mask_bits]) / (1.0 + weight)
    return out


def data_consistency(z, y, cfg: ForwardConfig, weight=None):
    """k-space data-consistency update of an image iterate.

    single-coil: ifft2c((1 - m) * fft2c(z) + m * y)
    multi-coil:  replace sampled bins of fft2c(s_c * z) per coil, then
                 combine sum_c conj(s_c) * ifft2c(.)
    """
    x = check_complex_field(z, "z")
    meas = _check_measurements(cfg, y)
    if x.shape != cfg.mask.bits.shape:
        raise ShapeError(f"iterate shape {x.shape} != mask {cfg.mask.bits.shape}")
    m = cfg.mask.bits
    if cfg.coil_maps is None:
        return ifft2c(data_consistency_kspace(fft2c(x), meas[0], m, weight))
    out = np.zeros_like(x)
    for c in range(cfg.n_coils):
        kc = data_consistency_kspace(fft2c(cfg.coil_maps[c] * x), meas[c], m, weight)
        out += np.conj(cfg.coil_maps[c]) * ifft2c(kc)
    return out


def simulate(image, cfg: ForwardConfig, noise_std=0.0, seed=0) -> np.ndarray:
    """Simulate measurements: forward(image) plus complex Gaussian noise.

    Noise of per-component standard deviation ``noise_std`` is added on
    sampled bins only; unsampled bins stay exactly zero.  Deterministic for a
    fixed seed (PCG64).
    """
    if noise_std < 0:
        raise ConfigError(f"noise_std must be >= 0, got {noise_std}")
    y = forward(cfg, image)
    if noise_std == 0:
        return y
    rng = np.random.default_rng(seed)
    m = cfg.mask.bits
    for c in range(y.shape[0]):
        noise = rng.normal(scale=noise_std, size=(*m.shape, 2))
        y[c][m] += noise[..., 0][m] + 1j * noise[..., 1][m]
    return y


def _check_measurements(cfg, y):
    meas = np.asarray(y)
    if meas.ndim == 2:
        meas = meas[None]
    if meas.ndim != 3 or meas.shape != (cfg.n_coils, *cfg.mask.bits.shape):
        raise ShapeError(
            f"measurements shape {np.asarray(y).shape} does not match "
            f"({cfg.n_coils}, {cfg.mask.bits.shape[0]}, {cfg.mask.bits.shape[1]})"
        )
    return meas.astype(np.complex128, copy=False)
