"""Synthetic ground-truth images and coil sensitivity maps.

Desk-scale stand-ins for real acquisitions: a Shepp-Logan head phantom and a
seeded smooth-texture field, both returned as zero-phase complex images with
magnitudes in [0, 1].  All randomness comes from numpy's PCG64 generator
(``np.random.default_rng``) so every artifact is reproducible from its seed.
"""

import numpy as np

from .errors import ConfigError

PHANTOM_KINDS = ("shepp_logan", "smooth_texture")

# Classic ten-ellipse Shepp-Logan table: (additive value, a, b, x0, y0, phi_deg)
# on the [-1, 1]^2 square.
_SHEPP_LOGAN_ELLIPSES = [
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6050, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
]


def make_phantom(kind, size, seed=0):
    """Generate a complex ground-truth image of shape (size, size).

    Parameters
    ----------
    kind : {"shepp_logan", "smooth_texture"}
    size : int
        Grid edge; must be even and >= 32.
    seed : int
        Used by smooth_texture only.
    """
    if kind not in PHANTOM_KINDS:
        raise ConfigError(f"unknown phantom kind {kind!r}")
    if size < 32 or size % 2 != 0:
        raise ConfigError(f"size must be even and >= 32, got {size}")
    if kind == "shepp_logan":
        img = _shepp_logan(size)
    else:
        img = _smooth_texture(size, seed)
    return img.astype(np.complex128)


def _shepp_logan(size):
    x = np.linspace(-1.0, 1.0, size)
    xx, yy = np.meshgrid(x, x)
    img = np.zeros((size, size))
    for value, a, b, x0, y0, phi_deg in _SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(phi_deg)
        xr = (xx - x0) * np.cos(phi) + (yy - y0) * np.sin(phi)
        yr = -(xx - x0) * np.sin(phi) + (yy - y0) * np.cos(phi)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    img = np.clip(img, 0.0, None)
    return img / img.max()


def _smooth_texture(size, seed):
    rng = np.random.default_rng(seed)
    base = _lowpass(rng.standard_normal((size, size)), size / 16.0)
    fine = _lowpass(rng.standard_normal((size, size)), size / 3.0)
    img = base + 0.15 * fine
    img -= img.min()
    return img / img.max()


def _lowpass(noise, keep_radius):
    k = np.fft.fft2(noise)
    fy = np.fft.fftfreq(noise.shape[0]) * noise.shape[0]
    fx = np.fft.fftfreq(noise.shape[1]) * noise.shape[1]
    rho = np.hypot(fy[:, None], fx[None, :])
    return np.real(np.fft.ifft2(k * np.exp(-((rho / keep_radius) ** 2))))


def synth_coil_maps(n_coils, size):
    """Synthesize smooth normalized coil sensitivities, shape (n_coils, size, size).

    Each coil is a Gaussian profile anchored at an evenly spaced point on the
    border circle, times a constant per-coil phase; the stack is normalized so
    sum_c |s_c|^2 = 1 at every pixel.  A single coil therefore collapses to a
    constant unit-magnitude map.
    """
    if n_coils < 1:
        raise ConfigError(f"n_coils must be >= 1, got {n_coils}")
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    center = (size - 1) / 2.0
    radius = size / 2.0
    sigma = size / 2.0
    maps = np.empty((n_coils, size, size), dtype=np.complex128)
    for c in range(n_coils):
        ang = 2.0 * np.pi * c / n_coils
        ai = center + radius * np.sin(ang)
        aj = center + radius * np.cos(ang)
        profile = np.exp(-((ii - ai) ** 2 + (jj - aj) ** 2) / (2.0 * sigma**2))
        maps[c] = profile * np.exp(1j * ang)
    maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))[None]
    return maps
