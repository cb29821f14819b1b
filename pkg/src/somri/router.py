"""State-ownership routing: split features into a resident carrier and a
non-resident evidence stream.

The router takes a C-channel feature map, splits it into two equal role
pools along channels, projects each pool with a per-pixel linear map, and
derives two streams:

* the resident carrier ``L`` -- the carrier pool passed through a fixed
  (non-learned) binomial carrier projector: separable depthwise blur with
  the normalized 5-tap kernel [1, 4, 6, 4, 1]/16 under reflect padding,
  2x spatial compaction (even-index sampling), and bilinear restoration to
  the original resolution;
* the non-resident evidence ``G`` -- the projected evidence pool plus the
  carrier-rejected residue ``U_car - L``.

Only ``L`` is eligible to source content tokens downstream; ``G`` is limited
to interface modulation and the output outlet.  The carrier projector is
channel-wise, so roles are assigned without channel mixing.

Bilinear restoration uses half-pixel-center alignment.  Along one axis of
length n (upsampled from n/2 samples v), the exact weights are::

    out[0]      = v[0]
    out[2j]     = 0.25 * v[j-1] + 0.75 * v[j]     (j >= 1)
    out[2j+1]   = 0.75 * v[j]   + 0.25 * v[j+1]   (j <= n/2 - 2)
    out[n-1]    = v[n/2 - 1]

which preserves constants and is linear, so both properties are testable to
round-off.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ._checks import check_feature_map
from .errors import ConfigError, ShapeError

#: normalized 5-tap binomial kernel
BINOMIAL_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class RouterWeights:
    """Feature extractor plus per-pixel role-pool projections.

    Dense (1x1) weights are stored (in, out); conv kernels (out, in, kh, kw).
    """

    phi_weight: np.ndarray  # (d_model, c_in, 3, 3)
    phi_bias: np.ndarray  # (d_model,)
    carrier_weight: np.ndarray  # (half, half)
    carrier_bias: np.ndarray  # (half,)
    evidence_weight: np.ndarray  # (half, half)
    evidence_bias: np.ndarray  # (half,)


@dataclass
class OwnershipStreams:
    carrier: np.ndarray  # L, (half, H, W)
    evidence: np.ndarray  # G, (half, H, W)


def extract_features(x, w: RouterWeights):
    """Image-domain feature extraction: 3x3 conv (reflect padding) + tanh.

    ``x`` stacks real/imag image channels: (2, H, W) single-coil or
    (2 * n_coils, H, W) multi-coil.  Output has d_model channels.
    """
    arr = check_feature_map(x, "input channels")
    d_model, c_in = w.phi_weight.shape[:2]
    if arr.shape[0] != c_in:
        raise ShapeError(
            f"input has {arr.shape[0]} channels, feature extractor expects {c_in}"
        )
    return np.tanh(conv3x3(arr, w.phi_weight) + w.phi_bias[:, None, None])


def conv3x3(x, weight):
    """Dense 3x3 convolution with reflect padding; weight is (out, in, 3, 3)."""
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    return np.einsum("ocij,chwij->ohw", weight, windows, optimize=True)


def binomial_project(u):
    """Separable depthwise binomial blur, horizontal then vertical.

    Reflect padding mirrors indices without repeating the edge sample, so
    constants are preserved exactly and there is no channel mixing.
    """
    arr = check_feature_map(u, "features")
    if arr.shape[1] < 3 or arr.shape[2] < 3:
        raise ShapeError(
            f"binomial projection needs H, W >= 3, got {arr.shape[1:]}"
        )
    out = correlate1d(arr, BINOMIAL_KERNEL, axis=2, mode="mirror")
    return correlate1d(out, BINOMIAL_KERNEL, axis=1, mode="mirror")


def carrier_project(u):
    """Fixed binomial carrier projector: blur, 2x compaction, bilinear restore.

    Output dimensions equal input dimensions; requires even H and W.
    """
    arr = check_feature_map(u, "carrier pool")
    _, h, w = arr.shape
    if h % 2 or w % 2:
        raise ShapeError(f"carrier projection needs even H, W, got {(h, w)}")
    blurred = binomial_project(arr)
    compact = blurred[:, ::2, ::2]
    return _bilinear_restore_axis(_bilinear_restore_axis(compact, axis=1), axis=2)


def route(x, w: RouterWeights) -> OwnershipStreams:
    """Split features into role pools and assemble the two ownership streams.

    First half of the channels is the carrier pool, second half the evidence
    pool.  Returns L = carrier_project(proj_car(X_car)) and
    G = proj_nr(X_nr) + (proj_car(X_car) - L).
    """
    arr = check_feature_map(x, "features")
    c = arr.shape[0]
    if c % 2:
        raise ConfigError(f"feature channel count must be even, got {c}")
    half = c // 2
    for name, proj in (("carrier", w.carrier_weight), ("evidence", w.evidence_weight)):
        if proj.shape != (half, half):
            raise ShapeError(
                f"{name} projection is {proj.shape}, pools have {half} channels"
            )
    u_car = _pointwise(arr[:half], w.carrier_weight, w.carrier_bias)
    u_nr = _pointwise(arr[half:], w.evidence_weight, w.evidence_bias)
    carrier = carrier_project(u_car)
    off_carrier = u_car - carrier
    return OwnershipStreams(carrier=carrier, evidence=u_nr + off_carrier)


def _pointwise(x, weight, bias):
    """Per-pixel linear channel map; weight is (in, out)."""
    return np.einsum("co,chw->ohw", weight, x, optimize=True) + bias[:, None, None]


def _bilinear_restore_axis(x, axis):
    n_half = x.shape[axis]
    n = 2 * n_half
    # output center i maps to source coordinate i/2 - 0.25 (half-pixel alignment)
    src = np.arange(n) / 2.0 - 0.25
    j0 = np.clip(np.floor(src).astype(int), 0, n_half - 1)
    j1 = np.clip(np.floor(src).astype(int) + 1, 0, n_half - 1)
    frac = np.clip(src - np.floor(src), 0.0, 1.0)
    frac[src < 0] = 0.0
    frac[src > n_half - 1] = 0.0
    lo = np.take(x, j0, axis=axis)
    hi = np.take(x, j1, axis=axis)
    shape = [1] * x.ndim
    shape[axis] = n
    f = frac.reshape(shape)
    return (1.0 - f) * lo + f * hi
