"""k-space sampling mask generation.

Three mask families cover the benchmark settings:

* ``equispaced`` -- fully-sampled center block plus every ``acceleration``-th
  column starting at column 0.
* ``random``     -- fully-sampled center block plus columns drawn without
  replacement by a seeded PRNG until ceil(width / acceleration) columns are
  sampled.
* ``radial``     -- golden-angle spokes rasterized on the Cartesian grid:
  spoke i sits at i * 111.2461583 degrees, and the full diameter through the
  grid center is walked in 0.5-pixel steps in both directions, marking the
  nearest bin at each step.

Cartesian masks are column-structured (a column is entirely sampled or
entirely skipped).  Every mask samples the zero-frequency bin at
(H//2, W//2); the center column is forced on for Cartesian kinds in the rare
widths where the rounded center block misses it.

Default center fractions follow the usual fastMRI-style pairing of 0.08 at
4x and 0.04 at 8x; radial spoke counts default to 32 at 4x and 16 at 8x.
The random kind uses numpy's PCG64 generator (``np.random.default_rng``).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

GOLDEN_ANGLE_DEG = 111.2461583

MASK_KINDS = ("equispaced", "random", "radial")

_DEFAULT_CENTER_FRACTION = {4: 0.08, 8: 0.04}
_DEFAULT_SPOKES = {4: 32, 8: 16}


@dataclass(frozen=True)
class MaskSpec:
    """Parameters defining one sampling mask."""

    kind: str
    height: int
    width: int
    acceleration: int = 4
    center_fraction: float | None = None  # Cartesian kinds; default by acceleration
    spokes: int | None = None  # radial kind; default by acceleration
    seed: int = 0  # random kind


@dataclass(frozen=True)
class SampleMask:
    """Boolean acquisition mask plus the spec that produced it."""

    bits: np.ndarray  # (H, W) bool, True = acquired
    spec: MaskSpec

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def kind(self):
        return self.spec.kind

    def sampled_fraction(self):
        return float(self.bits.mean())


def mask_from_bits(bits, kind="file"):
    """Wrap raw acquisition bits (e.g. loaded from disk) as a SampleMask.

    Only the geometry is known; generation metadata is not recoverable.
    """
    arr = np.asarray(bits, dtype=bool)
    if arr.ndim != 2:
        raise ConfigError(f"mask bits must be 2-D, got shape {arr.shape}")
    return SampleMask(bits=arr, spec=MaskSpec(kind=kind, height=arr.shape[0], width=arr.shape[1]))


def generate_mask(spec: MaskSpec) -> SampleMask:
    """Generate the sampling mask described by ``spec``.

    Deterministic: the same spec always yields bit-identical masks.
    """
    if spec.kind not in MASK_KINDS:
        raise ConfigError(f"unknown mask kind {spec.kind!r}")
    if spec.width < 4:
        raise ConfigError(f"width must be >= 4, got {spec.width}")
    if spec.height < 2:
        raise ConfigError(f"height must be >= 2, got {spec.height}")
    if spec.acceleration < 1:
        raise ConfigError(f"acceleration must be >= 1, got {spec.acceleration}")

    if spec.kind == "radial":
        bits = _radial_bits(spec)
    else:
        bits = _cartesian_bits(spec)
    return SampleMask(bits=bits, spec=spec)


def _center_fraction(spec):
    if spec.center_fraction is not None:
        return spec.center_fraction
    try:
        return _DEFAULT_CENTER_FRACTION[spec.acceleration]
    except KeyError:
        raise ConfigError(
            f"no default center_fraction for acceleration {spec.acceleration}; "
            "pass one explicitly"
        ) from None


def _spoke_count(spec):
    if spec.spokes is not None:
        return spec.spokes
    try:
        return _DEFAULT_SPOKES[spec.acceleration]
    except KeyError:
        raise ConfigError(
            f"no default spoke count for acceleration {spec.acceleration}; "
            "pass one explicitly"
        ) from None


def _center_block(width, center_fraction):
    n_center = int(round(width * center_fraction))
    if n_center < 1:
        raise ConfigError(
            f"center_fraction {center_fraction} keeps no columns at width {width}"
        )
    start = (width - n_center) // 2
    return set(range(start, start + n_center))


def _cartesian_bits(spec):
    w = spec.width
    cols = _center_block(w, _center_fraction(spec))
    cols.add(w // 2)  # zero-frequency column is always acquired

    if spec.kind == "equispaced":
        cols.update(range(0, w, spec.acceleration))
    else:  # random
        target = int(np.ceil(w / spec.acceleration))
        if len(cols) > target:
            raise ConfigError(
                f"center block of {len(cols)} columns exceeds the sampling "
                f"budget of {target} at acceleration {spec.acceleration}"
            )
        rng = np.random.default_rng(spec.seed)
        remaining = [c for c in range(w) if c not in cols]
        for c in rng.permutation(remaining):
            if len(cols) == target:
                break
            cols.add(int(c))

    bits = np.zeros((spec.height, spec.width), dtype=bool)
    bits[:, sorted(cols)] = True
    return bits


def _radial_bits(spec):
    spokes = _spoke_count(spec)
    if spokes < 1:
        raise ConfigError(f"spokes must be >= 1, got {spokes}")

    h, w = spec.height, spec.width
    ci, cj = h // 2, w // 2
    bits = np.zeros((h, w), dtype=bool)

    # Walk each diameter in 0.5 px steps; np.rint (round-half-even) is an odd
    # function, so the two half-spokes mark point-symmetric bins about the center.
    t = np.arange(0.0, float(np.hypot(h, w)) + 0.5, 0.5)
    for s in range(spokes):
        ang = np.deg2rad(s * GOLDEN_ANGLE_DEG)
        di, dj = np.sin(ang), np.cos(ang)
        for sign in (1.0, -1.0):
            ii = np.rint(ci + sign * t * di).astype(int)
            jj = np.rint(cj + sign * t * dj).astype(int)
            ok = (ii >= 0) & (ii < h) & (jj >= 0) & (jj < w)
            bits[ii[ok], jj[ok]] = True
    return bits
