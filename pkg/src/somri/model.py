"""Unrolled reconstruction: groups of ownership-aware units with per-group
data consistency, deterministic weight initialization, and weight I/O.

The reconstruction alternates learned refinement with data consistency,

    z = x + decode(unit(features(x))),     x <- DC(z, y)

starting from the zero-filled adjoint image.  Six groups of two units is the
default; hidden scan states are never carried between units or groups --
cross-stage information travels only through the image iterate.

Weight initialization is seeded and deterministic: dense maps and convs are
uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases are zero, the
modulation projection is zero (so a freshly initialized model sits exactly at
the modulation-identity point), and a_log is zero (transition scalar -1).
All weights are float32; arithmetic promotes to float64 against the data.

Weight files are a text manifest (magic, version, JSON config record and
per-block offsets) followed by the little-endian float32 payload; round
trips are bit-exact.
"""

import io
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, FormatError, ShapeError
from .operators import ForwardConfig, adjoint, data_consistency
from .router import RouterWeights, extract_features
from .scan import ModulationWeights, ScanWeights, SsmConfig
from .unit import AblationSwitches, UnitWeights, so_unit_forward

WEIGHTS_MAGIC = "#somri-weights"
WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and solver configuration of the unrolled model."""

    groups: int = 6
    units_per_group: int = 2
    ssm: SsmConfig = field(default_factory=SsmConfig)
    n_coils: int = 1
    dc_weight: float | None = None  # None = hard replacement
    dc_every_unit: bool = False  # default: one DC per group
    residual_per_group: bool = False  # default: residual update per unit
    share_weights: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.groups < 1 or self.units_per_group < 1:
            raise ConfigError("groups and units_per_group must be >= 1")
        if self.n_coils < 1:
            raise ConfigError(f"n_coils must be >= 1, got {self.n_coils}")

    @property
    def n_units(self):
        return self.groups * self.units_per_group


@dataclass
class ModelWeights:
    config: ModelConfig
    units: list  # UnitWeights per stage (length 1 when shared)

    def unit(self, group, unit_in_group):
        if self.config.share_weights:
            return self.units[0]
        return self.units[group * self.config.units_per_group + unit_in_group]


def init_weights(cfg: ModelConfig) -> ModelWeights:
    """Deterministic seeded initialization of all stage weights."""
    rng = np.random.default_rng(cfg.seed)
    count = 1 if cfg.share_weights else cfg.n_units
    units = [_init_unit(rng, cfg) for _ in range(count)]
    return ModelWeights(config=cfg, units=units)


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def _zeros(shape):
    return np.zeros(shape, dtype=np.float32)


def _init_unit(rng, cfg: ModelConfig) -> UnitWeights:
    s = cfg.ssm
    half = s.d_model // 2
    c_in = 2 * cfg.n_coils
    router = RouterWeights(
        phi_weight=_uniform(rng, c_in * 9, (s.d_model, c_in, 3, 3)),
        phi_bias=_zeros(s.d_model),
        carrier_weight=_uniform(rng, half, (half, half)),
        carrier_bias=_zeros(half),
        evidence_weight=_uniform(rng, half, (half, half)),
        evidence_bias=_zeros(half),
    )
    scan = ScanWeights(
        delta_weight=_uniform(rng, s.d_inner, (s.d_inner, s.heads)),
        delta_bias=_zeros(s.heads),
        a_log=_zeros(s.heads),
        lambda_weight=_uniform(rng, s.d_inner, (s.d_inner, s.heads)),
        lambda_bias=_zeros(s.heads),
        b_weight=_uniform(rng, s.d_inner, (s.d_inner, s.heads * s.d_state * s.rank)),
        b_bias=_zeros(s.heads * s.d_state * s.rank),
        c_weight=_uniform(rng, s.d_inner, (s.d_inner, s.heads * s.d_state * s.rank)),
        c_bias=_zeros(s.heads * s.d_state * s.rank),
    )
    modulation = ModulationWeights(
        proj_weight=_zeros((half, s.heads * 4 * s.d_state)),
        proj_bias=_zeros(s.heads * 4 * s.d_state),
    )
    return UnitWeights(
        router=router,
        in_proj_weight=_uniform(rng, half, (half, s.d_inner)),
        in_proj_bias=_zeros(s.d_inner),
        in_proj_full_weight=_uniform(rng, s.d_model, (s.d_model, s.d_inner)),
        in_proj_full_bias=_zeros(s.d_inner),
        violation_weight=_uniform(rng, s.d_model, (s.d_model, half)),
        scan=scan,
        modulation=modulation,
        nsr_depthwise=_uniform(rng, 9, (half, 3, 3)),
        nsr_mix_weight=_uniform(rng, half, (half, half)),
        nsr_mix_bias=_zeros(half),
        nsr_gate_weight=_uniform(rng, half, (half, half)),
        nsr_gate_bias=_zeros(half),
        merge_weight=_uniform(rng, s.d_inner + half, (s.d_inner + half, s.d_model)),
        merge_bias=_zeros(s.d_model),
        decode_weight=_uniform(rng, s.d_model, (s.d_model, 2 * cfg.n_coils)),
        decode_bias=_zeros(2 * cfg.n_coils),
    )


def image_channels(x, cfg_f: ForwardConfig):
    """Stack the iterate into real feature channels: (2, H, W) or (2*n_coils, H, W)."""
    if cfg_f.coil_maps is None:
        return np.stack([x.real, x.imag])
    chans = []
    for c in range(cfg_f.n_coils):
        coil_image = cfg_f.coil_maps[c] * x
        chans.extend([coil_image.real, coil_image.imag])
    return np.stack(chans)


def decode_update(y_feat, w: UnitWeights, cfg_f: ForwardConfig):
    """Decode the merged unit output into a complex image update."""
    d = np.einsum("co,chw->ohw", w.decode_weight, y_feat, optimize=True)
    d += w.decode_bias[:, None, None]
    if cfg_f.coil_maps is None:
        return d[0] + 1j * d[1]
    out = np.zeros(y_feat.shape[1:], dtype=np.complex128)
    for c in range(cfg_f.n_coils):
        out += np.conj(cfg_f.coil_maps[c]) * (d[2 * c] + 1j * d[2 * c + 1])
    return out


def reconstruct(
    y,
    cfg_f: ForwardConfig,
    weights: ModelWeights,
    switches: AblationSwitches = AblationSwitches(),
):
    """Unrolled reconstruction from measurements.

    Returns the final iterate and the list of unit probes in execution order
    (groups * units_per_group of them).
    """
    cfg = weights.config
    if cfg_f.n_coils != cfg.n_coils:
        raise ShapeError(
            f"forward model has {cfg_f.n_coils} coils, weights expect {cfg.n_coils}"
        )
    x = adjoint(cfg_f, y)
    probes = []
    for g in range(cfg.groups):
        if cfg.residual_per_group:
            x = _feature_chain_group(x, g, cfg_f, weights, switches, probes)
        else:
            for k in range(cfg.units_per_group):
                w_u = weights.unit(g, k)
                feats = extract_features(image_channels(x, cfg_f), w_u.router)
                y_feat, probe = so_unit_forward(feats, w_u, switches, cfg.ssm)
                probes.append(probe)
                x = x + decode_update(y_feat, w_u, cfg_f)
                if cfg.dc_every_unit:
                    x = data_consistency(x, y, cfg_f, weight=cfg.dc_weight)
        if not cfg.dc_every_unit:
            x = data_consistency(x, y, cfg_f, weight=cfg.dc_weight)
    return x, probes


def _feature_chain_group(x, g, cfg_f, weights, switches, probes):
    """Per-group residual variant: units chained in feature space, one decode."""
    cfg = weights.config
    w_first = weights.unit(g, 0)
    feats = extract_features(image_channels(x, cfg_f), w_first.router)
    w_u = w_first
    for k in range(cfg.units_per_group):
        w_u = weights.unit(g, k)
        feats, probe = so_unit_forward(feats, w_u, switches, cfg.ssm)
        probes.append(probe)
    return x + decode_update(feats, w_u, cfg_f)


# ---------------------------------------------------------------------------
# weight serialization


def named_arrays(weights: ModelWeights):
    """Stable (name, array) enumeration of every weight block."""
    out = []
    for idx, unit in enumerate(weights.units):
        prefix = f"unit{idx:02d}"
        for f in fields(unit):
            value = getattr(unit, f.name)
            if isinstance(value, np.ndarray):
                out.append((f"{prefix}.{f.name}", value))
            else:  # nested dataclass (router / scan / modulation)
                for g in fields(value):
                    out.append((f"{prefix}.{f.name}.{g.name}", getattr(value, g.name)))
    return out


def save_weights(weights: ModelWeights, path):
    """Write weights to ``path``; see the module docstring for the layout."""
    blocks = []
    payload = io.BytesIO()
    offset = 0
    for name, arr in named_arrays(weights):
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        blocks.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.write(data)
        offset += len(data)
    manifest = {
        "config": _config_record(weights.config),
        "seed": weights.config.seed,
        "blocks": blocks,
        "payload_bytes": offset,
    }
    with open(path, "wb") as fh:
        fh.write(f"{WEIGHTS_MAGIC} v{WEIGHTS_VERSION}\n".encode("ascii"))
        fh.write((json.dumps(manifest, sort_keys=True) + "\n").encode("ascii"))
        fh.write(payload.getvalue())


def load_weights(path, expected_config: ModelConfig | None = None) -> ModelWeights:
    """Read weights back; optionally verify the stored config matches."""
    with open(path, "rb") as fh:
        magic_line = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        manifest_line = fh.readline().decode("ascii", errors="replace")
        payload = fh.read()

    parts = magic_line.split()
    if not parts or parts[0] != WEIGHTS_MAGIC:
        raise FormatError(f"bad magic: expected {WEIGHTS_MAGIC!r}")
    if len(parts) < 2 or parts[1] != f"v{WEIGHTS_VERSION}":
        raise FormatError(f"unsupported weights version {parts[1:] or '?'}")
    try:
        manifest = json.loads(manifest_line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparseable manifest: {exc}") from None

    if len(payload) != manifest["payload_bytes"]:
        raise FormatError(
            f"payload has {len(payload)} bytes, manifest declares "
            f"{manifest['payload_bytes']}"
        )

    cfg = _config_from_record(manifest["config"])
    if expected_config is not None and cfg != expected_config:
        raise FormatError(
            f"stored config does not match: {_diff_configs(cfg, expected_config)}"
        )

    arrays = {}
    for block in manifest["blocks"]:
        shape = tuple(block["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = block["offset"]
        end = start + 4 * count
        if end > len(payload):
            raise FormatError(f"block {block['name']!r} overruns the payload")
        arrays[block["name"]] = (
            np.frombuffer(payload[start:end], dtype="<f4").reshape(shape).copy()
        )

    count = 1 if cfg.share_weights else cfg.n_units
    units = [_unit_from_arrays(arrays, f"unit{i:02d}") for i in range(count)]
    return ModelWeights(config=cfg, units=units)


def _unit_from_arrays(arrays, prefix):
    def need(name):
        key = f"{prefix}.{name}"
        if key not in arrays:
            raise FormatError(f"manifest is missing block {key!r}")
        return arrays[key]

    router = RouterWeights(
        **{f.name: need(f"router.{f.name}") for f in fields(RouterWeights)}
    )
    scan = ScanWeights(**{f.name: need(f"scan.{f.name}") for f in fields(ScanWeights)})
    modulation = ModulationWeights(
        **{f.name: need(f"modulation.{f.name}") for f in fields(ModulationWeights)}
    )
    simple = {}
    for f in fields(UnitWeights):
        if f.name in ("router", "scan", "modulation"):
            continue
        simple[f.name] = need(f.name)
    return UnitWeights(router=router, scan=scan, modulation=modulation, **simple)


def _config_record(cfg: ModelConfig):
    record = asdict(cfg)
    record["ssm"] = asdict(cfg.ssm)
    return record


def _config_from_record(record):
    try:
        ssm = SsmConfig(**record["ssm"])
        rest = {k: v for k, v in record.items() if k != "ssm"}
        return ModelConfig(ssm=ssm, **rest)
    except (KeyError, TypeError, ConfigError) as exc:
        raise FormatError(f"invalid config record: {exc}") from None


def _diff_configs(got: ModelConfig, expected: ModelConfig):
    got_rec, exp_rec = _config_record(got), _config_record(expected)
    diffs = []
    for key in sorted(set(got_rec) | set(exp_rec)):
        if got_rec.get(key) != exp_rec.get(key):
            diffs.append(f"{key}: stored {got_rec.get(key)!r} != expected {exp_rec.get(key)!r}")
    return "; ".join(diffs) or "records differ"
