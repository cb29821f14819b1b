"""One ownership-aware scan unit: tokenization, the modulated selective scan,
the non-state refinement outlet, and the merge projection.

The wiring enforces the ownership contract architecturally:

* content tokens are generated only from the resident carrier L (so
  perturbing the evidence pool of the input cannot change them),
* the evidence stream G reaches the recurrence only through B/C interface
  modulation,
* G additionally contributes through the non-state refinement (NSR) outlet,
  merged with the scan readout by a per-pixel projection.

Ablation switches sever or violate individual routes so the contract itself
is testable: disabling both state access and the outlet cuts every G path;
the content-residency violation deliberately feeds [L; G] into the token
source through a fixed projection.

Each forward pass captures a probe: the hidden-state trajectory reshaped to
the token grid with (head, state, sub-channel) flattened as channels, and the
post-scan pre-merge readout grid.  Probes are stored float32.
"""

from dataclasses import dataclass

import numpy as np

from ._checks import check_feature_map
from .errors import ConfigError, ShapeError
from .router import RouterWeights, conv3x3, route
from .scan import (
    ModulationWeights,
    ScanWeights,
    SsmConfig,
    _sigmoid,
    generate_ssm_params,
    modulate_interfaces,
    selective_scan_chunked,
)


@dataclass(frozen=True)
class AblationSwitches:
    """Ownership-path switches; the default is the full model."""

    use_sor: bool = True
    content_residency_violation: bool = False
    state_access: bool = True
    output_outlet: bool = True
    tie_a_delta: bool = False
    tie_b_c: bool = False


#: named ablation variants exercised by the study harness
ABLATION_VARIANTS = {
    "mamba_regularizer": AblationSwitches(
        use_sor=False, state_access=False, output_outlet=False
    ),
    "sor_router": AblationSwitches(state_access=False, output_outlet=False),
    "no_state_access": AblationSwitches(state_access=False),
    "no_output_outlet": AblationSwitches(output_outlet=False),
    "content_residency": AblationSwitches(content_residency_violation=True),
    "full": AblationSwitches(),
    "tied_a_delta": AblationSwitches(tie_a_delta=True),
    "tied_b_c": AblationSwitches(tie_b_c=True),
}


@dataclass
class UnitWeights:
    """All weights of one unit.  Dense maps are (in, out); convs (out, in, 3, 3)."""

    router: RouterWeights
    in_proj_weight: np.ndarray  # (half, d_inner) carrier token expansion
    in_proj_bias: np.ndarray
    in_proj_full_weight: np.ndarray  # (d_model, d_inner) for the router-less variant
    in_proj_full_bias: np.ndarray
    violation_weight: np.ndarray  # (d_model, half) fixed map for the violation variant
    scan: ScanWeights
    modulation: ModulationWeights
    nsr_depthwise: np.ndarray  # (half, 3, 3)
    nsr_mix_weight: np.ndarray  # (half, half)
    nsr_mix_bias: np.ndarray
    nsr_gate_weight: np.ndarray  # (half, half)
    nsr_gate_bias: np.ndarray
    merge_weight: np.ndarray  # (d_inner + half, d_model)
    merge_bias: np.ndarray
    decode_weight: np.ndarray  # (d_model, 2 * n_coils)
    decode_bias: np.ndarray


@dataclass
class UnitProbe:
    """Diagnostic grids captured during one unit forward pass."""

    hidden_grid: np.ndarray  # (heads * d_state * m, H, W) float32
    readout_grid: np.ndarray  # (d_inner, H, W) float32


def tokenize(feature_map):
    """Raster-order tokens: pixel (i, j) becomes token i * W + j, shape (H*W, C)."""
    arr = check_feature_map(feature_map)
    c, h, w = arr.shape
    return np.ascontiguousarray(arr.transpose(1, 2, 0).reshape(h * w, c))


def detokenize(tokens, height, width):
    """Exact inverse of :func:`tokenize` for a known grid size."""
    arr = np.asarray(tokens)
    if arr.ndim != 2 or arr.shape[0] != height * width:
        raise ShapeError(
            f"tokens {arr.shape} do not fill a {height}x{width} grid"
        )
    return np.ascontiguousarray(arr.reshape(height, width, -1).transpose(2, 0, 1))


def nsr(g, w: UnitWeights):
    """Non-state refinement outlet: depthwise 3x3, channel mix, sigmoid gate."""
    arr = check_feature_map(g, "evidence stream")
    if arr.shape[0] != w.nsr_depthwise.shape[0]:
        raise ShapeError(
            f"evidence has {arr.shape[0]} channels, NSR expects {w.nsr_depthwise.shape[0]}"
        )
    local = _depthwise3x3(arr, w.nsr_depthwise)
    mix = np.einsum("co,chw->ohw", w.nsr_mix_weight, local, optimize=True)
    mix += w.nsr_mix_bias[:, None, None]
    gate_pre = np.einsum("co,chw->ohw", w.nsr_gate_weight, local, optimize=True)
    gate_pre += w.nsr_gate_bias[:, None, None]
    return mix * _sigmoid(gate_pre)


def content_tokens(x, w: UnitWeights, sw: AblationSwitches):
    """Expanded content tokens (N, d_inner) for the given switches."""
    _check_switches(sw)
    streams = _streams(x, w, sw)
    return _expand_tokens(check_feature_map(x, "unit input"), streams, w, sw)


def so_unit_forward(x, w: UnitWeights, sw: AblationSwitches, cfg: SsmConfig):
    """Run one unit; returns the merged output feature map and its probe."""
    arr = check_feature_map(x, "unit input")
    if arr.shape[0] != cfg.d_model:
        raise ShapeError(f"unit input has {arr.shape[0]} channels, expected {cfg.d_model}")
    _check_switches(sw)
    _, h, wdt = arr.shape
    half = cfg.d_model // 2

    streams = _streams(arr, w, sw)
    u = _expand_tokens(arr, streams, w, sw)

    params = generate_ssm_params(
        u, w.scan, cfg, tie_a_delta=sw.tie_a_delta, tie_b_c=sw.tie_b_c
    )
    if sw.use_sor and sw.state_access:
        params = modulate_interfaces(params, tokenize(streams.evidence), w.modulation, cfg)

    out = selective_scan_chunked(u, params, cfg)
    n = u.shape[0]
    readout_grid = detokenize(out.readout.reshape(n, cfg.d_inner), h, wdt)

    if sw.use_sor and sw.output_outlet:
        outlet = nsr(streams.evidence, w)
    else:
        outlet = np.zeros((half, h, wdt))

    merged = np.concatenate([readout_grid, outlet], axis=0)
    y = np.einsum("co,chw->ohw", w.merge_weight, merged, optimize=True)
    y += w.merge_bias[:, None, None]

    probe = UnitProbe(
        hidden_grid=detokenize(
            out.states.reshape(n, cfg.heads * cfg.d_state * cfg.m).astype(np.float32),
            h,
            wdt,
        ),
        readout_grid=readout_grid.astype(np.float32),
    )
    return y, probe


def _check_switches(sw):
    if not sw.use_sor and (
        sw.state_access or sw.output_outlet or sw.content_residency_violation
    ):
        raise ConfigError(
            "state access, output outlet, and the residency violation require the router"
        )


def _streams(x, w, sw):
    if not sw.use_sor:
        return None
    return route(x, w.router)


def _expand_tokens(x, streams, w, sw):
    if not sw.use_sor:
        tok = tokenize(x)
        return tok @ w.in_proj_full_weight + w.in_proj_full_bias
    if sw.content_residency_violation:
        stacked = np.concatenate([streams.carrier, streams.evidence], axis=0)
        tok = tokenize(stacked) @ w.violation_weight
    else:
        tok = tokenize(streams.carrier)
    return tok @ w.in_proj_weight + w.in_proj_bias


def _depthwise3x3(x, kernels):
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    return np.einsum("cij,chwij->chw", kernels, windows, optimize=True)
