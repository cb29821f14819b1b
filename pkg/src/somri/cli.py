"""Command-line front end for the reconstruction pipeline and its studies.

Subcommands
-----------
phantom    generate a ground-truth image to a field file
mask       generate a sampling mask to a field file
simulate   apply the forward model (plus optional noise) to an image file
recon      run the full pipeline from a JSON run config
diagnose   outer-band leakage report over saved probe grids
ablate     run all ownership-path and tying variants, emit a combined report
selftest   execute the acceptance checks and report pass/fail per property

Run configs are strict JSON: unknown keys are rejected with their path.  All
outputs (field files, report.csv, report.json, metrics.json) are byte-stable
for a fixed config and seed.  The environment variable ``SOMRI_OUT`` supplies
the default output directory.
"""

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from .errors import SomriError, UsageError
from .fieldfile import read_field, write_field
from .leakage import leakage_report, report_rows, write_report_csv, write_report_json
from .masks import MaskSpec, generate_mask, mask_from_bits
from .metrics import psnr, ssim
from .model import ModelConfig, init_weights, load_weights, reconstruct, save_weights
from .operators import ForwardConfig, adjoint, simulate
from .phantoms import make_phantom, synth_coil_maps
from .scan import SsmConfig
from .selfcheck import run_all
from .studies import run_ablation_study
from .unit import ABLATION_VARIANTS, UnitProbe

_MODEL_KEYS = {
    "groups", "units_per_group", "n_coils", "dc_weight", "dc_every_unit",
    "residual_per_group", "share_weights", "seed", "ssm",
}
_SSM_KEYS = {
    "d_model", "d_state", "d_head", "rank", "chunk", "expand", "alpha_mu", "alpha_nu",
}
_MASK_KEYS = {"kind", "height", "width", "acceleration", "center_fraction", "spokes", "seed"}
_PHANTOM_KEYS = {"kind", "size", "seed"}
_TOP_KEYS = {"model", "mask", "phantom", "noise_std", "noise_seed", "cutoffs", "output_dir"}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error [usage]: {exc}", file=sys.stderr)
        return 2
    except SomriError as exc:
        category = type(exc).__name__.replace("Error", "").lower()
        print(f"error [{category}]: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="somri", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a ground-truth image")
    p.add_argument("--kind", default="shepp_logan", choices=["shepp_logan", "smooth_texture"])
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_phantom)

    p = sub.add_parser("mask", help="generate a k-space sampling mask")
    p.add_argument("--kind", default="equispaced", choices=["equispaced", "random", "radial"])
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--af", type=int, default=4, help="acceleration factor")
    p.add_argument("--center-frac", type=float, default=None)
    p.add_argument("--spokes", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_mask)

    p = sub.add_parser("simulate", help="apply the forward model to an image file")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--coils", type=int, default=1)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("recon", help="run the reconstruction pipeline from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--variant", default="full", choices=sorted(ABLATION_VARIANTS))
    p.add_argument("--weights", default=None, help="load weights instead of seeding")
    p.add_argument("--save-weights", default=None)
    p.add_argument("--save-probes", action="store_true")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(handler=_cmd_recon)

    p = sub.add_parser("diagnose", help="leakage report over saved probe grids")
    p.add_argument("--probes-dir", required=True)
    p.add_argument("--cutoffs", default="0.25,0.35")
    p.add_argument("--case", default="case0")
    p.add_argument("--variant", default="full")
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("ablate", help="run all ownership-path and tying variants")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(handler=_cmd_ablate)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.set_defaults(handler=_cmd_selftest)
    return parser


def _out_dir(explicit):
    return Path(explicit if explicit is not None else os.environ.get("SOMRI_OUT", "."))


def _cmd_phantom(args):
    out = Path(args.out) if args.out else _out_dir(None) / "phantom.fld"
    write_field(out, make_phantom(args.kind, args.size, args.seed))
    print(f"wrote {out}")
    return 0


def _cmd_mask(args):
    height = args.height if args.height is not None else args.width
    spec = MaskSpec(
        kind=args.kind, height=height, width=args.width, acceleration=args.af,
        center_fraction=args.center_frac, spokes=args.spokes, seed=args.seed,
    )
    mask = generate_mask(spec)
    out = Path(args.out) if args.out else _out_dir(None) / "mask.fld"
    write_field(out, mask.bits)
    detail = f"sampled fraction {mask.sampled_fraction():.4f}"
    if mask.kind != "radial":
        cols = np.where(mask.bits.any(axis=0))[0]
        detail += f", sampled columns {cols.tolist()}" if len(cols) <= 16 else f", {len(cols)} sampled columns"
    print(f"wrote {out} ({detail})")
    return 0


def _cmd_simulate(args):
    image = np.asarray(read_field(args.image), dtype=np.complex128)
    bits = read_field(args.mask)
    if bits.dtype != bool:
        raise UsageError(f"{args.mask} does not hold a boolean mask payload")
    mask = mask_from_bits(bits)
    maps = None if args.coils == 1 else synth_coil_maps(args.coils, bits.shape[0])
    cfg = ForwardConfig(mask, coil_maps=maps)
    y = simulate(image, cfg, noise_std=args.noise_std, seed=args.seed)
    out = Path(args.out) if args.out else _out_dir(None) / "measurements.fld"
    write_field(out, y)
    print(f"wrote {out} ({y.shape[0]} coil(s))")
    return 0


def _cmd_recon(args):
    run = load_run_config(args.config)
    out_dir = _out_dir(args.out_dir if args.out_dir is not None else run["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    model_cfg, cfg_f, truth, y = _assemble_pipeline(run)
    if args.weights:
        weights = load_weights(args.weights, expected_config=model_cfg)
    else:
        weights = init_weights(model_cfg)
    if args.save_weights:
        save_weights(weights, args.save_weights)

    switches = ABLATION_VARIANTS[args.variant]
    x_hat, probes = reconstruct(y, cfg_f, weights, switches=switches)

    write_field(out_dir / "reconstruction.fld", x_hat)
    reference = np.abs(truth)
    zero_filled = np.abs(adjoint(cfg_f, y))
    metrics = {
        "variant": args.variant,
        "psnr": psnr(reference, np.abs(x_hat)),
        "ssim": ssim(reference, np.abs(x_hat)),
        "zero_filled_psnr": psnr(reference, zero_filled),
        "zero_filled_ssim": ssim(reference, zero_filled),
        "probes": len(probes),
    }
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.save_probes:
        probe_dir = out_dir / "probes"
        probe_dir.mkdir(exist_ok=True)
        for i, probe in enumerate(probes):
            write_field(probe_dir / f"unit{i:02d}.hidden.fld", probe.hidden_grid)
            write_field(probe_dir / f"unit{i:02d}.readout.fld", probe.readout_grid)

    report = leakage_report(probes, cutoffs=tuple(run["cutoffs"]))
    rows = report_rows(report, case="case0", variant=args.variant, scope="slice")
    write_report_csv(out_dir / "report.csv", rows)
    write_report_json(out_dir / "report.json", rows)

    print(f"psnr {metrics['psnr']:.3f} dB (zero-filled {metrics['zero_filled_psnr']:.3f}), "
          f"ssim {metrics['ssim']:.4f}, {len(probes)} probes -> {out_dir}")
    return 0


def _cmd_diagnose(args):
    probe_dir = Path(args.probes_dir)
    cutoffs = tuple(float(v) for v in args.cutoffs.split(","))
    probes = _load_probes(probe_dir)
    report = leakage_report(probes, cutoffs=cutoffs)
    rows = report_rows(report, case=args.case, variant=args.variant, scope="slice")
    prefix = Path(args.out_prefix) if args.out_prefix else probe_dir / "report"
    write_report_csv(Path(f"{prefix}.csv"), rows)
    write_report_json(Path(f"{prefix}.json"), rows)
    for row in rows:
        print(f"r={row['r']}: hleak={row['hleak']:.4f} rleak={row['rleak']:.4f} "
              f"eta={row['eta']:.4f}")
    return 0


def _cmd_ablate(args):
    run = load_run_config(args.config)
    out_dir = _out_dir(args.out_dir if args.out_dir is not None else run["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    model_cfg, cfg_f, truth, y = _assemble_pipeline(run)
    rows, metrics = run_ablation_study(
        model_cfg, cfg_f, y, truth=truth, cutoffs=tuple(run["cutoffs"])
    )
    write_report_csv(out_dir / "report.csv", rows)
    write_report_json(out_dir / "report.json", rows)
    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, m in metrics.items():
        print(f"{name:20s} psnr {m['psnr']:7.3f}  ssim {m['ssim']:.4f}")
    print(f"{len(rows)} leakage rows -> {out_dir}")
    return 0


def _cmd_selftest(args):
    results = run_all()
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail} ({res.seconds:.1f}s)")
        failed += not res.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------
# run configuration


def load_run_config(path):
    """Load and strictly validate a JSON run config."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    return parse_run_config(raw)


def parse_run_config(raw):
    _reject_unknown(raw, _TOP_KEYS, "")
    _reject_unknown(raw.get("model", {}), _MODEL_KEYS, "model.")
    _reject_unknown(raw.get("model", {}).get("ssm", {}), _SSM_KEYS, "model.ssm.")
    _reject_unknown(raw.get("mask", {}), _MASK_KEYS, "mask.")
    _reject_unknown(raw.get("phantom", {}), _PHANTOM_KEYS, "phantom.")

    run = {
        "model": raw.get("model", {}),
        "mask": raw.get("mask", {}),
        "phantom": dict({"kind": "shepp_logan", "size": 128, "seed": 0}, **raw.get("phantom", {})),
        "noise_std": raw.get("noise_std", 0.0),
        "noise_seed": raw.get("noise_seed", 0),
        "cutoffs": raw.get("cutoffs", [0.25, 0.35]),
        "output_dir": raw.get("output_dir", os.environ.get("SOMRI_OUT", ".")),
    }
    if "kind" not in run["mask"]:
        run["mask"] = dict({"kind": "equispaced"}, **run["mask"])
    size = run["phantom"]["size"]
    run["mask"] = dict({"height": size, "width": size}, **run["mask"])
    return run


def _reject_unknown(mapping, allowed, prefix):
    if not isinstance(mapping, dict):
        raise UsageError(f"config section {prefix.rstrip('.') or '<top>'} must be an object")
    for key in mapping:
        if key not in allowed:
            raise UsageError(f"unknown config key {prefix}{key}")


def _assemble_pipeline(run):
    model_raw = dict(run["model"])
    ssm_raw = model_raw.pop("ssm", {})
    model_cfg = ModelConfig(ssm=SsmConfig(**ssm_raw), **model_raw)
    mask = generate_mask(MaskSpec(**run["mask"]))
    maps = (
        None
        if model_cfg.n_coils == 1
        else synth_coil_maps(model_cfg.n_coils, run["phantom"]["size"])
    )
    cfg_f = ForwardConfig(mask, coil_maps=maps)
    truth = make_phantom(**run["phantom"])
    y = simulate(truth, cfg_f, noise_std=run["noise_std"], seed=run["noise_seed"])
    return model_cfg, cfg_f, truth, y


def _load_probes(probe_dir):
    pattern = re.compile(r"unit(\d+)\.hidden\.fld$")
    indices = sorted(
        int(match.group(1))
        for match in (pattern.match(p.name) for p in probe_dir.iterdir())
        if match
    )
    if not indices:
        raise UsageError(f"no probe files (unitNN.hidden.fld) found in {probe_dir}")
    probes = []
    for i in indices:
        hidden = read_field(probe_dir / f"unit{i:02d}.hidden.fld")
        readout_path = probe_dir / f"unit{i:02d}.readout.fld"
        if not readout_path.exists():
            raise UsageError(f"missing readout grid for unit {i:02d} in {probe_dir}")
        probes.append(UnitProbe(hidden_grid=hidden, readout_grid=read_field(readout_path)))
    return probes


if __name__ == "__main__":
    sys.exit(main())
