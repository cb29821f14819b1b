"""Ablation and diagnostic studies over one reconstruction configuration.

The ablation study reruns the same seeded model under every ownership-path
variant (router removed, router only, state access or output outlet severed,
the deliberate content-residency violation, the full model) plus the two
parameter-tying sanity variants, and reports per-variant outer-band leakage
rows at the requested cutoffs together with PSNR/SSIM against the ground
truth.
"""

import numpy as np

from .leakage import leakage_report, report_rows
from .metrics import psnr, ssim
from .model import init_weights, reconstruct
from .unit import ABLATION_VARIANTS

#: fixed execution order: ownership-path variants, then parameter tying
ABLATION_ORDER = (
    "mamba_regularizer",
    "sor_router",
    "no_state_access",
    "no_output_outlet",
    "content_residency",
    "full",
    "tied_a_delta",
    "tied_b_c",
)


def run_ablation_study(model_cfg, cfg_f, y, truth=None, cutoffs=(0.25, 0.35), case="case0"):
    """Run every ablation variant on one configuration and measurement set.

    Returns (rows, metrics): leakage report rows (one per variant and cutoff,
    aggregated over units) and a per-variant dict of PSNR/SSIM when ``truth``
    is given.
    """
    weights = init_weights(model_cfg)
    rows = []
    metrics = {}
    for name in ABLATION_ORDER:
        switches = ABLATION_VARIANTS[name]
        x_hat, probes = reconstruct(y, cfg_f, weights, switches=switches)
        report = leakage_report(probes, cutoffs=cutoffs)
        rows.extend(report_rows(report, case=case, variant=name, scope="slice"))
        if truth is not None:
            reference = np.abs(truth)
            estimate = np.abs(x_hat)
            metrics[name] = {
                "psnr": psnr(reference, estimate),
                "ssim": ssim(reference, estimate),
            }
    return rows, metrics
