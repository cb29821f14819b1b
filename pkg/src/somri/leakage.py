"""Two-level outer-band leakage diagnostic over unit probes.

For a feature grid Z (channels x H x W) and a normalized radial cutoff r,
the outer-band leakage is the fraction of spectral power beyond r:

    leak_r(Z) = sum_d sum_{rho > r} |F(Z_d)|^2
                -----------------------------------
                sum_d sum_xi    |F(Z_d)|^2  * (1 + eps)

where rho = 2 * sqrt(fx^2 + fy^2) with per-axis frequencies normalized to
[-0.5, 0.5], so rho = 1 at the axis-edge Nyquist bin and sqrt(2) at the
corners.  Band membership does not depend on spectrum layout, so the
unshifted FFT grid is used directly.  The small constant enters
multiplicatively in the denominator, which keeps the measure exactly
scale-invariant; an all-zero grid reports zero leakage.

The two probe levels are the hidden-state trajectory grid (HLeak) and the
post-scan readout grid (RLeak); their ratio

    eta_r = RLeak_r / (HLeak_r + eps)

is the readout-to-state expression ratio.  Reports aggregate by averaging
over units within a slice, then over slices within a case, in that order.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataIntegrityError, UsageError

LEAKAGE_EPS = 1e-8

REPORT_COLUMNS = ("case", "variant", "r", "hleak", "rleak", "eta")


def outer_band_leakage(z, r):
    """Fraction of spectral power beyond normalized radial cutoff ``r``."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise UsageError(f"feature grid must be 2-D or 3-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataIntegrityError("feature grid contains non-finite values")
    if r < 0:
        raise UsageError(f"cutoff must be >= 0, got {r}")

    power = np.abs(np.fft.fft2(arr, axes=(1, 2))) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    rho = _radial_grid(arr.shape[1], arr.shape[2])
    outer = float(power[:, rho > r].sum())
    return outer / (total * (1.0 + LEAKAGE_EPS))


def expression_ratio(rleak, hleak, eps=LEAKAGE_EPS):
    """Readout-to-state expression ratio eta = RLeak / (HLeak + eps)."""
    return rleak / (hleak + eps)


def _radial_grid(h, w):
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    return 2.0 * np.hypot(fy[:, None], fx[None, :])


@dataclass(frozen=True)
class LeakageRecord:
    scope: str  # "unit" | "slice" | "case"
    slice_index: int | None
    unit_index: int | None
    r: float
    hleak: float
    rleak: float
    eta: float


@dataclass
class LeakageReport:
    records: list
    cutoffs: tuple
    epsilon: float = LEAKAGE_EPS

    def select(self, scope):
        return [rec for rec in self.records if rec.scope == scope]


def leakage_report(probes, cutoffs=(0.25, 0.35), slice_index=0) -> LeakageReport:
    """Per-unit leakage for one slice's probes, plus the slice-level average."""
    if not probes:
        raise UsageError("no probes supplied")
    cutoffs = tuple(float(r) for r in cutoffs)
    records = []
    for u, probe in enumerate(probes):
        for r in cutoffs:
            hleak = outer_band_leakage(probe.hidden_grid, r)
            rleak = outer_band_leakage(probe.readout_grid, r)
            records.append(
                LeakageRecord(
                    scope="unit",
                    slice_index=slice_index,
                    unit_index=u,
                    r=r,
                    hleak=hleak,
                    rleak=rleak,
                    eta=expression_ratio(rleak, hleak),
                )
            )
    records.extend(
        _averaged(records, cutoffs, scope="slice", slice_index=slice_index)
    )
    return LeakageReport(records=records, cutoffs=cutoffs)


def combine_slices(reports) -> LeakageReport:
    """Merge per-slice reports and append case-level averages."""
    reports = list(reports)
    if not reports:
        raise UsageError("no slice reports supplied")
    cutoffs = reports[0].cutoffs
    records = [rec for rep in reports for rec in rep.records]
    slice_records = [rec for rec in records if rec.scope == "slice"]
    records.extend(_averaged(slice_records, cutoffs, scope="case", slice_index=None))
    return LeakageReport(records=records, cutoffs=cutoffs)


def _averaged(records, cutoffs, scope, slice_index):
    source_scope = "unit" if scope == "slice" else "slice"
    out = []
    for r in cutoffs:
        rows = [
            rec
            for rec in records
            if rec.scope == source_scope
            and rec.r == r
            and (scope == "case" or rec.slice_index == slice_index)
        ]
        out.append(
            LeakageRecord(
                scope=scope,
                slice_index=slice_index,
                unit_index=None,
                r=r,
                hleak=float(np.mean([rec.hleak for rec in rows])),
                rleak=float(np.mean([rec.rleak for rec in rows])),
                eta=float(np.mean([rec.eta for rec in rows])),
            )
        )
    return out


def report_rows(report: LeakageReport, case="case0", variant="full", scope="case"):
    """Flatten a report's records at ``scope`` into CSV/JSON-ready dicts."""
    rows = []
    for rec in report.select(scope):
        rows.append(
            {
                "case": case,
                "variant": variant,
                "r": rec.r,
                "hleak": rec.hleak,
                "rleak": rec.rleak,
                "eta": rec.eta,
            }
        )
    return rows


def write_report_csv(path, rows):
    """Write report rows with the fixed column order ``REPORT_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row[key] for key in REPORT_COLUMNS})


def write_report_json(path, rows):
    """JSON mirror of the CSV report."""
    ordered = [{key: row[key] for key in REPORT_COLUMNS} for row in rows]
    with open(path, "w") as fh:
        json.dump(ordered, fh, indent=2)
        fh.write("\n")
