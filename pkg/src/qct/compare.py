"""Quantum-classical agreement metrics on a shared phase-space grid."""

import csv
import json

import numpy as np

from .errors import GridMismatch, ValidationError
from .grid import diagnostics

REGIMES = ("quantum_dominated", "semiclassical", "classical_matched")
NEG_HI = 0.1
L1_LO = 0.05


def _check_pair(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


def l1_distance(a, b):
    """Total-variation distance 0.5 * sum |a - b| dq dp."""
    _check_pair(a, b)
    return float(0.5 * np.abs(a.values - b.values).sum() * a.grid.cell)


def slice_correlation(fa, fb):
    """Pearson correlation of two sampled slices; 0 when either is constant."""
    fa = np.asarray(fa, float) - np.mean(fa)
    fb = np.asarray(fb, float) - np.mean(fb)
    den = np.sqrt((fa @ fa) * (fb @ fb))
    return float(fa @ fb / den) if den > 0 else 0.0


def compare_slices(a, b, p_value=0.0):
    """Paired cuts of a and b at the grid row nearest ``p_value``."""
    _check_pair(a, b)
    g = a.grid
    j = g.row_of(p_value)
    fa, fb = a.values[:, j], b.values[:, j]
    d = np.abs(fa - fb)
    return {
        "rows": np.column_stack([g.q, fa, fb]),
        "p": float(g.p[j]),
        "sup_diff": float(d.max()),
        "l1_slice": float(d.sum() * g.dq),
        "correlation": slice_correlation(fa, fb),
    }


def classify_regime(metrics, neg_hi=NEG_HI, l1_lo=L1_LO):
    if metrics["negativity_volume"] > neg_hi:
        return "quantum_dominated"
    if metrics["l1"] < l1_lo:
        return "classical_matched"
    return "semiclassical"


def comparison_report(classical, quantum, p_value=0.0, neg_hi=NEG_HI, l1_lo=L1_LO):
    """All agreement metrics for one classical/quantum pair plus the regime label."""
    if not (neg_hi >= 0 and l1_lo >= 0):
        raise ValidationError("thresholds", "must be non-negative")
    cut = compare_slices(classical, quantum, p_value)
    dq, dc = diagnostics(quantum), diagnostics(classical)
    metrics = {
        "t": float(quantum.t),
        "l1": l1_distance(classical, quantum),
        "negativity_volume": dq.negativity_volume,
        "classical_negativity_volume": dc.negativity_volume,
        "slice_p": cut["p"],
        "slice_correlation": cut["correlation"],
        "slice_sup_diff": cut["sup_diff"],
        "slice_l1": cut["l1_slice"],
        "norm_quantum": dq.norm,
        "norm_classical": dc.norm,
        "boundary_mass_quantum": dq.boundary_mass,
        "boundary_mass_classical": dc.boundary_mass,
        "thresholds": {"neg_hi": neg_hi, "l1_lo": l1_lo},
    }
    metrics["regime"] = classify_regime(metrics, neg_hi, l1_lo)
    return metrics, cut["rows"]


def write_comparison_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "f_classical", "f_quantum"])
        for q, fc, fq in np.asarray(rows).tolist():
            w.writerow([repr(q), repr(fc), repr(fq)])


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
