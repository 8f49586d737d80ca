"""When does noise stop new structure?  The t* table and the weak-form threshold.

Fold spacing shrinks as prefactor * exp(-lam_bar t) while noise blurs momentum
over sqrt(D t / (m lam_bar)).  Their crossing t* barely moves with D, so the
condition D t* >= lam_bar m hbar is decided mostly by D itself.
"""

import numpy as np

from qct.geometry import calibrate_prefactor, solve_tstar, threshold_report

lam_bar, m, hbar = 0.57, 1.0, 0.1
pref = calibrate_prefactor(14.0, 1e-2, m, lam_bar)
print(f"prefactor fixed by t*(D=1e-2) = 14: {pref:.4g}")
print(f"{'D':>8} {'t*':>7} {'D t*':>10} {'lam m hbar':>11} {'margin':>8}  verdict")
for D in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1):
    ts = solve_tstar(D, m, lam_bar, pref)
    r = threshold_report(D, ts, m, lam_bar, hbar, pref)
    print(f"{D:8.0e} {ts:7.2f} {r.lhs:10.3e} {r.rhs:11.3f} {r.margin:8.3g}  "
          f"{'satisfied' if r.satisfied else 'violated'}")

slope = (solve_tstar(1e-3, m, lam_bar, pref) - solve_tstar(1e-2, m, lam_bar, pref)) / np.log(10)
print(f"\nt* gains {slope:.3f} per e-fold of 1/D (1/(2 lam_bar) = {1 / (2 * lam_bar):.3f})")
