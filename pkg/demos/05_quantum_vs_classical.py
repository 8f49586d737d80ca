"""Quantum and classical phase-space evolution side by side, for three noise levels.

Runs the Wigner and Fokker-Planck solvers from the same Gaussian and prints
the agreement metrics and the regime label.  The full desk-scale comparison
uses 512^2, 30 periods and dt = T/2000 (about 40 minutes on one core); the defaults below are
smaller so the script finishes in minutes.  Pass --full for the large run.
"""

import argparse

from qct.classical import evolve_fokker_planck
from qct.compare import comparison_report
from qct.grid import init_coherent_state, init_grid
from qct.model import BENCHMARK_PARAMS
from qct.quantum import evolve_wigner

ap = argparse.ArgumentParser()
ap.add_argument("--full", action="store_true")
args = ap.parse_args()
n, periods = (512, 30) if args.full else (256, 8)

T = BENCHMARK_PARAMS.period
g = init_grid(((-10, 10), (-20, 20)), n, n)
print(f"{n}^2 grid, {periods} periods")
print(f"{'D':>7} {'L1':>7} {'negativity':>10} {'corr p=0':>9}  regime")
for D in (1e-5, 1e-3, 1e-2):
    P = BENCHMARK_PARAMS.with_(D=D)
    fq = evolve_wigner(init_coherent_state(g, 1.0, 0.0, hbar=P.hbar), periods * T, T / 2000, P,
                       boundary_cap=None).field
    fc = evolve_fokker_planck(init_coherent_state(g, 1.0, 0.0, hbar=P.hbar, kind="classical"),
                              periods * T, T / 2000, P, boundary_cap=None)
    r, _ = comparison_report(fc, fq)
    print(f"{D:7.0e} {r['l1']:7.3f} {r['negativity_volume']:10.4f} "
          f"{r['slice_correlation']:9.3f}  {r['regime']}")
