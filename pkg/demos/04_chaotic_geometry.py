"""Stretching and folding in the driven double well.

Finds the hyperbolic point of the stroboscopic map, traces a few images of a
tiny segment of its unstable manifold and reports how fast length grows and
folds tighten, next to the trajectory-averaged Lyapunov exponent.
"""

import numpy as np

from qct.geometry import (empirical_fold_spacing, lyapunov_exponent, segment_intersections,
                          trace_stable_manifold, trace_unstable_manifold)
from qct.model import BENCHMARK_PARAMS as P, find_saddle, saddle_guess

T = P.period
fp = find_saddle(P, saddle_guess(P))
print(f"fixed point q={fp.location.q:.4f} p={fp.location.p:.2e}, local rate {fp.lam:.3f}")

res = lyapunov_exponent(P, 100 * T, 500 * T, n_samples=16, seed=5)
print(f"averaged exponent {res.lam_bar:.3f} +- {res.stderr:.3f}")

unstable = trace_unstable_manifold(fp, P, 5)
stable = trace_stable_manifold(fp, P, 4)
print(f"{'period':>6} {'length':>10} {'points':>8} {'fold gap':>9}")
for pl in unstable:
    gap = empirical_fold_spacing(pl, fp)
    print(f"{pl.period_index:6d} {pl.length:10.4g} {len(pl.points):8d} {gap:9.3g}")
L = np.array([pl.length for pl in unstable])
print(f"late growth per period x{L[-1] / L[-2]:.2f}; exp(lam_bar T) = "
      f"{np.exp(res.lam_bar * T):.2f}")
hits = segment_intersections(unstable[4].points, stable[4].points)
print(f"homoclinic intersections found: {len(hits)}")
