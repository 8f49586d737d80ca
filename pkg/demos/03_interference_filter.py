"""The environment as a Gaussian filter on semiclassical interference.

Two straight momentum branches crossing at q = 0 interfere midway between
them.  Averaging over the noise multiplies the relative-coordinate integrand
by exp(-D t X^2 / 2 hbar^2); the fringe amplitude drops accordingly while the
smooth diagonal part is only blurred in momentum.
"""

import numpy as np

from qct.semiclassical import BranchSet, filter_cutoff, noise_averaged_wigner

hbar, kappa, a = 0.1, 3.0, 1.0
branches = [lambda q: kappa * (q - a), lambda q: -kappa * (q + a)]
# two copies with a quarter-wave offset on one branch give the fringe envelope
sets = [BranchSet.from_branches(branches, (-60, 60), 120001, offsets=[0.0, off])
        for off in (0.0, hbar * np.pi / 2)]


def fringe(Dt):
    r = [noise_averaged_wigner(s, 0.0, 0.0, Dt, 1.0, hbar, 40.0, 2**15, terms="cross")
         for s in sets]
    return 0.5 * np.hypot(*r)


A0 = fringe(0.0)
print(f"{'D t':>9} {'X cutoff':>9} {'fringe':>9} {'ratio':>8} {'exp(-2Dt a^2/hbar^2)':>21}")
for Dt in (1e-4, 1e-3, 5e-3, 1e-2):
    A = fringe(Dt)
    print(f"{Dt:9.0e} {filter_cutoff(Dt, 1.0, hbar):9.3f} {A:9.4f} {A / A0:8.4f} "
          f"{np.exp(-2 * Dt * a**2 / hbar**2):21.4f}")
