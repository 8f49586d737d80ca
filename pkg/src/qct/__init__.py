"""Quantum-classical transition toolkit for the driven Duffing oscillator.

Open-system Wigner and Fokker-Planck grid solvers, Langevin ensembles,
hyperbolic-point noise statistics, manifold geometry and the smoothing
threshold, and a noise-averaged semiclassical Wigner function.
"""

__version__ = "0.1.0"
