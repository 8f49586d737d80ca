"""Classical counterparts: Langevin ensembles and the grid Fokker-Planck solver.

Trajectories obey dq = p/m dt, dp = f(q, t) dt + dW with <dW^2> = 2 D dt.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from . import _kernels, rng
from .errors import AllPointsOutsideGrid, NonFiniteState, ValidationError
from .grid import PhaseSpaceField
from .model import PhasePoint, force
from .quantum import DEFAULT_BOUNDARY_CAP, _evolve, _n_steps

SCHEMES = {"euler": 0, "kdk": 1}


@dataclass
class TrajectoryEnsemble:
    """Independent trajectories sharing one master seed.

    ``step`` counts the noise steps already consumed; together with the
    trajectory index it keys every normal variate (see :mod:`qct.rng`).
    """
    q: np.ndarray
    p: np.ndarray
    seed: int
    t: float = 0.0
    step: int = 0

    def __post_init__(self):
        self.q = np.ascontiguousarray(self.q, dtype=np.float64)
        self.p = np.ascontiguousarray(self.p, dtype=np.float64)
        if self.q.ndim != 1 or self.q.shape != self.p.shape or self.q.size < 1:
            raise ValidationError("ensemble", "q and p must be equal-length 1-D arrays, n >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed", "must be an unsigned 64-bit integer")

    @property
    def n(self):
        return self.q.size

    @property
    def points(self):
        return [PhasePoint(float(a), float(b), self.t) for a, b in zip(self.q, self.p)]

    def copy(self):
        return TrajectoryEnsemble(self.q.copy(), self.p.copy(), self.seed, self.t, self.step)

    @classmethod
    def from_coherent_state(cls, n, seed, q0=1.0, p0=0.0, sigma_q=None, hbar=0.1):
        """Samples of the coherent state's (positive) Wigner Gaussian."""
        s = np.sqrt(hbar / 2) if sigma_q is None else sigma_q
        z = rng.generator(seed, "ensemble", 2**32 - 1).standard_normal((2, n))
        return cls(q0 + s * z[0], p0 + hbar / (2 * s) * z[1], seed)

    @classmethod
    def point_mass(cls, n, seed, q0, p0):
        return cls(np.full(n, float(q0)), np.full(n, float(p0)), seed)


def step_langevin(point, t, dt, params, noise_stream):
    """One Euler-Maruyama step of a single trajectory.

    ``noise_stream`` is a numpy Generator or an already drawn N(0, 1) value.
    """
    if dt <= 0:
        raise ValidationError("dt", "time step must be positive")
    if isinstance(noise_stream, np.random.Generator):
        xi = noise_stream.standard_normal()
    else:
        xi = float(noise_stream)
    f = float(force(point.q, t, params))
    q = point.q + point.p / params.m * dt
    p = point.p + f * dt + np.sqrt(2 * params.D * dt) * xi
    if not (np.isfinite(q) and np.isfinite(p)):
        raise NonFiniteState(f"Langevin step from {point} diverged")
    return PhasePoint(q, p, t + dt)


def _run_block(q, p, seed, b, step0, t0, dt, nsteps, params, scheme):
    sigma = np.sqrt(2 * params.D * dt)
    width = q.size
    k = 0
    while k < nsteps:
        # advance to the next chunk boundary so draws are generated once per chunk
        s = step0 + k
        n = min(nsteps - k, rng.CHUNK - s % rng.CHUNK)
        if sigma > 0:
            noise = rng.block_normals(seed, "ensemble", b, s, n, width)
        else:
            noise = np.zeros((n, width))
        ok = _kernels.langevin_block(q, p, t0 + k * dt, dt, noise, *params._args(), sigma, scheme)
        if not ok:
            raise NonFiniteState(f"trajectory in block {b} diverged; reduce dt")
        k += n


def evolve_ensemble(ensemble, t_final, dt, params, workers=1, scheme="euler"):
    """Advance every trajectory to ``t_final`` with its own noise substream.

    ``scheme`` is ``"euler"`` (Euler-Maruyama) or ``"kdk"`` (kick-drift-kick
    splitting with the noise added after the second kick; far smaller energy
    drift in long chaotic runs).  Results do not depend on ``workers``.
    """
    nsteps = _n_steps(t_final - ensemble.t, dt)
    out = ensemble.copy()
    if nsteps == 0:
        return out
    code = SCHEMES[scheme]
    B = rng.BLOCK
    blocks = range(rng.n_blocks(out.n))

    def job(b):
        sl = slice(b * B, min((b + 1) * B, out.n))
        q, p = out.q[sl].copy(), out.p[sl].copy()
        _run_block(q, p, out.seed, b, out.step, out.t, dt, nsteps, params, code)
        out.q[sl], out.p[sl] = q, p

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(job, blocks))
    else:
        for b in blocks:
            job(b)
    out.t = ensemble.t + nsteps * dt
    out.step = ensemble.step + nsteps
    return out


def density_from_ensemble(ensemble, grid, bandwidth=1.0, hbar=0.1):
    """Nearest-node histogram normalised to unit mass, optionally smoothed.

    ``bandwidth`` is the Gaussian smoothing width in grid cells (0 gives the
    raw histogram).  Smoothing wraps around, like the grid solvers.
    """
    if bandwidth < 0:
        raise ValidationError("bandwidth", "must be >= 0")
    i = np.rint((ensemble.q - grid.q_min) / grid.dq)
    j = np.rint((ensemble.p - grid.p_min) / grid.dp)
    keep = (i >= 0) & (i < grid.n_q) & (j >= 0) & (j < grid.n_p)
    if not keep.any():
        raise AllPointsOutsideGrid(f"none of {ensemble.n} points lies on the grid")
    flat = i[keep].astype(np.int64) * grid.n_p + j[keep].astype(np.int64)
    h = np.bincount(flat, minlength=grid.n_q * grid.n_p).reshape(grid.n_q, grid.n_p)
    v = h.astype(np.float64)
    if bandwidth > 0:
        v = gaussian_filter(v, sigma=bandwidth, mode="wrap")
        v = np.maximum(v, 0.0)
    v /= v.sum() * grid.cell
    return PhaseSpaceField(grid, v, ensemble.t, "classical", hbar)


def evolve_fokker_planck(field, t_final, dt, params, snapshot_schedule=(),
                         return_result=False, **kw):
    """Grid solution of the classical Fokker-Planck equation.

    Same split-step machinery as the Wigner solver with the potential kernel
    replaced by its Liouville limit exp(-i dt X V'(q, t) / hbar).
    """
    if field.kind != "classical":
        raise ValidationError("kind", "evolve_fokker_planck needs a classical field")
    kw.setdefault("boundary_cap", DEFAULT_BOUNDARY_CAP)
    res = _evolve(field, t_final, dt, params.with_(hbar=field.hbar), "classical",
                  snapshot_schedule, **kw)
    return res if return_result else res.field


def ensemble_csv_paths(path):
    path = Path(path)
    return path, path.with_suffix(".json")


def write_ensemble(ensemble, path, params):
    csv_path, meta_path = ensemble_csv_paths(path)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "p"])
        for a, b in zip(ensemble.q.tolist(), ensemble.p.tolist()):
            w.writerow([repr(a), repr(b)])
    meta = {"seed": int(ensemble.seed), "n": ensemble.n, "t": ensemble.t,
            "step": ensemble.step, "params": asdict(params)}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path, meta_path


def read_ensemble(path):
    csv_path, meta_path = ensemble_csv_paths(path)
    meta = json.loads(meta_path.read_text())
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    return TrajectoryEnsemble(data[:, 0], data[:, 1], meta["seed"], meta["t"],
                              meta.get("step", 0))
