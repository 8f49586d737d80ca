"""Chaotic geometry: Lyapunov exponent, invariant manifolds, fold spacing and t*.

Fold spacing follows l(t) = prefactor * exp(-lam_bar t); the structure
saturation time t* is where it meets the noise smoothing width
sqrt(D t / (m lam_bar)).
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import bisect

from . import _kernels, rng
from .errors import (ArcBudgetExceeded, DegenerateForce, NoRoot, NonChaotic, NonFiniteState,
                     ValidationError)
from .model import potential_derivatives, strobe


# --------------------------------------------------------------------------
# Lyapunov exponent

@dataclass
class LyapunovResult:
    lam_bar: float
    stderr: float
    samples: np.ndarray
    t_average: float
    n_samples: int

    def as_dict(self):
        return {"lam_bar": self.lam_bar, "stderr": self.stderr,
                "samples": self.samples.tolist(), "t_average": self.t_average,
                "n_samples": self.n_samples}


def lyapunov_exponent(params, t_transient=None, t_average=None, n_samples=16, seed=0,
                      steps_per_period=2000, region=((-0.5, 0.5), (-0.5, 0.5)),
                      min_efolds=20.0, workers=1, initial=None):
    """Time-averaged largest Lyapunov exponent of the noise-free flow.

    Initial points are drawn uniformly from ``region`` (or taken from
    ``initial``, an (n, 2) array) with random tangent directions; tangents are
    renormalised once per drive period.  Times are rounded to whole periods
    (defaults: 100 T transient, 500 T averaging).  Raises NonChaotic with the
    result attached if lam_bar < 3 standard errors or if the averaging window
    holds fewer than ``min_efolds`` e-foldings.
    """
    T = params.period
    n_tr = 100 if t_transient is None else int(round(t_transient / T))
    n_av = 500 if t_average is None else int(round(t_average / T))
    if n_av < 1:
        raise ValidationError("t_average", "must cover at least one period")
    g = rng.generator(seed, "lyapunov", 0)
    if initial is None:
        (q0, q1), (p0, p1) = region
        pts = np.column_stack([g.uniform(q0, q1, n_samples), g.uniform(p0, p1, n_samples)])
    else:
        pts = np.atleast_2d(np.asarray(initial, dtype=float))
        n_samples = len(pts)
    ang = g.uniform(0, 2 * np.pi, n_samples)
    h = T / steps_per_period
    logs = np.zeros((n_samples, n_av))

    def job(i):
        q = _kernels.as_float_array(pts[i, 0])
        p = _kernels.as_float_array(pts[i, 1])
        dq = _kernels.as_float_array(np.cos(ang[i]))
        dp = _kernels.as_float_array(np.sin(ang[i]))
        row = np.zeros((1, n_av))
        _kernels.lyapunov_logs(q, p, dq, dp, 0.0, h, steps_per_period, n_tr, n_av,
                               *params._args(), row)
        if not (np.isfinite(q[0]) and np.isfinite(row).all()):
            raise NonFiniteState(f"Lyapunov sample {i} diverged")
        logs[i] = row[0]

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(job, range(n_samples)))
    else:
        for i in range(n_samples):
            job(i)
    rates = logs.sum(axis=1) / (n_av * T)
    lam = float(rates.mean())
    se = float(rates.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else float("inf")
    res = LyapunovResult(lam, se, rates, n_av * T, n_samples)
    if lam < 3 * se or lam * n_av * T < min_efolds:
        raise NonChaotic(f"lam_bar = {lam:.4g} +- {se:.2g} over {n_av * T:.4g} time units", res)
    return res


# --------------------------------------------------------------------------
# invariant manifolds

@dataclass
class ManifoldPolyline:
    period_index: int
    points: np.ndarray          # (N, 2) array of (q, p)
    arclength: np.ndarray       # cumulative, rescaled coordinates
    params: np.ndarray = field(repr=False, default=None)   # seed parameters in [0, 1]

    @property
    def length(self):
        return float(self.arclength[-1])


def _rescaled_arclength(pts, fp):
    qs, ps = fp.rescale(pts[:, 0], pts[:, 1])
    seg = np.hypot(np.diff(qs), np.diff(ps))
    return np.concatenate([[0.0], np.cumsum(seg)]), seg


def _trace(fp, params, n_periods, max_spacing, arc_budget, eps, steps_per_period, which,
           max_points):
    if n_periods < 1:
        raise ValidationError("n_periods", "must be >= 1")
    direction = 1 if which == "unstable" else -1
    v = fp.direction_in_qp(which)
    z = fp.location.as_array()
    # seed length eps measured in rescaled coordinates
    qs, ps = fp.rescale(z[0] + v[0], z[1] + v[1])
    unit = float(np.hypot(qs, ps))
    t0 = fp.location.t

    def image(s, k):
        q = z[0] + s * eps / unit * v[0]
        p = z[1] + s * eps / unit * v[1]
        if k:
            q, p = strobe(q, p, t0, params, steps_per_period, direction * k)
        return np.column_stack([q, p])

    n0 = max(2, int(np.ceil(eps / max_spacing)) + 1)
    s = np.linspace(0.0, 1.0, n0)
    pts = image(s, 0)
    out = [ManifoldPolyline(0, pts, _rescaled_arclength(pts, fp)[0], s)]
    for k in range(1, n_periods + 1):
        q, p = strobe(pts[:, 0].copy(), pts[:, 1].copy(), t0, params, steps_per_period, direction)
        pts = np.column_stack([q, p])
        while True:
            arc, seg = _rescaled_arclength(pts, fp)
            if arc[-1] > arc_budget:
                raise ArcBudgetExceeded(
                    f"arclength {arc[-1]:.4g} exceeds budget {arc_budget:.4g} at period {k}", out)
            gaps = np.nonzero(seg > max_spacing)[0]
            if gaps.size == 0:
                break
            if len(s) + gaps.size > max_points:
                raise ArcBudgetExceeded(f"point budget {max_points} exhausted at period {k}", out)
            mids = 0.5 * (s[gaps] + s[gaps + 1])
            if np.any((mids <= s[gaps]) | (mids >= s[gaps + 1])):
                raise NonFiniteState(f"seed parameter underflow while refining period {k}")
            new = image(mids, k)
            s = np.insert(s, gaps + 1, mids)
            pts = np.insert(pts, gaps + 1, new, axis=0)
        out.append(ManifoldPolyline(k, pts, arc, s))
    return out


def trace_unstable_manifold(fixed_point, params, n_periods, max_spacing=0.05, arc_budget=1e4,
                            eps=1e-4, steps_per_period=2000, max_points=2_000_000):
    """Images of a short seed segment along the unstable direction.

    Polyline k is the k-th stroboscopic image of the segment of rescaled
    length ``eps`` starting at the fixed point.  Wherever neighbours end up
    farther apart than ``max_spacing`` (rescaled units) the midpoint of their
    seed parameters is mapped from scratch and inserted.
    """
    return _trace(fixed_point, params, n_periods, max_spacing, arc_budget, eps,
                  steps_per_period, "unstable", max_points)


def trace_stable_manifold(fixed_point, params, n_periods, max_spacing=0.05, arc_budget=1e4,
                          eps=1e-4, steps_per_period=2000, max_points=2_000_000):
    """Same as :func:`trace_unstable_manifold` for the backward map."""
    return _trace(fixed_point, params, n_periods, max_spacing, arc_budget, eps,
                  steps_per_period, "stable", max_points)


def segment_intersections(a, b, skip_first=True, chunk=2048):
    """Proper crossings between polylines a and b, (N, 2) arrays.

    With ``skip_first`` the first segment of each polyline is ignored, which
    drops the trivial meeting of both manifolds at the fixed point.
    """
    a0, a1 = a[:-1], a[1:]
    b0, b1 = b[:-1], b[1:]
    if skip_first:
        a0, a1, b0, b1 = a0[1:], a1[1:], b0[1:], b1[1:]
    hits = []
    db = b1 - b0
    for i in range(0, len(a0), chunk):
        p0, p1 = a0[i:i + chunk, None, :], a1[i:i + chunk, None, :]
        da = p1 - p0
        cross = da[..., 0] * db[None, :, 1] - da[..., 1] * db[None, :, 0]
        w = b0[None] - p0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (w[..., 0] * db[None, :, 1] - w[..., 1] * db[None, :, 0]) / cross
            tb = (w[..., 0] * da[..., 1] - w[..., 1] * da[..., 0]) / cross
        ok = (cross != 0) & (ta >= 0) & (ta < 1) & (tb >= 0) & (tb < 1)
        for r, c in zip(*np.nonzero(ok)):
            hits.append(p0[r, 0] + ta[r, c] * da[r, 0])
    return np.array(hits).reshape(-1, 2)


# --------------------------------------------------------------------------
# fold spacing and t*

def fold_spacing(t, prefactor, lam_bar):
    if prefactor <= 0:
        raise ValidationError("prefactor", "must be positive")
    return prefactor * np.exp(-lam_bar * np.asarray(t, dtype=float))


def empirical_fold_spacing(polyline, fixed_point, half_length=2.0):
    """Median gap between successive crossings of the manifold with the stable line.

    The transversal is the segment through the fixed point along the stable
    eigen-direction, +- ``half_length`` in rescaled units; gaps are measured
    along it in the same units.  Returns nan with fewer than two crossings.
    """
    qs, ps = fixed_point.rescale(polyline.points[:, 0], polyline.points[:, 1])
    curve = np.column_stack([qs, ps])
    d = fixed_point.stable_dir
    line = np.array([-half_length * d, half_length * d])
    hits = segment_intersections(curve, line, skip_first=False)
    if len(hits) < 2:
        return float("nan")
    pos = np.sort(hits @ d)
    return float(np.median(np.diff(pos)))


def calibrate_prefactor(t_star, D, m, lam_bar):
    """Prefactor that puts the root of the t* equation at ``t_star``."""
    return float(np.sqrt(D * t_star / (m * lam_bar)) * np.exp(lam_bar * t_star))


def fit_prefactor(times, spacings, lam_bar):
    """Least-squares prefactor for measured spacings with the decay rate fixed."""
    times, spacings = np.asarray(times, float), np.asarray(spacings, float)
    ok = np.isfinite(spacings) & (spacings > 0)
    if not ok.any():
        raise ValidationError("spacings", "no finite fold spacing to fit")
    return float(np.exp(np.mean(np.log(spacings[ok]) + lam_bar * times[ok])))


def solve_tstar(D, m, lam_bar, prefactor, t_max=1e3, rtol=1e-10):
    """Root of prefactor e^{-lam_bar t} = sqrt(D t / (m lam_bar)) on (0, t_max]."""
    for name, val in (("D", D), ("m", m), ("lam_bar", lam_bar), ("prefactor", prefactor)):
        if not val > 0:
            raise ValidationError(name, "must be positive")

    def g(t):
        return prefactor * np.exp(-lam_bar * t) - np.sqrt(D * t / (m * lam_bar))

    if g(t_max) > 0:
        raise NoRoot(f"fold spacing still exceeds smoothing width at t_max={t_max}")
    return float(bisect(g, 0.0, t_max, xtol=1e-14, rtol=rtol, maxiter=500))


@dataclass
class ThresholdReport:
    D: float
    m: float
    lam_bar: float
    hbar: float
    prefactor: float | None
    t_star: float
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    S: float | None = None

    def as_dict(self):
        return asdict(self)


def threshold_report(D, t_star, m, lam_bar, hbar, prefactor=None):
    """Compare D t* with lam_bar m hbar; S = l(t*)^2 when the prefactor is known."""
    for name, val in (("D", D), ("t_star", t_star), ("m", m), ("lam_bar", lam_bar),
                      ("hbar", hbar)):
        if not val > 0:
            raise ValidationError(name, "must be positive")
    lhs = D * t_star
    rhs = lam_bar * m * hbar
    S = None if prefactor is None else float(fold_spacing(t_star, prefactor, lam_bar) ** 2)
    margin = lhs / rhs
    return ThresholdReport(D, m, lam_bar, hbar, prefactor, t_star, lhs, rhs,
                           bool(margin >= 1.0), margin, S)


def write_threshold_json(reports, path):
    data = [r.as_dict() for r in reports] if isinstance(reports, list) else reports.as_dict()
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifold_csv(polylines, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period", "arclength", "q", "p"])
        for pl in polylines:
            for a, (q, p) in zip(pl.arclength.tolist(), pl.points.tolist()):
                w.writerow([pl.period_index, repr(a), repr(q), repr(p)])


# --------------------------------------------------------------------------
# strong-form conditions

@dataclass(frozen=True)
class StrongFormParams:
    k: float
    s: float
    F: float
    dF: float
    d2F: float
    m: float = 1.0
    hbar: float = 0.1
    eta: float = 1.0    # stored for the record; the conditions do not involve it

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError("k", "measurement strength must be positive")
        if not self.s > 0:
            raise ValidationError("s", "typical action must be positive")
        if not 0 < self.eta <= 1:
            raise ValidationError("eta", "efficiency must lie in (0, 1]")
        if not (self.m > 0 and self.hbar > 0):
            raise ValidationError("m", "m and hbar must be positive")

    @classmethod
    def at_point(cls, q, t, params, k, s, eta=1.0):
        """Force and derivatives of the model at (q, t)."""
        _, dV, d2V, d3V = potential_derivatives(q, t, params)
        return cls(k, s, float(-dV), float(-d2V), float(-d3V), params.m, params.hbar, eta)


def strong_form_check(sp, R=10.0):
    """Ratios of the localisation and low-noise inequalities; each holds if ratio >= R."""
    if sp.F == 0:
        raise DegenerateForce("force vanishes at the evaluation point")
    F2 = sp.F**2
    a = abs(sp.dF)
    hk = sp.hbar * sp.k
    with np.errstate(divide="ignore"):
        loc_weak_bound = np.sqrt(sp.d2F**2 * a / (2 * sp.m * F2))
        loc_strong_bound = sp.d2F**2 * sp.hbar / (4 * sp.m * F2)
        ratios = {
            "loc_weak": float(np.divide(8 * sp.k, loc_weak_bound)),
            "loc_strong": float(np.divide(8 * sp.k, loc_strong_bound)),
            "lownoise_lower": float(np.divide(hk, 2 * a / sp.s)),
            "lownoise_upper": float(np.divide(a * sp.s / 4, hk)),
        }
    out = {name: {"ratio": r, "satisfied": bool(r >= R)} for name, r in ratios.items()}
    out["R"] = R
    out["eta"] = sp.eta
    return out


def best_measurement_strength(sp):
    """hbar k at the geometric mean of the two low-noise bounds, and its margin s / (2 sqrt 2)."""
    a = abs(sp.dF)
    hk = np.sqrt((2 * a / sp.s) * (a * sp.s / 4))
    return float(hk / sp.hbar), float(sp.s / (2 * np.sqrt(2)))
