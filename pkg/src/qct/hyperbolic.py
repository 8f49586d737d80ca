"""Small-noise theory near a hyperbolic fixed point.

Near the fixed point the force is linear, m q'' = m lam^2 (q - q_eq) + xi,
and the motion splits into an unstable and a stable combination

    u_+/- = (q' +- p') / sqrt(2),   q' = sqrt(lam m) (q - q_eq),  p' = p / sqrt(lam m)

whose noise-driven parts have closed-form second cumulants.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import _kernels, rng
from .classical import TrajectoryEnsemble, evolve_ensemble
from .errors import LinearRegimeExceeded, NonFiniteState, ValidationError
from .model import flow


@dataclass(frozen=True)
class LocalFrame:
    lam: float
    m: float = 1.0
    q_eq: float = 0.0
    p_eq: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("lam", "local rate must be positive")
        if not self.m > 0:
            raise ValidationError("m", "mass must be positive")

    @classmethod
    def from_fixed_point(cls, fp):
        return cls(fp.lam, fp.m, fp.location.q, fp.location.p)

    def rescale(self, q, p):
        s = np.sqrt(self.lam * self.m)
        return (np.asarray(q) - self.q_eq) * s, (np.asarray(p) - self.p_eq) / s

    def project(self, q, p):
        """(u_plus, u_minus) in units of sqrt(action)."""
        qs, ps = self.rescale(q, p)
        return (qs + ps) / np.sqrt(2), (qs - ps) / np.sqrt(2)


@dataclass(frozen=True)
class CumulantSet:
    t: float
    mean_plus: float
    mean_minus: float
    var_plus: float
    var_minus: float
    cross: float
    se_mean_plus: float = 0.0
    se_mean_minus: float = 0.0
    se_var_plus: float = 0.0
    se_var_minus: float = 0.0
    se_cross: float = 0.0
    n: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def analytic_trajectory(C_plus, C_minus, lam, m, t, noise_path=None, q_eq=0.0):
    """Closed-form solution of the linearised Langevin equation at time t.

    ``noise_path`` is ``(u, xi)``: sample times in [0, t] and the force values
    there; the memory integrals are done by the trapezoidal rule.
    """
    if not (lam > 0 and m > 0):
        raise ValidationError("lam", "lam and m must be positive")
    ep, em = np.exp(lam * t), np.exp(-lam * t)
    q = q_eq + C_plus * ep + C_minus * em
    p = m * lam * (C_plus * ep - C_minus * em)
    if noise_path is not None:
        u, xi = (np.asarray(a, dtype=float) for a in noise_path)
        gp, gm = np.exp(lam * (t - u)), np.exp(-lam * (t - u))
        q += trapezoid(xi * (gp - gm), u) / (2 * m * lam)
        p += 0.5 * trapezoid(xi * (gp + gm), u)
    return q, p


def analytic_cumulants(lam, m, D, t, C_plus=0.0, C_minus=0.0):
    if not (lam > 0 and m > 0):
        raise ValidationError("lam", "lam and m must be positive")
    if D < 0 or t < 0:
        raise ValidationError("D", "D and t must be >= 0")
    c = D / (2 * m * lam**2)
    s = np.sqrt(2 * lam * m)
    return CumulantSet(
        t=t,
        mean_plus=float(s * C_plus * np.exp(lam * t)),
        mean_minus=float(s * C_minus * np.exp(-lam * t)),
        var_plus=float(c * np.expm1(2 * lam * t)),
        var_minus=float(-c * np.expm1(-2 * lam * t)),
        cross=-D * t / (m * lam),
    )


def _moments(up, um):
    mp, mm = up.mean(axis=-1), um.mean(axis=-1)
    dp = up - mp[..., None]
    dm = um - mm[..., None]
    return (mp, mm, (dp * dp).mean(axis=-1), (dm * dm).mean(axis=-1),
            (dp * dm).mean(axis=-1))


def mc_cumulants(fixed_point, D, t, n, dt, seed, params, n_boot=200, linear_fraction=0.05,
                 lam=None, workers=1, scheme="kdk"):
    """Sample cumulants of u_+/- from n Langevin runs started on the fixed point.

    Trajectories use the full nonlinear force.  ``lam`` overrides the rate
    used for the projection (e.g. the undriven sqrt(2A/m)); by default the
    fixed point's own rate.  Standard errors come from a bootstrap with
    ``n_boot`` resamples drawn from the "bootstrap" substream.  The default
    kick-drift-kick scheme avoids the O(lam^2 dt t) growth deficit that
    Euler-Maruyama shows along the unstable direction.
    """
    loc = fixed_point.location
    frame = LocalFrame(fixed_point.lam if lam is None else lam, params.m, loc.q, loc.p)
    P = params.with_(D=D)
    ens = TrajectoryEnsemble.point_mass(n, seed, loc.q, loc.p)
    ens.t = loc.t
    ens = evolve_ensemble(ens, loc.t + t, dt, P, workers=workers, scheme=scheme)
    if not (np.isfinite(ens.q).all() and np.isfinite(ens.p).all()):
        raise NonFiniteState("ensemble diverged")
    # the stroboscopic fixed point moves during the run; measure from its orbit
    qr, pr = _kernels.as_float_array(loc.q), _kernels.as_float_array(loc.p)
    if t > 0:
        qr, pr = flow(qr, pr, loc.t, t, params, max(1, int(round(t / dt))))
    disp = float(np.abs(ens.q - qr[0]).mean())
    limit = linear_fraction * params.well_separation
    if disp > limit:
        raise LinearRegimeExceeded(f"mean displacement {disp:.3g} exceeds {limit:.3g}")
    orbit = LocalFrame(frame.lam, frame.m, float(qr[0]), float(pr[0]))
    up, um = orbit.project(ens.q, ens.p)
    est = _moments(up, um)
    g = rng.generator(seed, "bootstrap", 0)
    se = np.zeros(5)
    if n > 1 and n_boot > 0:
        acc = np.empty((n_boot, 5))
        for b in range(n_boot):
            idx = g.integers(0, n, n)
            acc[b] = _moments(up[idx], um[idx])
        se = acc.std(axis=0, ddof=1)
    return CumulantSet(t, *map(float, est), *map(float, se), n=n)


def smoothing_width(D, t, lam, m=1.0):
    """Transverse width sqrt(D t / (m lam)) that the noise smooths over."""
    if D < 0 or t < 0:
        raise ValidationError("D", "D and t must be >= 0")
    if not lam * m > 0:
        raise ValidationError("lam", "lam m must be positive")
    return float(np.sqrt(D * t / (m * lam)))


CUMULANT_COLUMNS = ("t", "var_plus", "var_minus", "cross", "se_var_plus", "se_var_minus",
                    "se_cross", "mean_plus", "mean_minus")


def write_cumulants_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CUMULANT_COLUMNS)
        for c in rows:
            d = c.as_dict()
            w.writerow([repr(float(d[k])) for k in CUMULANT_COLUMNS])
