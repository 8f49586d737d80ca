"""The driven Duffing system, its stroboscopic map and hyperbolic fixed points.

    H(q, p, t) = p^2 / 2m + B q^4 - A q^2 + drive * q * cos(omega t)

The environment enters only through the momentum diffusion coefficient D;
the equivalent position-coupling strength is k_env = D / hbar^2.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import NoConvergence, NonFiniteState, NotHyperbolic, ValidationError


@dataclass(frozen=True)
class SystemParams:
    m: float = 1.0
    A: float = 10.0
    B: float = 0.5
    drive: float = 10.0
    omega: float = 6.07
    hbar: float = 0.1
    D: float = 0.0

    def __post_init__(self):
        for name in ("m", "A", "B", "drive", "omega", "hbar", "D"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.m <= 0:
            raise ValidationError("m", "mass must be positive")
        # B = 0 is admitted for the quadratic and free test potentials
        if self.B < 0:
            raise ValidationError("B", "quartic coefficient must be >= 0")
        if self.omega <= 0:
            raise ValidationError("omega", "drive frequency must be positive")
        if self.hbar <= 0:
            raise ValidationError("hbar", "must be positive")
        if self.D < 0:
            raise ValidationError("D", "diffusion must be >= 0")

    @property
    def k_env(self):
        return self.D / self.hbar**2

    @property
    def period(self):
        return 2.0 * np.pi / self.omega

    @property
    def well_separation(self):
        """Distance from the central barrier to either well minimum, sqrt(A/2B)."""
        if self.B == 0 or self.A <= 0:
            return np.inf
        return np.sqrt(self.A / (2.0 * self.B))

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def from_k_env(cls, k_env, **kw):
        hbar = kw.get("hbar", cls.hbar)
        return cls(D=k_env * hbar**2, **kw)

    @classmethod
    def harmonic(cls, k=1.0, **kw):
        """V = k q^2 / 2, undriven."""
        return cls(A=-0.5 * k, B=0.0, drive=0.0, **kw)

    @classmethod
    def free(cls, **kw):
        return cls(A=0.0, B=0.0, drive=0.0, **kw)

    def _args(self):
        return (float(self.m), float(self.A), float(self.B), float(self.drive),
                float(self.omega))


BENCHMARK_PARAMS = SystemParams()


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float
    t: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.q) and np.isfinite(self.p) and np.isfinite(self.t)):
            raise NonFiniteState(f"non-finite phase point {self}")

    def as_array(self):
        return np.array([self.q, self.p])


@dataclass(frozen=True)
class FixedPoint:
    location: PhasePoint
    lam: float
    stable_dir: np.ndarray
    unstable_dir: np.ndarray
    residual: float
    monodromy: np.ndarray
    eigenvalues: np.ndarray
    m: float = 1.0

    def rescale(self, q, p):
        """(q, p) offsets from the fixed point in rescaled coordinates."""
        s = np.sqrt(self.lam * self.m)
        return (np.asarray(q) - self.location.q) * s, (np.asarray(p) - self.location.p) / s

    def direction_in_qp(self, which="unstable"):
        """Unit eigen-direction converted back to (q, p) components."""
        v = self.unstable_dir if which == "unstable" else self.stable_dir
        s = np.sqrt(self.lam * self.m)
        w = np.array([v[0] / s, v[1] * s])
        return w / np.linalg.norm(w)


def potential_derivatives(x, t, params):
    """V and its first three x-derivatives; all higher derivatives vanish."""
    x = np.asarray(x, dtype=float)
    c = np.cos(params.omega * t)
    A, B, L = params.A, params.B, params.drive
    V = B * x**4 - A * x**2 + L * x * c
    dV = 4 * B * x**3 - 2 * A * x + L * c
    d2V = 12 * B * x**2 - 2 * A + 0 * c
    d3V = 24 * B * x + 0 * c
    return V, dV, d2V, d3V


def potential(x, t, params):
    x = np.asarray(x, dtype=float)
    return params.B * x**4 - params.A * x**2 + params.drive * x * np.cos(params.omega * t)


def force(x, t, params):
    x = np.asarray(x, dtype=float)
    return 2 * params.A * x - 4 * params.B * x**3 - params.drive * np.cos(params.omega * t)


def energy(q, p, t, params):
    return np.asarray(p) ** 2 / (2 * params.m) + potential(q, t, params)


def flow(q, p, t0, duration, params, steps):
    """Deterministic kick-drift-kick flow of arrays of points over ``duration``.

    ``duration`` may be negative (backward flow).  Returns new arrays.
    """
    q = _kernels.as_float_array(q)
    p = _kernels.as_float_array(p)
    if q.shape != p.shape:
        raise ValueError("q and p must have the same shape")
    h = duration / steps
    ok = _kernels.kdk_flow(q, p, float(t0), float(h), int(steps), *params._args())
    if not ok:
        raise NonFiniteState("trajectory left the finite domain; reduce dt")
    return q, p


def strobe(q, p, t0, params, steps_per_period=2000, periods=1):
    """Vectorised stroboscopic map; negative ``periods`` maps backwards."""
    T = params.period
    return flow(q, p, t0, periods * T, params, abs(periods) * steps_per_period)


def stroboscopic_map(start, params, steps_per_period=2000):
    """Image of ``start`` after one drive period of the noise-free flow."""
    if steps_per_period < 100:
        raise ValueError("steps_per_period must be >= 100")
    q, p = strobe(start.q, start.p, start.t, params, steps_per_period)
    return PhasePoint(float(q[0]), float(p[0]), start.t + params.period)


def monodromy(z, t0, params, steps_per_period=2000, h=1e-6, scale=1.0):
    """Central-difference Jacobian of the stroboscopic map at z = (q, p).

    ``h`` is the step in rescaled coordinates q' = scale q, p' = p / scale.
    """
    hq, hp = h / scale, h * scale
    qs = np.array([z[0] + hq, z[0] - hq, z[0], z[0]])
    ps = np.array([z[1], z[1], z[1] + hp, z[1] - hp])
    qi, pi = strobe(qs, ps, t0, params, steps_per_period)
    M = np.empty((2, 2))
    M[:, 0] = [(qi[0] - qi[1]) / (2 * hq), (pi[0] - pi[1]) / (2 * hq)]
    M[:, 1] = [(qi[2] - qi[3]) / (2 * hp), (pi[2] - pi[3]) / (2 * hp)]
    return M


def find_saddle(params, guess, tol=1e-10, steps_per_period=2000, max_iter=50, fd_step=1e-6,
                max_step=0.25):
    """Newton search for a hyperbolic fixed point of the stroboscopic map.

    ``guess.t`` fixes the stroboscopic phase.  The Lyapunov rate is
    log|mu_max| / T and the eigen-directions are returned as unit vectors in
    the rescaled coordinates q' = sqrt(lam m) q, p' = p / sqrt(lam m).
    """
    T = params.period
    t0 = guess.t
    scale = np.sqrt(np.sqrt(max(abs(2 * params.A), 1.0) / params.m) * params.m)
    z = np.array([guess.q, guess.p], dtype=float)
    resid = np.inf
    for _ in range(max_iter):
        try:
            q1, p1 = strobe(z[0], z[1], t0, params, steps_per_period)
            G = np.array([q1[0], p1[0]]) - z
            resid = float(np.hypot(*G))
            if resid < tol:
                break
            M = monodromy(z, t0, params, steps_per_period, fd_step, scale)
            dz = np.linalg.solve(M - np.eye(2), -G)
        except (np.linalg.LinAlgError, NonFiniteState) as exc:
            raise NoConvergence(f"Newton iteration failed at {z}: {exc}") from exc
        # damp long steps; the map is strongly expanding away from the root
        step = np.hypot(*dz)
        if step > max_step:
            dz *= max_step / step
        z = z + dz
    else:
        q1, p1 = strobe(z[0], z[1], t0, params, steps_per_period)
        resid = float(np.hypot(q1[0] - z[0], p1[0] - z[1]))
        if resid >= tol:
            raise NoConvergence(f"residual {resid:.2e} after {max_iter} iterations")

    M = monodromy(z, t0, params, steps_per_period, fd_step, scale)
    mu, vecs = np.linalg.eig(M)
    if np.any(np.abs(mu.imag) > 1e-12) or np.min(np.abs(np.abs(mu) - 1.0)) < 1e-6:
        raise NotHyperbolic(f"monodromy eigenvalues {mu} lie on the unit circle")
    mu = mu.real
    vecs = vecs.real
    iu = int(np.argmax(np.abs(mu)))
    is_ = 1 - iu
    lam = float(np.log(abs(mu[iu])) / T)
    s = np.sqrt(lam * params.m)

    def to_rescaled(v):
        w = np.array([v[0] * s, v[1] / s])
        w = w / np.linalg.norm(w)
        # orient with positive q' component (or positive p' if q' vanishes)
        if w[0] < 0 or (w[0] == 0 and w[1] < 0):
            w = -w
        return w

    fp = FixedPoint(
        location=PhasePoint(float(z[0]), float(z[1]), t0),
        lam=lam,
        stable_dir=to_rescaled(vecs[:, is_]),
        unstable_dir=to_rescaled(vecs[:, iu]),
        residual=resid,
        monodromy=M,
        eigenvalues=mu[[iu, is_]],
        m=params.m,
    )
    return fp


def saddle_guess(params, t0=0.0):
    """Forced response of the linearised barrier top, a Newton start for find_saddle."""
    k = 2.0 * params.A / params.m + params.omega**2
    amp = params.drive / (params.m * k)
    return PhasePoint(amp * np.cos(params.omega * t0),
                      -params.m * amp * params.omega * np.sin(params.omega * t0), t0)
