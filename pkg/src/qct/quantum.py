"""Open-system Wigner evolution by spectral split-step, and a density-matrix oracle.

The Wigner equation

    df/dt = -(p/m) df/dq + (quantum Moyal potential term) + D d^2f/dp^2

is split Strang-wise into free streaming (exact shift in q, applied in the
q-Fourier domain) and a potential + diffusion sub-step applied in the
relative coordinate X conjugate to p, where it is a pure multiplication:

    F(q, X) <- F(q, X) exp(-i dt [V(q + X/2) - V(q - X/2)] / hbar - k_env X^2 dt)

The two-point difference reproduces the classical force term and every
higher Moyal correction at once; the classical Fokker-Planck solver uses the
same machinery with the difference replaced by X V'(q).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import (BoundaryMassExceeded, HermiticityLost, NonFiniteField,
                     ValidationError)
from .grid import CoherentState, PhaseSpaceField, diagnostics

DEFAULT_BOUNDARY_CAP = 1e-6


def _edge_mass(v, cell):
    total = (np.abs(v[:2, :]).sum() + np.abs(v[-2:, :]).sum()
             + np.abs(v[2:-2, :2]).sum() + np.abs(v[2:-2, -2:]).sum())
    return float(total * cell)


class SplitStepPropagator:
    """Strang-split propagator for a fixed grid, system and time step.

    ``mode`` selects the potential kernel: ``"quantum"`` uses the exact
    two-point difference, ``"classical"`` its first-order (Liouville) limit.
    Kernels are precomputed; the drive enters through a 1-D phase per step
    because its contribution Λ X cos(ω t) is linear in X.
    """

    def __init__(self, grid, params, dt, mode="quantum", workers=None,
                 boundary_cap=DEFAULT_BOUNDARY_CAP):
        if dt <= 0:
            raise ValidationError("dt", "time step must be positive")
        if mode not in ("quantum", "classical"):
            raise ValueError(f"unknown mode {mode!r}")
        self.grid, self.params, self.dt, self.mode = grid, params, float(dt), mode
        self.workers = workers
        self.boundary_cap = boundary_cap
        hbar, m = params.hbar, params.m

        theta = grid.theta(half=True)[:, None]
        p = grid.p[None, :]
        self._stream_half = np.exp(-1j * theta * p * (0.5 * dt / m))
        self._stream_full = np.exp(-1j * theta * p * (dt / m))

        X = grid.conjugate_X(hbar, half=True)
        q = grid.q[:, None]
        Xr = X[None, :]
        A, B = params.A, params.B
        if mode == "quantum":
            qp, qm = q + 0.5 * Xr, q - 0.5 * Xr
            dV = B * (qp**4 - qm**4) - A * (qp**2 - qm**2)
        else:
            dV = Xr * (4 * B * q**3 - 2 * A * q)
        self._kernel = np.exp(-1j * (dt / hbar) * dV - params.k_env * Xr**2 * dt)
        self._X = X

    def _stream(self, v, phase):
        g = sfft.rfft(v, axis=0, workers=self.workers)
        g *= phase
        return sfft.irfft(g, n=self.grid.n_q, axis=0, workers=self.workers)

    def _kick(self, v, t_mid):
        par = self.params
        g = sfft.rfft(v, axis=1, workers=self.workers)
        g *= self._kernel
        if par.drive != 0.0:
            c = par.drive * np.cos(par.omega * t_mid)
            g *= np.exp(-1j * (self.dt / par.hbar) * c * self._X)[None, :]
        return sfft.irfft(g, n=self.grid.n_p, axis=1, workers=self.workers)

    def _check(self, v, t, full=False):
        cell = self.grid.cell
        if full and not np.isfinite(v).all():
            raise NonFiniteField(f"non-finite field at t={t}; reduce dt")
        if self.boundary_cap is not None:
            bm = _edge_mass(v, cell)
            if not np.isfinite(bm):
                raise NonFiniteField(f"non-finite field at t={t}; reduce dt")
            if bm > self.boundary_cap:
                raise BoundaryMassExceeded(bm, self.boundary_cap, t)

    def advance(self, values, t0, nsteps):
        """Apply ``nsteps`` Strang steps starting at time t0; returns new values.

        Adjacent half-streams are fused into full streams, which is exact.
        """
        v = np.array(values, dtype=np.float64, copy=True)
        if nsteps == 0:
            return v
        dt = self.dt
        v = self._stream(v, self._stream_half)
        for k in range(nsteps):
            v = self._kick(v, t0 + (k + 0.5) * dt)
            last = k == nsteps - 1
            v = self._stream(v, self._stream_half if last else self._stream_full)
            self._check(v, t0 + (k + 1) * dt, full=last or (k % 64 == 63))
        return v

    def step(self, f):
        return f.copy(values=self.advance(f.values, f.t, 1), t=f.t + self.dt)


@dataclass
class EvolutionResult:
    field: PhaseSpaceField
    diagnostics: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def _n_steps(span, dt, what="t_final"):
    n = span / dt
    k = int(round(n))
    if k < 0 or abs(n - k) > 1e-6 * max(1.0, abs(n)):
        raise ValidationError(what, f"interval {span} is not a whole number of steps of {dt}")
    return k


def _evolve(f, t_final, dt, params, mode, snapshot_schedule=(), diag_every=None,
            boundary_cap=DEFAULT_BOUNDARY_CAP, workers=None, propagator=None):
    if propagator is None:
        propagator = SplitStepPropagator(f.grid, params, dt, mode, workers, boundary_cap)
    n_total = _n_steps(t_final - f.t, dt)
    marks = {n_total}
    snap_steps = set()
    for ts in snapshot_schedule or ():
        k = _n_steps(ts - f.t, dt, "snapshot_schedule")
        if k > n_total:
            raise ValidationError("snapshot_schedule", f"snapshot {ts} beyond t_final")
        marks.add(k)
        snap_steps.add(k)
    if diag_every:
        marks.update(range(0, n_total, int(diag_every)))
    marks.discard(0)

    out = EvolutionResult(f.copy())
    out.diagnostics.append(diagnostics(f))
    if 0 in snap_steps:
        out.snapshots[f.t] = f.copy()
    v, k0 = f.values, 0
    for k in sorted(marks):
        v = propagator.advance(v, f.t + k0 * dt, k - k0)
        k0 = k
        cur = PhaseSpaceField(f.grid, v, f.t + k * dt, f.kind, f.hbar)
        out.diagnostics.append(diagnostics(cur))
        if k in snap_steps:
            out.snapshots[cur.t] = cur.copy()
    out.field = PhaseSpaceField(f.grid, v.copy(), f.t + n_total * dt, f.kind, f.hbar)
    return out


def step_wigner(f, t, dt, params, workers=None, boundary_cap=DEFAULT_BOUNDARY_CAP):
    """One Strang step of the open Wigner equation from time t."""
    if f.kind != "wigner":
        raise ValidationError("kind", "step_wigner needs a wigner field")
    prop = SplitStepPropagator(f.grid, params, dt, "quantum", workers, boundary_cap)
    return PhaseSpaceField(f.grid, prop.advance(f.values, t, 1), t + dt, f.kind, f.hbar)


def evolve_wigner(f, t_final, dt, params, snapshot_schedule=(), **kw):
    """Evolve a Wigner field to ``t_final``; returns an :class:`EvolutionResult`."""
    if f.kind != "wigner":
        raise ValidationError("kind", "evolve_wigner needs a wigner field")
    return _evolve(f, t_final, dt, params, "quantum", snapshot_schedule, **kw)


# --------------------------------------------------------------------------
# density-matrix oracle

def _rk4_dt(t_final, params, x, k, dt_max=None):
    V = params.B * x**4 - params.A * x**2
    spread = (V.max() - V.min() + abs(params.drive) * np.abs(x).max() * 2
              + (params.hbar * np.abs(k).max()) ** 2 / (2 * params.m))
    rate = spread / params.hbar + params.k_env * (x.max() - x.min()) ** 2
    dt = 2.0 / rate
    if dt_max is not None:
        dt = min(dt, dt_max)
    n = max(1, int(np.ceil(t_final / dt)))
    return t_final / n, n


def dm_oracle(initial, t_final, params, n_x=256, grid=None, x_range=None, p_center=0.0,
              dt=None, t0=0.0, return_rho=False):
    """Integrate the position-coupled Lindblad equation for rho(x, x') with RK4.

    ``initial`` is a CoherentState, or a Gaussian Wigner field from which the
    coherent state with the same mean and q-width is rebuilt (the field's grid
    and time are then the defaults).  The plane-wave
    basis is centred on momentum ``p_center`` (a multiple of 2 pi hbar / L is
    used), so the kinetic window is p_center +- pi hbar / dx.  The result is
    the Wigner transform sampled on ``grid``; off-grid values of rho are
    obtained by band-limited (Fourier) interpolation and vanish outside the
    position box.
    """
    if n_x > 512:
        raise ValidationError("n_x", "the oracle is limited to n_x <= 512")
    if isinstance(initial, PhaseSpaceField):
        d = diagnostics(initial)
        grid = initial.grid if grid is None else grid
        t0 = initial.t
        state = CoherentState(d.mean_q, d.mean_p, float(np.sqrt(d.var_q)))
    else:
        state = initial
    if grid is None:
        raise ValidationError("grid", "a target grid is required")
    if t_final < t0:
        raise ValidationError("t_final", "must not precede the start time")
    hbar, m = params.hbar, params.m
    if x_range is None:
        x_range = (grid.q_min, grid.q_max)
    x0, x1 = x_range
    L = x1 - x0
    dx = L / n_x
    x = x0 + dx * np.arange(n_x)
    kc = np.round(p_center / hbar * L / (2 * np.pi)) * 2 * np.pi / L
    k = 2 * np.pi * np.fft.fftfreq(n_x, dx) + kc
    kin = (hbar * k) ** 2 / (2 * m)
    carrier = np.exp(1j * kc * (x - x0))

    psi = state.psi(x, hbar)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    rho = np.outer(psi, psi.conj())

    Vs = params.B * x**4 - params.A * x**2
    dX2 = (x[:, None] - x[None, :]) ** 2

    def kinetic_left(r):
        # H_kin acting on the first index, in the carrier-shifted basis
        y = r * carrier.conj()[:, None]
        y = np.fft.ifft(kin[:, None] * np.fft.fft(y, axis=0), axis=0)
        return y * carrier[:, None]

    def rhs(r, t):
        V = Vs + params.drive * x * np.cos(params.omega * t)
        Kr = kinetic_left(r)
        rK = kinetic_left(r.conj().T).conj().T
        comm = Kr - rK + (V[:, None] - V[None, :]) * r
        return -1j / hbar * comm - params.k_env * dX2 * r

    if t_final > t0:
        h, n = _rk4_dt(t_final - t0, params, x, k, dt)
        for i in range(n):
            t = t0 + i * h
            k1 = rhs(rho, t)
            k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h)
            k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h)
            k4 = rhs(rho + h * k3, t + h)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if i % 256 == 255 and not np.isfinite(rho).all():
                raise NonFiniteField("density matrix overflow; reduce dt")
    if not np.isfinite(rho).all():
        raise NonFiniteField("density matrix overflow; reduce dt")
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > 1e-8:
        raise HermiticityLost(f"||rho - rho^dag|| = {herm:.2e}")

    W = wigner_transform(rho, x, grid, hbar, kc)
    out = PhaseSpaceField(grid, W, float(t_final), "wigner", hbar)
    if return_rho:
        return out, rho, x
    return out


def wigner_transform(rho, x, grid, hbar, kc=0.0):
    """Wigner function of rho(x, x') sampled on ``grid``.

    rho is interpolated with its plane-wave expansion to the points
    q +- X/2 for the X nodes conjugate to the grid's p axis; the X sum is then
    a single inverse FFT, matching the band limit of the split-step solver.
    Nyquist terms are dropped on both sides.
    """
    n = len(x)
    dx = x[1] - x[0]
    x0 = x[0]
    L = n * dx
    carrier = np.exp(1j * kc * (x - x0))
    r = rho * carrier.conj()[:, None] * carrier[None, :]
    # rho(x, x') = sum_ab c_ab exp(i k_a (x - x0)) exp(-i k_b (x' - x0))
    c = np.fft.fft(np.fft.ifft(r, axis=1), axis=0) / n
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    if n % 2 == 0:
        c[n // 2, :] = 0.0
        c[:, n // 2] = 0.0
    ka = k + kc

    X = grid.conjugate_X(hbar, half=False)
    if grid.n_p % 2 == 0:
        X[grid.n_p // 2] = 0.0      # Nyquist column zeroed below
    q = grid.q
    u = np.exp(0.5j * np.outer(X, ka))            # (n_X, n_k)
    dk = k[:, None] - k[None, :]
    F = np.empty((grid.n_q, grid.n_p), dtype=complex)
    for i, qi in enumerate(q):
        M = c * np.exp(1j * dk * (qi - x0))
        vals = np.einsum("xa,xa->x", u @ M, u)
        lo, hi = qi - 0.5 * np.abs(X), qi + 0.5 * np.abs(X)
        F[i] = np.where((lo >= x0) & (hi < x0 + L), vals, 0.0)
    if grid.n_p % 2 == 0:
        F[:, grid.n_p // 2] = 0.0
    # F(q, X_k) = dp exp(i p_min X_k / hbar) FFT_p[W]_k
    F *= np.exp(-1j * grid.p_min * X / hbar)[None, :]
    return np.fft.ifft(F, axis=1).real / grid.dp
