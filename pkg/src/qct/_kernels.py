"""Compiled inner loops for trajectory integration.

All loops act in place on float64 arrays and integrate the driven Duffing
force f(q, t) = 2 A q - 4 B q^3 - drive cos(omega t).  The kick-drift-kick
scheme evaluates the force of both half kicks at the midpoint time t + h/2,
which makes a step with -h the exact inverse of a step with +h.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _force(q, t, A, B, drive, omega):
    return 2.0 * A * q - 4.0 * B * q * q * q - drive * math.cos(omega * t)


@njit(cache=True, nogil=True)
def _dforce(q, A, B):
    return 2.0 * A - 12.0 * B * q * q


@njit(cache=True, nogil=True)
def _potential(q, t, A, B, drive, omega):
    q2 = q * q
    return B * q2 * q2 - A * q2 + drive * q * math.cos(omega * t)


@njit(cache=True, nogil=True)
def kdk_flow(q, p, t0, h, nsteps, m, A, B, drive, omega):
    """Advance (q, p) by nsteps of size h.  Returns False on non-finite state."""
    n = q.shape[0]
    for i in range(n):
        qi = q[i]
        pi = p[i]
        for k in range(nsteps):
            tm = t0 + (k + 0.5) * h
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
            qi += h * pi / m
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
        q[i] = qi
        p[i] = pi
    for i in range(n):
        if not (math.isfinite(q[i]) and math.isfinite(p[i])):
            return False
    return True


@njit(cache=True, nogil=True)
def kdk_flow_tangent(q, p, dq, dp, t0, h, nsteps, m, A, B, drive, omega):
    """Advance states together with tangent vectors of the discrete map."""
    n = q.shape[0]
    for i in range(n):
        qi, pi, dqi, dpi = q[i], p[i], dq[i], dp[i]
        for k in range(nsteps):
            tm = t0 + (k + 0.5) * h
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
            dpi += 0.5 * h * _dforce(qi, A, B) * dqi
            qi += h * pi / m
            dqi += h * dpi / m
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
            dpi += 0.5 * h * _dforce(qi, A, B) * dqi
        q[i], p[i], dq[i], dp[i] = qi, pi, dqi, dpi
    for i in range(n):
        if not (math.isfinite(q[i]) and math.isfinite(p[i])):
            return False
    return True


@njit(cache=True, nogil=True)
def lyapunov_logs(q, p, dq, dp, t0, h, steps_per_period, n_transient, n_average,
                  m, A, B, drive, omega, logs):
    """Tangent propagation with renormalisation once per drive period.

    ``logs[i, k]`` receives the log-stretch of sample i over averaging period k.
    """
    n = q.shape[0]
    for i in range(n):
        qi, pi, dqi, dpi = q[i], p[i], dq[i], dp[i]
        nrm = math.hypot(dqi, dpi)
        dqi /= nrm
        dpi /= nrm
        step = 0
        for k in range(n_transient + n_average):
            for _ in range(steps_per_period):
                tm = t0 + (step + 0.5) * h
                step += 1
                pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
                dpi += 0.5 * h * _dforce(qi, A, B) * dqi
                qi += h * pi / m
                dqi += h * dpi / m
                pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
                dpi += 0.5 * h * _dforce(qi, A, B) * dqi
            nrm = math.hypot(dqi, dpi)
            dqi /= nrm
            dpi /= nrm
            if k >= n_transient:
                logs[i, k - n_transient] = math.log(nrm)
        q[i], p[i], dq[i], dp[i] = qi, pi, dqi, dpi


@njit(cache=True, nogil=True)
def kdk_flow_action(q, p, J, K, S, nu, t0, h, nsteps, m, A, B, drive, omega):
    """Transport a Lagrangian curve sample-wise.

    J = dq/dq0 and K = dp/dq0 follow the linearised map, S accumulates the
    discrete Lagrangian m (q1 - q0)^2 / 2h - h (V(q0) + V(q1)) / 2 of each
    step, and nu counts sign changes of J.
    """
    n = q.shape[0]
    for i in range(n):
        qi, pi, Ji, Ki, Si, nui = q[i], p[i], J[i], K[i], S[i], nu[i]
        for k in range(nsteps):
            tm = t0 + (k + 0.5) * h
            q_old = qi
            J_old = Ji
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
            Ki += 0.5 * h * _dforce(qi, A, B) * Ji
            qi += h * pi / m
            Ji += h * Ki / m
            pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
            Ki += 0.5 * h * _dforce(qi, A, B) * Ji
            dq = qi - q_old
            Si += m * dq * dq / (2.0 * h) - 0.5 * h * (
                _potential(q_old, tm, A, B, drive, omega)
                + _potential(qi, tm, A, B, drive, omega))
            if (J_old > 0.0 and Ji <= 0.0) or (J_old < 0.0 and Ji >= 0.0):
                nui += 1
        q[i], p[i], J[i], K[i], S[i], nu[i] = qi, pi, Ji, Ki, Si, nui
    for i in range(n):
        if not (math.isfinite(q[i]) and math.isfinite(p[i])):
            return False
    return True


@njit(cache=True, nogil=True)
def langevin_block(q, p, t0, h, noise, m, A, B, drive, omega, sigma, scheme):
    """Advance a block of trajectories through ``noise.shape[0]`` steps.

    ``noise[k, i]`` is the standard normal used by trajectory i at step k and
    sigma = sqrt(2 D h).  scheme 0 is Euler-Maruyama with the force taken at
    the pre-step state; scheme 1 is the kick-drift-kick splitting with the
    noise increment added after the second half kick.
    """
    n = q.shape[0]
    nsteps = noise.shape[0]
    for i in range(n):
        qi = q[i]
        pi = p[i]
        for k in range(nsteps):
            t = t0 + k * h
            if scheme == 0:
                f = _force(qi, t, A, B, drive, omega)
                qi += h * pi / m
                pi += h * f + sigma * noise[k, i]
            else:
                tm = t + 0.5 * h
                pi += 0.5 * h * _force(qi, tm, A, B, drive, omega)
                qi += h * pi / m
                pi += 0.5 * h * _force(qi, tm, A, B, drive, omega) + sigma * noise[k, i]
        q[i] = qi
        p[i] = pi
    for i in range(n):
        if not (math.isfinite(q[i]) and math.isfinite(p[i])):
            return False
    return True


def as_float_array(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64))).copy()
