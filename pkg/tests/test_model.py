import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from qct.errors import NonFiniteState, ValidationError
from qct.model import (BENCHMARK_PARAMS, PhasePoint, SystemParams, energy, find_saddle, flow,
                       force, monodromy, potential, potential_derivatives, saddle_guess,
                       stroboscopic_map, strobe)

P = BENCHMARK_PARAMS
T = P.period
xs = st.floats(-5, 5)


def test_benchmark_values():
    assert (P.A, P.B, P.drive, P.omega, P.hbar, P.m) == (10, 0.5, 10, 6.07, 0.1, 1)
    assert T == pytest.approx(1.0352, abs=1e-4)


def test_potential_at_origin_and_unit():
    V, dV, d2V, d3V = potential_derivatives(0.0, 0.0, P)
    assert (V, dV, d2V, d3V) == (0, 10, -20, 0)
    t = T / 4                     # cos(omega t) = 0
    V, dV, d2V, d3V = potential_derivatives(1.0, t, P)
    assert V == pytest.approx(-9.5)
    assert dV == pytest.approx(-18)
    assert d3V == pytest.approx(12)
    assert force(1.0, t, P) == pytest.approx(18)
    assert force(0.0, t, P) == pytest.approx(0, abs=1e-12)


@given(xs, st.floats(0, 10))
@example(4.218495916894682, 0.0)  # x**3 and (-x)**3 round differently here
def test_undriven_is_static_and_odd(x, t):
    U = P.with_(drive=0.0)
    assert potential(x, t, U) == potential(x, 0.0, U)
    scale = 2 * U.A * abs(x) + 4 * U.B * abs(x) ** 3 + 1.0
    assert abs(force(-x, t, U) + force(x, t, U)) <= 4 * np.spacing(scale)


@given(xs, st.floats(-3, 3), st.floats(0, 5))
def test_two_point_difference_is_three_term_moyal(q, X, t):
    # quartic potential: the kernel's V(q+X/2) - V(q-X/2) truncates exactly
    _, dV, _, d3V = potential_derivatives(q, t, P)
    lhs = potential(q + X / 2, t, P) - potential(q - X / 2, t, P)
    rhs = X * dV + X**3 * d3V / 24
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


def test_params_validation():
    with pytest.raises(ValidationError):
        SystemParams(m=0)
    with pytest.raises(ValidationError):
        SystemParams(D=-1)
    with pytest.raises(ValidationError):
        SystemParams(omega=0)
    assert P.with_(D=1e-3).k_env * P.hbar**2 == pytest.approx(1e-3, rel=1e-15)
    assert SystemParams.from_k_env(2.0).D == pytest.approx(0.02)


def test_well_minimum_is_fixed():
    U = P.with_(drive=0.0)
    w = np.sqrt(10.0)
    for s in (1, -1):
        out = stroboscopic_map(PhasePoint(s * w, 0.0), U)
        assert abs(out.q - s * w) < 1e-9 and abs(out.p) < 1e-9


def test_step_halving_is_second_order():
    q0, p0 = np.array([0.3]), np.array([0.2])
    ref = flow(q0, p0, 0.0, T, P, 16000)
    e1 = abs(flow(q0, p0, 0.0, T, P, 2000)[0] - ref[0])[0]
    e2 = abs(flow(q0, p0, 0.0, T, P, 4000)[0] - ref[0])[0]
    assert e1 / e2 == pytest.approx(4.0, rel=0.15)


def test_backward_flow_inverts_forward():
    q, p = strobe(np.array([0.4, -1.0]), np.array([0.1, 2.0]), 0.0, P, 2000, 3)
    qb, pb = strobe(q, p, 3 * T, P, 2000, -3)
    assert np.allclose(qb, [0.4, -1.0], atol=1e-9) and np.allclose(pb, [0.1, 2.0], atol=1e-9)


def test_undriven_saddle():
    fp = find_saddle(P.with_(drive=0.0), PhasePoint(0.05, -0.02))
    assert abs(fp.location.q) < 1e-9 and abs(fp.location.p) < 1e-9
    assert fp.lam == pytest.approx(np.sqrt(20), rel=1e-5)
    assert np.prod(fp.eigenvalues) == pytest.approx(1, abs=1e-6)
    assert np.linalg.norm(fp.unstable_dir) == pytest.approx(1)


def test_driven_saddle():
    fp = find_saddle(P, saddle_guess(P))
    z = fp.location
    img = stroboscopic_map(z, P)
    assert np.hypot(img.q - z.q, img.p - z.p) < 1e-9
    assert np.hypot(z.q, z.p) > 1e-3
    assert np.linalg.det(fp.monodromy) == pytest.approx(1, abs=1e-6)
    assert np.prod(fp.eigenvalues) == pytest.approx(1, abs=1e-6)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_monodromy_area_preserving(q, p):
    M = monodromy((q, p), 0.0, P, 1000)
    assert np.linalg.det(M) == pytest.approx(1, abs=1e-5)


def _max_energy_drift(q0, p0, spp, blocks=40, per_block=250):
    U = P.with_(drive=0.0)
    q, p = np.array([q0]), np.array([p0])
    E0 = energy(q, p, 0, U)[0]
    drift = []
    for _ in range(blocks):
        q, p = strobe(q, p, 0.0, U, spp, per_block)
        drift.append(abs(energy(q, p, 0, U)[0] - E0) / abs(E0))
    return np.array(drift)


def test_energy_drift_bounded_over_ten_thousand_periods():
    # orbit of amplitude 0.6 about the right well minimum, sampled every period
    drift = _max_energy_drift(np.sqrt(10) + 0.6, 0.0, 2000, blocks=10_000, per_block=1)
    assert drift.max() < 1e-6
    assert drift[-2000:].max() < 1.5 * drift[:2000].max()


def test_energy_error_shrinks_quadratically():
    a = _max_energy_drift(1.0, 0.5, 2000, 4).max()
    b = _max_energy_drift(1.0, 0.5, 4000, 4).max()
    assert a / b == pytest.approx(4.0, rel=0.2)


def test_blowup_is_reported():
    with pytest.raises(NonFiniteState):
        flow(np.array([1e100]), np.array([0.0]), 0.0, 1.0, P, 10)
