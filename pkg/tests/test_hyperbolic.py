import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from qct.classical import step_langevin
from qct.errors import LinearRegimeExceeded, ValidationError
from qct.hyperbolic import (CUMULANT_COLUMNS, LocalFrame, analytic_cumulants,
                            analytic_trajectory, mc_cumulants, smoothing_width,
                            write_cumulants_csv)
from qct.model import BENCHMARK_PARAMS, PhasePoint, SystemParams, find_saddle

LAM = np.sqrt(20.0)
UNDRIVEN = BENCHMARK_PARAMS.with_(drive=0.0)


def test_benchmark_cumulants():
    c = analytic_cumulants(LAM, 1.0, 1e-2, 0.5)
    assert c.var_plus == pytest.approx(0.02164, rel=1e-3)
    assert c.var_minus == pytest.approx(2.47e-4, rel=2e-3)
    assert c.cross == pytest.approx(-1.118e-3, rel=1e-3)


def test_zero_time_and_small_lambda_t():
    c = analytic_cumulants(LAM, 1.0, 1e-2, 0.0)
    assert c.var_plus == c.var_minus == c.cross == 0
    small = analytic_cumulants(LAM, 1.0, 1e-2, 1e-6)
    assert small.var_plus / small.var_minus == pytest.approx(1.0, rel=1e-4)


@given(st.floats(0.1, 5), st.floats(0.1, 3), st.floats(1e-4, 1))
def test_cumulant_signs_and_cross_linear(lam, m, D):
    ts = np.linspace(0.1, 2, 5)
    cs = [analytic_cumulants(lam, m, D, t) for t in ts]
    assert all(c.var_plus >= 0 and c.var_minus >= 0 and c.cross <= 0 for c in cs)
    slope = np.polyfit(ts, [c.cross for c in cs], 1)[0]
    assert slope == pytest.approx(-D / (m * lam), rel=1e-2)
    ratio = [c.var_plus / c.var_minus for c in cs]
    assert np.all(np.diff(ratio) > 0)


def test_zero_noise_trajectory():
    frame = LocalFrame(LAM)
    Cp, t = 0.01, 0.3
    q, p = analytic_trajectory(Cp, 0.0, LAM, 1.0, t)
    up, um = frame.project(q, p)
    assert up == pytest.approx(np.sqrt(2 * LAM) * Cp * np.exp(LAM * t))
    assert um == pytest.approx(0.0, abs=1e-15)
    assert analytic_trajectory(0.0, 0.0, LAM, 1.0, 2.0, q_eq=0.7) == (0.7, 0.0)


def test_projection_of_noise_term():
    rng = np.random.default_rng(0)
    t = 0.4
    u = np.linspace(0, t, 2001)
    xi = rng.standard_normal(u.size)
    q, p = analytic_trajectory(0.0, 0.0, LAM, 1.0, t, (u, xi))
    up, _ = LocalFrame(LAM).project(q, p)
    expect = trapezoid(xi * np.exp(LAM * (t - u)), u) / np.sqrt(2 * LAM)
    assert up == pytest.approx(expect, rel=1e-10)


def test_analytic_trajectory_matches_linear_langevin():
    lin = SystemParams.harmonic(-LAM**2, D=1e-2)      # force = lam^2 q
    t, n_fine = 0.5, 8000
    fine = np.random.default_rng(1).standard_normal(n_fine)
    scale = np.sqrt(analytic_cumulants(LAM, 1.0, 1e-2, t).var_plus / LAM)
    errs = []
    for r in (4, 2, 1):
        # the same Brownian path sampled at three resolutions
        z = fine.reshape(-1, r).sum(axis=1) / np.sqrt(r)
        n = z.size
        dt = t / n
        pt = PhasePoint(0.0, 0.0)
        for k in range(n):
            pt = step_langevin(pt, pt.t, dt, lin, z[k])
        # the piecewise-constant force the Euler step applies, as a step path
        u = np.repeat(dt * np.arange(n + 1), 2)[1:-1]
        xi = np.repeat(z, 2) * np.sqrt(2 * lin.D / dt)
        q, _ = analytic_trajectory(0.0, 0.0, LAM, 1.0, t, (u, xi))
        errs.append(abs(q - pt.q) / scale)
    assert errs[-1] < 0.02
    assert errs[0] / errs[2] == pytest.approx(4.0, rel=0.5)


def test_local_frame_contracts():
    with pytest.raises(ValidationError):
        LocalFrame(0.0)
    f = LocalFrame(2.0, 0.5)
    # orthonormal in rescaled coordinates
    up, um = f.project(np.array([1.0]), np.array([0.0]))
    qs, ps = f.rescale(1.0, 0.0)
    assert up**2 + um**2 == pytest.approx(qs**2 + ps**2)


@pytest.fixture(scope="module")
def origin():
    return find_saddle(UNDRIVEN, PhasePoint(0.01, 0.0))


def test_mc_zero_noise(origin):
    c = mc_cumulants(origin, 0.0, 0.3, 2048, 1e-3, 1, UNDRIVEN)
    assert c.var_plus == 0 and c.var_minus == 0 and c.cross == 0


def test_mc_linear_regime_guard(origin):
    with pytest.raises(LinearRegimeExceeded):
        mc_cumulants(origin, 1e-2, 2.0, 1024, 1e-3, 1, UNDRIVEN)


def test_mc_standard_error_scaling(origin):
    a = mc_cumulants(origin, 1e-2, 0.3, 4096, 1e-3, 11, UNDRIVEN, lam=LAM)
    b = mc_cumulants(origin, 1e-2, 0.3, 16384, 1e-3, 11, UNDRIVEN, lam=LAM)
    assert a.se_var_plus / b.se_var_plus == pytest.approx(2.0, rel=0.2)
    exact = analytic_cumulants(LAM, 1.0, 1e-2, 0.3)
    assert abs(b.var_plus - exact.var_plus) < 3 * b.se_var_plus


def test_smoothing_width():
    assert smoothing_width(0.0, 3.0, 0.57) == 0
    assert smoothing_width(1e-2, 14, 0.57) == pytest.approx(0.4956, abs=1e-4)
    assert smoothing_width(4e-2, 14, 0.57) == pytest.approx(2 * smoothing_width(1e-2, 14, 0.57))


def test_cumulant_csv(tmp_path):
    rows = [analytic_cumulants(LAM, 1.0, 1e-2, t) for t in (0.1, 0.2)]
    write_cumulants_csv(rows, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].split(",") == list(CUMULANT_COLUMNS) and len(lines) == 3
