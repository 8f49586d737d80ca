import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qct import semiclassical as sc
from qct.errors import DegenerateFilter, NoBranches, ValidationError
from qct.geometry import segment_intersections, solve_tstar
from qct.model import BENCHMARK_PARAMS as P, SystemParams

HB = 0.1


def gauss_convolve(f_of_p, p, var, h=0.002, width=12):
    """p-convolution of f with N(0, var) by a fine Gaussian-weighted sum."""
    s = np.sqrt(var)
    y = np.arange(-width * s, width * s + h / 2, h)
    w = np.exp(-y**2 / (2 * var)) / np.sqrt(2 * np.pi * var) * h
    return np.array([w @ f_of_p(pi - y) for pi in np.atleast_1d(p)])


# ---------------------------------------------------------------- transport

def test_free_particle_curve():
    Pm, t = 1.3, 2.5
    bs = sc.evolve_lagrangian_curve(lambda q: Pm + 0 * q, (-1, 1), 101, t, SystemParams.free())
    assert np.allclose(bs.q, bs.q0 + Pm * t, atol=1e-12)
    assert np.allclose(bs.J, 1.0)
    assert np.all(bs.nu == 0)
    assert np.allclose(bs.S, Pm**2 * t / 2, rtol=1e-12)


def test_harmonic_focus_increments_maslov():
    H = SystemParams.harmonic(1.0)
    before = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-1, 1), 201, 1.0, H)
    after = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-1, 1), 201, 2.0, H)
    assert np.all(before.nu == 0)
    assert np.all(after.nu == 1)
    assert np.allclose(after.J, np.cos(2.0), atol=1e-6)


def test_refinement_bounds_gaps():
    bs = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-2, 2), 128, P.period, P, max_gap=0.05)
    assert np.all(np.hypot(np.diff(bs.q), np.diff(bs.p)) <= 0.05)
    with pytest.raises(ValidationError):
        sc.evolve_lagrangian_curve(lambda q: 0 * q, (-2, 2), 10, 1.0, P)


def test_duffing_branch_count_grows():
    counts = []
    for k in (0, 1, 2):
        bs = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-2, 2), 256, k * P.period, P)
        counts.append(len(sc.branches_at(0.5, bs)))
    assert counts == sorted(counts)
    assert counts[-1] > 1


def test_branch_count_matches_polyline_crossings():
    bs = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-2, 2), 256, 2 * P.period, P)
    curve = np.column_stack([bs.q, bs.p])
    for q in (-0.7, 0.176, 0.5):
        line = np.array([[q, -50.0], [q, 50.0]])
        hits = segment_intersections(curve, line, skip_first=False)
        assert len(sc.branches_at(q, bs)) == len(hits)


# ---------------------------------------------------------------- branches

def test_free_particle_single_branch():
    bs = sc.evolve_lagrangian_curve(lambda q: 0.7 + 0 * q, (-1, 1), 101, 1.0,
                                    SystemParams.free())
    br = sc.branches_at(0.0, bs)
    assert len(br) == 1
    assert br[0].p == pytest.approx(0.7)


def test_fold_gives_odd_counts():
    H = SystemParams.harmonic(1.0)
    bs = sc.evolve_lagrangian_curve(lambda q: q**3, (-1.5, 1.5), 201, 2.0, H)
    counts = {len(sc.branches_at(q, bs)) for q in np.linspace(-1.4, 1.4, 57)}
    assert counts == {1, 3}
    with pytest.raises(NoBranches):
        sc.branches_at(50.0, bs)


def test_branches_sorted_by_momentum():
    bs = sc.BranchSet.from_branches([lambda q: 2 + 0 * q, lambda q: -1 + 0 * q,
                                     lambda q: 0.5 + 0 * q], (-1, 1), 11)
    assert [b.p for b in sc.branches_at(0.3, bs)] == pytest.approx([-1, 0.5, 2])


def test_branch_csv(tmp_path):
    bs = sc.BranchSet.from_branches([lambda q: 0 * q], (-1, 1), 5)
    sc.write_branch_csv(bs, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "q0,q_t,p_t,J,S,nu"
    assert len(lines) == 6


# ---------------------------------------------------------------- filter

def test_filter_cutoff():
    assert sc.filter_cutoff(1e-3, 10.0, 0.1) == pytest.approx(1.0)
    assert sc.filter_cutoff(4e-3, 10.0, 0.1) == pytest.approx(0.5)
    with pytest.raises(DegenerateFilter):
        sc.filter_cutoff(0.0, 1.0, 0.1)


def test_filter_cutoff_threshold_link():
    lam, m, pref = 0.57, 1.0, 1.4e3
    for D in (1e-5, 1e-3, 1e-2):
        ts = solve_tstar(D, m, lam, pref)
        l = pref * np.exp(-lam * ts)
        x = sc.filter_cutoff(D, ts, HB) * np.sqrt(lam * m)
        # x / l = lam m hbar / (D t*) at the root
        assert x / l == pytest.approx(lam * m * HB / (D * ts), rel=1e-6)


# ---------------------------------------------------------------- Wigner function

def test_single_branch_ridge():
    Pm, Xm = 0.4, 8.0
    bs = sc.BranchSet.from_branches([lambda q: Pm + 0 * q], (-10, 10), 2001)
    at = sc.noise_averaged_wigner(bs, 0.0, Pm, 0.0, 1.0, HB, Xm, 1024)
    off = sc.noise_averaged_wigner(bs, 0.0, Pm + 5 * 2 * np.pi * HB / Xm, 0.0, 1.0, HB, Xm, 1024)
    assert at > 10 * abs(off)
    # the finite window gives a sinc of height X_max / (pi hbar)
    assert at == pytest.approx(Xm / (np.pi * HB), rel=1e-3)


def test_single_branch_imaginary_residue_vanishes():
    bs = sc.BranchSet.from_branches([lambda q: 0.3 * q], (-10, 10), 4001)
    ev = sc.noise_averaged_wigner(bs, 0.2, np.linspace(-1, 1, 9), 0.0, 1.0, HB, 4.0, 1024,
                                  details=True)
    assert np.max(np.abs(ev.imag_residue)) < 1e-9 * np.max(np.abs(ev.value))
    assert not ev.caustic_flag


def test_terms_split_adds_up():
    bs = sc.BranchSet.from_branches([lambda q: 3 * (q - 1), lambda q: -3 * (q + 1)], (-8, 8),
                                    8001)
    p = np.linspace(-1, 1, 7)
    parts = [sc.noise_averaged_wigner(bs, 0.1, p, 1e-3, 1.0, HB, 4.0, 1024, terms=t)
             for t in ("all", "diagonal", "cross")]
    assert np.allclose(parts[0], parts[1] + parts[2], atol=1e-12)
    with pytest.raises(ValidationError):
        sc.noise_averaged_wigner(bs, 0.1, 0.0, 0.0, 1.0, HB, 4.0, 1024, terms="odd")


TWO = sc.BranchSet.from_branches([lambda q: 3 * (q - 1), lambda q: -3 * (q + 1)], (-30, 30),
                                 60001)


@settings(max_examples=8)
@given(q=st.floats(-0.5, 0.5), Dt=st.floats(1e-3, 1e-2))
def test_filter_is_a_momentum_convolution(q, Dt):
    p = np.linspace(-0.5, 0.5, 5)
    direct = sc.noise_averaged_wigner(TWO, q, p, Dt, 1.0, HB, 10.0, 4096)
    conv = gauss_convolve(lambda pp: sc.noise_averaged_wigner(TWO, q, pp, 0.0, 1.0, HB, 10.0,
                                                              4096), p, Dt)
    assert np.max(np.abs(direct - conv)) < 1e-6


def test_two_branch_fringe_suppression():
    # crossing lines p = kappa (q - a), p = -kappa (q + a); fringe amplitude at the midpoint
    kap, a = 3.0, 1.0
    sets = [sc.BranchSet.from_branches([lambda q: kap * (q - a), lambda q: -kap * (q + a)],
                                       (-60, 60), 120001, offsets=[0.0, off])
            for off in (0.0, HB * np.pi / 2)]

    def amplitude(D):
        r = [sc.noise_averaged_wigner(s, 0.0, 0.0, D, 1.0, HB, 40.0, 2**15, terms="cross")
             for s in sets]
        return 0.5 * np.hypot(*r)

    Dt = HB**2 / (2 * a**2)
    # closed-form Gaussian integral for the cross term
    alpha = Dt / (2 * HB**2) - 1j * kap / (4 * HB)
    beta = kap * a / HB
    exact0 = np.sqrt(4 * np.pi * HB / kap) / (2 * np.pi * HB)
    exactD = abs(np.sqrt(np.pi / alpha) * np.exp(-beta**2 / (4 * alpha))) / (2 * np.pi * HB)
    A0, AD = amplitude(0.0), amplitude(Dt)
    assert A0 == pytest.approx(exact0, rel=1e-2)
    assert AD / A0 == pytest.approx(exactD / exact0, rel=1e-2)


def test_diagonal_terms_integrate_to_classical_density():
    bs = sc.evolve_lagrangian_curve(lambda q: 0 * q, (-2, 2), 256, 2 * P.period, P)
    for q in (-0.7, 0.5):
        br = sc.branches_at(q, bs)
        expected = sum(1 / abs(b.J) for b in br)
        p = np.linspace(-40, 40, 4001)
        W = sc.noise_averaged_wigner(bs, q, p, 0.0, 1.0, HB, 0.5, 1025, terms="diagonal")
        assert np.trapezoid(W, p) == pytest.approx(expected, rel=0.05)
