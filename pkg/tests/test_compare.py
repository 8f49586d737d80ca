import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from qct import compare as C
from qct.errors import GridMismatch, OutOfRange, ValidationError
from qct.grid import PhaseSpaceField, init_grid


def gaussian(g, q0=0.0, p0=0.0, s=0.5, kind="classical"):
    Q, P = g.mesh()
    v = np.exp(-((Q - q0)**2 + (P - p0)**2) / (2 * s**2))
    return PhaseSpaceField(g, v / (v.sum() * g.cell), kind=kind)


G = init_grid(((-5, 5), (-5, 5)), 128, 128)


def test_identical_fields():
    a = gaussian(G)
    assert C.l1_distance(a, a) == 0.0
    assert C.compare_slices(a, a)["sup_diff"] == 0.0
    assert C.compare_slices(a, a)["correlation"] == pytest.approx(1.0)


def test_disjoint_support_is_maximal():
    a = PhaseSpaceField(G, np.zeros((128, 128)))
    b = PhaseSpaceField(G, np.zeros((128, 128)))
    a.values[:10, :10] = 1.0 / (100 * G.cell)
    b.values[-10:, -10:] = 1.0 / (100 * G.cell)
    assert C.l1_distance(a, b) == pytest.approx(1.0)


def test_gaussian_offset_slope():
    g = init_grid(((-6, 6), (-6, 6)), 512, 512)
    s = 0.5
    deltas = np.array([0.01, 0.02, 0.04, 0.06])
    d = [C.l1_distance(gaussian(g, s=s), gaussian(g, q0=x, s=s)) for x in deltas]
    slope = np.polyfit(deltas, d, 1)[0]
    assert slope == pytest.approx(1 / (s * np.sqrt(2 * np.pi)), rel=0.1)
    # exact total variation between shifted Gaussians
    assert d[-1] == pytest.approx(2 * norm.cdf(deltas[-1] / (2 * s)) - 1, rel=1e-3)


def test_refinement_invariance():
    a256, b256 = (gaussian(init_grid(((-5, 5), (-5, 5)), 256, 256), q0=x) for x in (0, 0.3))
    a512, b512 = (gaussian(init_grid(((-5, 5), (-5, 5)), 512, 512), q0=x) for x in (0, 0.3))
    assert abs(C.l1_distance(a256, b256) - C.l1_distance(a512, b512)) < 1e-2


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_l1_is_a_metric(x, y, z):
    a, b, c = gaussian(G, q0=x), gaussian(G, p0=y), gaussian(G, q0=z, p0=z)
    ab, ba = C.l1_distance(a, b), C.l1_distance(b, a)
    assert ab == ba
    assert C.l1_distance(a, c) <= ab + C.l1_distance(b, c) + 1e-12
    assert 0 <= ab <= 1 + 1e-12


def test_grid_mismatch():
    other = init_grid(((-5, 5), (-5, 5)), 64, 64)
    with pytest.raises(GridMismatch):
        C.l1_distance(gaussian(G), gaussian(other))
    with pytest.raises(OutOfRange):
        C.compare_slices(gaussian(G), gaussian(G), p_value=9.0)


def test_slice_correlation_edge_cases():
    x = np.linspace(0, 1, 50)
    assert C.slice_correlation(x, 2 * x + 1) == pytest.approx(1.0)
    assert C.slice_correlation(x, -x) == pytest.approx(-1.0)
    assert C.slice_correlation(x, np.ones_like(x)) == 0.0


def test_classify_examples():
    assert C.classify_regime({"negativity_volume": 0.0, "l1": 0.0}) == "classical_matched"
    assert C.classify_regime({"negativity_volume": 0.5, "l1": 0.9}) == "quantum_dominated"
    assert C.classify_regime({"negativity_volume": 0.05, "l1": 0.2}) == "semiclassical"


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_classify_monotone_in_negativity(n1, n2, l1):
    lo, hi = sorted((n1, n2))
    rank = {r: i for i, r in enumerate(C.REGIMES)}   # 0 = most quantum
    a = C.classify_regime({"negativity_volume": lo, "l1": l1})
    b = C.classify_regime({"negativity_volume": hi, "l1": l1})
    assert rank[b] <= rank[a]


def test_report_and_csv(tmp_path):
    a, b = gaussian(G), gaussian(G, q0=0.2, kind="wigner")
    rep, rows = C.comparison_report(a, b, p_value=0.0)
    assert rep["regime"] in C.REGIMES
    assert rep["l1"] == pytest.approx(C.l1_distance(a, b))
    assert rows.shape == (128, 3)
    C.write_comparison_csv(rows, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "q,f_classical,f_quantum"
    assert len(lines) == 129
    with pytest.raises(ValidationError):
        C.comparison_report(a, b, neg_hi=-1.0)
