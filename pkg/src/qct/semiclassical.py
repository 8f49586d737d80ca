"""Semiclassical Wigner functions of evolved Lagrangian curves, with noise filtering.

A curve p = p0(q) carries the WKB state psi0 = exp(i S0(q) / hbar),
S0 = int p0 dq.  Each sample q0 is transported by the flow together with
J = dq/dq0, the action S = int (p dq - H dt) and the Maslov count nu (sign
changes of J).  At time t

    psi(x) = sum_b |J_b|^{-1/2} exp(i (S0 + S)_b / hbar - i pi nu_b / 2)

over the curve's crossings b of the vertical line at x, and the
noise-averaged Wigner function is

    W(q, p) = (1 / 2 pi hbar) int dX exp(-D t X^2 / 2 hbar^2 - i p X / hbar)
              psi(q + X/2) psi*(q - X/2).

Diagonal terms pair a branch with itself, cross terms pair different ones.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (CausticUnresolved, DegenerateFilter, NoBranches, NonFiniteState,
                     ValidationError)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _segment_integrals(f, a, b):
    """int_a^b f for arrays of interval ends, 8-point Gauss-Legendre each."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return half * (vals @ _GL_W)


def _initial_action(p0_of_q, q0, q_start):
    """S0(q0) = int_{q_start}^{q0} p0 dq for sorted q0."""
    edges = np.concatenate([[q_start], q0])
    return np.cumsum(_segment_integrals(p0_of_q, edges[:-1], edges[1:]))


@dataclass(frozen=True)
class BranchPoint:
    q0: float
    q_t: float
    p_t: float
    J: float
    S: float
    nu: int
    caustic_flag: bool = False


@dataclass(frozen=True)
class Branch:
    """One crossing of the curve with a vertical line."""
    p: float
    J: float
    S: float
    nu: int
    label: int


class BranchSet:
    """Samples along one or more transported curves, ordered by q0 within each.

    ``component`` separates disjoint curves; no crossing is searched between
    the last sample of one component and the first of the next.
    """

    def __init__(self, q0, q, p, J, S, nu, S0=None, t=0.0, component=None, source="",
                 caustic_tol=1e-6):
        self.q0 = np.asarray(q0, float)
        self.q = np.asarray(q, float)
        self.p = np.asarray(p, float)
        self.J = np.asarray(J, float)
        self.S = np.asarray(S, float)
        self.nu = np.asarray(nu, np.int64)
        self.S0 = np.zeros_like(self.q) if S0 is None else np.asarray(S0, float)
        self.component = (np.zeros(self.q.size, np.int64) if component is None
                          else np.asarray(component, np.int64))
        self.t = float(t)
        self.source = source
        scale = np.median(np.abs(self.J)) if self.J.size else 1.0
        self.J_floor = caustic_tol * scale
        self.labels = self._monotone_labels()

    def __len__(self):
        return self.q.size

    @property
    def phase_action(self):
        """S0 + S, whose q-derivative along a branch is the momentum."""
        return self.S0 + self.S

    @property
    def samples(self):
        flag = np.abs(self.J) < self.J_floor
        return [BranchPoint(*map(float, row[:5]), int(row[5]), bool(f)) for row, f in
                zip(zip(self.q0, self.q, self.p, self.J, self.S, self.nu), flag)]

    def _monotone_labels(self):
        """Label of each segment (i, i+1): constant along pieces monotone in q."""
        comp, sgn = self.component, np.sign(np.diff(self.q))
        labels = np.zeros(sgn.size, np.int64)
        cur, prev = 0, 0.0
        for i, s in enumerate(sgn):
            if comp[i] != comp[i + 1]:
                cur, prev = cur + 1, 0.0
            elif s and prev and s != prev:
                cur += 1
            if s:
                prev = s
            labels[i] = cur
        return labels

    def segments(self):
        """Indices i of valid segments (i, i+1) inside one component."""
        if self.q.size < 2:
            return np.zeros(0, np.int64)
        return np.nonzero(self.component[1:] == self.component[:-1])[0]

    @classmethod
    def from_branches(cls, branches, q_range, n_samples=2049, t=0.0, offsets=None):
        """Synthetic set from explicit momentum functions p_b(q) on a common q range.

        Every branch gets J = 1, nu = 0 and phase action int p_b dq measured
        from q_range[0], plus an optional constant ``offsets[b]``.
        """
        q = np.linspace(q_range[0], q_range[1], n_samples)
        cols = {k: [] for k in ("q0", "q", "p", "J", "S", "nu", "S0", "component")}
        for c, fn in enumerate(branches):
            cols["q0"].append(q)
            cols["q"].append(q)
            cols["p"].append(np.asarray(fn(q), float) * np.ones_like(q))
            cols["J"].append(np.ones_like(q))
            cols["S"].append(np.zeros_like(q))
            cols["nu"].append(np.zeros(q.size, np.int64))
            off = 0.0 if offsets is None else offsets[c]
            cols["S0"].append(_initial_action(fn, q, q_range[0]) + off)
            cols["component"].append(np.full(q.size, c))
        return cls(**{k: np.concatenate(v) for k, v in cols.items()}, t=t, source="synthetic")


def _transport(q0, p0_of_q, t0, t_final, params, steps_per_period, fd_step=1e-6):
    q = _kernels.as_float_array(q0)
    p = _kernels.as_float_array(p0_of_q(q))
    K = _kernels.as_float_array((p0_of_q(q + fd_step) - p0_of_q(q - fd_step)) / (2 * fd_step))
    J = np.ones_like(q)
    S = np.zeros_like(q)
    nu = np.zeros(q.size, np.int64)
    span = t_final - t0
    if span > 0:
        nsteps = max(1, int(np.ceil(span / params.period * steps_per_period)))
        ok = _kernels.kdk_flow_action(q, p, J, K, S, nu, float(t0), span / nsteps, nsteps,
                                      *params._args())
        if not ok:
            raise NonFiniteState("curve sample left the finite domain")
    return q, p, J, S, nu


def evolve_lagrangian_curve(p0_of_q, q_range, n_samples, t_final, params, t0=0.0,
                            steps_per_period=2000, max_gap=0.05, max_samples=200_000):
    """Transport the curve p = p0_of_q(q), q in q_range, from t0 to t_final.

    Samples are inserted (at midpoints of q0, transported from t0) until
    neighbouring images are within ``max_gap`` in the (q, p) plane.  The noise
    strength in ``params`` is ignored.
    """
    if n_samples < 64:
        raise ValidationError("n_samples", "need at least 64 samples")
    q0 = np.linspace(q_range[0], q_range[1], n_samples)
    q, p, J, S, nu = _transport(q0, p0_of_q, t0, t_final, params, steps_per_period)
    while True:
        gap = np.hypot(np.diff(q), np.diff(p))
        bad = np.nonzero(gap > max_gap)[0]
        if bad.size == 0:
            break
        if q0.size + bad.size > max_samples:
            raise CausticUnresolved(f"sample budget {max_samples} exhausted while refining")
        mids = 0.5 * (q0[bad] + q0[bad + 1])
        new = _transport(mids, p0_of_q, t0, t_final, params, steps_per_period)
        q0 = np.insert(q0, bad + 1, mids)
        q, p, J, S, nu = (np.insert(a, bad + 1, b) for a, b in zip((q, p, J, S, nu), new))
    if np.any(np.abs(np.diff(nu)) > 1):
        raise CausticUnresolved("Maslov count jumps by more than one between neighbours")
    S0 = _initial_action(p0_of_q, q0, q_range[0])
    return BranchSet(q0, q, p, J, S, nu, S0, t_final, source=getattr(p0_of_q, "__name__", ""))


def _crossings(bs, x):
    """All (x index, segment index, weight) with the segment spanning x[idx]."""
    x = np.asarray(x, float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    seg = bs.segments()
    a, b = bs.q[seg], bs.q[seg + 1]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    # half-open spans avoid double counting at shared vertices; the very last
    # vertex of a component is closed so curve ends are reachable
    start = np.searchsorted(xs, lo, side="left")
    stop = np.searchsorted(xs, hi, side="left")
    last = np.append(seg[1:] != seg[:-1] + 1, True)
    stop = np.where(last, np.searchsorted(xs, hi, side="right"), stop)
    counts = np.where(hi > lo, stop - start, 0)
    seg_rep = np.repeat(np.arange(seg.size), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    xi = order[np.repeat(start, counts) + offs]
    s = seg[seg_rep]
    w = (x[xi] - bs.q[s]) / (bs.q[s + 1] - bs.q[s])
    return xi, s, w


def _branch_values(bs, x):
    """Per crossing: x index, label, p, J, phase action, nu."""
    xi, s, w = _crossings(bs, x)
    p = bs.p[s] + w * (bs.p[s + 1] - bs.p[s])
    J = bs.J[s] + w * (bs.J[s + 1] - bs.J[s])
    dx = np.asarray(x, float)[xi] - bs.q[s]
    A = bs.phase_action[s] + 0.5 * dx * (bs.p[s] + p)
    nu = np.where(np.abs(bs.J[s]) >= np.abs(bs.J[s + 1]), bs.nu[s], bs.nu[s + 1])
    return xi, bs.labels[s], p, J, A, nu


def branches_at(q, bs):
    """Crossings of the curve with the vertical line at q, ordered by momentum."""
    xi, lab, p, J, A, nu = _branch_values(bs, np.array([float(q)]))
    if xi.size == 0:
        raise NoBranches(f"the curve does not reach q={q}")
    order = np.argsort(p, kind="stable")
    return [Branch(float(p[i]), float(J[i]), float(A[i]), int(nu[i]), int(lab[i]))
            for i in order]


def filter_cutoff(D, t, hbar):
    """Relative coordinate hbar / sqrt(D t) beyond which the noise damps coherences."""
    if D * t <= 0:
        raise DegenerateFilter("D t = 0: the filter is inactive (infinite cutoff)")
    return hbar / np.sqrt(D * t)


def _psi_matrix(bs, x, hbar, n_labels):
    """psi split by branch label: complex array (n_labels, len(x)); caustic flag."""
    xi, lab, _, J, A, nu = _branch_values(bs, x)
    absJ = np.abs(J)
    flagged = bool(np.any(absJ < bs.J_floor))
    amp = 1.0 / np.sqrt(np.maximum(absJ, bs.J_floor))
    vals = amp * np.exp(1j * A / hbar - 0.5j * np.pi * nu)
    out = np.zeros((n_labels, len(x)), complex)
    np.add.at(out, (lab, xi), vals)
    return out, flagged


@dataclass
class WignerEvaluation:
    value: np.ndarray
    imag_residue: np.ndarray
    caustic_flag: bool


def noise_averaged_wigner(bs, q, p, D, t, hbar, X_max, n_X=1024, terms="all",
                          details=False):
    """Noise-averaged semiclassical Wigner function at (q, p) by X quadrature.

    ``p`` may be an array (all points share q).  ``terms`` selects the
    diagonal, cross or all branch pairs.  The uniform trapezoid runs over the
    symmetric window [-X_max, X_max] with n_X nodes.
    """
    if n_X < 2:
        raise ValidationError("n_X", "need at least two quadrature nodes")
    if terms not in ("all", "diagonal", "cross"):
        raise ValidationError("terms", "must be all, diagonal or cross")
    X = np.linspace(-X_max, X_max, n_X)
    w = np.full(n_X, X[1] - X[0])
    w[[0, -1]] *= 0.5
    n_labels = int(bs.labels.max()) + 1 if bs.labels.size else 1
    plus, f1 = _psi_matrix(bs, q + 0.5 * X, hbar, n_labels)
    minus, f2 = _psi_matrix(bs, q - 0.5 * X, hbar, n_labels)
    if not (np.any(plus) or np.any(minus)):
        raise NoBranches(f"the curve does not reach the window around q={q}")
    diag = np.einsum("bk,bk->k", plus, minus.conj())
    if terms == "diagonal":
        G = diag
    else:
        G = plus.sum(axis=0) * minus.sum(axis=0).conj()
        if terms == "cross":
            G = G - diag
    G = G * w * np.exp(-D * t * X**2 / (2 * hbar**2))
    p_arr = np.atleast_1d(np.asarray(p, float))
    vals = np.exp(-1j * np.outer(p_arr, X) / hbar) @ G / (2 * np.pi * hbar)
    out = vals.real if np.ndim(p) else vals.real[0]
    if details:
        im = vals.imag if np.ndim(p) else vals.imag[0]
        return WignerEvaluation(out, im, f1 or f2)
    return out


def write_branch_csv(bs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q0", "q_t", "p_t", "J", "S", "nu"])
        for row in zip(bs.q0.tolist(), bs.q.tolist(), bs.p.tolist(), bs.J.tolist(),
                       bs.S.tolist(), bs.nu.tolist()):
            w.writerow([repr(v) for v in row[:5]] + [row[5]])
