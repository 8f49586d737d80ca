"""Phase-space grids, distribution fields, diagnostics and field persistence.

Fields are stored row-major with q as the outer index: ``values[i, j]`` is
f(q_min + i dq, p_min + j dp).  Node sets are endpoint-exclusive so the grid
is periodic and FFT compatible.
"""

import csv
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import (BadExtents, BadMagic, FieldIOError, NotPowerOfTwo, OutOfRange,
                     SupportClipped, VersionMismatch)

KINDS = ("wigner", "classical")
MAGIC = b"QCTG"
VERSION = 1
_HEADER = struct.Struct("<4sIII6dI")


def _is_pow2(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    n_q: int
    n_p: int

    def __post_init__(self):
        if not (np.isfinite([self.q_min, self.q_max, self.p_min, self.p_max]).all()
                and self.q_max > self.q_min and self.p_max > self.p_min):
            raise BadExtents(f"degenerate extents q[{self.q_min}, {self.q_max}) "
                             f"p[{self.p_min}, {self.p_max})")
        for name in ("n_q", "n_p"):
            n = getattr(self, name)
            if not _is_pow2(n) or n < 16:
                raise NotPowerOfTwo(f"{name}={n} must be a power of two >= 16")

    @property
    def dq(self):
        return (self.q_max - self.q_min) / self.n_q

    @property
    def dp(self):
        return (self.p_max - self.p_min) / self.n_p

    @property
    def cell(self):
        return self.dq * self.dp

    @property
    def q(self):
        return self.q_min + self.dq * np.arange(self.n_q)

    @property
    def p(self):
        return self.p_min + self.dp * np.arange(self.n_p)

    def mesh(self):
        return np.meshgrid(self.q, self.p, indexing="ij")

    def conjugate_X(self, hbar, half=True):
        """Relative-coordinate nodes paired with the p axis by the forward FFT.

        With F(q, X) = sum_j f(q, p_j) exp(i p_j X / hbar), the forward FFT
        over p samples X_k = -2 pi hbar k / (n_p dp).
        """
        if half:
            k = np.arange(self.n_p // 2 + 1)
        else:
            k = np.fft.fftfreq(self.n_p, 1.0 / self.n_p)
        return -2.0 * np.pi * hbar * k / (self.n_p * self.dp)

    def theta(self, half=True):
        """Angular wavenumbers of the q axis (rfft layout when ``half``)."""
        if half:
            return 2.0 * np.pi * np.fft.rfftfreq(self.n_q, self.dq)
        return 2.0 * np.pi * np.fft.fftfreq(self.n_q, self.dq)

    def same_as(self, other):
        return self == other

    def row_of(self, p_value):
        if not (self.p_min <= p_value <= self.p_max - self.dp):
            raise OutOfRange(f"p={p_value} outside [{self.p_min}, {self.p_max - self.dp}]")
        return int(np.clip(np.rint((p_value - self.p_min) / self.dp), 0, self.n_p - 1))


def init_grid(extents=((-10.0, 10.0), (-20.0, 20.0)), n_q=512, n_p=512):
    (q_min, q_max), (p_min, p_max) = extents
    return PhaseSpaceGrid(float(q_min), float(q_max), float(p_min), float(p_max), n_q, n_p)


@dataclass
class PhaseSpaceField:
    grid: PhaseSpaceGrid
    values: np.ndarray
    t: float = 0.0
    kind: str = "wigner"
    hbar: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_q, self.grid.n_p):
            raise ValueError(f"values shape {self.values.shape} does not match grid")

    def copy(self, **changes):
        out = replace(self, **changes)
        if "values" not in changes:
            out.values = self.values.copy()
        return out

    @property
    def norm(self):
        return float(self.values.sum() * self.grid.cell)


@dataclass(frozen=True)
class CoherentState:
    """Minimum-uncertainty Gaussian; sigma_p = hbar / (2 sigma_q)."""
    q0: float = 1.0
    p0: float = 0.0
    sigma_q: float | None = None

    def width(self, hbar):
        return np.sqrt(hbar / 2.0) if self.sigma_q is None else self.sigma_q

    def psi(self, x, hbar):
        s = self.width(hbar)
        x = np.asarray(x, dtype=float)
        return ((2 * np.pi * s**2) ** -0.25
                * np.exp(-((x - self.q0) ** 2) / (4 * s**2) + 1j * self.p0 * x / hbar))

    def wigner(self, q, p, hbar):
        s = self.width(hbar)
        sp = hbar / (2 * s)
        return np.exp(-((q - self.q0) ** 2) / (2 * s**2)
                      - ((p - self.p0) ** 2) / (2 * sp**2)) / (np.pi * hbar)


@dataclass
class Diagnostics:
    t: float
    norm: float
    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    cov_qp: float
    negativity_volume: float
    min_value: float
    boundary_mass: float

    def as_dict(self):
        return dict(self.__dict__)


def boundary_mass(values, cell):
    v = np.abs(values)
    inner = v[2:-2, 2:-2].sum()
    return float((v.sum() - inner) * cell)


def init_coherent_state(grid, q0=1.0, p0=0.0, sigma_q=None, hbar=0.1, kind="wigner"):
    state = CoherentState(q0, p0, sigma_q)
    s = state.width(hbar)
    if s <= 0:
        raise ValueError("sigma_q must be positive")
    sp = hbar / (2 * s)
    if (q0 - 5 * s < grid.q_min or q0 + 5 * s > grid.q_max
            or p0 - 5 * sp < grid.p_min or p0 + 5 * sp > grid.p_max):
        raise SupportClipped(f"5-sigma support of the state at ({q0}, {p0}) leaves the grid")
    Q, P = grid.mesh()
    values = state.wigner(Q, P, hbar)
    values /= values.sum() * grid.cell
    bm = boundary_mass(values, grid.cell)
    if bm > 1e-10:
        raise SupportClipped(f"boundary mass {bm:.2e} of the initial state")
    return PhaseSpaceField(grid, values, 0.0, kind, hbar)


def diagnostics(f):
    g = f.grid
    v = f.values
    c = g.cell
    q, p = g.q, g.p
    norm = v.sum() * c
    wq = v.sum(axis=1) * c
    wp = v.sum(axis=0) * c
    mq = (wq * q).sum() / norm
    mp = (wp * p).sum() / norm
    vq = (wq * (q - mq) ** 2).sum() / norm
    vp = (wp * (p - mp) ** 2).sum() / norm
    cqp = ((q - mq) @ v @ (p - mp)) * c / norm
    neg = np.maximum(-v, 0.0).sum() * c
    return Diagnostics(
        t=float(f.t), norm=float(norm), mean_q=float(mq), mean_p=float(mp),
        var_q=float(vq), var_p=float(vp), cov_qp=float(cqp),
        negativity_volume=float(neg), min_value=float(v.min()),
        boundary_mass=boundary_mass(v, c),
    )


def slice_at_p(f, p_value):
    """Nearest-row cut f(q, p_value) as an (n_q, 2) array of (q, f) pairs."""
    j = f.grid.row_of(p_value)
    return np.column_stack([f.grid.q, f.values[:, j]])


def write_slice_csv(rows, path, header=("q", "f")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def write_field(f, path):
    g = f.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n_q, g.n_p, g.q_min, g.q_max, g.p_min,
                          g.p_max, float(f.t), float(f.hbar), KINDS.index(f.kind))
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc


def read_field(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FieldIOError(str(exc)) from exc
    if len(raw) < _HEADER.size or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a field dump")
    magic, version, n_q, n_p, q_min, q_max, p_min, p_max, t, hbar, kind = \
        _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {VERSION}")
    if kind >= len(KINDS):
        raise BadMagic(f"{path}: unknown kind tag {kind}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n_q * n_p:
        raise FieldIOError(f"{path}: expected {8 * n_q * n_p} value bytes, found {len(body)}")
    grid = PhaseSpaceGrid(q_min, q_max, p_min, p_max, n_q, n_p)
    values = np.frombuffer(body, dtype="<f8").reshape(n_q, n_p).astype(np.float64)
    return PhaseSpaceField(grid, values, t, KINDS[kind], hbar)
