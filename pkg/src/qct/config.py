"""JSON run configuration: presets, defaults, validation."""

import copy
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import FieldIOError, ParseError, UnknownKey, ValidationError
from .model import SystemParams

PRESETS = {
    "duffing-paper": {"m": 1.0, "A": 10.0, "B": 0.5, "drive": 10.0, "omega": 6.07,
                      "hbar": 0.1},
}

EXPERIMENTS = ("evolve-quantum", "evolve-classical", "ensemble", "manifold", "lyapunov",
               "tstar", "threshold", "strong-form", "local-cumulants", "semiclassical",
               "compare", "sweep")
STOCHASTIC = ("ensemble", "lyapunov", "local-cumulants")

# section -> key -> default; None means "derive" or "not set"
SCHEMA = {
    "grid": {"q_range": [-10.0, 10.0], "p_range": [-20.0, 20.0], "n_q": 512, "n_p": 512},
    "initial": {"q0": 1.0, "p0": 0.0, "sigma_q": None},
    "solver": {"steps_per_period": 2000, "dt": None, "periods": 30, "t_final": None,
               "snapshot_periods": [], "boundary_cap": 1e-6},
    "ensemble": {"n": 100_000, "scheme": "euler", "bandwidth": 1.0},
    "lyapunov": {"transient_periods": 100, "average_periods": 500, "n_samples": 16,
                 "steps_per_period": 2000},
    "geometry": {"lam_bar": 0.57, "prefactor": 1.4e3, "calibrate_t_star": None,
                 "calibrate_D": None, "D_list": [1e-5, 1e-3, 1e-2], "t_star": None,
                 "n_periods": 3, "max_spacing": 0.05, "arc_budget": 1e4, "eps": 1e-4,
                 "steps_per_period": 2000, "phase": 0.0},
    "strong_form": {"q": 1.0, "t": 0.0, "k": None, "s": 1.0, "eta": 1.0, "R": 10.0},
    "local_cumulants": {"D": 1e-2, "times": [0.5], "n": 100_000, "dt": 1e-3,
                        "lam": None, "drive": 0.0, "n_boot": 200, "scheme": "kdk"},
    "semiclassical": {"q_range": [-2.0, 2.0], "p0": 0.0, "n_samples": 256, "periods": 1,
                      "q_eval": 0.0, "p_range": [-10.0, 10.0], "n_p": 256, "X_max": 4.0,
                      "n_X": 1024, "steps_per_period": 2000, "max_gap": 0.05},
    "compare": {"classical": None, "quantum": None, "p_value": 0.0, "neg_hi": 0.1,
                "l1_lo": 0.05},
    "sweep": {"D_list": [1e-5, 1e-3, 1e-2]},
}
TOP = ("experiment", "preset", "system", "seed", "output") + tuple(SCHEMA)
SYSTEM_KEYS = ("m", "A", "B", "drive", "omega", "hbar", "D")


@dataclass
class RunConfig:
    experiment: str | None
    system: SystemParams
    sections: dict
    seed: int | None
    output: str
    source: dict

    def __getattr__(self, name):
        sections = self.__dict__.get("sections", {})
        if name in sections:
            return sections[name]
        raise AttributeError(name)

    def echo(self):
        """Fully expanded configuration as plain JSON data."""
        d = {"experiment": self.experiment, "seed": self.seed, "output": self.output,
             "system": {k: getattr(self.system, k) for k in SYSTEM_KEYS}}
        d.update(copy.deepcopy(self.sections))
        return d

    def digest(self):
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_(self, **changes):
        d = dict(self.__dict__)
        d.update(changes)
        return RunConfig(**d)


def _number(key, v, positive=False, integer=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(key, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ValidationError(key, "expected an integer")
    if not np.isfinite(v):
        raise ValidationError(key, "must be finite")
    if positive and not v > 0:
        raise ValidationError(key, "must be positive")
    return int(v) if integer else float(v)


def _pair(key, v):
    if not (isinstance(v, list) and len(v) == 2):
        raise ValidationError(key, "expected [lo, hi]")
    lo, hi = (_number(key, x) for x in v)
    if not hi > lo:
        raise ValidationError(key, "needs lo < hi")
    return [lo, hi]


def _merge(section, given):
    if not isinstance(given, dict):
        raise ValidationError(section, "expected an object")
    out = copy.deepcopy(SCHEMA[section])
    for k, v in given.items():
        if k not in out:
            raise UnknownKey(f"{section}.{k}")
        out[k] = v
    return out


def _validate(sec, experiment, seed):
    g = sec["grid"]
    g["q_range"] = _pair("grid.q_range", g["q_range"])
    g["p_range"] = _pair("grid.p_range", g["p_range"])
    for k in ("n_q", "n_p"):
        g[k] = _number(f"grid.{k}", g[k], positive=True, integer=True)

    ini = sec["initial"]
    ini["q0"] = _number("initial.q0", ini["q0"])
    ini["p0"] = _number("initial.p0", ini["p0"])
    ini["sigma_q"] = _number("initial.sigma_q", ini["sigma_q"], True, allow_none=True)

    s = sec["solver"]
    s["steps_per_period"] = _number("solver.steps_per_period", s["steps_per_period"], True, True)
    s["dt"] = _number("solver.dt", s["dt"], True, allow_none=True)
    s["periods"] = _number("solver.periods", s["periods"], positive=False, integer=True)
    if s["periods"] < 0:
        raise ValidationError("solver.periods", "must be >= 0")
    s["t_final"] = _number("solver.t_final", s["t_final"], allow_none=True)
    if not isinstance(s["snapshot_periods"], list):
        raise ValidationError("solver.snapshot_periods", "expected a list")
    s["snapshot_periods"] = [_number("solver.snapshot_periods", x) for x in s["snapshot_periods"]]
    s["boundary_cap"] = _number("solver.boundary_cap", s["boundary_cap"], True, allow_none=True)

    e = sec["ensemble"]
    e["n"] = _number("ensemble.n", e["n"], True, True)
    if e["scheme"] not in ("euler", "kdk"):
        raise ValidationError("ensemble.scheme", "must be 'euler' or 'kdk'")
    e["bandwidth"] = _number("ensemble.bandwidth", e["bandwidth"], True)

    lc = sec["local_cumulants"]
    if lc["scheme"] not in ("euler", "kdk"):
        raise ValidationError("local_cumulants.scheme", "must be 'euler' or 'kdk'")

    geo = sec["geometry"]
    for k in ("lam_bar", "prefactor", "calibrate_t_star", "calibrate_D"):
        geo[k] = _number(f"geometry.{k}", geo[k], True, allow_none=True)
    if (geo["calibrate_t_star"] is None) != (geo["calibrate_D"] is None):
        raise ValidationError("geometry.calibrate_t_star",
                              "calibration needs both calibrate_t_star and calibrate_D")
    geo["D_list"] = [_number("geometry.D_list", x, True) for x in geo["D_list"]]
    if geo["t_star"] is not None:
        ts = geo["t_star"] if isinstance(geo["t_star"], list) else [geo["t_star"]]
        geo["t_star"] = [_number("geometry.t_star", x, True) for x in ts]

    for k in ("D_list",):
        sec["sweep"][k] = [_number(f"sweep.{k}", x, True) for x in sec["sweep"][k]]

    if experiment in STOCHASTIC and seed is None:
        raise ValidationError("seed", f"experiment {experiment!r} is stochastic and needs a seed")
    return sec


def _check_schedule(sec, system):
    s = sec["solver"]
    T = system.period
    dt = s["dt"] if s["dt"] is not None else T / s["steps_per_period"]
    t_final = s["t_final"] if s["t_final"] is not None else s["periods"] * T
    for name, span in [("solver.t_final", t_final)] + [
            ("solver.snapshot_periods", k * T) for k in s["snapshot_periods"]]:
        n = span / dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValidationError(name, f"{span} is not a whole number of steps dt={dt}")
        if span > t_final + 1e-12:
            raise ValidationError(name, "snapshot beyond the final time")


def parse_config(data, experiment=None, seed=None, output=None):
    """Validate a decoded JSON object; ``experiment``/``seed``/``output`` override it."""
    if not isinstance(data, dict):
        raise ValidationError("config", "top level must be an object")
    for k in data:
        if k not in TOP:
            raise UnknownKey(k)
    system = {}
    preset = data.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError("preset", f"unknown preset {preset!r}")
        system.update(PRESETS[preset])
    given = data.get("system", {})
    if not isinstance(given, dict):
        raise ValidationError("system", "expected an object")
    for k, v in given.items():
        if k not in SYSTEM_KEYS:
            raise UnknownKey(f"system.{k}")
        system[k] = _number(f"system.{k}", v)
    params = SystemParams(**system)

    experiment = experiment or data.get("experiment")
    if experiment is not None and experiment not in EXPERIMENTS:
        raise ValidationError("experiment", f"unknown experiment {experiment!r}")
    if seed is None:
        seed = data.get("seed")
    if seed is not None:
        seed = _number("seed", seed, integer=True)
        if not 0 <= seed < 2**64:
            raise ValidationError("seed", "must be an unsigned 64-bit integer")
    sections = {name: _merge(name, data.get(name, {})) for name in SCHEMA}
    _validate(sections, experiment, seed)
    _check_schedule(sections, params)
    out = output or data.get("output") or "qct-out"
    return RunConfig(experiment, params, sections, seed, str(out), data)


def load_config(path, experiment=None, seed=None, output=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FieldIOError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(data, experiment, seed, output)
