"""Command-line front end: ``qct <subcommand> --config <path>``.

Every run writes its artifacts plus ``manifest.json`` (config echo and
hash, seed, library versions, artifact checksums) into the output
directory.  Failures write ``error.json`` and exit with 2 (config),
3 (numerical) or 4 (I/O).
"""

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import classical, compare, geometry, grid, hyperbolic, model, quantum, semiclassical
from .config import EXPERIMENTS, load_config
from .errors import FieldIOError, QCTError, ValidationError


class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, cfg, out, threads):
        self.cfg = cfg
        self.out = Path(out)
        self.threads = threads
        self.artifacts = []
        self.seeds = {}
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise FieldIOError(f"cannot create output directory {out}: {exc.strerror}") from exc

    def path(self, name):
        self.artifacts.append(name)
        return self.out / name

    def json(self, name, data):
        with open(self.path(name), "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")

    # derived settings shared by several subcommands
    @property
    def params(self):
        return self.cfg.system

    def dt(self, params=None):
        s = self.cfg.solver
        T = (params or self.params).period
        return s["dt"] if s["dt"] is not None else T / s["steps_per_period"]

    def t_final(self, params=None):
        s = self.cfg.solver
        T = (params or self.params).period
        return s["t_final"] if s["t_final"] is not None else s["periods"] * T

    def grid(self):
        g = self.cfg.grid
        return grid.init_grid((g["q_range"], g["p_range"]), g["n_q"], g["n_p"])

    def initial(self, g, kind):
        i = self.cfg.initial
        return grid.init_coherent_state(g, i["q0"], i["p0"], i["sigma_q"], self.params.hbar,
                                        kind)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions():
    import numba
    import scipy
    return {"qct": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def _diag_rows(diags, path):
    keys = list(diags[0].as_dict())
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for d in diags:
            fh.write(",".join(repr(float(v)) for v in d.as_dict().values()) + "\n")


# --------------------------------------------------------------------------
# subcommands

def _evolve(run, kind, params=None, prefix=None):
    params = params or run.params
    g = run.grid()
    f0 = run.initial(g, "wigner" if kind == "quantum" else kind)
    T = params.period
    snaps = [k * T for k in run.cfg.solver["snapshot_periods"]]
    kw = dict(boundary_cap=run.cfg.solver["boundary_cap"], workers=run.threads)
    if kind == "quantum":
        res = quantum.evolve_wigner(f0, run.t_final(params), run.dt(params), params, snaps, **kw)
    else:
        res = classical.evolve_fokker_planck(f0, run.t_final(params), run.dt(params), params,
                                             snaps, return_result=True, **kw)
    prefix = prefix or kind
    grid.write_field(res.field, run.path(f"{prefix}.qctg"))
    for t, f in sorted(res.snapshots.items()):
        grid.write_field(f, run.path(f"{prefix}_period{t / T:.6g}.qctg"))
    _diag_rows(res.diagnostics, run.path(f"{prefix}_diagnostics.csv"))
    return res.field


def cmd_evolve_quantum(run):
    _evolve(run, "quantum")


def cmd_evolve_classical(run):
    _evolve(run, "classical")


def cmd_ensemble(run):
    e, i = run.cfg.ensemble, run.cfg.initial
    P = run.params
    run.seeds["ensemble"] = run.cfg.seed
    ens = classical.TrajectoryEnsemble.from_coherent_state(
        e["n"], run.cfg.seed, i["q0"], i["p0"], i["sigma_q"], P.hbar)
    ens = classical.evolve_ensemble(ens, run.t_final(), run.dt(), P, workers=run.threads or 1,
                                    scheme=e["scheme"])
    csv_path = run.path("ensemble.csv")
    run.artifacts.append("ensemble.json")
    classical.write_ensemble(ens, csv_path, P)
    rho = classical.density_from_ensemble(ens, run.grid(), e["bandwidth"], P.hbar)
    grid.write_field(rho, run.path("ensemble_density.qctg"))


def _fixed_point(params, phase, steps_per_period):
    guess = model.saddle_guess(params, phase * params.period)
    return model.find_saddle(params, guess, steps_per_period=steps_per_period)


def _fixed_point_dict(fp):
    return {"q": fp.location.q, "p": fp.location.p, "t": fp.location.t, "lam": fp.lam,
            "residual": fp.residual, "eigenvalues": np.real(fp.eigenvalues).tolist(),
            "unstable_dir": np.asarray(fp.unstable_dir).tolist(),
            "stable_dir": np.asarray(fp.stable_dir).tolist()}


def cmd_manifold(run):
    g = run.cfg.geometry
    fp = _fixed_point(run.params, g["phase"], g["steps_per_period"])
    run.json("fixed_point.json", _fixed_point_dict(fp))
    kw = dict(max_spacing=g["max_spacing"], arc_budget=g["arc_budget"], eps=g["eps"],
              steps_per_period=g["steps_per_period"])
    for which, trace in (("unstable", geometry.trace_unstable_manifold),
                         ("stable", geometry.trace_stable_manifold)):
        lines = trace(fp, run.params, g["n_periods"], **kw)
        geometry.write_manifold_csv(lines, run.path(f"manifold_{which}.csv"))


def cmd_lyapunov(run):
    c = run.cfg.lyapunov
    T = run.params.period
    run.seeds["lyapunov"] = run.cfg.seed
    res = geometry.lyapunov_exponent(
        run.params, c["transient_periods"] * T, c["average_periods"] * T, c["n_samples"],
        run.cfg.seed, c["steps_per_period"], workers=run.threads or 1)
    run.json("lyapunov.json", res.as_dict())


def _prefactor(g, m, lam_bar):
    if g["calibrate_t_star"] is not None:
        return geometry.calibrate_prefactor(g["calibrate_t_star"], g["calibrate_D"], m, lam_bar)
    if g["prefactor"] is None:
        raise ValidationError("geometry.prefactor", "set a prefactor or a calibration point")
    return g["prefactor"]


def cmd_tstar(run):
    g, P = run.cfg.geometry, run.params
    D_list = g["D_list"] if P.D == 0 else [P.D]
    pref = _prefactor(g, P.m, g["lam_bar"])
    reports = []
    for D in D_list:
        ts = geometry.solve_tstar(D, P.m, g["lam_bar"], pref)
        reports.append(geometry.threshold_report(D, ts, P.m, g["lam_bar"], P.hbar, pref))
    geometry.write_threshold_json(reports, run.path("threshold.json"))


def cmd_threshold(run):
    g, P = run.cfg.geometry, run.params
    D_list = g["D_list"] if P.D == 0 else [P.D]
    if g["t_star"] is None or len(g["t_star"]) != len(D_list):
        raise ValidationError("geometry.t_star", "give one t_star per D value")
    pref = g["prefactor"]
    reports = [geometry.threshold_report(D, ts, P.m, g["lam_bar"], P.hbar, pref)
               for D, ts in zip(D_list, g["t_star"])]
    geometry.write_threshold_json(reports, run.path("threshold.json"))


def cmd_strong_form(run):
    c, P = run.cfg.strong_form, run.params
    k = c["k"]
    if k is None:
        probe = geometry.StrongFormParams.at_point(c["q"], c["t"], P, 1.0, c["s"], c["eta"])
        k = geometry.best_measurement_strength(probe)[0]
    sp = geometry.StrongFormParams.at_point(c["q"], c["t"], P, k, c["s"], c["eta"])
    out = geometry.strong_form_check(sp, c["R"])
    out["k"] = k
    out["point"] = {"q": c["q"], "t": c["t"], "F": sp.F, "dF": sp.dF, "d2F": sp.d2F}
    run.json("strong_form.json", out)


def cmd_local_cumulants(run):
    c = run.cfg.local_cumulants
    P = run.params.with_(drive=c["drive"])
    fp = _fixed_point(P, run.cfg.geometry["phase"], run.cfg.geometry["steps_per_period"])
    lam = c["lam"] if c["lam"] is not None else fp.lam
    run.seeds["ensemble"] = run.seeds["bootstrap"] = run.cfg.seed
    mc, exact = [], []
    for t in c["times"]:
        mc.append(hyperbolic.mc_cumulants(fp, c["D"], t, c["n"], c["dt"], run.cfg.seed, P,
                                          n_boot=c["n_boot"], lam=lam,
                                          workers=run.threads or 1,
                                          scheme=c["scheme"]))
        exact.append(hyperbolic.analytic_cumulants(lam, P.m, c["D"], t))
    hyperbolic.write_cumulants_csv(mc, run.path("cumulants_mc.csv"))
    hyperbolic.write_cumulants_csv(exact, run.path("cumulants_analytic.csv"))


def cmd_semiclassical(run):
    c, P = run.cfg.semiclassical, run.params
    p0 = c["p0"]

    def initial_line(q):
        return np.full_like(np.asarray(q, float), p0)

    t = c["periods"] * P.period
    bs = semiclassical.evolve_lagrangian_curve(
        initial_line, tuple(c["q_range"]), c["n_samples"], t, P,
        steps_per_period=c["steps_per_period"], max_gap=c["max_gap"])
    semiclassical.write_branch_csv(bs, run.path("branches.csv"))
    p = np.linspace(c["p_range"][0], c["p_range"][1], c["n_p"])
    ev = semiclassical.noise_averaged_wigner(bs, c["q_eval"], p, P.D, t, P.hbar, c["X_max"],
                                             c["n_X"], details=True)
    with open(run.path("semiclassical_wigner.csv"), "w") as fh:
        fh.write("q,p,W,imag_residue\n")
        for pi, w, im in zip(p.tolist(), ev.value.tolist(), ev.imag_residue.tolist()):
            fh.write(f"{c['q_eval']!r},{pi!r},{w!r},{im!r}\n")
    counts = [len(semiclassical.branches_at(c["q_eval"], bs))]
    run.json("semiclassical.json", {"t": t, "branches_at_q_eval": counts[0],
                                    "n_curve_samples": int(bs.q.size),
                                    "caustic_flag": bool(ev.caustic_flag)})


def _compare_pair(run, fc, fq, tag=""):
    c = run.cfg.compare
    report, rows = compare.comparison_report(fc, fq, c["p_value"], c["neg_hi"], c["l1_lo"])
    compare.write_comparison_csv(rows, run.path(f"comparison{tag}.csv"))
    return report


def cmd_compare(run):
    c = run.cfg.compare
    if not (c["classical"] and c["quantum"]):
        raise ValidationError("compare.classical", "compare needs classical and quantum dumps")
    fc, fq = grid.read_field(c["classical"]), grid.read_field(c["quantum"])
    run.json("report.json", _compare_pair(run, fc, fq))


def cmd_sweep(run):
    reports = []
    for D in run.cfg.sweep["D_list"]:
        P = run.params.with_(D=D)
        tag = f"_D{D:.0e}"
        fq = _evolve(run, "quantum", P, "quantum" + tag)
        fc = _evolve(run, "classical", P, "classical" + tag)
        r = _compare_pair(run, fc, fq, tag)
        r["D"] = D
        reports.append(r)
    run.json("sweep.json", {"runs": reports, "regimes": [r["regime"] for r in reports]})


COMMANDS = {name: globals()["cmd_" + name.replace("-", "_")] for name in EXPERIMENTS}


# --------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="qct", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    return ap


def _error_payload(exc):
    d = {"error": type(exc).__name__, "message": str(exc),
         "exit_code": getattr(exc, "exit_code", 1)}
    if getattr(exc, "key", None) is not None:
        d["key"] = exc.key
    return d


def run(cfg, out=None, threads=None):
    """Execute ``cfg.experiment``; returns the process exit status."""
    out = out or os.environ.get("QCT_OUT") or cfg.output
    r = Run(cfg, out, threads)
    started = time.time()
    status, err = 0, None
    try:
        COMMANDS[cfg.experiment](r)
    except QCTError as exc:
        status, err = exc.exit_code, exc
    except OSError as exc:
        status, err = FieldIOError.exit_code, exc
    written = [a for a in r.artifacts if (r.out / a).exists()]
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.echo(),
        "config_hash": cfg.digest(),
        "preset": cfg.source.get("preset"),
        "seed": cfg.seed,
        "seeds": r.seeds,
        "threads": threads,
        "versions": _versions(),
        "artifacts": {a: _sha256(r.out / a) for a in written},
        "partial": err is not None,
        "status": status,
        "started": started,
        "finished": time.time(),
    }
    if err is not None:
        payload = _error_payload(err)
        manifest["error"] = payload
        with open(r.out / "error.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    with open(r.out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print(json.dumps({"error": "ValidationError", "key": "threads",
                          "message": "threads must be >= 1", "exit_code": 2}))
        return 2
    try:
        cfg = load_config(args.config, experiment=args.subcommand, seed=args.seed,
                          output=None)
    except QCTError as exc:
        payload = json.dumps(_error_payload(exc), indent=2, sort_keys=True)
        out = args.out or os.environ.get("QCT_OUT")
        if out:
            try:
                Path(out).mkdir(parents=True, exist_ok=True)
                (Path(out) / "error.json").write_text(payload + "\n")
            except OSError:
                pass
        print(payload, file=sys.stderr)
        return exc.exit_code
    out = args.out or os.environ.get("QCT_OUT") or cfg.output
    status = run(cfg, out, args.threads)
    if status:
        with open(Path(out) / "error.json") as fh:
            print(fh.read(), file=sys.stderr, end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
