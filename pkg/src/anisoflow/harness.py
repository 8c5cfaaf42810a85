"""Command-line front end: TOML scenario configs, orchestration of the
verification / evolution / translator pipelines, parameter sweeps, and
deterministic CSV/JSON emission.

Exit codes: 0 success, 1 runtime or invariant failure, 2 configuration
error.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import anisotropy as aniso
from . import estimates as est
from . import evolve as ev
from . import geometry as geo
from . import translator as tr

SCHEMA_VERSION = 1
CSV_HEADER = "time,sup_grad,sup_ut,lambda_hat,energy,psi_max,psi_argmax_boundary,eigmin_B"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# TOML round trip


def load_config(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(str(exc)) from exc


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"unserializable config value {v!r}")


def dump_config(cfg):
    """Serialize a flat-section config dict; inverse of load_config."""
    lines = []
    for section, body in cfg.items():
        if not isinstance(body, dict):
            raise ConfigError("top-level entries must be sections")
        lines.append(f"[{section}]")
        for key, val in body.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# scenario construction


class Scenario:
    def __init__(self, cfg, seed_override=None):
        self.raw = cfg
        try:
            self.model = self._model(cfg.get("anisotropy", {}))
            self.domain, self.grid = self._domain(cfg.get("domain", {}))
            self.bc = self._bc(cfg.get("bc", {}))
            sol = cfg.get("solver", {})
            self.solver = ev.SolverConfig(
                sigma=float(sol.get("sigma", 0.5)),
                t_end=float(sol.get("t_end", 1.0)),
                record_every=float(sol.get("record_every", 0.1)),
                steady_tol=float(sol.get("steady_tol", 0.0)))
            diag = cfg.get("diagnostics", {})
            self.a0 = float(diag.get("a0", 0.0)) or None
            self.sample_count = int(diag.get("sample_count", 32))
            run = cfg.get("run", {})
            self.seed = int(run.get("seed", 0))
            if seed_override is not None:
                self.seed = int(seed_override)
            self.initial = self._initial(cfg.get("initial", {}))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def _model(sec):
        family = sec.get("family", "isotropic")
        dim = int(sec.get("dim", 2))
        fd_step = float(sec.get("fd_step", 1e-4))
        if family == "isotropic":
            return aniso.isotropic(dim, fd_step=fd_step)
        if family == "ellipsoid":
            diag = sec.get("diag")
            if diag is None or len(diag) != dim + 1:
                raise ConfigError("ellipsoid needs 'diag' with dim+1 entries")
            return aniso.ellipsoid(np.diag([float(d) for d in diag]),
                                   fd_step=fd_step)
        if family == "quartic_blend":
            return aniso.quartic_blend(dim, float(sec.get("beta", 0.0)),
                                       fd_step=fd_step)
        raise ConfigError(f"unknown anisotropy family {family!r}")

    @staticmethod
    def _domain(sec):
        kind = sec.get("kind", "interval")
        size = float(sec.get("size", 1.0))
        if kind == "interval":
            dom = geo.interval(size)
            grid = geo.IntervalGrid(dom, int(sec.get("n_nodes", 101)))
        elif kind == "disk":
            dom = geo.disk(size)
            grid = geo.DiskGrid(dom, int(sec.get("nr", 32)),
                                int(sec.get("ntheta", 64)))
        else:
            raise ConfigError(f"unknown domain kind {kind!r}")
        return dom, grid

    @staticmethod
    def _bc(sec):
        kind = sec.get("kind", "neumann")
        data = ev.BoundaryData(
            const=float(sec.get("const", 0.0)),
            cos_coeffs=tuple(float(c) for c in sec.get("cos_coeffs", [])),
            sin_coeffs=tuple(float(c) for c in sec.get("sin_coeffs", [])))
        if len(data.cos_coeffs) > 4 or len(data.sin_coeffs) > 4:
            raise ConfigError("boundary data limited to 4 Fourier modes")
        try:
            return ev.BoundaryCondition(kind, data)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def _initial(self, sec):
        kind = sec.get("kind", "constant")
        grid = self.grid
        if kind == "constant":
            return grid.new_field(
                np.full(grid.shape, float(sec.get("value", 0.0))))
        if kind == "gaussian":
            amp = float(sec.get("amplitude", 0.1))
            width = float(sec.get("width", 0.5))
            if isinstance(grid, geo.IntervalGrid):
                vals = amp * np.exp(-(grid.x / width) ** 2)
            else:
                X, Y = grid.nodes_xy()
                vals = amp * np.exp(-(X * X + Y * Y) / width**2)
            return grid.new_field(vals)
        if kind == "fourier":
            data = ev.BoundaryData(
                const=float(sec.get("value", 0.0)),
                cos_coeffs=tuple(float(c) for c in sec.get("cos_coeffs", [])),
                sin_coeffs=tuple(float(c) for c in sec.get("sin_coeffs", [])))
            return grid.new_field(data.extended(grid))
        raise ConfigError(f"unknown initial-data kind {kind!r}")


# ---------------------------------------------------------------------------
# emission helpers


def write_json_atomic(path, payload):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    os.replace(tmp, path)


def _fmt(x):
    return "%.12e" % float(x)


def _error_record(stage, exc):
    rec = {"error": type(exc).__name__, "stage": stage, "detail": str(exc)}
    print(json.dumps(rec), file=sys.stderr)


def _grid_echo(grid):
    if isinstance(grid, geo.IntervalGrid):
        return {"kind": "interval", "n_nodes": grid.n_nodes}
    return {"kind": "disk", "nr": grid.nr, "ntheta": grid.ntheta}


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(config_path, out_dir, seed=None, quiet=False):
    cfg = load_config(config_path)
    sc = Scenario(cfg, seed)
    os.makedirs(out_dir, exist_ok=True)
    payload = {"schema_version": SCHEMA_VERSION, "version": __version__}
    try:
        structure = aniso.check_structure(sc.model, rng_seed=sc.seed)
        decay = aniso.verify_decay(sc.model)
    except (aniso.IdentityViolation, aniso.SlopeMismatch) as exc:
        _error_record("verify", exc)
        payload["violation"] = {"type": type(exc).__name__, "detail": str(exc)}
        write_json_atomic(os.path.join(out_dir, "constants_report.json"),
                          payload)
        return 1
    payload["structure_max_violation"] = structure
    payload["constants"] = decay.as_dict()
    write_json_atomic(os.path.join(out_dir, "constants_report.json"), payload)
    if not quiet:
        print(f"verify ok: epsilon2 = {decay.epsilon2:.3e}")
    return 0


def run_with_diagnostics(sc):
    """Evolve the scenario, attaching the Psi / eigenvalue diagnostics to
    every record. Returns (FlowResult, rows) with rows ready for CSV."""
    rows = []

    def observer(rec, fld):
        snap = est.psi(sc.model, sc.grid, fld.copy(), sc.bc, a0=sc.a0)
        eig = est.eigmin_over_state(sc.model, sc.grid, fld.copy(), sc.bc,
                                    a0=sc.a0, sample_count=sc.sample_count)
        rows.append((rec.time, rec.sup_grad, rec.sup_ut, rec.lambda_hat,
                     rec.energy, snap.max_value,
                     1.0 if snap.argmax_on_boundary else 0.0, eig))

    result = ev.run(sc.model, sc.grid, sc.initial, sc.bc, sc.solver,
                    observer=observer)
    return result, rows


def write_series(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def cmd_evolve(config_path, out_dir, seed=None, quiet=False):
    cfg = load_config(config_path)
    sc = Scenario(cfg, seed)
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    try:
        result, rows = run_with_diagnostics(sc)
    except (FloatingPointError, est.NonPositiveW, geo.GhostNotClosed) as exc:
        _error_record("evolve", exc)
        return 1
    write_series(os.path.join(out_dir, "series.csv"), rows)
    report = est.check_assumptions(sc.model, sc.domain, sc.bc, grid=sc.grid,
                                   u0=sc.initial)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "scenario": sc.raw,
        "seed": sc.seed,
        "grid": _grid_echo(sc.grid),
        "steps": result.steps,
        "dt": result.dt,
        "reached_steady": result.reached_steady,
        "final_time": result.final.time,
        "sup_grad_final": rows[-1][1],
        "assumptions": {
            "k0": report.k0_measured,
            "epsilon1": report.epsilon1_measured,
            "epsilon2": report.epsilon2_measured,
            "compatibility_residual": report.compatibility_residual,
            "passes": report.passes,
        },
        "wall_clock_s": time.perf_counter() - t0,
    }
    write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest)
    if not quiet:
        print(f"evolve ok: {result.steps} steps to t={result.final.time:g}")
    return 0


def cmd_translator(config_path, out_dir, seed=None, quiet=False):
    cfg = load_config(config_path)
    sc = Scenario(cfg, seed)
    os.makedirs(out_dir, exist_ok=True)
    tcfg = cfg.get("translator", {})
    eps_seq = tuple(float(e) for e in tcfg.get("eps", (0.1, 0.05, 0.025, 0.0125)))
    t_end = float(tcfg.get("t_end", 20.0))
    wanted = tcfg.get("methods")          # default: every applicable method
    t0 = time.perf_counter()
    methods = []
    path = None

    def _wanted(name):
        return wanted is None or name in wanted

    try:
        if _wanted(tr.PARABOLIC):
            flow_sol, _ = tr.parabolic_solution(
                sc.model, sc.grid, sc.bc, t_end=t_end, sigma=sc.solver.sigma,
                steady_tol=float(tcfg.get("steady_tol", 1e-8)),
                initial=sc.initial)
            methods.append(flow_sol)
        if _wanted(tr.EPSILON):
            eps_sol, path = tr.epsilon_solution(sc.model, sc.grid, sc.bc,
                                                eps_seq=eps_seq,
                                                sigma=sc.solver.sigma)
            methods.append(eps_sol)
        if sc.model.dim == 1 and _wanted(tr.ORACLE):
            oracle_sol, _ = tr.oracle_1d(sc.model, sc.bc, sc.domain.size)
            methods.append(oracle_sol)
    except (tr.NoConvergence, tr.NotSteady, tr.QuadratureFailure) as exc:
        _error_record("translator", exc)
        return 1
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "scenario": sc.raw,
        "seed": sc.seed,
        "grid": _grid_echo(sc.grid),
        "methods": [{"method": m.method, "lambda": m.lam,
                     "residual": m.residual} for m in methods],
    }
    if path is not None:
        manifest["epsilon_path"] = {
            "eps": [s.eps for s in path.steps],
            "lambda": [s.lam for s in path.steps],
            "osc": [s.osc for s in path.steps],
            "residual": [s.residual for s in path.steps],
            "extrapolated_lambda": path.lam,
            "observed_order": path.observed_order,
        }
    manifest["wall_clock_s"] = time.perf_counter() - t0
    write_json_atomic(os.path.join(out_dir, "translator.json"), manifest)
    if not quiet:
        for m in methods:
            print(f"{m.method}: lambda = {m.lam:.7g}")
    return 0


SWEEP_HEADER = "param_value,epsilon2,eigmin_B,sup_grad,lambda_hat"


def _set_by_path(cfg, dotted, value):
    section, key = dotted.split(".", 1)
    cfg.setdefault(section, {})[key] = value


def cmd_sweep(config_path, out_dir, seed=None, quiet=False):
    cfg = load_config(config_path)
    sweep = cfg.get("sweep")
    if not sweep or "parameter" not in sweep or "values" not in sweep:
        raise ConfigError("sweep needs [sweep] parameter and values")
    parameter = sweep["parameter"]
    values = list(sweep["values"])
    os.makedirs(out_dir, exist_ok=True)
    summary = []
    for i, value in enumerate(values):
        sub_cfg = json.loads(json.dumps({k: v for k, v in cfg.items()
                                         if k != "sweep"}))
        _set_by_path(sub_cfg, parameter, value)
        sub_dir = os.path.join(out_dir, f"case_{i:02d}")
        os.makedirs(sub_dir, exist_ok=True)
        sub_path = os.path.join(sub_dir, "scenario.toml")
        with open(sub_path, "w") as fh:
            fh.write(dump_config(sub_cfg))
        code = cmd_evolve(sub_path, sub_dir, seed=seed, quiet=True)
        if code != 0:
            return code
        with open(os.path.join(sub_dir, "manifest.json")) as fh:
            man = json.load(fh)
        with open(os.path.join(sub_dir, "series.csv")) as fh:
            last = fh.read().strip().splitlines()[-1].split(",")
        summary.append((float(value), man["assumptions"]["epsilon2"],
                        float(last[7]), float(last[1]), float(last[3])))
        if not quiet:
            print(f"{parameter} = {value}: eigmin_B = {float(last[7]):.3e}")
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for row in summary:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="anisoflow",
        description="Numerical laboratory for graphical anisotropic "
                    "curvature flow with angle or flux boundary data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("verify", cmd_verify), ("evolve", cmd_evolve),
                     ("translator", cmd_translator), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--quiet", action="store_true")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)
    try:
        return args.func(args.config, args.out, seed=args.seed,
                         quiet=args.quiet)
    except ConfigError as exc:
        _error_record("config", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
