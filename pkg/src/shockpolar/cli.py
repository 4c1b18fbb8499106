"""Command-line front end: ``shockpolar {polar,normal,oblique,mach,coeffs,duct}``.

Parameters come from flags, from a JSON file given with ``--config``, or both
(flags win). Data files are written with fixed formatting so identical
configurations give identical bytes; run metadata goes to manifest.json only.

Exit codes: 0 success, 2 invalid configuration, 3 physical-domain error,
4 numerical failure or non-convergence. Every failure prints one JSON line
on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import gas as gc
from .duct import DuctProblem, residual_report, solve_duct, CONVERGED
from .errors import DuctSolverError, InvalidStateError, NumericalError, PhysicalDomainError, ShockPolarError
from .gas import GasConstants, FlowState
from .lagrangian import coefficients, ellipticity, matrix_w
from .mach_config import build_configuration, validate_configuration
from .polar import (
    MINUS,
    PLUS,
    UpstreamState,
    branch_name,
    critical_points,
    deflected_polar_w,
    normal_shock,
    normal_shock_pressure,
    oblique_solutions,
    sample_pressures,
    shock_limit,
)
from .svg import LinePlot

COMMANDS = ("polar", "normal", "oblique", "mach", "coeffs", "duct")
FORMATS = ("csv", "json", "svg")
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICAL, EXIT_NUMERICAL = 0, 2, 3, 4
OUT_ENV = "SHOCKPOLAR_OUT_DIR"
DEFAULT_OUT = "shockpolar-out"

_TOP_KEYS = {"command", "gamma", "mach0", "p0", "rho0", "theta0_deg", "theta_deg", "p1", "samples", "duct", "output"}
_DUCT_KEYS = {"p_exit", "anchor", "nx", "ny", "omega", "max_iters", "tol_front", "tol_field", "tol_wall",
              "perturb", "mode"}
_OUTPUT_KEYS = {"dir", "formats"}


@dataclass
class RunConfig:
    command: str
    gas: GasConstants
    upstream: UpstreamState
    params: dict
    out_dir: Path
    formats: tuple = FORMATS
    raw: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidStateError(f"bad arguments: {message}")


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON configuration file; flags override its values")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--formats", help="comma-separated subset of csv,json,svg")
    p.add_argument("--gamma", type=float)
    p.add_argument("--mach0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--rho0", type=float)
    p.add_argument("--theta0-deg", type=float, dest="theta0_deg", help="upstream flow angle")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="shockpolar", description="Shock polars, Mach configurations and a duct shock solver.")
    parser.add_argument("--config", dest="config_top", help="JSON configuration file naming the command")
    parser.add_argument("--version", action="version", version=f"shockpolar {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sp = sub.add_parser("polar", parents=[common], help="sample both polar branches")
    sp.add_argument("--samples", type=int, help="points per branch (default 201)")
    sub.add_parser("normal", parents=[common], help="state behind the normal shock")
    so = sub.add_parser("oblique", parents=[common], help="weak and strong wedge shocks")
    so.add_argument("--theta-deg", type=float, dest="theta_deg", help="wedge half-angle in degrees")
    sm = sub.add_parser("mach", parents=[common], help="flat Mach configuration")
    sm.add_argument("--p1", type=float, help="pressure behind the incident shock")
    sc = sub.add_parser("coeffs", parents=[common], help="elliptic coefficients along the subsonic arcs")
    sc.add_argument("--samples", type=int, help="points per branch (default 201)")
    sd = sub.add_parser("duct", parents=[common], help="free-boundary normal shock in a duct")
    sd.add_argument("--p-exit", type=float, dest="p_exit", help="exit pressure (default: normal-shock value)")
    sd.add_argument("--anchor", type=float, help="front intercept at the lower wall, in (-1, 1)")
    sd.add_argument("--nx", type=int)
    sd.add_argument("--ny", type=int)
    sd.add_argument("--omega", type=float, help="front relaxation factor in (0, 1]")
    sd.add_argument("--max-iters", type=int, dest="max_iters")
    sd.add_argument("--tol-front", type=float, dest="tol_front")
    sd.add_argument("--tol-field", type=float, dest="tol_field")
    sd.add_argument("--tol-wall", type=float, dest="tol_wall")
    sd.add_argument("--perturb", type=float, help="amplitude of the sinusoidal initial front perturbation")
    sd.add_argument("--mode", type=int, help="mode number of the initial front perturbation")
    return parser


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidStateError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidStateError("config file must hold a JSON object")
    for key, allowed in ((None, _TOP_KEYS), ("duct", _DUCT_KEYS), ("output", _OUTPUT_KEYS)):
        block = data if key is None else data.get(key, {})
        if not isinstance(block, dict):
            raise InvalidStateError(f"config block '{key}' must be an object")
        extra = sorted(set(block) - allowed)
        if extra:
            raise InvalidStateError(f"unknown config keys{' in ' + key if key else ''}: {', '.join(extra)}")
    return data


def _number(value, name, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidStateError(f"{name} must be a number")
    if kind is int:
        if float(value) != int(value):
            raise InvalidStateError(f"{name} must be an integer")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise InvalidStateError(f"{name} must be finite")
    return value


def config_from_args(argv=None, env=None) -> RunConfig:
    """Merge the JSON config and flags into a validated RunConfig."""
    env = os.environ if env is None else env
    args = build_parser().parse_args(argv)
    config_path = getattr(args, "config", None) or args.config_top
    data = _load_json(config_path) if config_path else {}
    command = args.command or data.get("command")
    if command not in COMMANDS:
        raise InvalidStateError(f"command must be one of {', '.join(COMMANDS)}")
    if args.command and data.get("command") not in (None, args.command):
        raise InvalidStateError(f"config is for '{data['command']}', not '{args.command}'")
    flags = vars(args)

    def pick(name, default, kind=float, block=None):
        src = data.get(block, {}) if block else data
        value = flags.get(name)
        if value is None:
            value = src.get(name, default)
        return None if value is None else _number(value, name, kind)

    g = pick("gamma", 1.4)
    gas = GasConstants(gamma=g)
    theta0 = math.radians(pick("theta0_deg", 0.0))
    up = UpstreamState.from_mach(pick("mach0", 2.0), gas, p0=pick("p0", 1.0), rho0=pick("rho0", 1.0), theta0=theta0)
    params = {}
    if command in ("polar", "coeffs"):
        params["samples"] = pick("samples", 201, int)
        if params["samples"] < 3:
            raise InvalidStateError("samples must be at least 3")
    elif command == "oblique":
        params["theta_deg"] = pick("theta_deg", 10.0)
    elif command == "mach":
        params["p1"] = pick("p1", 1.5)
    elif command == "duct":
        params = {
            "p_exit": pick("p_exit", None, block="duct"),
            "anchor": pick("anchor", 0.0, block="duct"),
            "nx": pick("nx", 64, int, "duct"),
            "ny": pick("ny", 64, int, "duct"),
            "omega": pick("omega", 0.5, block="duct"),
            "max_iters": pick("max_iters", 500, int, "duct"),
            "tol_front": pick("tol_front", 1e-8, block="duct"),
            "tol_field": pick("tol_field", 1e-8, block="duct"),
            "tol_wall": pick("tol_wall", 1e-6, block="duct"),
            "perturb": pick("perturb", 0.0, block="duct"),
            "mode": pick("mode", 1, int, "duct"),
        }
    output = data.get("output", {})
    out_dir = flags.get("out") or output.get("dir") or env.get(OUT_ENV) or DEFAULT_OUT
    formats = flags["formats"].split(",") if flags.get("formats") else output.get("formats", list(FORMATS))
    if not formats or any(f not in FORMATS for f in formats):
        raise InvalidStateError(f"formats must be a non-empty subset of {', '.join(FORMATS)}")
    raw = {"command": command, "gamma": g, "mach0": up.mach0, "p0": up.p0, "rho0": up.rho0,
           "theta0_deg": math.degrees(theta0), **params}
    return RunConfig(command, gas, up, params, Path(out_dir), tuple(f for f in FORMATS if f in formats), raw)


# --- formatting --------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def state_dict(s: FlowState, gas: GasConstants) -> dict:
    return {
        "p": s.p,
        "u": s.u,
        "v": s.v,
        "rho": s.rho,
        "w": s.w,
        "mach": gc.mach(s, gas),
        "entropy": gc.entropy_measure(s, gas),
        "bernoulli": gc.bernoulli(s, gas),
    }


def upstream_dict(up: UpstreamState) -> dict:
    return {"gamma": up.gamma, "p0": up.p0, "u0": up.u0, "rho0": up.rho0, "theta0": up.theta0, "mach0": up.mach0}


# --- commands ----------------------------------------------------------------

SHOCK_HEADER = ["branch", "p", "w", "u", "rho", "M", "alpha"]


def _shock_row(sol, gas):
    d = sol.downstream
    return [branch_name(sol.point.branch), sol.p, sol.w, d.u, d.rho, gc.mach(d, gas), sol.alpha]


def cmd_polar(cfg: RunConfig) -> dict:
    up, gas = cfg.upstream, cfg.gas
    rows, curves = [], {}
    for sgn in (PLUS, MINUS):
        ws, ps = [], []
        for p in sample_pressures(up, cfg.params["samples"]):
            sol = shock_limit(float(p), up, sgn)
            rows.append(_shock_row(sol, gas))
            ws.append(sol.w)
            ps.append(sol.p)
        curves[sgn] = (ws, ps)
    files = {"polar.csv": csv_text(SHOCK_HEADER, rows)}
    cp = critical_points(up)
    plot = LinePlot("w", "p", f"shock polar, gamma={up.gamma:g}, M0={up.mach0:.6g}")
    plot.add_line(*curves[PLUS], "upper branch")
    plot.add_line(*curves[MINUS], "lower branch")
    tw = math.tan(up.theta0)
    plot.add_point(deflected_polar_w(cp.p_plus, up), cp.p_plus, "A")
    plot.add_point(deflected_polar_w(cp.p_star, up, PLUS), cp.p_star, "B")
    plot.add_point(deflected_polar_w(cp.p_star, up, MINUS), cp.p_star, "B'")
    plot.add_point(deflected_polar_w(cp.p_sonic, up, PLUS), cp.p_sonic, "S")
    plot.add_point(deflected_polar_w(cp.p_sonic, up, MINUS), cp.p_sonic, "S'")
    plot.add_point(tw, up.p0, "C")
    files["polar.svg"] = plot.render()
    files["polar_points.json"] = json_text({"upstream": upstream_dict(up), "critical_points": vars(cp)})
    return files


def cmd_normal(cfg: RunConfig) -> dict:
    sol = normal_shock(cfg.upstream)
    header = ["p0", "u0", "rho0", "M0", "p", "u", "rho", "M", "u_ratio"]
    up, d = cfg.upstream, sol.downstream
    row = [up.p0, up.u0, up.rho0, up.mach0, d.p, d.speed, d.rho, gc.mach(d, cfg.gas), d.speed / up.u0]
    return {"normal.csv": csv_text(header, [row])}


def cmd_oblique(cfg: RunConfig) -> dict:
    theta = math.radians(cfg.params["theta_deg"])
    sols = oblique_solutions(theta, cfg.upstream)
    header = ["root", "p", "w", "u", "rho", "M", "alpha", "kind"]
    rows = []
    for name, sol in (("weak", sols.weak), ("strong", sols.strong)):
        d = sol.downstream
        rows.append([name, sol.p, sol.w, d.u, d.rho, gc.mach(d, cfg.gas), sol.alpha, sol.kind])
    return {"oblique.csv": csv_text(header, rows)}


def _polar_curve(up: UpstreamState, sgn, n=201):
    ws, ps = [], []
    for p in sample_pressures(up, n):
        ws.append(deflected_polar_w(float(p), up, sgn))
        ps.append(float(p))
    return ws, ps


def cmd_mach(cfg: RunConfig) -> dict:
    up, gas = cfg.upstream, cfg.gas
    conf = build_configuration(up, cfg.params["p1"])
    report = validate_configuration(conf)
    w_m, p_m = conf.wm_pm
    doc = {
        "upstream": upstream_dict(up),
        "p1": conf.p1,
        "degenerate": conf.degenerate,
        "regions": {str(k): state_dict(s, gas) for k, s in enumerate((conf.state0, conf.state1, conf.state2,
                                                                        conf.state3))},
        "slopes": {"incident": conf.slope_s1, "stem": conf.slope_s2, "reflected": conf.slope_s3,
                   "contact": conf.slope_d},
        "intersection": {"w_m": w_m, "p_m": p_m, "multiplicity": conf.multiplicity},
        "validation": report.to_dict(),
    }
    files = {"mach.json": json_text(doc)}
    up1 = UpstreamState.from_flow(conf.state1, gas)
    plot = LinePlot("w", "p", f"Mach configuration, p1={conf.p1:g}")
    for sgn in (PLUS, MINUS):
        plot.add_line(*_polar_curve(up, sgn), f"polar at C, {branch_name(sgn)}")
    if not conf.degenerate:
        for sgn in (PLUS, MINUS):
            plot.add_line(*_polar_curve(up1, sgn), f"polar at I1, {branch_name(sgn)}")
    plot.add_point(math.tan(up.theta0), up.p0, "C")
    plot.add_point(conf.state1.w, conf.state1.p, "I1")
    plot.add_point(w_m, p_m, "I2,3")
    files["mach.svg"] = plot.render()
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise _Partial(files, NumericalError(f"configuration failed validation: {', '.join(failed)}"))
    return files


def cmd_coeffs(cfg: RunConfig) -> dict:
    up, gas = cfg.upstream, cfg.gas
    cp = critical_points(up)
    n = cfg.params["samples"]
    header = ["branch", "p", "w", "M", "lambda_r", "beta1", "beta2", "det_w", "delta"]
    rows = []
    # open arc: the sonic end point itself is excluded
    ps = cp.p_sonic + (cp.p_plus - cp.p_sonic) * np.linspace(0.0, 1.0, n)[1:]
    for sgn in (PLUS, MINUS):
        for p in ps:
            d = shock_limit(float(p), up, sgn).downstream
            co = coefficients(d, gas)
            rows.append([branch_name(sgn), float(p), d.w, gc.mach(d, gas), co.lambda_r, co.beta1, co.beta2,
                         matrix_w(co).det, ellipticity(d, gas)])
    return {"coeffs.csv": csv_text(header, rows)}


def _duct_files(result, problem) -> dict:
    st = result.state
    xi = result.xi
    field_rows = []
    for i in range(result.s.size):
        for j in range(result.eta.size):
            field_rows.append([i, j, result.s[i], result.eta[j], xi[i, j], st.p[i, j], st.w[i, j], st.rho[i, j],
                               st.u[i, j]])
    front_rows = [[j, result.eta[j], st.psi[j], st.slope[j], st.p[0, j], st.w[0, j]] for j in range(result.eta.size)]
    files = {
        "duct_field.csv": csv_text(["i", "j", "s", "eta", "xi", "p", "w", "rho", "u"], field_rows),
        "duct_front.csv": csv_text(["j", "eta", "psi", "slope", "p", "w"], front_rows),
        "duct_history.csv": _history_csv(result.history),
    }
    summary = {
        "status": result.status,
        "iterations": result.iters,
        "message": result.message,
        "problem": {
            "upstream": upstream_dict(problem.up),
            "p_exit": problem.p_exit,
            "p_plus": problem.p_plus,
            "anchor": problem.front_anchor_xi,
            "nx": problem.nx,
            "ny": problem.ny,
            "omega": problem.omega_relax,
            "max_iters": problem.max_iters,
            "tol_front": problem.tol_front,
            "tol_field": problem.tol_field,
            "tol_wall": problem.tol_wall,
            "perturb": problem.perturb_amplitude,
            "mode": problem.perturb_mode,
        },
        "final_anchor": st.anchor,
        "anchor_drift": result.anchor_drift,
        "residuals": residual_report(result, problem),
    }
    files["duct_summary.json"] = json_text(summary)
    return files


HISTORY_HEADER = ["iteration", "field_change", "front_change", "pde_residual", "wall_residual", "anchor", "shifted"]


def _history_csv(history) -> str:
    return csv_text(HISTORY_HEADER, [[h[k] for k in HISTORY_HEADER] for h in history])


def cmd_duct(cfg: RunConfig) -> dict:
    prm = cfg.params
    up = cfg.upstream
    p_exit = prm["p_exit"] if prm["p_exit"] is not None else normal_shock_pressure(up)
    problem = DuctProblem(
        up=up, p_exit=p_exit, front_anchor_xi=prm["anchor"], nx=prm["nx"], ny=prm["ny"],
        omega_relax=prm["omega"], max_iters=prm["max_iters"], tol_front=prm["tol_front"],
        tol_field=prm["tol_field"], tol_wall=prm["tol_wall"], perturb_amplitude=prm["perturb"],
        perturb_mode=prm["mode"],
    )
    try:
        result = solve_duct(problem)
    except DuctSolverError as exc:
        files = {"duct_history.csv": _history_csv(exc.history or [])}
        raise _Partial(files, exc) from exc
    files = _duct_files(result, problem)
    if result.status != CONVERGED:
        raise _Partial(files, NumericalError(f"duct iteration ended with status {result.status}: {result.message}"))
    return files


HANDLERS = {
    "polar": cmd_polar,
    "normal": cmd_normal,
    "oblique": cmd_oblique,
    "mach": cmd_mach,
    "coeffs": cmd_coeffs,
    "duct": cmd_duct,
}


class _Partial(Exception):
    """Carries files worth writing alongside the error that ends the run."""

    def __init__(self, files, error):
        super().__init__(str(error))
        self.files = files
        self.error = error


def _write(cfg: RunConfig, files: dict) -> list:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(files):
        if name.rsplit(".", 1)[-1] not in cfg.formats:
            continue
        data = files[name].encode("utf-8")
        (cfg.out_dir / name).write_bytes(data)
        written.append({"name": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {
        "tool": "shockpolar",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.raw,
        "files": written,
    }
    (cfg.out_dir / "manifest.json").write_text(json_text(manifest), encoding="utf-8")
    return written


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, InvalidStateError):
        return EXIT_CONFIG
    if isinstance(exc, PhysicalDomainError):
        return EXIT_PHYSICAL
    return EXIT_NUMERICAL


def _diagnostic(exc: BaseException, code: int) -> str:
    return json.dumps({"status": "error", "exit_code": code, "error": type(exc).__name__,
                       "message": " ".join(str(exc).split())})


def run(cfg: RunConfig) -> int:
    """Execute one command and write its files; returns the exit status."""
    try:
        files = HANDLERS[cfg.command](cfg)
    except _Partial as part:
        _write(cfg, part.files)
        code = exit_code_for(part.error)
        print(_diagnostic(part.error, code), file=sys.stderr)
        return code
    written = _write(cfg, files)
    print(json.dumps({"status": "ok", "command": cfg.command, "out_dir": str(cfg.out_dir),
                      "files": [w["name"] for w in written]}))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except (ShockPolarError, ValueError, ArithmeticError) as exc:
        code = EXIT_CONFIG if isinstance(exc, ValueError) and not isinstance(exc, ShockPolarError) else \
            exit_code_for(exc)
        print(_diagnostic(exc, code), file=sys.stderr)
        return code
