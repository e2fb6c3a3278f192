"""
Command-line front end.

    bec-sr [COMMAND] --config run.json --out results/ [--threads N] [--format csv|json]

COMMAND overrides the config's "command" field and is one of
structure-factor, gain, spectrum, sideband-ratio, dynamics, sweep.
Exit codes: 0 success (physics warnings go in the summary), 2 bad config,
3 numerical failure. Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import gain_engine as ge
from . import sidemode_dynamics as sd
from . import spectroscopy as sp
from . import structure_factor as sf
from .output import write_csv, write_json
from .physcore import ParameterError, SystemParams, validate

COMMANDS = ("structure-factor", "gain", "spectrum", "sideband-ratio", "dynamics", "sweep")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


NUMERICAL_ERRORS = (ge.QuadratureError, sd.DynamicsError, sd.FitQualityError,
                    sp.DegenerateSpectrumError, sf.ResolutionError, FloatingPointError)


@dataclass
class RunConfig:
    command: str
    params: SystemParams
    options: dict[str, Any] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path, command: str | None = None) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno,
                              column=exc.colno, position=exc.pos) from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw, command)

    @classmethod
    def from_dict(cls, raw: dict, command: str | None = None) -> "RunConfig":
        cmd = command or raw.get("command")
        if cmd not in COMMANDS:
            raise ConfigError(f"unknown or missing command {cmd!r}; expected one of {list(COMMANDS)}")
        try:
            params = SystemParams.from_dict(raw)
        except ParameterError as exc:
            raise ConfigError(str(exc), field=exc.field) from None
        options = raw.get("options", {})
        if not isinstance(options, dict):
            raise ConfigError("options must be a JSON object")
        raw = {**raw, "command": cmd}
        return cls(cmd, params, options, raw)


def _grid(spec, name):
    """A list of numbers, or {"start", "stop", "num", "log": bool}."""
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if isinstance(spec, dict):
        try:
            fn = np.geomspace if spec.get("log") else np.linspace
            return fn(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        except KeyError as exc:
            raise ConfigError(f"{name}: missing key {exc}") from None
    raise ConfigError(f"{name}: expected a list or {{start, stop, num}}")


def _require_trap(cfg: RunConfig):
    if cfg.params.trap is None:
        raise ConfigError("this command needs a 'trap' section", field="trap")
    return cfg.params.trap


def cmd_structure_factor(cfg, out, fmt, executor):
    lat = cfg.params.lattice
    lo, hi = cfg.options.get("kx_range", [-3 * 2 * math.pi / lat.a0, 3 * 2 * math.pi / lat.a0])
    n = int(cfg.options.get("n_points", 2001))
    rows = sf.sample_axis(lat, np.linspace(float(lo), float(hi), n))
    if fmt == "json":
        write_json(out / "structure_factor.json",
                   {"columns": list(sf.SAMPLE_COLUMNS), "rows": rows}, cfg.raw)
    else:
        write_csv(out / "structure_factor.csv", sf.SAMPLE_COLUMNS, rows, cfg.raw)
    peak = float(np.max(np.abs(rows[:, 4])))
    return {"samples": n, "peak_value": peak}, f"structure-factor: {n} samples, peak |rho| = {peak:.6g}"


def cmd_gain(cfg, out, fmt, executor):
    lat, beam = cfg.params.lattice, cfg.params.beam
    thetas = [float(t) for t in cfg.options.get("thetas", [ge.THETA_Z, ge.THETA_X])]
    methods = cfg.options.get("methods", ["closed_form", "plane"])
    rows = []
    for theta in thetas:
        for method in methods:
            if method == "closed_form":
                for d, th in (("z", ge.THETA_Z), ("x", ge.THETA_X)):
                    if math.isclose(theta, th, abs_tol=1e-12):
                        r = ge.gain_closed_form(lat, beam, d)
                        rows.append((theta, r.method, r.value))
            elif method == "plane":
                r = ge.gain_plane_quadrature(lat, beam, theta)
                rows.append((theta, r.method, r.value))
            elif method == "shell":
                r = ge.gain_shell_quadrature(lat, beam, theta)
                rows.append((theta, r.method, r.value))
            else:
                raise ConfigError(f"unknown gain method {method!r}")
    gx = ge.gain_closed_form(lat, beam, "x").value
    gz = ge.gain_closed_form(lat, beam, "z").value
    summary = {"rows": [{"theta": t, "method": m, "gain": g} for t, m, g in rows],
               "closed_form_ratio_x_over_z": gx / gz, "regime": ge.regime(lat)}
    if fmt == "json":
        write_json(out / "gain.json", summary, cfg.raw)
    else:
        write_csv(out / "gain.csv", ("theta", "method", "gain"), rows, cfg.raw)
    return summary, f"gain: {len(rows)} evaluations, G_x/G_z (closed form) = {gx / gz:.6g}"


def cmd_spectrum(cfg, out, fmt, executor):
    lat, beam = cfg.params.lattice, cfg.params.beam
    q_range = cfg.options.get("q_range")
    n_points = cfg.options.get("n_points")
    threshold = float(cfg.options.get("peak_threshold", 1e-3))
    try:
        spec = sp.spectrum(lat, beam, q_range, n_points)
    except sp.GridTooCoarseError as exc:
        raise ConfigError(str(exc)) from None
    peaks = [{"q": p.q, "n": p.order, "gain": p.gain, "q_max": p.q_max}
             for p in spec.peaks_above(threshold)]
    if fmt == "json":
        write_json(out / "spectrum.json", {"q": spec.q_grid, "gain": spec.gain, "peaks": peaks}, cfg.raw)
    else:
        write_csv(out / "spectrum.csv", ("q", "gain"), zip(spec.q_grid, spec.gain), cfg.raw)
        write_json(out / "peaks.json", {"peaks": peaks}, cfg.raw)
    return ({"peak_count": len(peaks), "peaks": peaks},
            f"spectrum: {len(peaks)} peak(s) above {threshold:g} of max")


def cmd_sideband_ratio(cfg, out, fmt, executor):
    lat, beam = cfg.params.lattice, cfg.params.beam
    grid = cfg.options.get("sigma_x_grid")
    if grid is None:
        r = sp.sideband_details(lat, beam)
        summary = {"sigma_x": lat.sigma_x, "ratio": r.ratio, "second_kind": r.second_kind}
        rows = [(lat.sigma_x, r.ratio)]
    else:
        curve = sp.ratio_curve(lat, beam, _grid(grid, "sigma_x_grid"))
        rows = list(zip(curve.sigma_x, curve.ratio))
        summary = {"monotone": curve.monotone, "crossover_sigma_x": curve.crossover_sigma,
                   "points": len(rows)}
    if fmt == "json":
        write_json(out / "sideband_ratio.json",
                   {**summary, "rows": [{"sigma_x": s, "ratio": r} for s, r in rows]}, cfg.raw)
    else:
        write_csv(out / "sideband_ratio.csv", ("sigma_x", "ratio"), rows, cfg.raw)
    if grid is None:
        return summary, f"sideband-ratio: {summary['ratio']:.8g}"
    return summary, f"sideband-ratio: {len(rows)} points, monotone={str(summary['monotone']).lower()}"


def cmd_dynamics(cfg, out, fmt, executor):
    lat = cfg.params.lattice
    o = cfg.options
    mode = o.get("mode", "free")
    G = float(o.get("G_q", 1.0))
    if mode == "trapped":
        couplings = sd.poisson_couplings(_require_trap(cfg))
    elif mode == "free":
        couplings = sd.free_coupling()
    else:
        raise ConfigError(f"dynamics mode must be 'free' or 'trapped', got {mode!r}")
    rng = np.random.default_rng(int(o["rng_seed"])) if "rng_seed" in o else None
    state = sd.initial_state(couplings, lat.N, float(o.get("seed", 1.0)), rng)
    traj = sd.integrate(state, couplings, G, lat.N, float(o.get("t_end", 20.0 / G)), mode=mode,
                        depleted=bool(o.get("depleted", True)),
                        n_samples=int(o.get("n_samples", 501)))
    cols = ["t", "c0_pop"] + [f"n{int(n)}_pop" for n in traj.levels]
    rows = np.column_stack([traj.t, traj.condensate_population, (np.abs(traj.c_tilde) ** 2).T])
    report = {"mode": mode, "G_q": G, "levels": len(traj.levels)}
    try:
        fit = sd.fit_growth_rate(traj)
        report.update(fitted_rate=fit.rate, r2=fit.r2, loss=G - fit.rate)
    except sd.FitQualityError as exc:
        report.update(fitted_rate=None, fit_warning=str(exc))
    if mode == "trapped":
        report["omega_T"] = couplings.omega_T
    tp = traj.total_population
    report["max_population_drift"] = float(np.max(np.abs(tp / tp[0] - 1)))
    if fmt == "json":
        write_json(out / "trajectory.json", {"columns": cols, "rows": rows}, cfg.raw)
    else:
        write_csv(out / "trajectory.csv", cols, rows, cfg.raw)
    write_json(out / "fit.json", report, cfg.raw)
    rate = report.get("fitted_rate")
    return report, f"dynamics: fitted rate = {rate:.6g}" if rate is not None else "dynamics: no fit window"


def _scaling_point(args):
    lat, beam, M, theta = args
    return ge.gain_plane_quadrature(lat.replace(M=int(M)), beam, theta).value


def cmd_sweep(cfg, out, fmt, executor):
    o = cfg.options
    kind = o.get("kind", "scaling")
    lat, beam = cfg.params.lattice, cfg.params.beam
    if kind == "scaling":
        Ms = [int(m) for m in o.get("M_values", [5, 10, 20, 40])]
        rows, fits = [], {}
        for label, theta in (("x", ge.THETA_X), ("z", ge.THETA_Z)):
            jobs = [(lat, beam, M, theta) for M in Ms]
            gains = list(executor.map(_scaling_point, jobs)) if executor else list(map(_scaling_point, jobs))
            fit = ge.fit_power_law(Ms, gains)
            fits[label] = {"exponent": fit.exponent, "r2": fit.r2}
            rows += [(theta, "plane_quadrature", M, g) for M, g in zip(Ms, gains)]
        summary = {"kind": kind, "fits": fits,
                   "warnings": validate(lat, beam).warnings()}
        cols = ("theta", "method", "M", "gain")
        line = f"sweep: exponent x = {fits['x']['exponent']:.4f}, z = {fits['z']['exponent']:.4f}"
    elif kind == "dephasing":
        trap = _require_trap(cfg)
        wT = _grid(o.get("omega_T", {"start": 0.01, "stop": 0.1, "num": 6, "log": True}), "omega_T")
        G = float(o.get("G_q", 1.0))
        try:
            fit = sd.dephasing_loss(wT, trap.omega_r, G, lat.N, check=False, executor=executor)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows = [(r["omega_T"], r["fitted_rate"], r["loss"]) for r in fit.records()]
        summary = {"kind": kind, "omega_r": trap.omega_r, "G_q": G, "exponent": fit.exponent,
                   "coefficient": fit.coefficient, "r2": fit.r2, "points": fit.records()}
        if fit.r2 < 0.9:
            summary["warnings"] = [f"fit R^2 = {fit.r2:.3f} < 0.9"]
        cols = ("omega_T", "fitted_rate", "loss")
        line = f"sweep: dephasing exponent = {fit.exponent:.4f} (R^2 = {fit.r2:.4f})"
    else:
        raise ConfigError(f"unknown sweep kind {kind!r}")
    if fmt == "json":
        write_json(out / "sweep.json", {**summary, "columns": list(cols), "rows": rows}, cfg.raw)
    else:
        write_csv(out / "sweep.csv", cols, rows, cfg.raw)
        write_json(out / "sweep.json", summary, cfg.raw)
    return summary, line


HANDLERS = {
    "structure-factor": cmd_structure_factor,
    "gain": cmd_gain,
    "spectrum": cmd_spectrum,
    "sideband-ratio": cmd_sideband_ratio,
    "dynamics": cmd_dynamics,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig, out: Path, fmt: str = "csv", threads: int = 1):
    """Execute one configured command; returns (summary, one-line text)."""
    out.mkdir(parents=True, exist_ok=True)
    warnings = validate(cfg.params.lattice, cfg.params.beam).warnings()
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else nullcontext(None)
    with pool as executor:
        summary, line = HANDLERS[cfg.command](cfg, out, fmt, executor)
    if warnings:
        summary.setdefault("warnings", warnings)
    return summary, line


def _error(kind: str, message: str, code: int, **detail) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code, **detail}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bec-sr", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.command)
        summary, line = run(cfg, Path(args.out), args.format, max(1, args.threads))
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_CONFIG, **exc.detail)
    except NUMERICAL_ERRORS as exc:
        return _error("numerical", str(exc), EXIT_NUMERICAL)
    if summary.get("warnings"):
        line += f" [warnings: {len(summary['warnings'])}]"
    print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
