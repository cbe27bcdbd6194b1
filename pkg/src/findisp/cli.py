"""Command-line front end.

Every subcommand writes its artifacts into ``--out`` together with
``config.resolved.json``, the full set of values actually used.  Output
bytes depend only on the configuration: grid points are farmed out to a
thread pool (capped by ``FINDISP_THREADS``) and collected back in order.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .beam import (
    BeamParams,
    ROTARY_DIVISORS,
    beam_group_velocity_inf,
    beam_omega,
    beam_omega_inf,
    group_velocity_fd,
    jf_omission_error,
)
from .core import DispersionCurve, MaterialSpec, Model, circular_section
from .errors import ExtractionError, FindispError
from .fem import (
    ELEMENT_TYPES,
    ExcitationProtocol,
    InitialField,
    RodMesh,
    TipSinusoid,
    default_length,
    extract_frequency,
    extract_wavelength,
    simulate,
)
from .rod import deviation_percent, rod_group_velocity, rod_kappa, rod_omega, rod_omega_inf
from .statics import StaticCase, solve_static

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

CURVE_HEADER = ("kappa", "omega", "omega_inf", "c_g", "deviation_pct")
BEAM_MODELS = (Model.CONVENTIONAL.value, Model.INEXTENSIONAL.value)
ALL_MODELS = tuple(m.value for m in Model)

TWO_PI = "6.283185307179586"
PI = "3.141592653589793"

# figure-reproduction bundles; explicit flags override them
PRESETS = {
    "fig-axial": ("rod-dispersion", {"kappa": f"0:{TWO_PI}:64", "B": "0,0.05,0.1"}),
    "fig-flex": (
        "beam-dispersion",
        {"model": "conventional,inextensional", "kappa": f"0:{TWO_PI}:64", "B": "0.05,0.1"},
    ),
    "fig-group-velocity": (
        "group-velocity",
        {"model": "rod,conventional,inextensional", "kappa": f"0.1:{TWO_PI}:63", "B": "0,0.1"},
    ),
    "fig-error": (
        "deviation",
        {"model": "rod,conventional,inextensional", "kappa": PI, "B": "0.02:0.2:10"},
    ),
    "fig-jf": (
        "jf-error",
        {"model": "conventional,inextensional", "ratios": "0.01,0.025,0.05,0.1,0.2"},
    ),
    "fig-rod-fe": ("simulate-rod", {"B": "0.1", "omega": PI}),
    "fig-flex-ea": ("static", {"model": "conventional,inextensional", "load": "-0.5"}),
}


class UsageError(ValueError):
    pass


# ------------------------------------------------------------ parsing


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` (inclusive ends), a comma list, or one number."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must look like start:stop:count")
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 1:
                raise UsageError(f"grid {text!r}: count must be >= 1")
            values = np.linspace(start, stop, count) if count > 1 else np.array([start])
        else:
            values = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse grid {text!r}") from None
    if values.size == 0:
        raise UsageError("empty grid")
    if not np.all(np.isfinite(values)):
        raise UsageError(f"grid {text!r} contains non-finite values")
    return values


def parse_models(text: str, allowed: tuple[str, ...]) -> list[Model]:
    out = []
    for name in str(text).split(","):
        name = name.strip().lower()
        if name not in allowed:
            raise UsageError(f"unknown model {name!r}; valid models: {', '.join(allowed)}")
        out.append(Model(name))
    return out


def thread_count() -> int:
    raw = os.environ.get("FINDISP_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FINDISP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"FINDISP_THREADS must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn, items):
    """Map in a thread pool; results come back in input order."""
    items = list(items)
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------ curves


def dispersion_curve(model, kappa, B: float, params: BeamParams | None = None) -> DispersionCurve:
    """Sample one branch on a nonnegative wavenumber grid.

    ``c_g`` and ``deviation_pct`` are NaN at kappa = 0.
    """
    model = Model.parse(model)
    p = params or BeamParams()
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise UsageError("wavenumbers must be >= 0 (the relations are even in kappa)")
    if B < 0:
        raise UsageError("amplitude B must be >= 0")
    c0, r0 = p.material.c0, p.section.r0

    def point(k):
        if k == 0.0:
            return 0.0, 0.0, math.nan, math.nan
        if model is Model.ROD:
            w = rod_omega(k, B, c0)
            w_inf = rod_omega_inf(k, c0)
            cg = rod_group_velocity(k, B, c0)
        else:
            w = beam_omega(model, k, B, p)
            w_inf = beam_omega_inf(k, c0, r0)
            if B == 0:
                cg = beam_group_velocity_inf(k, c0, r0)
            elif k > 2e-6 * max(1.0, k):
                cg = group_velocity_fd(model, k, B, p)
            else:
                cg = math.nan
        return w, w_inf, cg, deviation_percent(w, w_inf)

    rows = np.array(ordered_map(point, kappa), dtype=float).reshape(-1, 4)
    return DispersionCurve(
        model, float(B), kappa, rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]
    )


def amplitude_sweep(model, kappa: float, B, params: BeamParams | None = None) -> DispersionCurve:
    """Rows over amplitudes at one wavenumber (kappa column is constant)."""
    B = np.asarray(B, dtype=float)
    if np.any(B < 0):
        raise UsageError("amplitudes must be >= 0")
    parts = ordered_map(lambda b: dispersion_curve(model, [kappa], float(b), params), B)
    stack = lambda name: np.concatenate([getattr(c, name) for c in parts])
    return DispersionCurve(
        Model.parse(model),
        math.nan,
        stack("kappa"),
        stack("omega"),
        stack("omega_inf"),
        stack("c_g"),
        stack("deviation_pct"),
        {"B": B.tolist()},
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_curve_csv(curve: DispersionCurve, path: str | Path) -> Path:
    """Write ``kappa,omega,omega_inf,c_g,deviation_pct`` with 17 significant digits."""
    if len(curve) == 0:
        raise UsageError("refusing to write an empty curve")
    if np.any(np.diff(curve.kappa) < 0):
        raise UsageError("curve samples must be sorted by kappa")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        cols = (curve.kappa, curve.omega, curve.omega_inf, curve.c_g, curve.deviation_pct)
        for row in zip(*cols):
            w.writerow([_fmt(x) for x in row])
    return path


# ------------------------------------------------------------ runs


class Run:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, out: Path):
        self.out = out
        self.written: list[Path] = []
        self._created = not out.exists()

    def path(self, name: str) -> Path:
        # the directory appears with the first artifact, after validation
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.written.append(p)
        return p

    def cleanup(self):
        for p in self.written:
            p.unlink(missing_ok=True)
        if self._created and self.out.is_dir() and not any(self.out.iterdir()):
            self.out.rmdir()


def _material(args) -> MaterialSpec:
    return MaterialSpec(E=args.E, rho=args.rho)


def _params(args) -> BeamParams:
    return BeamParams(
        _material(args),
        circular_section(args.a),
        include_jf=args.include_jf,
        rotary_divisor=args.rotary_divisor,
    )


def _curve_name(models, amplitudes, model, i) -> str:
    if len(models) == 1 and len(amplitudes) == 1:
        return "curve.csv"
    if len(amplitudes) == 1:
        return f"curve_{model.value}.csv"
    return f"curve_{model.value}_B{i}.csv"


def _run_curves(args, run: Run, models) -> tuple[str, dict]:
    kappa = parse_grid(args.kappa)
    amplitudes = parse_grid(args.B)
    params = _params(args)
    files = {}
    for model in models:
        for i, b in enumerate(amplitudes):
            curve = dispersion_curve(model, kappa, float(b), params)
            name = _curve_name(models, amplitudes, model, i)
            emit_curve_csv(curve, run.path(name))
            files[name] = {"model": model.value, "B": float(b)}
    summary = f"{args.command}: wrote {len(files)} curve(s) of {kappa.size} rows to {run.out}"
    return summary, {"files": files}


def cmd_rod_dispersion(args, run):
    return _run_curves(args, run, [Model.ROD])


def cmd_beam_dispersion(args, run):
    return _run_curves(args, run, parse_models(args.model, BEAM_MODELS))


def cmd_group_velocity(args, run):
    return _run_curves(args, run, parse_models(args.model, ALL_MODELS))


def cmd_deviation(args, run):
    models = parse_models(args.model, ALL_MODELS)
    kappa = parse_grid(args.kappa)
    if kappa.size != 1:
        raise UsageError("deviation takes a single --kappa value")
    amplitudes = parse_grid(args.B)
    params = _params(args)
    files = {}
    for model in models:
        curve = amplitude_sweep(model, float(kappa[0]), amplitudes, params)
        name = "curve.csv" if len(models) == 1 else f"curve_{model.value}.csv"
        emit_curve_csv(curve, run.path(name))
        files[name] = {"model": model.value, "B": amplitudes.tolist()}
    summary = f"deviation: wrote {len(files)} sweep(s) of {amplitudes.size} amplitudes to {run.out}"
    return summary, {"files": files}


def cmd_jf_error(args, run):
    models = parse_models(args.model, BEAM_MODELS)
    ratios = parse_grid(args.ratios)
    if np.any(ratios <= 0):
        raise UsageError("a/B ratios must be > 0")
    kappa = parse_grid(args.kappa)
    if kappa.size != 1:
        raise UsageError("jf-error takes a single --kappa value")
    B = parse_grid(args.B)
    if B.size != 1:
        raise UsageError("jf-error takes a single --B value")
    m = _material(args)
    path = run.path("jf_error.csv")
    rows = []
    for model in models:
        errs = ordered_map(
            lambda r: jf_omission_error(float(r), model, float(kappa[0]), float(B[0]), m), ratios
        )
        rows += [(model.value, r, e) for r, e in zip(ratios, errs)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "a_over_B", "error_pct"])
        for model, r, e in rows:
            w.writerow([model, _fmt(r), _fmt(e)])
    worst = max(e for _, _, e in rows)
    return f"jf-error: wrote {len(rows)} rows to {path} (max error {worst:.3g}%)", {}


def cmd_simulate_rod(args, run):
    m = _material(args)
    sec = circular_section(args.a)
    B = parse_grid(args.B)
    if B.size != 1:
        raise UsageError("simulate-rod takes a single --B value")
    amp = float(B[0])
    if args.excitation == "tip":
        if args.omega is None:
            raise UsageError("--omega is required for a tip excitation")
        ex = TipSinusoid(amp, float(args.omega))
        duration = math.ceil(ex.period / args.stride - 1e-9) * args.stride
    else:
        if args.kappa is None:
            raise UsageError("--kappa is required for an initial-field excitation")
        ex = InitialField(amp, float(parse_grid(args.kappa)[0]))
        duration = ex.period(m.c0)
    if args.duration is not None:
        duration = args.duration
    L = args.L if args.L is not None else default_length(ex, m.c0)
    mesh = RodMesh(L, args.n_elem, args.element)
    rec = simulate(mesh, m, sec, ExcitationProtocol(ex, duration, args.stride), rtol=args.rtol)
    path = run.path("simulation.csv")
    extra = {"L": L, "duration": duration}
    if args.excitation == "tip":
        k_fe = extract_wavelength(rec, method=args.method)
        k_exact = rod_kappa(ex.frequency, amp, m.c0)
        err = 100.0 * (k_fe - k_exact) / k_exact
        rec.meta.update(kappa_fe=k_fe, kappa_exact=k_exact, error_pct=err)
        summary = f"simulate-rod: kappa_fe={k_fe:.6f} kappa_exact={k_exact:.6f} error={err:+.3f}%"
    else:
        w_fe = extract_frequency(rec)
        w_exact = rod_omega(ex.wavenumber, amp, m.c0)
        e0 = rec.total_energy[0]
        drift = abs(rec.total_energy[-1] - e0) / e0 if e0 > 0 else 0.0
        rec.meta.update(omega_fe=w_fe, omega_closed_form=w_exact, energy_drift=drift)
        summary = (
            f"simulate-rod: omega_fe={w_fe:.6f} omega_closed_form={w_exact:.6f} "
            f"energy drift={drift:.2e}"
        )
    run.written.append(rec.write(path))
    extra.update(rec.meta)
    return summary, {"result": extra}


def cmd_static(args, run):
    models = parse_models(args.model, ALL_MODELS)
    load = parse_grid(args.load)
    if load.size != 1:
        raise UsageError("static takes a single --load value")
    results = {}
    for model in models:
        case = StaticCase(
            model,
            float(load[0]),
            L=args.L if args.L is not None else 1.0,
            material=_material(args),
            section=circular_section(args.a),
            g=args.g,
            n_points=args.n_points,
            rod_load=args.rod_load,
            include_jf=args.include_jf,
            drop_ea=args.drop_ea,
            moment_denominator=args.moment_denominator,
        )
        sol = solve_static(case)
        name = "static.csv" if len(models) == 1 else f"static_{model.value}.csv"
        run.written.append(sol.write(run.path(name)))
        results[name] = {"tip_u_over_L": sol.tip_u, "tip_v_over_L": sol.tip_v}
    tips = ", ".join(
        f"{k}: u/L={v['tip_u_over_L']:.6g} v/L={v['tip_v_over_L']:.6g}" for k, v in results.items()
    )
    return f"static: {tips}", {"results": results}


COMMANDS = {
    "rod-dispersion": cmd_rod_dispersion,
    "beam-dispersion": cmd_beam_dispersion,
    "group-velocity": cmd_group_velocity,
    "deviation": cmd_deviation,
    "jf-error": cmd_jf_error,
    "simulate-rod": cmd_simulate_rod,
    "static": cmd_static,
}

COMMON_DEFAULTS = {
    "out": ".",
    "preset": None,
    "E": 1.0,
    "rho": 1.0,
    "a": 0.1,
    "include_jf": True,
    "rotary_divisor": "unity",
}

# per-subcommand defaults, applied under flags, --config and --preset
DEFAULTS = {
    "rod-dispersion": {"kappa": f"0:{TWO_PI}:64", "B": "0.1"},
    "beam-dispersion": {"model": "conventional", "kappa": f"0:{TWO_PI}:64", "B": "0.1"},
    "group-velocity": {"model": "rod", "kappa": f"0.1:{TWO_PI}:63", "B": "0.1"},
    "deviation": {"model": "rod", "kappa": PI, "B": "0.02:0.2:10"},
    "jf-error": {
        "model": "inextensional",
        "kappa": PI,
        "B": "0.1",
        "ratios": "0.01,0.025,0.05,0.1,0.2",
    },
    "simulate-rod": {
        "excitation": "tip",
        "B": "0.1",
        "omega": None,
        "kappa": None,
        "n_elem": 60,
        "element": "hermite",
        "L": None,
        "duration": None,
        "stride": 1e-4,
        "rtol": 1e-8,
        "method": "front",
    },
    "static": {
        "model": "inextensional",
        "load": "-0.5",
        "rod_load": "distributed",
        "L": None,
        "g": 0.0,
        "n_points": 200,
        "drop_ea": False,
        "moment_denominator": "printed",
    },
}


# ------------------------------------------------------------ argparse


def _common(p: argparse.ArgumentParser, beam: bool = True):
    p.add_argument("--out", help="output directory, created if missing (default .)")
    p.add_argument("--config", help="JSON file of option values; unknown keys are rejected")
    p.add_argument("--preset", choices=sorted(PRESETS), help="figure-reproduction bundle")
    p.add_argument("--E", type=float, help="Young's modulus (default 1)")
    p.add_argument("--rho", type=float, help="density (default 1)")
    p.add_argument("--a", type=float, help="section radius (default 0.1)")
    if beam:
        p.add_argument(
            "--include-jf",
            action=argparse.BooleanOptionalAction,
            help="keep terms with the fourth area moment (default on)",
        )
        p.add_argument("--rotary-divisor", choices=ROTARY_DIVISORS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="findisp",
        description="Finite-strain dispersion and static deflection of rods and beams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    # only flags actually given land in the namespace; resolve() fills the rest
    add = lambda name, helptext: sub.add_parser(
        name, help=helptext, argument_default=argparse.SUPPRESS
    )

    p = add("rod-dispersion", "closed-form rod dispersion curve")
    _common(p)
    p.add_argument("--kappa", help="wavenumber grid start:stop:count")
    p.add_argument("--B", help="amplitude(s)")

    for name, helptext in (
        ("beam-dispersion", "beam dispersion curve by root finding"),
        ("group-velocity", "dispersion curve with group velocity for any model"),
    ):
        p = add(name, helptext)
        _common(p)
        p.add_argument("--model", help="comma-separated models")
        p.add_argument("--kappa", help="wavenumber grid start:stop:count")
        p.add_argument("--B", help="amplitude(s)")

    p = add("deviation", "frequency deviation versus amplitude at one wavenumber")
    _common(p)
    p.add_argument("--model", help="comma-separated models")
    p.add_argument("--kappa", help="single wavenumber")
    p.add_argument("--B", help="amplitude grid")

    p = add("jf-error", "frequency change from dropping fourth-moment terms")
    _common(p)
    p.add_argument("--model", help="comma-separated beam models")
    p.add_argument("--kappa", help="single wavenumber")
    p.add_argument("--B", help="single amplitude")
    p.add_argument("--ratios", help="a/B values")

    p = add("simulate-rod", "nonlinear finite-element rod simulation")
    _common(p, beam=False)
    p.add_argument("--excitation", choices=("tip", "initial"))
    p.add_argument("--B", help="amplitude")
    p.add_argument("--omega", type=float, help="tip drive frequency")
    p.add_argument("--kappa", help="initial-field wavenumber")
    p.add_argument("--n-elem", type=int)
    p.add_argument("--element", choices=ELEMENT_TYPES)
    p.add_argument("--L", type=float, help="rod length (default from the excitation)")
    p.add_argument("--duration", type=float, help="simulated time (default one period)")
    p.add_argument("--stride", type=float, help="output sampling interval")
    p.add_argument("--rtol", type=float)
    p.add_argument("--method", choices=("front", "half-wave"))

    p = add("static", "static deflection of a rod or cantilever beam")
    _common(p)
    p.add_argument("--model", help="comma-separated models")
    p.add_argument("--load", help="normalized load")
    p.add_argument("--rod-load", choices=("distributed", "tip"))
    p.add_argument("--L", type=float, help="length (default 1)")
    p.add_argument("--g", type=float, help="gravitational acceleration")
    p.add_argument("--n-points", type=int)
    p.add_argument("--drop-ea", action="store_true", help="conventional beam without the EA term")
    p.add_argument("--moment-denominator", choices=("printed", "corrected"))
    return parser


def resolve(argv: list[str]) -> argparse.Namespace:
    """Parse argv and fill unset options from --config, --preset and defaults."""
    args = build_parser().parse_args(argv)
    defaults = dict(COMMON_DEFAULTS)
    if args.command == "simulate-rod":
        del defaults["include_jf"], defaults["rotary_divisor"]
    defaults.update(DEFAULTS[args.command])
    layers = []
    config = getattr(args, "config", None)
    if config:
        try:
            cfg = json.loads(Path(config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(cfg) - set(defaults))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        layers.append(cfg)
    preset = getattr(args, "preset", None) or (layers[0].get("preset") if layers else None)
    if preset:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; valid presets: {', '.join(sorted(PRESETS))}")
        target, values = PRESETS[preset]
        if target != args.command:
            raise UsageError(f"preset {preset!r} belongs to {target!r}, not {args.command!r}")
        layers.append(values)
    layers.append(defaults)
    for key in defaults:
        if hasattr(args, key):
            continue
        value = next(layer[key] for layer in layers if key in layer)
        setattr(args, key, value)
    if hasattr(args, "config"):
        del args.config
    _check_types(args, defaults)
    return args


def _check_types(args, defaults):
    numeric = {"E", "rho", "a", "omega", "L", "duration", "stride", "rtol", "g"}
    integer = {"n_elem", "n_points"}
    for key in defaults:
        value = getattr(args, key)
        if value is None:
            continue
        try:
            if key in numeric:
                setattr(args, key, float(value))
            elif key in integer:
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError
                setattr(args, key, int(value))
            elif key in ("include_jf", "drop_ea") and not isinstance(value, bool):
                raise ValueError
        except (TypeError, ValueError):
            raise UsageError(f"option {key!r} has an invalid value {value!r}") from None


def _resolved_config(args) -> dict:
    cfg = dict(sorted(vars(args).items()))
    cfg["version"] = __version__
    return cfg


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = resolve(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"findisp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"findisp: error: {exc}", file=sys.stderr)
        return EXIT_IO

    out = Path(args.out)
    r = Run(out)
    try:
        summary, extra = COMMANDS[args.command](args, r)
        cfg = _resolved_config(args)
        cfg.update(extra)
        cfg_path = r.path("config.resolved.json")
        cfg_path.write_text(json.dumps(cfg, indent=2, sort_keys=True, default=str) + "\n")
    except ExtractionError as exc:
        return _fail(r, exc, EXIT_SOLVER)
    except (UsageError, ValueError) as exc:
        return _fail(r, exc, EXIT_INVALID)
    except FindispError as exc:
        return _fail(r, exc, EXIT_SOLVER)
    except OSError as exc:
        return _fail(r, exc, EXIT_IO)
    print(summary)
    return EXIT_OK


def _fail(r: Run, exc: Exception, code: int) -> int:
    r.cleanup()
    print(f"findisp: error: {exc}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
