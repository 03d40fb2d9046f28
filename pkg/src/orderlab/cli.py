"""Command-line front end.

Every subcommand writes ``<name>.csv`` (and ``<name>.json`` when requested)
plus ``<name>.manifest.json`` into the output directory. Settings resolve as
command-line flag > JSON config file (``--config``) > built-in default. The
default output directory comes from ``$ORDERLAB_OUTPUT_DIR`` when set.

Exit codes: 0 success, 2 usage, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import disk, dynamics, experiments, halfplane
from .errors import DomainError, NumericalError, PoleError, ReportIncomplete
from .io import format_table, read_table, write_manifest

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "ORDERLAB_OUTPUT_DIR"
FORMATS = ("csv", "json")


class UsageError(Exception):
    pass


class PartialOutput(Exception):
    """Outputs were written but some rows failed."""


# --------------------------------------------------------------------------
# value parsers
# --------------------------------------------------------------------------


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _formats(text) -> tuple[str, ...]:
    items = tuple(text) if isinstance(text, (list, tuple)) else tuple(s.strip() for s in str(text).split(","))
    bad = [f for f in items if f not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {FORMATS}, got {text!r}")
    return items


# --------------------------------------------------------------------------
# parser: (flag, key, type, default, help) per subcommand
# --------------------------------------------------------------------------

BOOL = "bool"

COMMON = [
    ("--output-dir", "output_dir", str, None, f"output directory (default: ${OUTPUT_ENV} or ./orderlab_out)"),
    ("--format", "format", _formats, ("csv",), "table formats, comma-separated from csv,json"),
]

SUBCOMMANDS = {
    "halfplane": (
        "Knife-edge diffraction: exact field, edge amplitude, failure cross section.",
        [
            ("--k", "k", _float_list, (1.0,), "wavenumber(s), 1/length (hbar = 1), comma-separated"),
            ("--theta0", "theta0", float, math.pi / 4, "incidence angle from the +x axis, radians"),
            ("--field", "field", BOOL, False, "tabulate the exact field on a circle of radius --r"),
            ("--amplitude", "amplitude", BOOL, False, "tabulate the edge amplitude f(theta), length^(1/2)"),
            ("--sigma-f", "sigma_f", BOOL, False, "regularised failure cross section and closed form, length"),
            ("--r", "r", float, 10.0, "radius for --field, length"),
            ("--points", "points", int, 360, "number of angles over [0, 2 pi)"),
            ("--cone", "cone", float, 0.1, "exclusion half-width around each shadow boundary, radians"),
        ],
    ),
    "disk": (
        "Hard-disk partial waves: phase shifts, shift ratio, cross section.",
        [
            ("--k", "k", float, 1.0, "wavenumber, 1/length (hbar = 1)"),
            ("--a", "a", float, 1.0, "disk radius, length"),
            ("--ratio", "ratio", BOOL, False, "delta_1/delta_0 on a log grid of ka (dimensionless)"),
            ("--shifts", "shifts", BOOL, False, "phase shifts delta_0..delta_m-max on the ka grid, radians"),
            ("--sigma", "sigma", BOOL, False, "differential cross section at ka = k a, length per radian"),
            ("--ka-min", "ka_min", float, 1e-3, "smallest ka, dimensionless"),
            ("--ka-max", "ka_max", float, 100.0, "largest ka, dimensionless"),
            ("--points", "points", int, 200, "number of ka values, or of angles for --sigma"),
            ("--m-max", "m_max", int, 3, "highest partial wave for --shifts"),
        ],
    ),
    "evolve": (
        "Single two-body simulation on the mapped plane with checkpoints.",
        [
            ("--m1", "m1", float, 1.0, "mass of particle 1 (x axis), mass units"),
            ("--m2", "m2", float, 1.0, "mass of particle 2 (y axis), mass units"),
            ("--M", "M", float, 1.0, "effective mass of the mapped 2D particle, mass units"),
            ("--x0", "x0", float, 10.0, "initial position of particle 1, length"),
            ("--y0", "y0", float, 10.0, "initial position of particle 2, length"),
            ("--px", "px", float, -1.7677669529663689, "momentum of particle 1, 1/length (negative: toward the detector)"),
            ("--py", "py", float, -1.7677669529663689, "momentum of particle 2, 1/length"),
            ("--width", "width", float, 2.0, "packet standard deviation of |psi|^2 per particle, length"),
            ("--mask", "mask", str, "edge", "obstacle: edge, wall, disk, strip or none"),
            ("--a", "a", float, 1.0, "disk radius or strip half-width, length (mapped plane)"),
            ("--ppw", "ppw", float, 12.0, "grid points per wavelength"),
            ("--time", "time", float, 0.0, "total time, 1/energy (0: twice the arrival time)"),
            ("--dt", "dt", float, 0.0, "time step, 1/energy (0: automatic)"),
            ("--checkpoints", "checkpoints", int, 4, "number of equally spaced checkpoints"),
        ],
    ),
    "sweep-order": (
        "Order-of-arrival failure probability versus k (knife edge).",
        [
            ("--k", "k", _float_list, (2.5, 5.0, 10.0), "mapped wavenumbers, 1/length, strictly monotone"),
            ("--momentum-ratio", "momentum_ratio", _float_list, (), "sweep p_y/p_x instead of k (dimensionless)"),
            ("--width", "width", float, 0.0, "packet width per particle, length (0: 5/min k)"),
            ("--M", "M", float, 1.0, "effective mass, mass units"),
            ("--grid", "grid", int, 0, "nodes per axis (0: set by --ppw)"),
            ("--ppw", "ppw", float, 12.0, "grid points per wavelength when --grid is 0"),
            ("--workers", "workers", int, os.cpu_count() or 1, "parallel sweep points"),
            ("--thresholds", "thresholds", _float_list, experiments.THRESHOLDS, "p_fail levels for the threshold fit"),
        ],
    ),
    "sweep-coincidence": (
        "Coincidence detector (hard disk) versus ka.",
        [
            ("--k", "k", float, 1.0, "wavenumber, 1/length"),
            ("--ka-min", "ka_min", float, 1e-3, "smallest ka, dimensionless"),
            ("--ka-max", "ka_max", float, 50.0, "largest ka, dimensionless"),
            ("--points", "points", int, 120, "number of log-spaced ka values"),
        ],
    ),
    "microscope": (
        "Distinguishability of two disk placements from far-field intensity.",
        [
            ("--k", "k", float, 1.0, "wavenumber, 1/length"),
            ("--a", "a", float, 1.0, "disk radius, length"),
            ("--offsets", "offsets", _float_list, (0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0), "offsets in wavelengths"),
            ("--beam-width", "beam_width", float, 0.0, "Gaussian beam waist, length (0: one wavelength)"),
        ],
    ),
    "report": (
        "Dimensionless delta_t * E_bar at each detector's failure point.",
        [
            ("--order", "order", str, None, "table written by sweep-order"),
            ("--coincidence", "coincidence", str, None, "table written by sweep-coincidence"),
            ("--thresholds", "thresholds", _float_list, experiments.THRESHOLDS, "p_fail levels for the threshold fit"),
        ],
    ),
}


def _spec(name):
    return COMMON + SUBCOMMANDS[name][1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orderlab",
        description="Natural units throughout: hbar = 1, effective mass M = 1 unless overridden.",
    )
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True
    for name, (summary, _) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=summary, description=summary + " Units: hbar = 1.")
        p.add_argument("--config", default=None, help="JSON file of settings (flags override it)")
        for flag, key, kind, default, text in _spec(name):
            shown = ",".join(str(v) for v in default) if isinstance(default, tuple) else default
            text = f"{text} [default: {shown}]"
            if kind is BOOL:
                p.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS, help=text)
            else:
                p.add_argument(flag, dest=key, type=kind, default=argparse.SUPPRESS, help=text)
    return parser


def _coerce(kind, key, value):
    if kind is BOOL:
        if not isinstance(value, bool):
            raise UsageError(f"config key {key!r} must be true or false")
        return value
    try:
        if kind in (int, float) and isinstance(value, bool):
            raise ValueError
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return kind(value)
    except (ValueError, TypeError, argparse.ArgumentTypeError):
        raise UsageError(f"config key {key!r} has malformed value {value!r}") from None


def parse_config(argv=None) -> dict:
    """Resolve settings with precedence flag > config file > default."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    spec = _spec(command)
    config = {key: default for _, key, _, default, _ in spec}
    if config_path is not None:
        try:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file {config_path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {config_path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        kinds = {key: kind for _, key, kind, _, _ in spec}
        for raw, value in data.items():
            key = raw.replace("-", "_")
            if key not in kinds:
                raise UsageError(f"unknown config key {raw!r} for {command}; known: {', '.join(sorted(kinds))}")
            config[key] = _coerce(kinds[key], key, value)
    config.update(args)
    if config["output_dir"] is None:
        config["output_dir"] = os.environ.get(OUTPUT_ENV) or "orderlab_out"
    config["command"] = command
    _validate(config)
    return config


_POSITIVE = {"k", "a", "m1", "m2", "M", "width", "r", "ka_min", "ka_max", "ppw"}
_COUNTS = {"points", "m_max", "workers", "checkpoints"}


def _validate(cfg: dict) -> None:
    for key, value in cfg.items():
        if key in ("width",) and cfg["command"] == "sweep-order":
            if value < 0:
                raise UsageError("--width must be nonnegative")
            continue
        if key in _POSITIVE:
            values = value if isinstance(value, tuple) else (value,)
            if not values or not all(v > 0 and math.isfinite(v) for v in values):
                raise UsageError(f"--{key.replace('_', '-')} must be positive, got {value!r}")
        if key in _COUNTS and value < (0 if key == "m_max" else 1):
            raise UsageError(f"--{key.replace('_', '-')} must be a positive integer")
    if cfg.get("ka_min") is not None and cfg.get("ka_max") is not None and cfg["ka_min"] >= cfg["ka_max"]:
        raise UsageError("--ka-min must be below --ka-max")
    if cfg["command"] == "evolve" and cfg["mask"] not in ("edge", "wall", "disk", "strip", "none"):
        raise UsageError(f"unknown mask {cfg['mask']!r}")
    if cfg["command"] == "report" and not (cfg["order"] and cfg["coincidence"]):
        raise UsageError("report needs both --order and --coincidence tables")


# --------------------------------------------------------------------------
# subcommands: each returns (name -> rows, extra manifest fields)
# --------------------------------------------------------------------------


def _angles(n):
    return 2.0 * math.pi * np.arange(n) / n


def _run_halfplane(cfg):
    modes = [m for m in ("field", "amplitude", "sigma_f") if cfg[m]] or ["field"]
    tables = {}
    if "sigma_f" in modes:
        rows = []
        for k in cfg["k"]:
            closed = halfplane.closed_form_cross_section(k, cfg["theta0"])
            try:
                hp = halfplane.HalfPlaneConfig(k, cfg["theta0"])
            except DomainError:
                # grazing or out-of-range incidence: only the closed form is defined
                sigma, forbidden = math.nan, math.nan
            else:
                sigma = halfplane.failure_cross_section(hp, cfg["cone"]).sigma_f
                forbidden = halfplane.forbidden_cross_section(hp)
            rows.append(
                {"k": k, "theta0": cfg["theta0"], "cone": cfg["cone"], "sigma_f": sigma,
                 "closed_form": closed, "forbidden": forbidden}
            )
        tables["halfplane_sigma_f"] = rows
    if "field" in modes or "amplitude" in modes:
        theta = _angles(cfg["points"])
        for mode in ("field", "amplitude"):
            if mode not in modes:
                continue
            rows = []
            for k in cfg["k"]:
                hp = halfplane.HalfPlaneConfig(k, cfg["theta0"])
                for t in theta:
                    if mode == "field":
                        v = complex(halfplane.exact_field(cfg["r"], t, hp))
                        extra = {"r": cfg["r"], "sector": halfplane.region_label(t, hp).tag.value}
                    else:
                        try:
                            v = complex(halfplane.scattering_amplitude(t, hp))
                        except PoleError:
                            v = complex(math.nan, math.nan)
                        extra = {}
                    rows.append({"k": k, "theta": float(t), **extra, "re": v.real, "im": v.imag, "abs2": abs(v) ** 2})
            tables[f"halfplane_{mode}"] = rows
    return tables


def _ka_grid(cfg):
    return np.geomspace(cfg["ka_min"], cfg["ka_max"], cfg["points"])


def _run_disk(cfg):
    modes = [m for m in ("ratio", "shifts", "sigma") if cfg[m]] or ["ratio"]
    tables = {}
    if "ratio" in modes:
        ka = _ka_grid(cfg)
        d0 = disk.phase_shift_sweep(0, ka)
        d1 = disk.phase_shift_sweep(1, ka)
        tables["disk_ratio"] = [
            {"ka": float(x), "delta0": p.delta, "delta1": q.delta, "ratio": q.delta / p.delta}
            for x, p, q in zip(ka, d0, d1)
        ]
    if "shifts" in modes:
        ka = _ka_grid(cfg)
        sweeps = [disk.phase_shift_sweep(m, ka) for m in range(cfg["m_max"] + 1)]
        tables["disk_shifts"] = [
            {"ka": float(x), **{f"delta{m}": sweeps[m][i].delta for m in range(cfg["m_max"] + 1)}}
            for i, x in enumerate(ka)
        ]
    if "sigma" in modes:
        pw = disk.partial_waves(cfg["k"], cfg["a"])
        theta = -math.pi + _angles(cfg["points"])
        sig = disk.differential_cross_section(theta, pw)
        tables["disk_sigma"] = [
            {"ka": pw.ka, "theta": float(t), "sigma": float(s)} for t, s in zip(theta, sig)
        ]
    return tables


def _mask_for(grid, cfg):
    kind = cfg["mask"]
    if kind == "edge":
        return dynamics.edge_mask(grid)
    if kind == "wall":
        return dynamics.wall_mask(grid)
    if kind == "disk":
        return dynamics.disk_mask(grid, cfg["a"])
    if kind == "strip":
        return dynamics.strip_mask(grid, cfg["a"])
    return dynamics.empty_mask(grid)


def _run_evolve(cfg, out_dir: Path):
    tb = dynamics.TwoBodyConfig(
        cfg["m1"], cfg["m2"],
        dynamics.Packet1D(cfg["x0"], cfg["width"], cfg["px"]),
        dynamics.Packet1D(cfg["y0"], cfg["width"], cfg["py"]),
    )
    plane = dynamics.map_two_body_to_plane(tb, cfg["M"])
    speed = plane.k / plane.M
    t_final = cfg["time"] or 2.0 * math.hypot(*plane.center) / speed
    half = dynamics.domain_half_width(plane, t_final)
    grid = dynamics.make_grid((-half, half), (-half, half), 2.0 * math.pi / (plane.k * cfg["ppw"]))
    mask = _mask_for(grid, cfg)
    state = dynamics.gaussian_state(grid, plane, mask)
    masses = (plane.M, plane.M)
    dt = cfg["dt"] or min(0.2 / plane.mean_energy(), 0.95 * dynamics.accuracy_bound(grid.spacing, masses))
    total = max(1, int(math.ceil(t_final / dt)))
    dt = t_final / total
    n_chk = cfg["checkpoints"]
    marks = sorted({int(round(total * (i + 1) / n_chk)) for i in range(n_chk)})
    prop = dynamics.Propagator(grid.shape, grid.spacing, mask.nodes, dt, masses)

    def record(s, step):
        q = dynamics.quadrant_probabilities(s)
        return {
            "step": step, "time": s.time, "norm": dynamics.norm(s), "energy": dynamics.energy(s, masses),
            "p1": q.p1, "p2": q.p2, "p3": q.p3, "p4": q.p4,
        }

    rows = [record(state, 0)]
    done = 0
    checkpoints = []
    for mark in marks:
        state = dynamics.evolve(state, mask, dt, mark - done, masses, propagator=prop)
        done = mark
        rows.append(record(state, done))
        path = dynamics.save_state(out_dir / f"evolve_step{done:07d}.npz", state)
        checkpoints.append(path.name)
    return {"evolve": rows}, {"checkpoints": checkpoints, "grid": list(grid.shape), "dt": dt}


def _run_sweep_order(cfg):
    common = dict(M=cfg["M"], ppw=cfg["ppw"], grid=cfg["grid"] or None, workers=cfg["workers"])
    if cfg["momentum_ratio"]:
        base = experiments.default_order_spec(cfg["k"][:1], cfg["width"] or None)
        spec = experiments.SweepSpec(
            "order", "momentum_ratio", cfg["momentum_ratio"], base.template, **common
        )
    else:
        spec = experiments.default_order_spec(cfg["k"], cfg["width"] or None, **common)
    rows = experiments.order_failure_sweep(spec)
    tables = {"sweep_order": rows}
    extra = {"partial": any(r["error"] for r in rows)}
    try:
        fit = experiments.threshold_fit(rows, cfg["thresholds"], cfg["M"])
    except ReportIncomplete as exc:
        extra["threshold_fit"] = str(exc)
    else:
        tables["sweep_order_thresholds"] = [{"slope": fit["slope"], **t} for t in fit["thresholds"]]
    return tables, extra


def _run_sweep_coincidence(cfg):
    ka = np.geomspace(cfg["ka_min"], cfg["ka_max"], cfg["points"])
    return {"sweep_coincidence": experiments.coincidence_sweep(ka, cfg["k"])}


def _run_microscope(cfg):
    return {"microscope": experiments.microscope_sweep(cfg["offsets"], cfg["k"], cfg["a"], cfg["beam_width"] or None)}


def _run_report(cfg):
    try:
        _, order = read_table(cfg["order"])
        _, coinc = read_table(cfg["coincidence"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = experiments.bound_report(order, coinc, cfg["thresholds"])
    rows = [
        {"experiment": "order", "threshold": t["threshold"], "product": t["product"],
         "in_window": experiments.BOUND_WINDOW[0] <= t["product"] <= experiments.BOUND_WINDOW[1]}
        for t in rep["order"]["thresholds"]
    ]
    rows.append(
        {"experiment": "coincidence", "threshold": 0.9, "product": rep["coincidence"]["product"],
         "in_window": rep["checks"]["coincidence_product_in_window"]}
    )
    return {"report": rows}, {"report": rep}


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def _json_table(rows, schema):
    body = {"schema": f"orderlab.{schema}/1", "rows": rows}
    return json.dumps(body, indent=1, sort_keys=True, allow_nan=True) + "\n"


def run(cfg: dict) -> int:
    out_dir = Path(cfg["output_dir"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc.strerror}") from None
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"output directory {out_dir} is not writable")
    command = cfg["command"]
    start = time.perf_counter()
    extra = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if command == "evolve":
            tables, extra = _run_evolve(cfg, out_dir)
        else:
            result = {
                "halfplane": _run_halfplane,
                "disk": _run_disk,
                "sweep-order": _run_sweep_order,
                "sweep-coincidence": _run_sweep_coincidence,
                "microscope": _run_microscope,
                "report": _run_report,
            }[command](cfg)
            tables, extra = result if isinstance(result, tuple) else (result, {})
    outputs = list(extra.pop("checkpoints", []))
    for name, rows in tables.items():
        for fmt in cfg["format"]:
            path = out_dir / f"{name}.{fmt}"
            text = format_table(rows, name) if fmt == "csv" else _json_table(rows, name)
            path.write_text(text, encoding="utf-8")
            outputs.append(path.name)
    if caught:
        extra["warnings"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    settings = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()}
    write_manifest(
        out_dir / f"{command.replace('-', '_')}.manifest.json",
        command=command,
        config=settings,
        tolerances={"norm_drift_per_step": experiments.NORM_DRIFT_PER_STEP, "boundary_leak": experiments.BOUNDARY_LEAK,
                    "max_dk_over_k": experiments.MAX_SPREAD_RATIO},
        outputs=outputs,
        wall_time=time.perf_counter() - start,
        extra=extra,
    )
    if extra.get("partial"):
        raise PartialOutput("some sweep points failed; see the error column")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"orderlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except UsageError as exc:
        print(f"orderlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"orderlab: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PartialOutput as exc:
        print(f"orderlab: partial output: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericalError, ReportIncomplete, ArithmeticError) as exc:
        print(f"orderlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"orderlab: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
