"""Command-line surface: configuration, end-to-end runs, sweeps, exports.

One ``run`` command executes geometry -> flow (one unit solve per axis,
plus the configured-direction flow by superposition) -> transport (one unit
solve per axis) -> effective tensors, then writes a versioned JSON report,
residual-history CSVs and any requested field exports.

Configuration comes from an INI-style file plus command-line overrides
(flags win).  Exit codes: 0 converged, 2 non-converged or diverged,
1 usage/configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .effective import EffectiveTensors, diffusivity, permeability, pore_average
from .fieldio import export_field, write_history_csv, write_report_json
from .grid import (
    IndicatorField,
    UnitCellGrid,
    load_indicator_raster,
    make_model_geometry,
    porosity,
    write_indicator,
)
from .spectral import SYMBOL_MODES, make_symbols
from .stokes import PenaltyParams, StokesConfig, solve_stokes
from .transport import TransportConfig, solve_transport

REPORT_SCHEMA = "poreflow-report/1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2

_FIELD_CHOICES = ("velocity", "concentration", "indicator")
_SWEEP_PARAMS = ("alpha", "beta", "b", "a0", "b0", "eta", "pe", "tol", "resolution")


class ConfigError(ValueError):
    pass


@dataclass
class GeometrySpec:
    kind: str  # "disk" | "raster"
    radius: float = 0.25
    resolution: int = 128
    path: str = ""
    threshold: float = 0.5

    def build(self) -> IndicatorField:
        if self.kind == "disk":
            grid = UnitCellGrid((self.resolution,) * 2)
            return make_model_geometry(grid, radius=self.radius)
        if self.kind == "raster":
            return load_indicator_raster(self.path, self.threshold)
        raise ConfigError(f"unknown geometry kind {self.kind!r}")

    def describe(self) -> dict:
        if self.kind == "disk":
            return {"kind": "disk", "radius": self.radius, "resolution": self.resolution}
        return {"kind": "raster", "path": self.path, "threshold": self.threshold}


@dataclass
class OutputSpec:
    out_dir: str = "."
    fields: tuple[str, ...] = ()
    formats: tuple[str, ...] = ("csv",)
    histories: bool = True


@dataclass
class SweepSpec:
    param: str
    values: tuple[float, ...]


@dataclass
class RunConfig:
    geometry: GeometrySpec
    stokes: StokesConfig = field(default_factory=StokesConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    penalties: PenaltyParams = field(default_factory=PenaltyParams)
    output: OutputSpec = field(default_factory=OutputSpec)
    sweep: SweepSpec | None = None


# ---------------------------------------------------------------------------
# Config parsing: INI file plus flag overrides.
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def load_config_file(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        return _config_from_parser(parser)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc


def _config_from_parser(parser: configparser.ConfigParser) -> RunConfig:
    geo = parser["geometry"] if parser.has_section("geometry") else {}
    kind = geo.get("kind", "disk")
    geometry = GeometrySpec(
        kind=kind,
        radius=float(geo.get("radius", 0.25)),
        resolution=int(geo.get("resolution", 128)),
        path=geo.get("path", ""),
        threshold=float(geo.get("threshold", 0.5)),
    )
    if kind == "raster" and not geometry.path:
        raise ConfigError("raster geometry needs a 'path' entry")

    sto = parser["stokes"] if parser.has_section("stokes") else {}
    tol = float(sto.get("tol", 1e-5))
    stokes = StokesConfig(
        nu=float(sto.get("nu", 1.0)),
        pressure_gradient=_floats(sto.get("g_p", "1,0")),
        eps_abs=float(sto.get("eps_abs", tol)),
        eps_rel=float(sto.get("eps_rel", tol)),
        max_iter=int(sto.get("max_iter", 10_000)),
        symbol_mode=sto.get("symbol_mode", StokesConfig().symbol_mode),
    )

    tra = parser["transport"] if parser.has_section("transport") else {}
    transport = TransportConfig(
        pe=float(tra.get("pe", 0.0)),
        composition_gradient=_floats(tra.get("g_chi", "1,0")),
        eta=float(tra.get("eta", 0.01)),
        a0=float(tra.get("a0", 0.55)),
        b0=float(tra.get("b0", 1.0)),
        eps=float(tra.get("tol", 1e-5)),
        max_iter=int(tra.get("max_iter", 10_000)),
        symbol_mode=tra.get("symbol_mode", TransportConfig().symbol_mode),
    )

    pen = parser["penalties"] if parser.has_section("penalties") else {}
    defaults = PenaltyParams()
    penalties = PenaltyParams(
        alpha=float(pen.get("alpha", 1.0)),
        beta=float(pen.get("beta", 1.0)),
        b=float(pen.get("b", 1.0)),
        adaptive=_bool(pen.get("adaptive", "true")),
        growth=_floats(pen.get("growth", "")) or defaults.growth,
        ratio_threshold=_floats(pen.get("ratio_threshold", "")) or defaults.ratio_threshold,
        floor=_floats(pen.get("floor", "")) or defaults.floor,
    )

    out = parser["output"] if parser.has_section("output") else {}
    fields = tuple(t.strip() for t in out.get("fields", "").split(",") if t.strip())
    for name in fields:
        if name not in _FIELD_CHOICES:
            raise ConfigError(f"unknown field {name!r}, choices: {_FIELD_CHOICES}")
    output = OutputSpec(
        out_dir=out.get("out_dir", "."),
        fields=fields,
        formats=tuple(t.strip() for t in out.get("formats", "csv").split(",") if t.strip()),
        histories=_bool(out.get("histories", "true")),
    )

    sweep = None
    if parser.has_section("sweep"):
        sw = parser["sweep"]
        param = sw.get("param", "")
        values = _floats(sw.get("values", ""))
        if param not in _SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep param {param!r}, choices: {_SWEEP_PARAMS}")
        if not values:
            raise ConfigError("sweep values must be a non-empty list")
        sweep = SweepSpec(param, values)

    return RunConfig(geometry, stokes, transport, penalties, output, sweep)


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    geometry, stokes, transport = config.geometry, config.stokes, config.transport
    penalties, output, sweep = config.penalties, config.output, config.sweep

    if args.geometry is not None:
        if args.geometry.startswith("disk:"):
            geometry = replace(geometry, kind="disk", radius=float(args.geometry[5:]))
        else:
            geometry = replace(geometry, kind="raster", path=args.geometry)
    if args.resolution is not None:
        geometry = replace(geometry, resolution=args.resolution)
    if args.threshold is not None:
        geometry = replace(geometry, threshold=args.threshold)

    if args.nu is not None:
        stokes = replace(stokes, nu=args.nu)
    if args.tol is not None:
        stokes = replace(stokes, eps_abs=args.tol, eps_rel=args.tol)
        transport = replace(transport, eps=args.tol)
    if args.max_iter is not None:
        stokes = replace(stokes, max_iter=args.max_iter)
        transport = replace(transport, max_iter=args.max_iter)
    if args.symbol_mode is not None:
        stokes = replace(stokes, symbol_mode=args.symbol_mode)
        transport = replace(transport, symbol_mode=args.symbol_mode)

    if args.pe is not None:
        transport = replace(transport, pe=args.pe)
    if args.eta is not None:
        transport = replace(transport, eta=args.eta)
    if args.a0 is not None:
        transport = replace(transport, a0=args.a0)
    if args.b0 is not None:
        transport = replace(transport, b0=args.b0)

    if args.adaptive is not None:
        penalties = replace(penalties, adaptive=_bool(args.adaptive))

    if args.out_dir is not None:
        output = replace(output, out_dir=args.out_dir)
    if args.fields is not None:
        names = tuple(t.strip() for t in args.fields.split(",") if t.strip())
        for name in names:
            if name not in _FIELD_CHOICES:
                raise ConfigError(f"unknown field {name!r}, choices: {_FIELD_CHOICES}")
        output = replace(output, fields=names)
    if args.formats is not None:
        output = replace(output, formats=tuple(t.strip() for t in args.formats.split(",")))

    if args.sweep is not None:
        if args.sweep not in _SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep param {args.sweep!r}")
        if not args.sweep_values:
            raise ConfigError("--sweep requires --sweep-values")
        sweep = SweepSpec(args.sweep, _floats(args.sweep_values))

    return RunConfig(geometry, stokes, transport, penalties, output, sweep)


# ---------------------------------------------------------------------------
# Pipeline.
# ---------------------------------------------------------------------------

def _unit_vector(dim: int, axis: int) -> tuple[float, ...]:
    e = [0.0] * dim
    e[axis] = 1.0
    return tuple(e)


def _solve_report(report) -> dict:
    entry = {
        "converged": bool(report.converged),
        "diverged": bool(report.diverged),
        "iterations": int(report.iterations),
        "final": report.final(),
    }
    if report.reason:
        entry["reason"] = report.reason
    return entry


def run(config: RunConfig) -> tuple[dict, int]:
    """Execute one configured run; returns (report dict, exit code)."""
    out_dir = Path(config.output.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timing: dict[str, float] = {}
    report: dict = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "config": {
            "geometry": config.geometry.describe(),
            "stokes": vars(config.stokes).copy(),
            "transport": vars(config.transport).copy(),
            "penalties": vars(config.penalties).copy(),
        },
    }

    t0 = time.perf_counter()
    indicator = config.geometry.build()
    grid = indicator.grid
    phi_p = porosity(indicator)
    timing["geometry_s"] = time.perf_counter() - t0
    report["geometry"] = {
        "dims": list(grid.dims),
        "porosity": phi_p,
        "n_pts": grid.n_pts,
    }

    if config.sweep is not None:
        entries, ok = _run_sweep(config, indicator)
        report["sweep"] = {"param": config.sweep.param, "entries": entries}
        timing["total_s"] = time.perf_counter() - t0
        report["timing"] = timing
        _write_outputs(report, None, None, indicator, config, out_dir, histories=())
        return report, EXIT_OK if ok else EXIT_NOT_CONVERGED

    if phi_p == 0.0:
        # No pore space: flow is identically zero and transport is undefined.
        report["flow"] = {
            "unit_solves": [],
            "note": "all-solid geometry: zero flow",
        }
        report["transport"] = {"skipped": "no pore cells: pore averages undefined"}
        report["effective"] = {
            "permeability": np.zeros((grid.dim, grid.dim)),
            "porosity": phi_p,
        }
        timing["total_s"] = time.perf_counter() - t0
        report["timing"] = timing
        _write_outputs(report, None, None, indicator, config, out_dir, histories=())
        return report, EXIT_OK

    # Flow: one unit solve per axis; the configured-direction flow follows by
    # linearity of the Stokes problem.
    t0_flow = time.perf_counter()
    unit_states, flow_entries, histories = [], [], []
    all_ok = True
    for axis in range(grid.dim):
        cfg_i = replace(config.stokes, pressure_gradient=_unit_vector(grid.dim, axis))
        state, conv = solve_stokes(indicator, cfg_i, config.penalties)
        unit_states.append(state)
        entry = _solve_report(conv)
        entry["pressure_gradient"] = list(cfg_i.pressure_gradient)
        flow_entries.append(entry)
        histories.append((f"flow_history_axis{axis + 1}.csv", conv))
        all_ok &= conv.converged
    g_p = np.asarray(config.stokes.pressure_gradient, dtype=float)
    u_phys = sum(g_p[i] * unit_states[i].u for i in range(grid.dim))
    timing["flow_s"] = time.perf_counter() - t0_flow
    report["flow"] = {
        "symbol_mode": config.stokes.symbol_mode,
        "nu": config.stokes.nu,
        "pressure_gradient": g_p.tolist(),
        "unit_solves": flow_entries,
        "u_bar_physical": pore_average(u_phys, indicator),
    }

    # Transport: one unit solve per axis under the physical flow.
    t0_tra = time.perf_counter()
    chi_states, tra_entries = [], []
    for axis in range(grid.dim):
        cfg_j = replace(
            config.transport, composition_gradient=_unit_vector(grid.dim, axis)
        )
        t_state, t_conv = solve_transport(indicator, u_phys, cfg_j)
        chi_states.append(t_state)
        entry = _solve_report(t_conv)
        entry["composition_gradient"] = list(cfg_j.composition_gradient)
        tra_entries.append(entry)
        histories.append((f"transport_history_axis{axis + 1}.csv", t_conv))
        all_ok &= t_conv.converged
    g_chi = np.asarray(config.transport.composition_gradient, dtype=float)
    chi_phys = sum(g_chi[j] * chi_states[j].chi for j in range(grid.dim))
    timing["transport_s"] = time.perf_counter() - t0_tra
    report["transport"] = {
        "symbol_mode": config.transport.symbol_mode,
        "pe": config.transport.pe,
        "eta": config.transport.eta,
        "a0": config.transport.a0,
        "b0": config.transport.b0,
        "composition_gradient": g_chi.tolist(),
        "unit_solves": tra_entries,
    }

    # Effective tensors from the unit solutions.
    symbols = make_symbols(grid, config.stokes.symbol_mode)
    tensors = EffectiveTensors(
        permeability=permeability([s.u for s in unit_states], indicator, symbols),
        diffusivity=diffusivity(
            [s.u for s in unit_states],
            [(s.chi, s.grad_chi) for s in chi_states],
            indicator,
            config.transport.pe,
        ),
        porosity=phi_p,
        u_bar=np.stack([pore_average(s.u, indicator) for s in unit_states]),
        meta={
            "nu": config.stokes.nu,
            "flow_tolerance": [config.stokes.eps_abs, config.stokes.eps_rel],
            "transport_tolerance": config.transport.eps,
            "flow_symbol_mode": config.stokes.symbol_mode,
            "transport_symbol_mode": config.transport.symbol_mode,
            "flow_iterations": [e["iterations"] for e in flow_entries],
            "transport_iterations": [e["iterations"] for e in tra_entries],
            "velocity_convention": "concentration solved under the configured-"
                                   "direction flow; unit flows enter the tensor",
        },
    )
    report["effective"] = vars(tensors).copy()

    timing["total_s"] = time.perf_counter() - t0
    report["timing"] = timing
    _write_outputs(report, u_phys, chi_phys, indicator, config, out_dir, histories)
    return report, EXIT_OK if all_ok else EXIT_NOT_CONVERGED


def _run_sweep(config: RunConfig, indicator) -> tuple[list[dict], bool]:
    """Re-run the affected stage per sweep value; records iteration counts."""
    param = config.sweep.param
    entries = []
    all_ok = True

    stokes_params = {"alpha", "beta", "b"}
    transport_params = {"a0", "b0", "eta", "pe"}

    u_phys = None
    if param in transport_params:
        # Flow does not depend on these: solve it once and reuse.
        state, conv = solve_stokes(indicator, config.stokes, config.penalties)
        all_ok &= conv.converged
        u_phys = state.u

    for value in config.sweep.values:
        entry: dict = {"value": value}
        if param in stokes_params:
            pen = replace(config.penalties, **{param: value}, adaptive=False)
            _, conv = solve_stokes(indicator, config.stokes, pen)
            entry["stokes"] = _solve_report(conv)
            all_ok &= conv.converged
        elif param in transport_params:
            cfg = replace(config.transport, **{param: value})
            _, conv = solve_transport(indicator, u_phys, cfg)
            entry["transport"] = _solve_report(conv)
            all_ok &= conv.converged
        elif param == "tol":
            sto = replace(config.stokes, eps_abs=value, eps_rel=value)
            tra = replace(config.transport, eps=value)
            state, conv_s = solve_stokes(indicator, sto, config.penalties)
            _, conv_t = solve_transport(indicator, state.u, tra)
            entry["stokes"] = _solve_report(conv_s)
            entry["transport"] = _solve_report(conv_t)
            all_ok &= conv_s.converged and conv_t.converged
        elif param == "resolution":
            geo = replace(config.geometry, resolution=int(value))
            ind = geo.build()
            state, conv_s = solve_stokes(ind, config.stokes, config.penalties)
            _, conv_t = solve_transport(ind, state.u, config.transport)
            entry["stokes"] = _solve_report(conv_s)
            entry["transport"] = _solve_report(conv_t)
            all_ok &= conv_s.converged and conv_t.converged
        entries.append(entry)
    return entries, all_ok


def _write_outputs(report, u_phys, chi_phys, indicator, config, out_dir, histories):
    written = []
    grid = indicator.grid
    for name, conv in histories:
        if config.output.histories:
            written.append(str(write_history_csv(conv, out_dir / name)))
    field_data = {
        "velocity": (u_phys, "velocity"),
        "concentration": (chi_phys, "concentration"),
    }
    for name in config.output.fields:
        if name == "indicator":
            written.append(str(write_indicator(indicator, out_dir / "indicator.csv")))
            continue
        data, label = field_data.get(name, (None, name))
        if data is None:
            continue
        for fmt in config.output.formats:
            suffix = ".csv" if fmt == "csv" else ".vtk"
            paths = export_field(data, grid, fmt, out_dir / f"{label}{suffix}", label)
            written.extend(str(p) for p in paths)
    report["outputs"] = {"directory": str(out_dir), "files": sorted(written)}
    write_report_json(report, out_dir / "report.json")


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # Usage errors exit with 1 per the exit-code contract.
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poreflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"poreflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run flow + transport and assemble tensors")
    run_p.add_argument("--config", help="INI config file")
    run_p.add_argument("--geometry", help="'disk:RADIUS' or a PGM/CSV raster path")
    run_p.add_argument("--resolution", type=int, help="cells per axis for model geometries")
    run_p.add_argument("--threshold", type=float, help="raster binarization threshold")
    run_p.add_argument("--nu", type=float, help="viscosity")
    run_p.add_argument("--pe", type=float, help="Peclet number")
    run_p.add_argument("--eta", type=float, help="fictitious solid diffusivity")
    run_p.add_argument("--a0", type=float, help="comparison-medium diffusivity")
    run_p.add_argument("--b0", type=float, help="comparison-medium advection magnitude")
    run_p.add_argument("--tol", type=float, help="tolerance for both solvers")
    run_p.add_argument("--max-iter", type=int, dest="max_iter")
    run_p.add_argument("--adaptive", choices=("on", "off", "true", "false"),
                       help="adaptive penalty parameters")
    run_p.add_argument("--symbol-mode", choices=SYMBOL_MODES, dest="symbol_mode",
                       help="derivative symbols for both solvers")
    run_p.add_argument("--out-dir", dest="out_dir", help="output directory")
    run_p.add_argument("--fields", help=f"comma list of {_FIELD_CHOICES}")
    run_p.add_argument("--formats", help="comma list of csv,vtk")
    run_p.add_argument("--sweep", help=f"sweep parameter, one of {_SWEEP_PARAMS}")
    run_p.add_argument("--sweep-values", dest="sweep_values", help="comma list of values")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            config = load_config_file(args.config)
        else:
            config = RunConfig(GeometrySpec(kind="disk"))
        config = apply_overrides(config, args)
        report, code = run(config)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"poreflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    flow = report.get("flow", {})
    sweep = report.get("sweep")
    if sweep is not None:
        print(f"sweep over {sweep['param']}: {len(sweep['entries'])} entries")
    else:
        perm = report.get("effective", {}).get("permeability")
        if perm is not None:
            print("permeability:", np.asarray(perm).tolist())
    print(f"report: {Path(config.output.out_dir) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
