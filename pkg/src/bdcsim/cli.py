"""Command-line front end: design, simulate and analyze subcommands.

Exit codes: 0 success, 1 input error (bad flags, unparseable files,
violated preconditions), 2 numerical divergence of a simulation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis
from .design import DesignSpec, design
from .scenario import (
    ScenarioParseError,
    parse_design_file,
    parse_quantity,
    parse_scenario_file,
)
from .sim import MODE_NAMES, SimulationDiverged, run, steady_window, trace_from_csv

_DESIGN_FLAGS = (
    ("pv-voltage", "pv_voltage", "PV array voltage [V]"),
    ("pv-current", "pv_current", "PV array current [A]"),
    ("battery-voltage", "battery_voltage", "battery voltage [V]"),
    ("switching-frequency", "switching_frequency", "switching frequency [Hz]"),
    ("load-voltage", "load_voltage", "regulated load voltage [V]"),
    ("load-current", "load_current", "load current [A]"),
    ("ripple-current", "ripple_current", "target inductor ripple [A]"),
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdcsim",
        description="Bidirectional buck-boost converter design and simulation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="size the converter from a specification")
    for flag, _, help_text in _DESIGN_FLAGS:
        p_design.add_argument(f"--{flag}", type=parse_quantity, help=help_text)
    p_design.add_argument("--ripple-fraction", type=parse_quantity, default=0.01,
                          help="output ripple as a fraction of load voltage (default 0.01)")
    p_design.add_argument("--spec-file", type=Path,
                          help="read the specification from a [design] file instead of flags")
    p_design.add_argument("--output", type=Path, help="write the report to this file")
    p_design.add_argument("--format", choices=("table", "csv"), default="table")

    p_sim = sub.add_parser("simulate", help="run scenario files")
    p_sim.add_argument("scenarios", nargs="+", type=Path, help="scenario file(s)")
    p_sim.add_argument("--output", type=Path,
                       help="trace CSV path (single scenario only)")
    p_sim.add_argument("--output-dir", type=Path,
                       help="directory for trace CSVs (default: beside each scenario)")
    p_sim.add_argument("--periods", type=int, default=20,
                       help="steady-window length in switching periods (default 20)")

    p_an = sub.add_parser("analyze", help="metrics from a trace or regulation CSV")
    p_an.add_argument("csv", type=Path, help="trace CSV or regulation CSV")
    p_an.add_argument("--nominal", type=parse_quantity,
                      help="nominal output voltage [V]; switches a regulation CSV "
                           "to load-regulation mode")
    p_an.add_argument("--inductance", type=parse_quantity,
                      help="filtering inductance [H] for trace ripple predictions")
    p_an.add_argument("--switching-frequency", type=parse_quantity,
                      help="switching frequency [Hz] for trace ripple predictions")
    p_an.add_argument("--periods", type=int, default=20,
                      help="steady-window length in switching periods (default 20)")
    p_an.add_argument("--output", type=Path, help="write the report to this file")
    p_an.add_argument("--format", choices=("table", "csv"), default="table")
    return parser


def _emit(lines: list[str], output: Path | None) -> None:
    text = "\n".join(lines) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def cmd_design(args: argparse.Namespace) -> int:
    if args.spec_file is not None:
        spec = parse_design_file(args.spec_file)
    else:
        fields = {}
        missing = []
        for flag, field_name, _ in _DESIGN_FLAGS:
            value = getattr(args, field_name)
            if value is None:
                missing.append(f"--{flag}")
            else:
                fields[field_name] = value
        if missing:
            raise ValueError("missing required flag(s): " + ", ".join(missing)
                             + " (or use --spec-file)")
        spec = DesignSpec(ripple_fraction=args.ripple_fraction, **fields)
    result = design(spec)
    if args.format == "csv":
        lines = ["quantity,value",
                 f"d1,{result.d1:.9g}",
                 f"d2,{result.d2:.9g}",
                 f"l_min,{result.l_min:.9g}",
                 f"l_max,{result.l_max:.9g}",
                 f"c_out,{result.c_out:.9g}",
                 f"dv,{result.dv:.9g}"]
    else:
        lines = [
            "converter design",
            f"  buck duty ratio       D1 = {result.d1:.3f}",
            f"  boost duty ratio      D2 = {result.d2:.3f}",
            f"  buck inductance       Lmin = {result.l_min * 1e6:.4g} µH",
            f"  boost inductance      Lboost = {result.l_max * 1e6:.4g} µH",
            f"  output ripple target  dv = {result.dv:.4g} V",
            f"  output capacitance    C = {result.c_out * 1e6:.4g} µF",
        ]
    _emit(lines, args.output)
    return 0


def _summarize(trace, f_s: float, n_periods: int) -> list[str]:
    metrics = steady_window(trace, n_periods=n_periods, f_s=f_s)
    occupied = [f"{name} {frac * 100.0:.1f}%"
                for name, frac in sorted(metrics.mode_occupancy.items())
                if frac > 0.0]
    return [
        f"  steady window: last {n_periods} periods "
        f"({metrics.t_start:.6f} s .. {metrics.t_end:.6f} s)",
        "  mode occupancy: " + ", ".join(occupied),
        f"  mean v_c_o: {metrics.mean['v_c_o']:.4f} V"
        f"    mean v_c_bus: {metrics.mean['v_c_bus']:.4f} V",
        f"  mean i_batt: {metrics.mean['i_batt']:.4f} A"
        f"    mean duty: {metrics.mean['duty']:.4f}",
        f"  i_l peak-to-peak: {metrics.p2p['i_l']:.4f} A",
        f"  steady: {'yes' if metrics.steady else 'no'}",
    ]


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.output is not None and len(args.scenarios) > 1:
        raise ValueError("--output works with a single scenario; use --output-dir")
    lines: list[str] = []
    for path in args.scenarios:
        scenario = parse_scenario_file(path)
        trace = run(scenario)
        if args.output is not None:
            out_path = args.output
        else:
            directory = args.output_dir if args.output_dir is not None else path.parent
            directory.mkdir(parents=True, exist_ok=True)
            out_path = directory / (path.stem + ".trace.csv")
        trace.to_csv(out_path)
        lines.append(f"scenario: {path}")
        lines.append(f"  simulated {trace.time[-1]:.6f} s "
                     f"({len(trace)} samples, dt {scenario.dt:.3g} s)")
        lines.extend(_summarize(trace, scenario.params.f_s, args.periods))
        lines.append(f"  trace written: {out_path}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _analyze_regulation(path: Path, args: argparse.Namespace) -> list[str]:
    rows = analysis.read_regulation_csv(path)
    lines = []
    if args.nominal is not None:
        pct = analysis.load_regulation(rows, v_nominal=args.nominal)
        ordered = sorted(rows, key=lambda r: r.setting)
        if args.format == "csv":
            return ["metric,value", f"load_regulation_percent,{pct:.9g}"]
        lines.append(f"load regulation ({len(rows)} rows, nominal {args.nominal:g} V)")
        lines.append(f"  full load: {ordered[0].setting:g} ohm -> {ordered[0].v_out:g} V")
        lines.append(f"  min load: {ordered[-1].setting:g} ohm -> {ordered[-1].v_out:g} V")
        lines.append(f"  load regulation: {pct:.3g}%")
    else:
        result = analysis.line_regulation(rows)
        if args.format == "csv":
            lines = ["metric,value"]
            for a, b, pct in result.pairs:
                lines.append(f"pair_{a:g}_{b:g}_percent,{pct:.9g}")
            lines.append(f"max_pair_percent,{result.max_percent:.9g}")
            lines.append(f"full_span_percent,{result.full_span_percent:.9g}")
            return lines
        lines.append(f"line regulation ({len(rows)} rows)")
        for a, b, pct in result.pairs:
            lines.append(f"  {a:g} V -> {b:g} V: {pct:.3g}%")
        lines.append(f"  max consecutive-pair: {result.max_percent:.3g}%")
        lines.append(f"  full span: {result.full_span_percent:.3g}%")
    return lines


def _analyze_trace(path: Path, args: argparse.Namespace) -> list[str]:
    trace = trace_from_csv(path)
    if args.inductance is None or args.switching_frequency is None:
        raise ValueError("trace analysis needs --inductance and --switching-frequency")
    f_s = args.switching_frequency
    metrics = steady_window(trace, n_periods=args.periods, f_s=f_s)
    lines = [f"trace: {path} ({len(trace)} samples, {trace.time[-1]:.6f} s)"]
    lines.extend(_summarize(trace, f_s, args.periods))
    dominant = max(metrics.mode_occupancy, key=metrics.mode_occupancy.get)
    d = metrics.mean["duty"]
    v_bus = metrics.mean["v_c_bus"]
    v_batt = metrics.mean["v_batt_terminal"]
    if dominant == MODE_NAMES[0]:        # charging
        pred = analysis.predicted_ripple_buck(v_bus, v_batt, args.inductance, d, f_s)
        label = "charging"
    elif dominant == MODE_NAMES[1]:      # discharging
        pred = analysis.predicted_ripple_boost(v_bus, v_batt, args.inductance, d, f_s)
        label = "discharging"
    else:
        pred = None
        label = "trickle"
    if pred is not None:
        lo, hi = analysis.current_envelope(metrics.mean["i_batt"], pred.ripple)
        if args.format == "csv":
            return ["metric,value",
                    f"i_l_p2p,{metrics.p2p['i_l']:.9g}",
                    f"mean_v_c_o,{metrics.mean['v_c_o']:.9g}",
                    f"mean_i_batt,{metrics.mean['i_batt']:.9g}",
                    f"predicted_ripple,{pred.ripple:.9g}",
                    f"predicted_ripple_companion,{pred.companion:.9g}",
                    f"envelope_min,{lo:.9g}",
                    f"envelope_max,{hi:.9g}"]
        lines.append(f"  predicted ripple ({label}): {pred.ripple:.4g} A "
                     f"(companion form {pred.companion:.4g} A)")
        lines.append(f"  current envelope: {lo:.4g} .. {hi:.4g} A "
                     f"around mean {metrics.mean['i_batt']:.4g} A")
    else:
        if args.format == "csv":
            return ["metric,value",
                    f"i_l_p2p,{metrics.p2p['i_l']:.9g}",
                    f"mean_v_c_o,{metrics.mean['v_c_o']:.9g}",
                    f"mean_i_batt,{metrics.mean['i_batt']:.9g}"]
        lines.append("  trickle-dominated window: no ripple prediction")
    return lines


def cmd_analyze(args: argparse.Namespace) -> int:
    with open(args.csv, newline="") as fh:
        header = fh.readline().strip()
    if header.replace(" ", "") == "setting,v_out,i_out":
        lines = _analyze_regulation(args.csv, args)
    elif header.startswith("time,"):
        lines = _analyze_trace(args.csv, args)
    else:
        raise ValueError(f"{args.csv}: unrecognized CSV header {header!r}")
    _emit(lines, args.output)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "design":
            return cmd_design(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_analyze(args)
    except SimulationDiverged as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return 2
    except (ScenarioParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
