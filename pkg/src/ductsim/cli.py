"""Command-line entry point.

    ductsim simulate SCENARIO [SCENARIO ...] --out DIR [--jobs N]
    ductsim analyze TRACE.csv [--out summary.json]
    ductsim identify --bench BENCH.csv
    ductsim bench-data --out BENCH.csv [--noise 0.05] [--samples 1000] [--seed 0]
    ductsim statics ATTACHMENTS.yaml

Exit codes: 0 success, 1 invalid input, 2 simulation fault.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import yaml

from .payload import (
    attachment_stability,
    load_disturbance_wrench,
    max_unilateral_load,
    trim_deflection,
)
from .report import read_trace_csv, summarize_run, summarize_trace, write_trace_csv
from .scenario import ScenarioError, load_scenario, parse_payload, run_scenario
from .sysid import (
    RankDeficientError,
    fit_propeller_coefficients,
    fit_vane_coefficient,
    generate_bench_data,
    motor_sweep_schedule,
    read_bench_csv,
    relative_noise_std,
    vane_sweep_schedule,
    write_bench_csv,
)
from .vehicle import ParamsError, VehicleParams, default_params

EXIT_OK, EXIT_INVALID, EXIT_FAULT = 0, 1, 2


def _dump(obj, path: Path | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n")


def _simulate_one(scenario_path: str, out_dir: str) -> tuple[str, int, str]:
    try:
        scenario = load_scenario(scenario_path)
    except (OSError, ScenarioError) as exc:
        # load_scenario already names the file
        return scenario_path, EXIT_INVALID, f"error: {exc}"
    result = run_scenario(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", result.trace)
    summary = summarize_run(result)
    _dump(summary, out / "summary.json")
    if result.faults:
        f = result.faults[0]
        return scenario_path, EXIT_FAULT, f"fault at t={f.time:.3f} s: {f.kind}: {f.message}"
    verdict = "stable" if summary["stable"] else "UNSTABLE"
    return scenario_path, EXIT_OK, f"{verdict}, {summary['n_records']} records -> {out}"


def cmd_simulate(args) -> int:
    paths = args.scenario
    if len(paths) == 1:
        jobs = [(paths[0], args.out)]
    else:
        jobs = [(p, str(Path(args.out) / Path(p).stem)) for p in paths]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        results = [_simulate_one(p, o) for p, o in jobs]
    code = EXIT_OK
    for path, rc, msg in results:
        line = msg if rc == EXIT_INVALID else f"{path}: {msg}"
        print(line, file=sys.stderr if rc else sys.stdout)
        code = max(code, rc)
    return code


def cmd_analyze(args) -> int:
    try:
        trace = read_trace_csv(args.trace)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not trace:
        print("error: trace has no records", file=sys.stderr)
        return EXIT_INVALID
    _dump(summarize_trace(trace), Path(args.out) if args.out else None)
    return EXIT_OK


def cmd_identify(args) -> int:
    try:
        samples = read_bench_csv(args.bench)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report: dict = {"n_samples": len(samples)}
    ok = False
    for axis in ("x", "y"):
        try:
            fit = fit_vane_coefficient(samples, axis)
            report[f"vane_{axis}"] = {"c_m_delta": fit.c_m_delta,
                                      "residual_rms": fit.residual_rms}
            ok = True
        except RankDeficientError as exc:
            report[f"vane_{axis}"] = {"error": str(exc)}
    try:
        fit = fit_propeller_coefficients(samples)
        report["propeller"] = {
            "c_tz1": fit.c_tz1, "c_tz2": fit.c_tz2, "c_mz1": fit.c_mz1, "c_mz2": fit.c_mz2,
            "residual_rms_force": fit.residual_rms_force,
            "residual_rms_moment": fit.residual_rms_moment,
            "condition_number": fit.condition_number,
        }
        ok = True
    except RankDeficientError as exc:
        report["propeller"] = {"error": str(exc)}
    _dump(report)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_bench_data(args) -> int:
    truth = default_params()
    n_vane = args.samples // 2
    vane = vane_sweep_schedule(truth, n_vane)
    t0 = vane[-1].time + 0.02
    motors = [replace(r, time=r.time + t0)
              for r in motor_sweep_schedule(truth, args.samples - n_vane)]
    schedule = vane + motors
    noise = relative_noise_std(truth, schedule, args.noise)
    write_bench_csv(args.out, generate_bench_data(truth, schedule, noise, seed=args.seed))
    print(f"wrote {len(schedule)} samples to {args.out}")
    return EXIT_OK


def cmd_statics(args) -> int:
    try:
        doc = yaml.safe_load(Path(args.file).read_text()) or {}
        if not isinstance(doc, dict):
            raise ScenarioError("expected a mapping at top level")
        unknown = set(doc) - {"vehicle", "load_share_beta", "attachments"}
        if unknown:
            raise ScenarioError(f"unknown key(s) {', '.join(sorted(unknown))}")
        params = VehicleParams.from_mapping(doc.get("vehicle") or {})
        beta = float(doc.get("load_share_beta", 0.5))
        attachments = [parse_payload(a, f"attachments[{i}]")
                       for i, a in enumerate(doc.get("attachments") or [])]
        verdicts = [attachment_stability(p, beta, params.gravity) for p in attachments]
    except (OSError, yaml.YAMLError, ScenarioError, ParamsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    net = load_disturbance_wrench(attachments, (0.0, 0.0, 0.0), params.gravity)
    report = {
        "vane_moment_max": params.vane_moment_max,
        "load_share_beta": beta,
        "attachments": [],
        "net_moment_level": [float(m) for m in net.moment_body],
        "net_moment_within_budget": bool(
            max(abs(net.moment_body[0]), abs(net.moment_body[1])) <= params.vane_moment_max
        ),
    }
    for p, v in zip(attachments, verdicts):
        trim = trim_deflection(p, params)
        report["attachments"].append({
            "attach_point_index": p.attach_point_index,
            "mass": p.mass,
            "stability": v.to_dict(),
            "trim_deflection": trim.deflection,
            "trim_over_budget": trim.over_budget,
            "max_unilateral_load": max_unilateral_load(
                params.vane_moment_max, p.trim_arm, params.gravity),
        })
    _dump(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ductsim", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run scenario files, write trace.csv + summary.json")
    p.add_argument("scenario", nargs="+")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs for several files")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="summarise an existing trace CSV")
    p.add_argument("trace")
    p.add_argument("--out", help="write summary JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("identify", help="fit actuator coefficients to bench data")
    p.add_argument("--bench", required=True)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("bench-data", help="write synthetic bench data from the default vehicle")
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=0.0, help="noise std as a fraction of channel RMS")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench_data)

    p = sub.add_parser("statics", help="attachment stability and trim report")
    p.add_argument("file")
    p.set_defaults(func=cmd_statics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
