"""Command-line front end.

Subcommands: explore (run the optimizer), select (pick a design off an
archive), evaluate (score one explicit design), f1 (export the velocity
curve), sweep (exhaustively evaluate a small space), report (cross-scenario
mission table).

Exit codes: 0 success; 1 usage; 2 config parse/validation; 3 model or IO
failure at runtime. Flags --config/--seed/--budget/--out fall back to the
CODESIGN_CONFIG/CODESIGN_SEED/CODESIGN_BUDGET/CODESIGN_OUT environment
variables. Every output file is written to a temp name and renamed into
place; each command leaves a manifest.json naming its inputs and outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .f1model import (F1Error, assess, f1_curve, fine_tune, knee_point,
                      max_acceleration, mission_report, select_design)
from .moo.bayesopt import ParetoArchive, run_bayesopt
from .moo.hypervolume import HypervolumeError
from .moo.pareto import pareto_filter
from .moo.space import evaluate
from .perfmodel import PerfError, layer_cycles, lower_layers
from .policy import PolicyError
from .powerweight import PowerError
from .uavspec import SpecError, load_problem

SWEEP_CAP = 10_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we own the codes
        raise UsageError(message)


def _env(name):
    return os.environ.get("CODESIGN_" + name)


def _utc():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_atomic(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_dir, command, config_path, seed, budget, outputs, started):
    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "tool_version": __version__,
        "command": command,
        "config_path": os.path.abspath(config_path),
        "config_sha256": digest,
        "seed": seed,
        "budget": budget,
        "outputs": sorted(outputs),
        "started_utc": started,
        "finished_utc": _utc(),
    }
    _write_atomic(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _design_rows(points, names):
    header = ["index"] + list(names) + ["success_rate", "latency_s", "power_w", "mass_g"]
    rows = []
    for i, p in enumerate(points):
        d = p.as_dict()
        rows.append([i] + [d[n] for n in names]
                    + [repr(p.objectives.success_rate), repr(p.objectives.latency_s),
                       repr(p.objectives.power_w), repr(p.mass.total)])
    return header, rows


def _reference_knee(problem):
    a_ref = max_acceleration(problem.platform, problem.reference_payload_g,
                             problem.physics.gravity)
    return knee_point(problem.physics, a_ref, problem.knee_epsilon)


def _parse_set(pairs):
    out = {}
    for raw in pairs:
        if "=" not in raw:
            raise UsageError("--set expects key=value, got %r" % raw)
        k, v = raw.split("=", 1)
        for cast in (int, float):
            try:
                v = cast(v)
                break
            except ValueError:
                pass
        out[k.strip()] = v
    return out


def cmd_explore(args) -> int:
    started = _utc()
    problem = load_problem(args.config)
    seed = problem.seed if args.seed is None else args.seed
    budget = problem.budget if args.budget is None else args.budget
    archive = run_bayesopt(problem, budget=budget, seed=seed)

    os.makedirs(args.out, exist_ok=True)
    arc_path = os.path.join(args.out, "archive.jsonl")
    archive.save(arc_path + ".tmp")
    os.replace(arc_path + ".tmp", arc_path)

    names = problem.search_space.names
    header, rows = _design_rows(archive.front(), names)
    _write_atomic(os.path.join(args.out, "front.csv"), _csv_text(header, rows))
    trace = archive.hypervolume_trace()
    _write_atomic(os.path.join(args.out, "hv_trace.csv"),
                  _csv_text(["n_evaluations", "hypervolume"],
                            [[i + 1, repr(h)] for i, h in enumerate(trace)]))
    _write_manifest(args.out, "explore", args.config, seed, budget,
                    ["archive.jsonl", "front.csv", "hv_trace.csv", "manifest.json"], started)

    print("space size %d, evaluated %d, front %d" % (problem.search_space.size, len(archive), len(archive.front())))
    print("final hypervolume %.6g" % archive.hypervolume())
    print("archive: %s" % arc_path)
    return 0


def cmd_select(args) -> int:
    started = _utc()
    problem = load_problem(args.config)
    archive = ParetoArchive.load(args.archive, problem)
    knee = _reference_knee(problem)
    chosen, chosen_rep = select_design(archive, problem)

    names = problem.search_space.names
    header = (["index"] + list(names)
              + ["success_rate", "latency_s", "power_w", "mass_g",
                 "throughput_fps", "v_safe_m_s", "n_missions", "assessment", "selected"])
    rows = []
    for i, p in enumerate(archive.points):
        rep = mission_report(problem.platform, problem.environment, problem.mission, p, problem.physics)
        label = assess(p, knee).classification
        d = p.as_dict()
        rows.append([i] + [d[n] for n in names]
                    + [repr(p.objectives.success_rate), repr(p.objectives.latency_s),
                       repr(p.objectives.power_w), repr(p.mass.total),
                       repr(1.0 / p.objectives.latency_s), repr(rep.v_safe),
                       repr(rep.n_missions), label, int(p is chosen)])

    final, final_rep = chosen, chosen_rep
    tuned_note = ""
    if args.fine_tune:
        if assess(chosen, knee).classification == "over_provisioned":
            tuned = fine_tune(chosen, knee, problem.energy_table)
            tuned_rep = mission_report(problem.platform, problem.environment,
                                       problem.mission, tuned, problem.physics)
            d = tuned.as_dict()
            rows.append(["tuned"] + [d[n] for n in names]
                        + [repr(tuned.objectives.success_rate), repr(tuned.objectives.latency_s),
                           repr(tuned.objectives.power_w), repr(tuned.mass.total),
                           repr(1.0 / tuned.objectives.latency_s), repr(tuned_rep.v_safe),
                           repr(tuned_rep.n_missions), assess(tuned, knee).classification, 1])
            if tuned_rep.n_missions >= final_rep.n_missions:
                final, final_rep = tuned, tuned_rep
                tuned_note = " (fine-tuned to the knee)"
        else:
            tuned_note = " (fine-tune skipped: selection not over-provisioned)"

    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "selection.csv"), _csv_text(header, rows))
    _write_manifest(args.out, "select", args.config, problem.seed, problem.budget,
                    ["selection.csv", "manifest.json"], started)

    print("knee %.1f FPS (reference payload %.1f g)" % (knee.throughput, problem.reference_payload_g))
    print("selected%s: %s" % (tuned_note, dict(final.params)))
    print("missions per charge %.2f at %.2f m/s, %.3f W, %.1f g"
          % (final_rep.n_missions, final_rep.v_safe, final.objectives.power_w, final.mass.total))
    return 0


def cmd_evaluate(args) -> int:
    started = _utc()
    problem = load_problem(args.config)
    params = _parse_set(args.set or [])
    required = {"conv_layers", "filters", "array_rows", "array_cols",
                "sram_ifmap", "sram_filter", "sram_ofmap"}
    missing = sorted(required - set(params))
    if missing:
        raise UsageError("missing --set values for %s" % ", ".join(missing))

    point = evaluate(params, problem)
    knee = _reference_knee(problem)
    rep = mission_report(problem.platform, problem.environment, problem.mission, point, problem.physics)
    label = assess(point, knee)

    print("design %s" % dict(point.params))
    print("success %.4f (%s), latency %.6g s (%.1f FPS), power %.4f W, mass %.2f g"
          % (point.objectives.success_rate, point.success_source, point.objectives.latency_s,
             1.0 / point.objectives.latency_s, point.objectives.power_w, point.mass.total))
    print("assessment: %s (%.2fx knee %.1f FPS)" % (label.classification, label.margin, knee.throughput))
    print("mission: v_safe %.3f m/s, t %.1f s, rotors %.2f W, missions %.2f"
          % (rep.v_safe, rep.t_mission, rep.p_rotors, rep.n_missions))

    if args.dump_layers:
        print("layer,m,n,k,compute_cycles,memory_cycles,total_cycles,dram_bytes")
        for i, g in enumerate(lower_layers(point.model)):
            prof = layer_cycles(g, point.accel)
            print("%d,%d,%d,%d,%d,%d,%d,%d" % (i, g.m, g.n, g.k, prof.compute_cycles,
                                               prof.memory_cycles, prof.total_cycles, prof.dram_traffic))

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        dump = {
            "params": dict(point.params),
            "objectives": {"success_rate": point.objectives.success_rate,
                           "latency_s": point.objectives.latency_s,
                           "power_w": point.objectives.power_w},
            "mass_g": point.mass.total,
            "assessment": label.classification,
            "mission": {"v_safe_m_s": rep.v_safe, "t_mission_s": rep.t_mission,
                        "p_rotors_w": rep.p_rotors, "p_compute_w": rep.p_compute,
                        "p_others_w": rep.p_others, "e_mission_j": rep.e_mission,
                        "e_battery_j": rep.e_battery, "n_missions": rep.n_missions},
        }
        _write_atomic(os.path.join(args.out, "design.json"),
                      json.dumps(dump, indent=2, sort_keys=True) + "\n")
        _write_manifest(args.out, "evaluate", args.config, problem.seed, problem.budget,
                        ["design.json", "manifest.json"], started)
    return 0


def _svg_curve(curve, overlays) -> str:
    w, h, m = 640, 400, 48
    xs = [f for f, _ in curve.samples]
    vmax = max(curve.ceiling, max(v for _, v in curve.samples))
    x0, x1 = min(xs), max(xs)

    def sx(f):
        return m + (f - x0) / (x1 - x0) * (w - 2 * m)

    def sy(v):
        return h - m - v / vmax * (h - 2 * m)

    pts = " ".join("%.1f,%.1f" % (sx(f), sy(v)) for f, v in curve.samples)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (w, h),
        '<rect width="%d" height="%d" fill="white"/>' % (w, h),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>' % (m, h - m, w - m, h - m),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>' % (m, m, m, h - m),
        '<polyline points="%s" fill="none" stroke="steelblue" stroke-width="2"/>' % pts,
        '<line x1="%d" y1="%.1f" x2="%d" y2="%.1f" stroke="gray" stroke-dasharray="4"/>'
        % (m, sy(curve.ceiling), w - m, sy(curve.ceiling)),
        '<circle cx="%.1f" cy="%.1f" r="5" fill="crimson"/>' % (sx(curve.knee.throughput), sy(curve.knee.v_safe)),
        '<text x="%.1f" y="%.1f" font-size="12">knee %.1f FPS</text>'
        % (sx(curve.knee.throughput) + 8, sy(curve.knee.v_safe) - 8, curve.knee.throughput),
        '<text x="%d" y="%d" font-size="12">action throughput (FPS)</text>' % (w // 2 - 60, h - 12),
        '<text x="14" y="%d" font-size="12" transform="rotate(-90 14 %d)">v_safe (m/s)</text>' % (h // 2, h // 2),
    ]
    for name, f, v in overlays:
        parts.append('<circle cx="%.1f" cy="%.1f" r="4" fill="darkorange"/>' % (sx(f), sy(v)))
        parts.append('<text x="%.1f" y="%.1f" font-size="11">%s</text>' % (sx(f) + 6, sy(v) + 4, name))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_f1(args) -> int:
    started = _utc()
    problem = load_problem(args.config)
    payload = problem.reference_payload_g if args.payload_mass is None else args.payload_mass
    a = max_acceleration(problem.platform, payload, problem.physics.gravity)
    curve = f1_curve(problem.physics, a, epsilon=problem.knee_epsilon)

    rows = [[repr(f), repr(v), 0] for f, v in curve.samples]
    rows.append([repr(curve.knee.throughput), repr(curve.knee.v_safe), 1])
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "f1_curve.csv"),
                  _csv_text(["throughput_fps", "v_safe_m_s", "is_knee"], rows))
    outputs = ["f1_curve.csv", "manifest.json"]

    if args.svg:
        overlays = []
        from .f1model import action_throughput, safe_velocity
        for b in problem.baselines:
            gated = action_throughput(problem.platform.sensor.framerate, b.throughput_fps)
            overlays.append((b.name, gated, safe_velocity(gated, problem.physics, a)))
        _write_atomic(os.path.join(args.out, "f1_curve.svg"), _svg_curve(curve, overlays))
        outputs.append("f1_curve.svg")

    _write_manifest(args.out, "f1", args.config, problem.seed, problem.budget, outputs, started)
    print("payload %.1f g: ceiling %.3f m/s, knee %.1f FPS (v %.3f m/s)"
          % (payload, curve.ceiling, curve.knee.throughput, curve.knee.v_safe))
    return 0


def cmd_sweep(args) -> int:
    started = _utc()
    problem = load_problem(args.config)
    space = problem.search_space
    if space.size > args.cap:
        raise SpecError("space has %d points, over the sweep cap %d" % (space.size, args.cap))

    points = [evaluate(params, problem, provenance=(i, problem.seed))
              for i, params in enumerate(space.points())]
    header, rows = _design_rows(points, space.names)
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "sweep.csv"), _csv_text(header, rows))

    front_idx = pareto_filter([p.objectives.to_min() for p in points])
    fheader, frows = _design_rows([points[i] for i in front_idx], space.names)
    _write_atomic(os.path.join(args.out, "sweep_front.csv"), _csv_text(fheader, frows))
    _write_manifest(args.out, "sweep", args.config, problem.seed, problem.budget,
                    ["sweep.csv", "sweep_front.csv", "manifest.json"], started)
    print("swept %d points, true front %d" % (len(points), len(front_idx)))
    return 0


def cmd_report(args) -> int:
    started = _utc()
    configs = args.config if isinstance(args.config, list) else [args.config]
    archives = args.archive or []
    if archives and len(archives) != len(configs):
        raise UsageError("need one --config per --archive (got %d configs, %d archives)"
                         % (len(configs), len(archives)))

    header = ["scenario", "design", "kind", "throughput_fps", "power_w", "mass_g",
              "n_missions", "ratio_vs_baseline", "baseline"]
    rows = []
    for i, cfg in enumerate(configs):
        problem = load_problem(cfg)
        entries = []
        for b in problem.baselines:
            rep = mission_report(problem.platform, problem.environment, problem.mission, b, problem.physics)
            entries.append((b.name, "baseline", b.throughput_fps, b.power_w, b.mass_g, rep))
        if archives:
            archive = ParetoArchive.load(archives[i], problem)
            chosen, rep = select_design(archive, problem)
            entries.append(("selected", "archive", 1.0 / chosen.objectives.latency_s,
                            chosen.objectives.power_w, chosen.mass.total, rep))
        if not entries:
            raise SpecError("%s: nothing to report (no baselines, no archive)" % cfg)

        base_name = args.baseline or entries[0][0]
        base = next((e for e in entries if e[0] == base_name), None)
        if base is None:
            raise UsageError("baseline %r not found in %s" % (base_name, cfg))
        for name, kind, fps, pw, mg, rep in entries:
            rows.append([problem.platform.name, name, kind, repr(fps), repr(pw), repr(mg),
                         repr(rep.n_missions), repr(rep.n_missions / base[5].n_missions), base_name])

    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "report.csv"), _csv_text(header, rows))
    _write_manifest(args.out, "report", configs[0], None, None,
                    ["report.csv", "manifest.json"], started)
    for r in rows:
        print("%s %-10s %-8s N=%-8.6g ratio=%.3f" % (r[0], r[1], r[2], float(r[6]), float(r[7])))
    return 0


def _build_parser() -> _Parser:
    top = _Parser(prog="uav-codesign", description=__doc__.split("\n\n")[0])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, multi_config=False):
        if multi_config:
            p.add_argument("--config", action="append", default=None)
        else:
            p.add_argument("--config", default=_env("CONFIG"))
        p.add_argument("--out", default=_env("OUT") or "codesign-out")

    p = sub.add_parser("explore", help="run the optimizer and write an archive")
    common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("select", help="pick the best mission design off an archive")
    common(p)
    p.add_argument("--archive", required=True)
    p.add_argument("--fine-tune", action="store_true")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score one explicit design")
    common(p)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--dump-layers", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("f1", help="export the safe-velocity curve")
    common(p)
    p.add_argument("--payload-mass", type=float, default=None, metavar="GRAMS")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_f1)

    p = sub.add_parser("sweep", help="evaluate every point of a small space")
    common(p)
    p.add_argument("--cap", type=int, default=SWEEP_CAP)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="cross-scenario mission comparison table")
    common(p, multi_config=True)
    p.add_argument("--archive", action="append", default=None)
    p.add_argument("--baseline", default=None, metavar="NAME")
    p.set_defaults(func=cmd_report)

    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command != "report":
            seed_env, budget_env = _env("SEED"), _env("BUDGET")
            if getattr(args, "seed", None) is None and seed_env and args.command == "explore":
                args.seed = int(seed_env)
            if getattr(args, "budget", None) is None and budget_env and args.command == "explore":
                args.budget = int(budget_env)
        if args.command == "report":
            if not args.config:
                args.config = [_env("CONFIG")] if _env("CONFIG") else None
        if not args.config:
            raise UsageError("--config is required (or set CODESIGN_CONFIG)")
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except SpecError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (F1Error, PerfError, PolicyError, PowerError, HypervolumeError, ValueError) as exc:
        print("model error: %s" % exc, file=sys.stderr)
        return 3
    except OSError as exc:
        print("io error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
