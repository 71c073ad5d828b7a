"""Command-line workbench.

Every command reads one JSON config (defaults when ``--config`` is omitted)
and writes its artifacts to ``--out``. Exit codes: 0 success, 2 config or
validation error, 3 numerical failure, 4 infeasible optimisation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import motion, plotting
from .config import ConfigError
from .fe import SingularModelError, fe_stiffness_report
from .mcpf import FAMILIES, SWEEP_HEADER, SkeletonError, parameter_sweep, stiffness_report
from .optimize import FRONT_HEADER, evaluate, optimize, select_design
from .presets import (COUPLING_EXTREMA_UM, MEASURED_STIFFNESS, MM, NOMINAL_FEA_FREQUENCY, NOMINAL_FEA_STIFFNESS,
                      REFERENCE_FEA, REFERENCE_MODEL)
from .stage import axis_stiffnesses, build_chain_model, chain_modes, natural_frequencies, simplified_frequency
from .stage import static_transmission

log = logging.getLogger("flexstage")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4

BENCHMARK_PATHS = (("circle", "xy"), ("circle", "yz"), ("circle", "xz"), ("crown", "xy"))


class InfeasibleError(RuntimeError):
    pass


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v) for v in row) + "\n")


def _length(value_m: float, units: str) -> float:
    return value_m * 1e3 if units == "mm" else value_m


# ------------------------------------------------------------------ commands

def cmd_stiffness(cfg, out: Path, args) -> int:
    mat = cfgmod.material(cfg)
    fams = cfgmod.families(cfg)
    wanted = FAMILIES if args.family == "all" else (args.family,)
    u = args.units
    res = {}
    for f in FAMILIES:
        r = stiffness_report(fams[f], mat, f)
        p = fams[f]
        entry = {f"t_{u}": _length(p.t, u), f"l_{u}": _length(p.l, u), f"b_{u}": _length(p.b, u),
                 "layers": p.layer_count, **r.as_dict()}
        if args.verify:
            km, kl = fe_stiffness_report(p, mat)
            entry["fe_k_motional_N_per_m"] = km
            entry["fe_k_lateral_N_per_m"] = kl
            entry["rel_error_motional"] = r.k_motional / km - 1
            entry["rel_error_lateral"] = r.k_lateral / kl - 1
        res[f] = (r, entry)
    reports = {f: r for f, (r, _) in res.items()}
    kxy, kz = axis_stiffnesses(reports)
    st = cfgmod.stage_config(cfg)
    modal = natural_frequencies(np.diag(st.masses), np.diag([kxy, kxy, kz]))
    data = {
        "units": {"length": u, "stiffness": "N/m", "frequency": "Hz"},
        "families": {f: res[f][1] for f in wanted},
        "axis": {"k_xm_N_per_m": kxy, "k_zm_N_per_m": kz},
        "modal_Hz": list(modal.frequencies_hz),
        "reference": {"model": REFERENCE_MODEL, "fea": REFERENCE_FEA},
    }
    _write_json(out / "stiffness.json", data)
    print(f"{'family':<7}{'k_motional (N/m)':>18}{'k_lateral (N/m)':>18}{'eta':>10}")
    for f in wanted:
        r = res[f][0]
        print(f"{f:<7}{r.k_motional:>18.2f}{r.k_lateral:>18.1f}{r.eta:>10.2f}")
        if args.verify:
            e = res[f][1]
            print(f"{'':<7}fe-oracle rel. error: motional {e['rel_error_motional']:+.2e}, "
                  f"lateral {e['rel_error_lateral']:+.2e}")
    print(f"k_xm = {kxy:.1f} N/m, k_zm = {kz:.1f} N/m")
    return EXIT_OK


def cmd_sweep(cfg, out: Path, args) -> int:
    sw = cfg["sweep"]
    fam = sw["family"]
    base = cfgmod.family_params(cfg["families"][fam])
    res = parameter_sweep(np.array(sw["t_mm"]) * MM, np.array(sw["l_mm"]) * MM, np.array(sw["b_mm"]) * MM, base,
                          cfgmod.material(cfg), workers=args.workers)
    u = args.units
    header = SWEEP_HEADER if u == "mm" else ("t_m", "l_m", "b_m") + SWEEP_HEADER[3:]
    scale = 1.0 if u == "mm" else 1e-3

    def conv(rows):
        return [(r[0] * scale, r[1] * scale, r[2] * scale, *r[3:]) for r in rows]

    rows = res.rows()
    _write_csv(out / "sweep.csv", header, conv(rows))
    _write_csv(out / "sweep_cabinet.csv", header, conv(res.rows("cabinet")))
    flags = res.monotonicity()
    _write_json(out / "sweep_summary.json", {"family": fam, "points": len(rows),
                                             "cabinet_points": len(res.rows("cabinet")), "monotonicity": flags})
    plotting.plot_sweep(rows, out / "sweep.png", fam)
    print(f"{len(rows)} grid points ({len(res.rows('cabinet'))} on the cabinet faces)")
    for k, v in flags.items():
        print(f"  {k}: {v}")
    return EXIT_OK


def cmd_optimize(cfg, out: Path, args) -> int:
    opt = cfg["optimizer"]
    axes = ("xy", "z") if args.axis == "both" else (args.axis,)
    pop = args.population or opt["population"]
    gens = args.generations or opt["generations"]
    workers = args.workers if args.workers is not None else opt["workers"]
    empty = []
    for axis in axes:
        prob = cfgmod.problem(cfg, axis)
        g, d = ("xg", "xd") if axis == "xy" else ("zg", "zd")
        fam = cfg["families"]
        current = [fam[g]["t_mm"], fam[g]["l_mm"], fam[d]["t_mm"], fam[d]["l_mm"]]
        cur = evaluate(prob, current)
        front = optimize(prob, pop, gens, opt["mutation_prob"], opt["seed"], workers=workers)
        _write_csv(out / f"front_{axis}.csv", FRONT_HEADER, [(*map(float, r[:7]), r[7]) for r in front.rows()])
        _write_json(out / f"runtime_{axis}.json", {"wall_time_s": front.wall_time_s, "population": pop,
                                                   "generations": gens, "workers": workers})
        info = {"axis": axis, "settings": front.settings, "front_size": len(front),
                "violation_stats": front.violation_stats, "ceiling_N_per_m": prob.ceiling,
                "thresholds": {"eta_d_min": prob.eta_d_min, "eta_g_min": prob.eta_g_min},
                "configured_design": {"par_mm": current, "k_axis_N_per_m": float(cur.objectives[0]),
                                      "eta_d": float(cur.objectives[1]), "eta_g": float(cur.objectives[2]),
                                      "feasible": cur.feasible}}
        if not front.members:
            info["selected"] = None
            empty.append(axis)
        else:
            par = select_design(front, opt["slack"])
            sel = evaluate(prob, par)
            info["selected"] = {"par_mm": dict(zip(("t_g", "l_g", "t_d", "l_d"), map(float, par))),
                                "k_axis_N_per_m": float(sel.objectives[0]), "eta_d": float(sel.objectives[1]),
                                "eta_g": float(sel.objectives[2]), "feasible": sel.feasible}
            plotting.plot_front(front.objectives(), out / f"front_{axis}.png", sel.objectives, axis)
        _write_json(out / f"selected_{axis}.json", info)
        print(f"[{axis}] front size {len(front)}, {front.wall_time_s:.1f} s")
        if info["selected"]:
            s = info["selected"]
            print(f"  selected {s['par_mm']} -> k = {s['k_axis_N_per_m']:.1f} N/m, "
                  f"eta_d = {s['eta_d']:.2f}, eta_g = {s['eta_g']:.2f}")
    if empty:
        raise InfeasibleError(f"no feasible design for axis {', '.join(empty)}")
    return EXIT_OK


def cmd_modal(cfg, out: Path, args) -> int:
    st = cfgmod.stage_config(cfg)
    reports = st.reports()
    kxy, kz = axis_stiffnesses(reports)
    lumped = natural_frequencies(np.diag(st.masses), np.diag([kxy, kxy, kz]))
    chains = {}
    for kind in ("xy", "z"):
        ch = build_chain_model(reports, kind, st.chain_masses, st.c5, st.c8)
        tr = static_transmission(ch)
        chains[kind] = {"springs_and_masses": ch.as_dict(), "modes_Hz": list(map(float, chain_modes(ch))),
                        "simplified_Hz": simplified_frequency(ch), "motion_loss": tr.loss,
                        "port_leakage_pct": motion.model_coupling_rate(ch)}
    data = {"axis_stiffness_N_per_m": {"xy": kxy, "z": kz}, "lumped_masses_kg": list(st.masses),
            "lumped_modes_Hz": list(map(float, lumped.frequencies_hz)), "chains": chains}
    _write_json(out / "modal.json", data)
    f = lumped.frequencies_hz
    print(f"lumped modes: {f[0]:.2f} / {f[1]:.2f} / {f[2]:.2f} Hz")
    for kind, c in chains.items():
        print(f"{kind} chain modes (Hz): " + ", ".join(f"{v:.2f}" for v in c["modes_Hz"]))
    return EXIT_OK


def _run_path(cfg, kind, plane, out: Path, stem_prefix: str = "") -> dict:
    spec = cfgmod.path_spec(cfg, kind, plane)
    plants, ctrls = cfgmod.plants(cfg), cfgmod.controllers(cfg)
    active = [True] * 3 if spec.kind == "crown" else [ax in spec.plane for ax in "xyz"]
    P = [plants[a] if on else None for a, on in zip("xyz", active)]
    C = [ctrls[a] if on else None for a, on in zip("xyz", active)]
    trace = motion.simulate_tracking(P, C, spec)
    name = spec.kind if spec.kind == "crown" else f"{spec.kind}_{spec.plane}"
    trace.write_csv(out / f"trace_{name}.csv")
    m = motion.metrics(trace)
    echo = {"kind": spec.kind, "plane": spec.plane, "amplitude_mm": spec.amplitude, "frequency_Hz": spec.frequency,
            "duration_s": spec.duration, "window_start_s": trace.window_start}
    if spec.kind == "crown":
        echo.update(amplitude_mm=[5.0, 5.0, 2.5], frequency_Hz=[1.0, 1.0, 6.0])
    _write_json(out / f"metrics_{name}.json", {"units": "um", "path": echo, "metrics": m})
    plotting.plot_tracking(trace.t, trace.ref, trace.pos, out / f"tracking_{name}.png", trace.active)
    return {"name": name, "metrics": m, "path": echo}


def cmd_simulate(cfg, out: Path, args) -> int:
    runs = BENCHMARK_PATHS if args.path == "table" else ((args.path, args.plane),)
    results = {}
    for kind, plane in runs:
        r = _run_path(cfg, kind, plane, out)
        results[r["name"]] = r["metrics"]
        p = r["path"]
        print(f"{r['name']}: amplitude {p['amplitude_mm']} mm, frequency {p['frequency_Hz']} Hz")
        for ax, v in r["metrics"].items():
            print(f"  {ax}: MAXE {v['MAXE']:.3g} um, RMSE {v['RMSE']:.3g} um")
    if args.path == "table":
        motion.write_metrics_json(out / "metrics_table.json", motion.metrics_table(results))
    # analytic Bode curves of the configured plants
    plants = cfgmod.plants(cfg)
    f = np.logspace(-1, 2, 200)
    curves = {}
    for ax, pl in plants.items():
        mag, ph = motion.frequency_response(pl, f)
        motion.write_bode_csv(out / f"bode_{ax}.csv", f, mag, ph)
        curves[f"G_{ax}"] = (f, mag, ph)
    plotting.plot_bode(curves, out / "bode.png")
    return EXIT_OK


def cmd_verify(cfg, out: Path, args) -> int:
    mat = cfgmod.material(cfg)
    fams = cfgmod.families(cfg)
    oracle = {}
    for f, p in fams.items():
        r = stiffness_report(p, mat)
        km, kl = fe_stiffness_report(p, mat)
        oracle[f] = {"rel_error_motional": r.k_motional / km - 1, "rel_error_lateral": r.k_lateral / kl - 1}
    plants = cfgmod.plants(cfg)
    ctrls = cfgmod.controllers(cfg)
    ident = {}
    for ax, pl in plants.items():
        ctrl = ctrls[ax]
        rho = float(np.max(np.abs(motion.closed_loop_poles(pl, ctrl))))
        reciprocal = replace(ctrl, integral_form="reciprocal")
        rho_p = float(np.max(np.abs(motion.closed_loop_poles(pl, reciprocal))))
        ident[ax] = {"natural_frequency_Hz": pl.natural_frequency, "dc_stiffness_N_per_m": 1000.0 / pl.dc_compliance,
                     "measured_stiffness_N_per_m": MEASURED_STIFFNESS[ax],
                     "spectral_radius_configured": rho, "spectral_radius_reciprocal_form": rho_p}
    disc = motion.discrepancy_dict(motion.discrepancy_analysis(NOMINAL_FEA_STIFFNESS, MEASURED_STIFFNESS,
                                                               NOMINAL_FEA_FREQUENCY))
    coupling = {ax: motion.coupling_rate(list(v), 10.0) for ax, v in COUPLING_EXTREMA_UM.items()}
    data = {"fe_oracle": oracle, "identified_plants": ident, "discrepancy": disc, "coupling_rate_pct": coupling}
    _write_json(out / "verify.json", data)
    for f, e in oracle.items():
        print(f"{f}: motional {e['rel_error_motional']:+.2e}, lateral {e['rel_error_lateral']:+.2e}")
    for ax, d in disc.items():
        print(f"{ax}: alpha {d['alpha']:.3f}, thickness error {d['thickness_error_pct']:+.1f} %, "
              f"corrected f {d['corrected_frequency_hz']:.1f} Hz")
    return EXIT_OK


def cmd_report(cfg, out: Path, args) -> int:
    from .report import write_report

    run_dir = Path(args.run_dir) if args.run_dir else out
    path = write_report(run_dir)
    print(f"report written to {path}")
    return EXIT_OK


COMMANDS = {"stiffness": cmd_stiffness, "sweep": cmd_sweep, "optimize": cmd_optimize, "modal": cmd_modal,
            "simulate": cmd_simulate, "verify": cmd_verify, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (defaults built in)")
    common.add_argument("--seed", type=int, help="override the optimizer seed (unsigned 64-bit)")
    common.add_argument("--out", default="flexstage_out", help="output directory")
    common.add_argument("--units", choices=("mm", "si"), default="mm", help="length unit in outputs")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="flexstage", description="Flexure XYZ stage design workbench",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("stiffness", parents=[common], help="flexure unit stiffness report")
    s.add_argument("--family", choices=("all",) + FAMILIES, default="all")
    s.add_argument("--verify", action="store_true", help="also run the beam FE oracle")
    s = sub.add_parser("sweep", parents=[common], help="parameter sweep of one flexure family")
    s.add_argument("--workers", type=int, default=None)
    s = sub.add_parser("optimize", parents=[common], help="multi-objective design optimisation")
    s.add_argument("--axis", choices=("xy", "z", "both"), default="both")
    s.add_argument("--population", type=int)
    s.add_argument("--generations", type=int)
    s.add_argument("--workers", type=int)
    sub.add_parser("modal", parents=[common], help="lumped and chain modal analysis")
    s = sub.add_parser("simulate", parents=[common], help="closed-loop path tracking")
    s.add_argument("--path", choices=("circle", "crown", "raster", "table"), default="circle")
    s.add_argument("--plane", choices=("xy", "yz", "xz"), default="xy")
    sub.add_parser("verify", parents=[common], help="oracle and back-analysis checks")
    s = sub.add_parser("report", parents=[common], help="Markdown summary of a run directory")
    s.add_argument("run_dir", nargs="?")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            cfg["optimizer"]["seed"] = args.seed
        if args.command == "optimize":
            for name in ("population", "generations"):
                v = getattr(args, name)
                if v is not None:
                    cfg["optimizer"][name] = v
            cfg = cfgmod.validate(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        code = COMMANDS[args.command](cfg, out, args)
        log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
        return code
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (motion.UnstableLoopError, motion.SimulationDivergedError, SingularModelError, SkeletonError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
