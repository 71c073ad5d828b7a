"""Markdown summary of a run directory.

The report is rebuilt only from artifacts on disk, so regenerating it from
the same files gives identical bytes. Figures are re-rendered from the CSVs
next to them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import plotting
from .presets import REFERENCE_FEA, REFERENCE_MODEL

REQUIRED = ("stiffness.json", "sweep_summary.json", "selected_xy.json", "selected_z.json", "modal.json",
            "verify.json")


class MissingArtifactsError(FileNotFoundError):
    def __init__(self, missing: list[str]):
        super().__init__("missing artifacts: " + ", ".join(missing))
        self.missing = missing


def _metric_files(run: Path) -> list[Path]:
    return sorted(p for p in run.glob("metrics_*.json") if p.name != "metrics_table.json")


def missing_artifacts(run: Path) -> list[str]:
    run = Path(run)
    missing = [n for n in REQUIRED if not (run / n).is_file()]
    if not _metric_files(run):
        missing.append("metrics_<path>.json")
    return missing


def _load(run: Path, name: str):
    return json.loads((run / name).read_text())


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))


def _fmt(v, nd=2) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return f"{v:.{nd}f}"


def _table(header, rows) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return out


def _render_figures(run: Path) -> list[str]:
    figs = []
    if (run / "sweep.csv").is_file():
        _, a = _read_csv(run / "sweep.csv")
        summary = _load(run, "sweep_summary.json") if (run / "sweep_summary.json").is_file() else {}
        plotting.plot_sweep(a, run / "sweep.png", summary.get("family", ""))
        figs.append("sweep.png")
    for axis in ("xy", "z"):
        f = run / f"front_{axis}.csv"
        if f.is_file():
            _, a = _read_csv(f)
            if len(a):
                plotting.plot_front(a[:, 4:7], run / f"front_{axis}.png", axis=axis)
                figs.append(f"front_{axis}.png")
    bode = {}
    for ax in "xyz":
        f = run / f"bode_{ax}.csv"
        if f.is_file():
            _, a = _read_csv(f)
            bode[f"G_{ax}"] = (a[:, 0], a[:, 1], a[:, 2])
    if bode:
        plotting.plot_bode(bode, run / "bode.png")
        figs.append("bode.png")
    for f in sorted(run.glob("trace_*.csv")):
        _, a = _read_csv(f)
        ref, pos = a[:, [1, 3, 5]].T, a[:, [2, 4, 6]].T
        active = tuple(bool(np.any(ref[i] != 0)) for i in range(3))
        name = f.stem.replace("trace_", "tracking_") + ".png"
        plotting.plot_tracking(a[:, 0], ref, pos, run / name, active)
        figs.append(name)
    return figs


def build_report(run: Path) -> str:
    run = Path(run)
    missing = missing_artifacts(run)
    if missing:
        raise MissingArtifactsError(missing)
    st, sw, modal, ver = (_load(run, n) for n in ("stiffness.json", "sweep_summary.json", "modal.json",
                                                   "verify.json"))
    sel = {a: _load(run, f"selected_{a}.json") for a in ("xy", "z")}
    figs = _render_figures(run)
    L = ["# Flexure XYZ stage workbench report", ""]

    # 1
    L += ["## 1. Flexure stiffness", ""]
    fam = st["families"]
    modes = st["modal_Hz"]

    def eta(f):
        return _fmt(fam[f]["eta"]) if f in fam else "n/a"

    L += _table(["source", "eta_xd", "eta_xg", "k_xm (N/m)", "f_xy (Hz)", "eta_zd", "eta_zg", "k_zm (N/m)",
                 "f_z (Hz)"], [
        ["this model", eta("xd"), eta("xg"), _fmt(st["axis"]["k_xm_N_per_m"], 1), _fmt(modes[0]), eta("zd"),
         eta("zg"), _fmt(st["axis"]["k_zm_N_per_m"], 1), _fmt(modes[2])],
        ["reference model", _fmt(REFERENCE_MODEL["eta_xd"]), _fmt(REFERENCE_MODEL["eta_xg"]),
         _fmt(REFERENCE_MODEL["k_xm"], 1), _fmt(REFERENCE_MODEL["f_xy_vcm"], 1), _fmt(REFERENCE_MODEL["eta_zd"]),
         _fmt(REFERENCE_MODEL["eta_zg"]), _fmt(REFERENCE_MODEL["k_zm"], 1), _fmt(REFERENCE_MODEL["f_z_vcm"], 1)],
        ["reference FEA", _fmt(REFERENCE_FEA["eta_xd"]), _fmt(REFERENCE_FEA["eta_xg"]), _fmt(REFERENCE_FEA["k_xm"], 1), "n/a",
         _fmt(REFERENCE_FEA["eta_zd"]), _fmt(REFERENCE_FEA["eta_zg"]), _fmt(REFERENCE_FEA["k_zm"], 1), "n/a"],
    ])
    L += ["", "Beam FE oracle relative error per family:", ""]
    L += _table(["family", "motional", "lateral"],
                [[f, f"{e['rel_error_motional']:+.2e}", f"{e['rel_error_lateral']:+.2e}"]
                 for f, e in ver["fe_oracle"].items()])

    # 2
    L += ["", "## 2. Parameter sweep", "",
          f"Family `{sw['family']}`, {sw['points']} grid points, {sw['cabinet_points']} on the cabinet faces.", ""]
    L += _table(["trend", "holds"], [[k, _fmt(v)] for k, v in sw["monotonicity"].items()])
    if "sweep.png" in figs:
        L += ["", "![sweep](sweep.png)"]

    # 3
    L += ["", "## 3. Design optimisation", ""]
    rows = []
    for a, s in sel.items():
        d = s["selected"]
        c = s["configured_design"]
        if d is None:
            rows.append([a, str(s["front_size"]), "none", "n/a", "n/a", "n/a", _fmt(c["k_axis_N_per_m"], 1),
                         _fmt(c["feasible"])])
            continue
        p = d["par_mm"]
        rows.append([a, str(s["front_size"]), f"{p['t_g']:.2f}/{p['l_g']:.1f}/{p['t_d']:.2f}/{p['l_d']:.1f}",
                     _fmt(d["k_axis_N_per_m"], 1), _fmt(d["eta_d"]), _fmt(d["eta_g"]),
                     _fmt(c["k_axis_N_per_m"], 1), _fmt(c["feasible"])])
    L += _table(["axis", "front size", "selected t_g/l_g/t_d/l_d (mm)", "k_axis (N/m)", "eta_d", "eta_g",
                 "configured k_axis (N/m)", "configured feasible"], rows)
    L += [""] + [f"![front {a}](front_{a}.png)" for a in ("xy", "z") if f"front_{a}.png" in figs]

    # 4
    L += ["", "## 4. Stage dynamics", ""]
    lm = modal["lumped_modes_Hz"]
    L += [f"Lumped modes: {lm[0]:.2f} / {lm[1]:.2f} / {lm[2]:.2f} Hz.", ""]
    L += _table(["chain", "modes (Hz)", "simplified (Hz)", "motion loss", "port leakage (%)"],
                [[k, ", ".join(f"{v:.2f}" for v in c["modes_Hz"]), _fmt(c["simplified_Hz"]),
                  f"{c['motion_loss']:.2e}", _fmt(c["port_leakage_pct"])] for k, c in modal["chains"].items()])

    # 5
    L += ["", "## 5. Identification and tracking", ""]
    L += _table(["axis", "f_n (Hz)", "DC stiffness (N/m)", "measured (N/m)", "loop radius", "reciprocal-form radius"],
                [[a, _fmt(v["natural_frequency_Hz"]), _fmt(v["dc_stiffness_N_per_m"], 1),
                  _fmt(v["measured_stiffness_N_per_m"], 1), f"{v['spectral_radius_configured']:.6f}",
                  f"{v['spectral_radius_reciprocal_form']:.6f}"] for a, v in ver["identified_plants"].items()])
    L += [""]
    L += _table(["axis", "alpha", "thickness error (%)", "corrected f (Hz)", "coupling rate (%)"],
                [[a, f"{d['alpha']:.3f}", f"{d['thickness_error_pct']:+.1f}", _fmt(d["corrected_frequency_hz"], 1),
                  _fmt(ver["coupling_rate_pct"][a])] for a, d in ver["discrepancy"].items()])
    L += ["", "Tracking error (um):", ""]
    trows = []
    for f in _metric_files(run):
        m = json.loads(f.read_text())["metrics"]
        name = f.stem.replace("metrics_", "")
        cells = [name]
        for ax in "xyz":
            cells += [f"{m[ax]['MAXE']:.3g}", f"{m[ax]['RMSE']:.3g}"] if ax in m else ["-", "-"]
        trows.append(cells)
    L += _table(["path", "x MAXE", "x RMSE", "y MAXE", "y RMSE", "z MAXE", "z RMSE"], trows)
    extra = [f for f in figs if f.startswith("tracking_") or f == "bode.png"]
    if extra:
        L += [""] + [f"![{f[:-4]}]({f})" for f in extra]
    return "\n".join(L) + "\n"


def write_report(run: Path) -> Path:
    text = build_report(run)
    path = Path(run) / "report.md"
    path.write_text(text)
    return path
