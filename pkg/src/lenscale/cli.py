"""``lenscale`` command-line tool.

    lenscale solve|curves|verify1d|topopt|measure --config CONFIG.json --out DIR

Every command writes its artifacts plus ``manifest.json`` into ``DIR``.
Outputs contain no timestamps, so identical inputs give identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytic, measure2d, numeric1d
from .analytic import Phase
from .config import ConfigError, build_specs, build_topopt, digest, load_config
from .fields import Field2D
from .io import RasterIOError, read_field, write_csv, write_field, write_pgm, write_svg_plot
from .paramsolve import NoSolutionError, UnsatisfiableSpecError, solve_determined, solve_free
from .paramsolve import apply_cutoff_correction

log = logging.getLogger("lenscale")

SOLUTION_COLUMNS = [
    "case", "eta_ero", "eta_int", "eta_dil", "r_fil", "t_ero", "t_dil",
    "r_min_solid", "r_min_void", "zone_solid", "zone_void", "recommended", "compromise",
]
CURVE_COLUMNS = ["eta_threshold", "eta_i", "normalized_size", "h_star"]


class _Run:
    """Collects output paths and writes the manifest."""

    def __init__(self, command, config, out, config_digest=None):
        self.command = command
        self.config_digest = config_digest or digest(config)
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[Path] = []

    def add(self, *paths):
        self.outputs.extend(Path(p) for p in paths)

    def finish(self):
        files = []
        for p in sorted(set(self.outputs)):
            files.append({
                "path": p.relative_to(self.out).as_posix(),
                "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
            })
        manifest = {
            "command": self.command,
            "config_digest": self.config_digest,
            "tool_version": __version__,
            "outputs": files,
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def cmd_solve(config: dict, out, config_digest=None) -> int:
    run = _Run("solve", config, out, config_digest)
    rows, records = [], []
    for label, spec in build_specs(config):
        if spec.t_ero is not None:
            recs = [solve_determined(spec)]
        else:
            recs = solve_free(spec)
        if spec.beta is not None and spec.epsilon is not None:
            recs = [apply_cutoff_correction(r, spec.beta, spec.epsilon) for r in recs]
        for r in recs:
            row = {"case": label, **r.as_row()}
            rows.append(row)
            records.append(row)
    run.add(write_csv(run.out / "solutions.csv", rows, SOLUTION_COLUMNS))
    js = run.out / "solutions.json"
    js.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
    run.add(js)
    run.finish()
    for row in rows:
        flag = "*" if row["recommended"] else " "
        print(f"{flag} {row['case']}: eta=({row['eta_ero']:.2f}, {row['eta_int']:.2f}, "
              f"{row['eta_dil']:.4f}) r_fil={row['r_fil']:.3f} "
              f"t_ero={row['t_ero']:.3f} t_dil={row['t_dil']:.3f}")
    return 0


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------

def cmd_curves(config: dict, out, config_digest=None) -> int:
    run = _Run("curves", config, out, config_digest)
    eta_int = config.get("eta_int", 0.5)
    step = config.get("eta_step", 0.05)
    grid = numeric1d.grid(step)
    ero = [e for e in grid if e > eta_int + 1e-9]
    dil = [d for d in grid if d < eta_int - 1e-9]

    # (a) normalised minimum size, (b) filter radius per unit minimum radius
    rows = []
    for e in ero:
        ms = analytic.min_size_solid(eta_int, e)
        rows.append({"phase": "solid", "eta_threshold": e, "eta_i": eta_int,
                     "normalized_size": ms, "r_fil_over_r_min": 2 / ms,
                     "zone": str(analytic.solid_zone(eta_int, e)), "source": "analytic"})
    for d in dil:
        ms = analytic.min_size_void(eta_int, d)
        rows.append({"phase": "void", "eta_threshold": d, "eta_i": eta_int,
                     "normalized_size": ms, "r_fil_over_r_min": 2 / ms,
                     "zone": str(analytic.void_zone(eta_int, d)), "source": "analytic"})
    numeric_cfg = config.get("numeric", False)
    if numeric_cfg:
        kw = numeric_cfg if isinstance(numeric_cfg, dict) else {}
        cfg = numeric1d.Numeric1DConfig(**kw)
        for phase, thr, sweep in ((Phase.SOLID, ero, numeric1d.sweep_solid),
                                  (Phase.VOID, dil, numeric1d.sweep_void)):
            for p in sweep(cfg, [eta_int], thr):
                rows.append({"phase": phase.value, "eta_threshold": p.eta_threshold,
                             "eta_i": p.eta_i, "normalized_size": p.normalized_size,
                             "r_fil_over_r_min": 2 / p.normalized_size if p.normalized_size
                             else float("inf"),
                             "zone": "", "source": "numeric"})
    cols = ["phase", "eta_threshold", "eta_i", "normalized_size", "r_fil_over_r_min", "zone",
            "source"]
    run.add(write_csv(run.out / "size_curves.csv", rows, cols))
    series_a, series_b = [], []
    for phase in ("solid", "void"):
        for source in ("analytic", "numeric"):
            sel = [r for r in rows if r["phase"] == phase and r["source"] == source]
            if not sel:
                continue
            xs = [r["eta_threshold"] for r in sel]
            series_a.append((f"{phase} {source}", xs, [r["normalized_size"] for r in sel],
                             source == "numeric"))
            series_b.append((f"{phase} {source}", xs, [r["r_fil_over_r_min"] for r in sel],
                             source == "numeric"))
    run.add(write_svg_plot(run.out / "fig_size.svg", series_a,
                           f"Normalised minimum size (eta_int={eta_int})",
                           "eta_ero (solid) / eta_dil (void)", "2 r_min / r_fil"))
    run.add(write_svg_plot(run.out / "fig_rfil.svg", series_b, "Filter radius per minimum radius",
                           "eta_ero (solid) / eta_dil (void)", "r_fil / r_min"))

    # (c, d) normalised erosion and dilation distances
    drows = []
    for e in ero:
        for d in dil:
            t = analytic.ThresholdTriple(e, eta_int, d)
            t_ero, t_dil = analytic.distances(t, 2.0)  # r_fil = 2 -> radii equal normalised size
            drows.append({
                "eta_ero": e, "eta_dil": d,
                "t_ero_over_r_min_void": t_ero / analytic.min_size_void(eta_int, d),
                "t_dil_over_r_min_solid": t_dil / analytic.min_size_solid(eta_int, e),
            })
    run.add(write_csv(run.out / "distance_curves.csv", drows,
                      ["eta_ero", "eta_dil", "t_ero_over_r_min_void", "t_dil_over_r_min_solid"]))
    picks = [e for e in ero if abs(e * 20 - round(e * 20)) < 1e-9][::2]
    s_c = [(f"eta_ero={e:.2f}", [r["eta_dil"] for r in drows if r["eta_ero"] == e],
            [r["t_ero_over_r_min_void"] for r in drows if r["eta_ero"] == e]) for e in picks]
    pd = [d for d in dil if abs(d * 20 - round(d * 20)) < 1e-9][::2]
    s_d = [(f"eta_dil={d:.2f}", [r["eta_ero"] for r in drows if r["eta_dil"] == d],
            [r["t_dil_over_r_min_solid"] for r in drows if r["eta_dil"] == d]) for d in pd]
    run.add(write_svg_plot(run.out / "fig_t_ero.svg", s_c, "Erosion distance", "eta_dil",
                           "t_ero / r_min_void"))
    run.add(write_svg_plot(run.out / "fig_t_dil.svg", s_d, "Dilation distance", "eta_ero",
                           "t_dil / r_min_solid"))
    run.finish()
    return 0


# --------------------------------------------------------------------------
# verify1d
# --------------------------------------------------------------------------

def _curve_rows(study, curve):
    rows = []
    for p, a in zip(curve.points, curve.analytic):
        rows.append({"study": study, "curve": curve.label, "eta_threshold": p.eta_threshold,
                     "eta_i": p.eta_i, "normalized_size": p.normalized_size, "h_star": p.h_star,
                     "analytic": a, "band": curve.band,
                     "deviation": p.normalized_size - a})
    return rows


def _plot_study(path, title, curves, xlabel):
    series = []
    for c in curves:
        xs = [p.eta_threshold for p in c.points]
        series.append((f"{c.label} numeric", xs, [p.normalized_size for p in c.points], False))
        series.append((f"{c.label} analytic", xs, list(c.analytic), True))
    return write_svg_plot(path, series, title, xlabel, "2 r_min / r_fil")


def cmd_verify1d(config: dict, out, config_digest=None) -> int:
    run = _Run("verify1d", config, out, config_digest)
    studies = config.get("studies", ["rounding", "cutoff", "alpha"])
    cols = ["study", "curve", "eta_threshold", "eta_i", "normalized_size", "h_star",
            "analytic", "band", "deviation"]
    summary = {}
    if "agreement" in studies:
        cfg = numeric1d.Numeric1DConfig(**config.get("agreement", {}))
        g = numeric1d.grid()
        rows = []
        for phase, sweep in ((Phase.SOLID, numeric1d.sweep_solid),
                             (Phase.VOID, numeric1d.sweep_void)):
            pts = [p for p in sweep(cfg, g, g) if abs(p.eta_i - p.eta_threshold) > 1e-9]
            for p in pts:
                a = numeric1d.analytic_value(p, phase)
                rows.append({"study": "agreement", "curve": phase.value,
                             "eta_threshold": p.eta_threshold, "eta_i": p.eta_i,
                             "normalized_size": p.normalized_size, "h_star": p.h_star,
                             "analytic": a, "band": analytic.rounding_band(cfg.r_fil),
                             "deviation": p.normalized_size - a})
        run.add(write_csv(run.out / "agreement.csv", rows, cols))
        summary["agreement_max_abs_deviation"] = max(abs(r["deviation"]) for r in rows)
    if "rounding" in studies:
        kw = config.get("rounding", {})
        curves = numeric1d.study_rounding(r_fils=tuple(kw.get("r_fils", (10, 20))),
                                          beta=kw.get("beta", 500.0))
        rows = [r for c in curves for r in _curve_rows("rounding", c)]
        run.add(write_csv(run.out / "rounding.csv", rows, cols))
        run.add(_plot_study(run.out / "rounding.svg", "Rounding band", curves, "eta_ero"))
        summary["rounding_within_band"] = all(
            bool(np.all(np.abs(c.deviations) <= c.band + 1e-12)) for c in curves)
    if "cutoff" in studies:
        kw = dict(config.get("cutoff", {}))
        if "epsilons" in kw:
            kw["epsilons"] = tuple(kw["epsilons"])
        curves = numeric1d.study_cutoff(**kw)
        rows = [r for c in curves for r in _curve_rows("cutoff", c)]
        run.add(write_csv(run.out / "cutoff.csv", rows, cols))
        run.add(_plot_study(run.out / "cutoff.svg", "Cut-off shift", curves, "eta_ero"))
        summary["cutoff_max_abs_deviation"] = max(
            float(np.max(np.abs(c.deviations))) for c in curves)
    if "alpha" in studies:
        kw = dict(config.get("alpha", {}))
        if "alphas" in kw:
            kw["alphas"] = tuple(kw["alphas"])
        curves = numeric1d.study_alpha(**kw)
        rows = [r for c in curves for r in _curve_rows("alpha", c)]
        run.add(write_csv(run.out / "alpha.csv", rows, cols))
        run.add(_plot_study(run.out / "alpha.svg", "Eroded member of alpha r_fil", curves,
                            "eta_ero"))
    sp = run.out / "summary.json"
    sp.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    run.add(sp)
    run.finish()
    return 0


# --------------------------------------------------------------------------
# topopt
# --------------------------------------------------------------------------

HISTORY_COLUMNS = ["iteration", "beta", "c_ero", "c_int", "c_dil", "vol_ero", "vol_int",
                   "vol_dil", "v_dil_bound", "change"]


def cmd_topopt(config: dict, out, config_digest=None) -> int:
    from .topopt2d import optimize

    run = _Run("topopt", config, out, config_digest)
    problem, rcfg = build_topopt(config)
    seed = config.get("seed", {"uniform": rcfg.volume_fraction})
    if "raster" in seed:
        x0 = read_field(seed["raster"]).values
        if x0.shape != (problem.ny, problem.nx):
            raise RasterIOError(f"seed raster shape {x0.shape} does not match the mesh")
    else:
        x0 = np.full((problem.ny, problem.nx), seed["uniform"])

    def progress(row):
        if row.iteration % 20 == 0:
            log.info("it %d beta %.0f c_ero %.5g vol_int %.4f", row.iteration, row.beta,
                     row.c_ero, row.vol_int)

    state = optimize(problem, rcfg, x0, callback=progress)
    rows = [vars(h) for h in state.history]
    for r in rows:
        r["v_dil_bound"] = float(r["v_dil_bound"])
    run.add(write_csv(run.out / "history.csv", rows, HISTORY_COLUMNS))
    for name in ("x", "filtered", "eroded", "intermediate", "dilated"):
        run.add(*write_field(run.out / name, Field2D(getattr(state, name))))
    eps = config.get("measure_epsilon", 0.5)
    report = measure2d.measure(state.intermediate, epsilon=eps)
    mp = run.out / "measurement.json"
    result = {"status": state.status, "iterations": state.iteration,
              "final_beta": state.beta, "measurement": report.as_dict()}
    mp.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    run.add(mp)
    run.finish()
    print(f"status={state.status} iterations={state.iteration} "
          f"r_min_solid={report.r_min_solid_measured} r_min_void={report.r_min_void_measured}")
    return 0


# --------------------------------------------------------------------------
# measure
# --------------------------------------------------------------------------

def cmd_measure(config: dict, out, config_digest=None) -> int:
    run = _Run("measure", config, out, config_digest)
    field = read_field(config["raster"])
    eps = config.get("epsilon", 0.5)
    report = measure2d.measure(field, epsilon=eps, min_area=config.get("min_area", 2))
    rp = run.out / "measurement.json"
    rp.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    run.add(rp)
    marks = []
    for loc in (report.solid_location, report.void_location):
        if all(np.isfinite(loc)):
            ix = int(np.clip(round(loc[0]), 0, field.nx - 1))
            iy = int(np.clip(round(loc[1]), 0, field.ny - 1))
            marks.append((iy, ix))
    binary = (field.values >= eps).astype(float)
    run.add(write_pgm(run.out / "overlay.pgm", binary, marks))
    run.finish()
    print(f"r_min_solid={report.r_min_solid_measured} r_min_void={report.r_min_void_measured}")
    return 0


def _resolve_paths(config: dict, base: Path) -> dict:
    """Raster paths in a config are relative to the config file."""
    def fix(p):
        return str(p if Path(p).is_absolute() else base / p)
    if "raster" in config:
        config = {**config, "raster": fix(config["raster"])}
    seed = config.get("seed")
    if isinstance(seed, dict) and "raster" in seed:
        config = {**config, "seed": {"raster": fix(seed["raster"])}}
    return config


COMMANDS = {
    "solve": cmd_solve,
    "curves": cmd_curves,
    "verify1d": cmd_verify1d,
    "topopt": cmd_topopt,
    "measure": cmd_measure,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lenscale", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lenscale {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        raw = load_config(args.config, args.command)
        config = _resolve_paths(raw, Path(args.config).parent)
        return COMMANDS[args.command](config, args.out, digest(raw))
    except (ConfigError, RasterIOError, UnsatisfiableSpecError, NoSolutionError,
            measure2d.EmptyPhaseError, analytic.DomainError, ValueError) as exc:
        print(f"lenscale {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
