"""Three-controller comparison: tuning, simulation, tables, plots."""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__, _jit, svg
from .config import q_r_matrices
from .errors import AgcError, OutputError, SolverError
from .lqrsyn import CareSolution, lqr_gain, paper_lqr_pi_gain, solve_care
from .psoopt import PsoResult, optimize
from .simkit import FeedbackGain, metrics, simulate

log = logging.getLogger(__name__)

CHANNELS = (1, 2)
TABLE_KINDS = (("undershoot", "peak_undershoot", "Peak undershoot (Hz)"),
               ("settling", "settling_time", "Settling time (s)"),
               ("overshoot", "peak_overshoot", "Peak overshoot (Hz)"))
NOT_SETTLED = "not settled"


@dataclass
class TunedController:
    name: str
    kind: str
    gain: FeedbackGain
    pso: Optional[PsoResult] = None
    care: Optional[CareSolution] = None


@dataclass
class ComparisonReport:
    controllers: list
    scenarios: list  # NamedScenario
    band: float
    trajectories: dict = field(default_factory=dict)  # (ctrl, scen) -> Trajectory
    metrics: dict = field(default_factory=dict)  # (ctrl, scen, channel) -> ResponseMetrics
    config_digest: str = ""
    seed: int = 0

    def row_label(self, scen, channel):
        return f"delf{channel}{scen.scenario.disturbance_area}"

    def get(self, ctrl, scen, channel):
        return self.metrics[(ctrl, scen, channel)]


def tune(spec, model, workers=1, on_iteration=None):
    """Produce the feedback gain for one controller entry."""
    try:
        if spec.kind == "lqr_pi":
            q, r = q_r_matrices(spec)
            sol = solve_care(model.a, model.b, q, r)
            return TunedController(spec.name, spec.kind, lqr_gain(sol, model.b, r), care=sol)
        if spec.kind in ("integral", "pso_k"):
            mask = "integral_only" if spec.kind == "integral" else "full"
            res = optimize(spec.swarm, mask, model, workers=workers, on_iteration=on_iteration)
            return TunedController(spec.name, spec.kind, res.best_gain, pso=res)
        if spec.preset == "paper_lqr_pi":
            return TunedController(spec.name, spec.kind, paper_lqr_pi_gain())
        return TunedController(spec.name, spec.kind, FeedbackGain.from_csv(spec.gain_file))
    except SolverError as exc:
        raise SolverError(f"controller {spec.name!r}: {exc}", residual=exc.residual) from exc
    except AgcError as exc:
        raise type(exc)(f"controller {spec.name!r}: {exc}") from exc


def run_comparison(cfg, workers=1, progress=None):
    """Tune every controller, simulate every scenario, collect metrics.

    ``progress(controller_name, iteration, gbest)`` receives PSO convergence.
    """
    model = cfg.model()
    tuned = []
    for spec in cfg.controllers:
        log.info("tuning %s (%s)", spec.name, spec.kind)
        cb = None
        if progress is not None:
            cb = (lambda name: lambda it, f: progress(name, it, f))(spec.name)
        tuned.append(tune(spec, model, workers=workers, on_iteration=cb))
    report = ComparisonReport(controllers=tuned, scenarios=list(cfg.scenarios),
                              band=cfg.settling_band, config_digest=cfg.digest(), seed=cfg.seed)
    for ctrl in tuned:
        for ns in cfg.scenarios:
            traj = simulate(model, ctrl.gain, ns.scenario)
            report.trajectories[(ctrl.name, ns.name)] = traj
            for ch in CHANNELS:
                if traj.diverged:
                    report.metrics[(ctrl.name, ns.name, ch)] = None
                else:
                    report.metrics[(ctrl.name, ns.name, ch)] = metrics(traj, ch, cfg.settling_band)
    return report


def _num(v):
    if v is None:
        return NOT_SETTLED
    return repr(float(v))


def _prepare(outdir):
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {outdir}: {exc}") from None
    return outdir


def _cell(report, ctrl, scen, ch, attr):
    m = report.get(ctrl, scen, ch)
    if m is None:
        return "diverged"
    return _num(getattr(m, attr))


def emit_tables(report, outdir):
    """Six CSV tables (rows delfXY, one column per controller) plus summary.md."""
    outdir = _prepare(outdir)
    names = [c.name for c in report.controllers]
    written = []
    md = ["# Controller comparison", "",
          f"Settling band: +/-{report.band} Hz. Seed: {report.seed}.", ""]
    try:
        for stem, attr, title in TABLE_KINDS:
            for ns in report.scenarios:
                path = outdir / f"{stem}_{ns.name}.csv"
                rows = [[report.row_label(ns, ch)] + [_cell(report, c, ns.name, ch, attr) for c in names]
                        for ch in CHANNELS]
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["response"] + names)
                    w.writerows(rows)
                written.append(path)
                md += [f"## {title}: load step in {ns.name}", "",
                       "| response | " + " | ".join(names) + " |",
                       "|---" * (len(names) + 1) + "|"]
                md += ["| " + " | ".join(r) + " |" for r in rows]
                md.append("")
        md += ["## Tuned gains", ""]
        for c in report.controllers:
            md += [f"### {c.name} ({c.kind})", "", "```"]
            md += [" ".join(f"{v: .6f}" for v in row) for row in c.gain.k]
            md += ["```", ""]
            if c.pso is not None:
                md += [f"PSO best fitness (summed ISE): {c.pso.best_fitness!r}", ""]
        path = outdir / "summary.md"
        path.write_text("\n".join(md))
        written.append(path)
    except OSError as exc:
        raise OutputError(f"cannot write tables to {outdir}: {exc}") from None
    return written


def write_dat(path, times, values):
    with open(path, "w") as fh:
        for t, v in zip(times, values):
            fh.write(f"{t:.6f} {v:.6f}\n")


def emit_plots(report, outdir):
    """One SVG per (scenario, channel) overlaying controllers, plus .dat traces."""
    outdir = _prepare(outdir)
    written = []
    if not report.trajectories:
        log.info("no trajectories; nothing to plot")
        return written
    try:
        for ns in report.scenarios:
            for ch in CHANNELS:
                label = report.row_label(ns, ch)
                stem = label if ns.name == f"area{ns.scenario.disturbance_area}" else f"{ns.name}_{label}"
                series = []
                for c in report.controllers:
                    traj = report.trajectories.get((c.name, ns.name))
                    if traj is None:
                        continue
                    y = traj.channel(ch)
                    dat = outdir / f"{c.name}_{stem}.dat"
                    write_dat(dat, traj.times, y)
                    written.append(dat)
                    series.append((c.name, traj.times, y))
                if series:
                    path = outdir / f"{stem}.svg"
                    title = (f"df{ch} vs t, {abs(ns.scenario.disturbance_magnitude) * 100:g}% "
                             f"load step in area {ns.scenario.disturbance_area}")
                    svg.line_plot(path, series, title=title, xlabel="t (s)", ylabel=f"df{ch} (Hz)")
                    written.append(path)
    except OSError as exc:
        raise OutputError(f"cannot write plots to {outdir}: {exc}") from None
    return written


def emit_artifacts(report, outdir):
    """Gains, convergence histories, full trajectories and the run manifest."""
    outdir = _prepare(outdir)
    written = []
    try:
        (outdir / "gains").mkdir(exist_ok=True)
        (outdir / "trajectories").mkdir(exist_ok=True)
        for c in report.controllers:
            p = outdir / "gains" / f"{c.name}.csv"
            c.gain.to_csv(p)
            written.append(p)
            if c.pso is not None:
                p = outdir / f"convergence_{c.name}.csv"
                with open(p, "w") as fh:
                    fh.write("iter,gbest_fitness\n")
                    for i, v in enumerate(c.pso.history, start=1):
                        fh.write(f"{i},{v!r}\n")
                written.append(p)
        for (cname, sname), traj in report.trajectories.items():
            p = outdir / "trajectories" / f"{cname}_{sname}.csv"
            traj.to_csv(p)
            written.append(p)
        lines = [f"agc {__version__}", f"config_sha256 {report.config_digest}",
                 f"seed {report.seed}", f"backend {_jit.backend_name()}",
                 f"settling_band {report.band!r}"]
        for c in report.controllers:
            lines.append(f"gain {c.name} {c.kind} " + " ".join(repr(float(v)) for v in c.gain.k.ravel()))
            if c.pso is not None:
                lines.append(f"pso {c.name} best_fitness {c.pso.best_fitness!r} "
                             f"evaluations {c.pso.evaluations}")
            if c.care is not None:
                lines.append(f"care {c.name} residual {c.care.residual!r} "
                             f"rde_steps {c.care.iterations} newton_steps {c.care.newton_steps}")
        p = outdir / "run-manifest.txt"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    except OSError as exc:
        raise OutputError(f"cannot write artifacts to {outdir}: {exc}") from None
    return written
