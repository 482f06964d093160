"""``agc`` command line: run / lqr / pso / simulate."""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import AgcError, ConfigError
from .lqrsyn import PAPER_LQR_PI_GAIN, lqr, paper_lqr_pi_gain
from .psoopt import optimize
from .report import emit_artifacts, emit_plots, emit_tables, run_comparison
from .simkit import DEFAULT_BAND, FeedbackGain, Scenario, metrics, simulate

log = logging.getLogger("agc")

PAPER_GAIN_TOKEN = "paper-lqr-pi"


def _cmd_run(args):
    cfg = load_config(args.config, seed=args.seed)
    out = Path(args.out or cfg.output_dir)

    def progress(name, it, f):
        if not args.quiet:
            print(f"{name},{it},{f!r}", file=sys.stderr, flush=True)

    report = run_comparison(cfg, workers=args.workers, progress=progress)
    emit_tables(report, out)
    emit_plots(report, out)
    emit_artifacts(report, out)
    print((out / "summary.md").read_text())
    print(f"outputs written to {out}")
    return 0


def _cmd_lqr(args):
    cfg = load_config(args.config)
    model = cfg.model()
    q = np.diag(args.q_diag) if args.q_diag else None
    r = np.diag(args.r_diag) if args.r_diag else None
    sol, gain = lqr(model, q, r)
    np.set_printoptions(precision=6, suppress=True, linewidth=160)
    print(f"residual {sol.residual:.3e}  rde_steps {sol.iterations}  newton_steps {sol.newton_steps}")
    print("P =")
    print(sol.p)
    print("K =")
    print(gain.k)
    gap = gain.k - PAPER_LQR_PI_GAIN
    print(f"max |K - K_published_lqr_pi| = {np.max(np.abs(gap)):.4f} (diagnostic only)")
    if args.gain_out:
        gain.to_csv(args.gain_out)
    return 0


def _cmd_pso(args):
    cfg = load_config(args.config, seed=args.seed)
    mask = "integral_only" if args.mask == "integral" else "full"
    kind = "integral" if mask == "integral_only" else "pso_k"
    spec = next((c for c in cfg.controllers if c.kind == kind), None)
    if spec is None:
        raise ConfigError(f"config has no {kind} controller to take swarm settings from")
    swarm = spec.swarm
    over = {k: v for k, v in (("population", args.population), ("iterations", args.iterations))
            if v is not None}
    if over:
        swarm = replace(swarm, **over)
    print("iter,gbest_fitness", flush=True)
    res = optimize(swarm, mask, cfg.model(), workers=args.workers,
                   on_iteration=lambda it, f: print(f"{it},{f!r}", flush=True))
    print(f"# best_fitness {res.best_fitness!r}")
    for row in res.best_gain.k:
        print("# " + " ".join(repr(float(v)) for v in row))
    if args.gain_out:
        res.best_gain.to_csv(args.gain_out)
    return 0


def _cmd_simulate(args):
    cfg = load_config(args.config)
    if args.gain == PAPER_GAIN_TOKEN:
        gain = paper_lqr_pi_gain()
    else:
        try:
            gain = FeedbackGain.from_csv(args.gain)
        except OSError as exc:
            raise ConfigError(f"cannot read gain file: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"bad gain file {args.gain}: {exc}") from None
    try:
        s = Scenario(args.area, args.magnitude, args.horizon, args.dt)
    except AgcError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    traj = simulate(cfg.model(), gain, s)
    if args.csv:
        traj.to_csv(args.csv)
    if traj.diverged:
        print(f"diverged at t={traj.divergence_time}")
        return 0
    print("channel,peak_undershoot,peak_overshoot,settling_time,ise")
    for ch in (1, 2):
        m = metrics(traj, ch, args.band)
        st = "not settled" if m.settling_time is None else repr(m.settling_time)
        print(f"delf{ch}{args.area},{m.peak_undershoot!r},{m.peak_overshoot!r},{st},{m.ise!r}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="agc", description=__doc__)
    p.add_argument("--version", action="version", version=f"agc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full three-controller comparison")
    run.add_argument("--config", help="TOML run file (defaults reproduce the published setup)")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("-q", "--quiet", action="store_true", help="no convergence stream on stderr")
    run.set_defaults(func=_cmd_run)

    lq = sub.add_parser("lqr", help="solve the CARE and print P, residual and K")
    lq.add_argument("--config")
    lq.add_argument("--q-diag", type=float, nargs=11, metavar="Q")
    lq.add_argument("--r-diag", type=float, nargs=2, metavar="R")
    lq.add_argument("--gain-out", help="write K as a 2x11 CSV")
    lq.set_defaults(func=_cmd_lqr)

    ps = sub.add_parser("pso", help="swarm-optimize a gain, streaming iter,gbest_fitness")
    ps.add_argument("--config")
    ps.add_argument("--mask", choices=("full", "integral"), default="full")
    ps.add_argument("--seed", type=int)
    ps.add_argument("--population", type=int)
    ps.add_argument("--iterations", type=int)
    ps.add_argument("--workers", type=int, default=1)
    ps.add_argument("--gain-out")
    ps.set_defaults(func=_cmd_pso)

    sm = sub.add_parser("simulate", help="single closed-loop step response")
    sm.add_argument("--gain", required=True,
                    help=f"2x11 gain CSV, or '{PAPER_GAIN_TOKEN}' for the published LQR-PI gain")
    sm.add_argument("--config")
    sm.add_argument("--area", type=int, default=1)
    sm.add_argument("--magnitude", type=float, default=0.01)
    sm.add_argument("--horizon", type=float, default=120.0)
    sm.add_argument("--dt", type=float, default=0.005)
    sm.add_argument("--band", type=float, default=DEFAULT_BAND)
    sm.add_argument("--csv", help="write the trajectory CSV here")
    sm.set_defaults(func=_cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AgcError as exc:
        print(f"agc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"agc: error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
