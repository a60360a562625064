"""``pngdyn`` command line: games list, simulate, ode, qre, compare, sweep.

Every option can also come from a JSON config document (``--config``),
either flat or nested under the command name; explicit flags win.
Exit codes: 0 success, 2 config error, 3 numeric divergence, 4 IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, plots
from .abm import RegretInit, SimulationConfig, Trajectory, average_trajectories, run_replicates
from .errors import ConfigError, NumericError, PngError
from .game import BUILTIN_GAMES, builtin_title, builtin_game, resolve_game
from .network import GraphSpec, assign_payoffs, generate_graph
from .ode import MomentState, integrate
from .qre import enumerate_qre, qre_listing_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _env_seed():
    raw = os.environ.get("PNGDYN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"PNGDYN_SEED must be an integer, got {raw!r}") from None


DEFAULTS = {
    "simulate": dict(game="PD", agents=100, **{"lambda": 1.0}, steps=10_000, replicates=1, mean=1.0,
                     sd=0.1, truncate=True, record_every=1, snapshot_steps=[], graph=None, n=10, k=4,
                     beta=0.3, out="out/simulate", jobs=1),
    "ode": dict(game="PD", **{"lambda": 1.0}, mean=1.0, sd=0.1, t0=1.0, t1=10_000.0, steps=None,
                closure="hessian", init_csv=None, init_t=1, out="out/ode"),
    "qre": dict(game="PD", **{"lambda": 1.0}, starts=100, tol=1e-10, merge_radius=1e-4, out="out/qre"),
    "compare": dict(game="PD", agents=100, **{"lambda": 1.0}, steps=10_000, replicates=1, mean=1.0,
                    sd=0.1, truncate=True, closure="hessian", ode_steps=None, out="out/compare", jobs=1),
    "sweep": dict(game="PD", sds=[0.05, 0.1], replicates=10, steps=2000, agents=100, **{"lambda": 1.0},
                  mean=1.0, spread=0.5, graph="watts_strogatz", n=10, k=4, beta=0.3, threshold=1e-4,
                  out="out/sweep", jobs=1),
}


def _parse_mean(v):
    """``1``, ``1,0.5`` (per action) or ``1,0.5;0.5,1`` (per population)."""
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, list):
        return [_parse_mean(x) if isinstance(x, list) else float(x) for x in v] if any(
            isinstance(x, list) for x in v) else tuple(float(x) for x in v)
    s = str(v).strip()
    try:
        if ";" in s:
            return [tuple(float(x) for x in part.split(",")) for part in s.split(";")]
        if "," in s:
            return tuple(float(x) for x in s.split(","))
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse initial mean {v!r}") from None


def _floats(v):
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {v!r}") from None


def _ints(v):
    return [int(x) for x in _floats(v)]


def _inits(game, mean, sd, truncate):
    mean = _parse_mean(mean)
    if isinstance(mean, list):
        if len(mean) != game.n_populations:
            raise ConfigError(f"{len(mean)} initial means given for {game.n_populations} populations")
        return [RegretInit(m, sd, truncate) for m in mean]
    return RegretInit(mean, sd, truncate)


def _game(opts):
    template = resolve_game(str(opts["game"]))
    kind = opts.get("graph")
    if not kind:
        return template
    spec = GraphSpec(kind, int(opts["n"]), int(opts["k"]), float(opts["beta"]), int(opts["seed"]))
    return assign_payoffs(generate_graph(spec), template)


def _outdir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


# --- commands -------------------------------------------------------------------

def cmd_games(opts):
    for name in BUILTIN_GAMES:
        g = builtin_game(name)
        acts = " / ".join(",".join(a.labels) for a in g.actions)
        print(f"{name:4s} {builtin_title(name):28s} actions {acts}")
    return EXIT_OK


def cmd_simulate(opts):
    game = _game(opts)
    cfg = SimulationConfig(game, int(opts["agents"]), float(opts["lambda"]), int(opts["steps"]),
                           _inits(game, opts["mean"], float(opts["sd"]), bool(opts["truncate"])),
                           int(opts["seed"]), int(opts["record_every"]), tuple(_ints(opts["snapshot_steps"])))
    reps = int(opts["replicates"])
    trajs = run_replicates(cfg, reps, int(opts["jobs"]))
    out = _outdir(opts)
    width = max(3, len(str(reps - 1)))
    for r, tr in enumerate(trajs):
        tr.to_csv(out / f"replicate_{r:0{width}d}.csv")
        if tr.snapshots:
            tr.snapshots_to_csv(out / f"snapshots_{r:0{width}d}.csv")
    mean = average_trajectories(trajs)
    mean.to_csv(out / "mean.csv")
    print(f"{game.name}: {reps} replicate(s), {cfg.steps} steps -> {out}")
    for i, p in enumerate(mean.final_policies()):
        print(f"  population {i} terminal mean policy {np.array2string(p, precision=6)}")
    return EXIT_OK


def cmd_ode(opts):
    game = _game(opts)
    t0 = float(opts["t0"])
    if opts.get("init_csv"):
        # start from the moments recorded in a trajectory CSV (e.g. a simulate output)
        traj = Trajectory.from_csv(Path(opts["init_csv"]))
        t0 = float(opts["init_t"])
        state = experiments.matched_moments(traj, int(t0))
    else:
        mean = _parse_mean(opts["mean"])
        if isinstance(mean, tuple):
            mean = np.asarray(mean)  # per-action vector shared by all populations
        state = MomentState.isotropic(game, mean, float(opts["sd"]))
    closure = None if opts["closure"] in (None, "none") else opts["closure"]
    steps = None if opts["steps"] is None else int(opts["steps"])
    sol = integrate("moments", state, t0, float(opts["t1"]), steps, game, float(opts["lambda"]), closure)
    out = _outdir(opts)
    sol.to_csv([a.labels for a in game.actions], out / "ode.csv")
    print(f"{game.name}: integrated t={t0:g}..{float(opts['t1']):g} ({len(sol.time) - 1} RK4 steps) -> {out / 'ode.csv'}")
    for i, (p, v) in enumerate(zip(sol.policy, sol.variance)):
        print(f"  population {i} policy {np.array2string(p[-1], precision=6)} variance "
              f"{np.array2string(v[-1], precision=6)}")
    return EXIT_OK


def cmd_qre(opts):
    game = _game(opts)
    lam = float(opts["lambda"])
    sols = enumerate_qre(game, lam, int(opts["starts"]), int(opts["seed"]), float(opts["tol"]),
                         float(opts["merge_radius"]))
    out = _outdir(opts)
    qre_listing_csv(sols, game, out / "qre.csv")
    _write(out / "qre.json", json.dumps([s.to_record(game.name) for s in sols], indent=2) + "\n")
    print(f"{game.name} at lambda={lam}: {len(sols)} QRE")
    for k, s in enumerate(sols):
        pols = "  ".join(np.array2string(p, precision=6) for p in s.policies)
        print(f"  [{k}] {pols}  residual={s.residual:.3e}")
    return EXIT_OK


def cmd_compare(opts):
    game = _game(opts)
    closure = None if opts["closure"] in (None, "none") else opts["closure"]
    res = experiments.compare(game, float(opts["lambda"]), int(opts["agents"]), int(opts["steps"]),
                              _inits(game, opts["mean"], float(opts["sd"]), bool(opts["truncate"])),
                              int(opts["seed"]), int(opts["replicates"]), closure,
                              None if opts["ode_steps"] is None else int(opts["ode_steps"]),
                              jobs=int(opts["jobs"]))
    out = _outdir(opts)
    labels = [a.labels for a in game.actions]
    res.abm.to_csv(out / "abm.csv")
    res.ode.to_csv(labels, out / "ode.csv")
    qre_listing_csv(res.qres, game, out / "qre.csv")
    ref = res.nearest_qre.policies if res.nearest_qre is not None else None
    plots.compare_svg(out / "compare.svg", res.abm, res.ode, ref, game.name)
    report = {
        "game": game.name,
        "abm_ode_gap": res.gap,
        "abm_ode_gap_t": res.gap_time,
        "terminal_qre_residual": res.terminal_residual,
        "terminal_qre_distance": res.terminal_qre_distance,
        "n_qre": len(res.qres),
    }
    _write(out / "report.json", json.dumps(report, indent=2) + "\n")
    print(f"{game.name}: sup-norm ABM-model gap {res.gap:.4g} (at t={res.gap_time:g}); "
          f"terminal QRE residual {res.terminal_residual:.3e}")
    return EXIT_OK


SWEEP_COLUMNS = ["sd", "replicate", "homogeneity_time", "terminal_qre_residual",
                 "variance_slope_min", "variance_slope_max"]


def cmd_sweep(opts):
    template = resolve_game(str(opts["game"]))
    spec = GraphSpec(opts["graph"], int(opts["n"]), int(opts["k"]), float(opts["beta"]), int(opts["seed"]))
    sds = _floats(opts["sds"])
    rows, trajs = experiments.sweep(template, spec, sds, int(opts["replicates"]), int(opts["steps"]),
                                    float(opts["lambda"]), int(opts["agents"]), float(opts["mean"]),
                                    float(opts["spread"]), int(opts["seed"]), float(opts["threshold"]),
                                    jobs=int(opts["jobs"]))
    out = _outdir(opts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([format(r["sd"], ".17g"), r["replicate"],
                    "" if r["homogeneity_time"] is None else r["homogeneity_time"],
                    format(r["terminal_qre_residual"], ".17g"), format(r["variance_slope_min"], ".17g"),
                    format(r["variance_slope_max"], ".17g")])
    _write(out / "sweep.csv", buf.getvalue())
    curves = []
    for sd in sds:
        tr = trajs[sd][0]
        for i, v in enumerate(tr.regret_variance):
            curves.append((f"sd={sd:g} pop {i}", tr.t.astype(float), v.max(axis=1)))
    plots.variance_svg(out / "variance.svg", curves, f"{template.name} on {spec.kind}(n={spec.n})")
    for sd, t in experiments.mean_homogeneity_times(rows).items():
        print(f"sd={sd:g}: mean homogeneity time {t:g}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "ode": cmd_ode, "qre": cmd_qre, "compare": cmd_compare,
            "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pngdyn", description="Regret dynamics in population network games")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("games", help="builtin games")
    g.add_argument("action", choices=["list"])

    def common(sp, *, graph=True):
        sp.add_argument("--config", help="JSON config document")
        sp.add_argument("--game", help="builtin name (PE, RPS, AMP, PD, SH, BoS) or JSON game file")
        sp.add_argument("--lambda", dest="lambda", type=float, help="softmax temperature")
        sp.add_argument("--seed", type=int, help="base seed (default $PNGDYN_SEED or 0)")
        sp.add_argument("--out", help="output directory")
        if graph:
            sp.add_argument("--graph", choices=["edge", "complete", "ring", "watts_strogatz"],
                            help="play the game on a generated graph")
            sp.add_argument("--n", type=int, help="number of populations")
            sp.add_argument("--k", type=int, help="Watts-Strogatz mean degree")
            sp.add_argument("--beta", type=float, help="Watts-Strogatz rewiring probability")

    def init_args(sp):
        sp.add_argument("--mean", help="initial mean regret: '1', '1,0.5' or '1,0.5;0.5,1'")
        sp.add_argument("--sd", type=float, help="initial regret standard deviation")
        sp.add_argument("--truncate", action=argparse.BooleanOptionalAction, default=None,
                        help="positive (truncated) Normal initial regrets")

    s = sub.add_parser("simulate", help="agent-based smooth regret matching")
    common(s)
    init_args(s)
    s.add_argument("--agents", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--replicates", type=int)
    s.add_argument("--record-every", dest="record_every", type=int)
    s.add_argument("--snapshot-steps", dest="snapshot_steps", help="comma-separated steps for per-agent dumps")
    s.add_argument("--jobs", type=int)

    o = sub.add_parser("ode", help="integrate the mean-regret + variance model")
    common(o)
    o.add_argument("--mean")
    o.add_argument("--sd", type=float)
    o.add_argument("--t0", type=float)
    o.add_argument("--t1", type=float)
    o.add_argument("--steps", type=int)
    o.add_argument("--closure", choices=["hessian", "squared_gradient", "none"])
    o.add_argument("--init-csv", dest="init_csv", help="take initial moments from a trajectory CSV")
    o.add_argument("--init-t", dest="init_t", type=int, help="record of --init-csv to start from (default 1)")

    q = sub.add_parser("qre", help="enumerate quantal response equilibria")
    common(q)
    q.add_argument("--starts", type=int)
    q.add_argument("--tol", type=float)
    q.add_argument("--merge-radius", dest="merge_radius", type=float)

    c = sub.add_parser("compare", help="agent-based runs against the model")
    common(c)
    init_args(c)
    c.add_argument("--agents", type=int)
    c.add_argument("--steps", type=int)
    c.add_argument("--replicates", type=int)
    c.add_argument("--closure", choices=["hessian", "squared_gradient", "none"])
    c.add_argument("--ode-steps", dest="ode_steps", type=int)
    c.add_argument("--jobs", type=int)

    w = sub.add_parser("sweep", help="homogeneity time against initial regret sd on a network")
    common(w)
    w.add_argument("--sds", help="comma-separated initial standard deviations")
    w.add_argument("--replicates", type=int)
    w.add_argument("--steps", type=int)
    w.add_argument("--agents", type=int)
    w.add_argument("--mean", type=float)
    w.add_argument("--spread", type=float, help="half-width of per-population initial mean offsets")
    w.add_argument("--threshold", type=float, help="homogeneity variance threshold")
    w.add_argument("--jobs", type=int)
    return p


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    cmd = args.command
    opts = dict(DEFAULTS[cmd])
    opts["seed"] = _env_seed()
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        section = doc.get(cmd, doc)
        for key, val in section.items():
            key = key.replace("-", "_")
            if key not in opts and key != "seed":
                raise ConfigError(f"unknown {cmd} config key {key!r}")
            opts[key] = val
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        opts[key] = val
    return opts


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "games":
            return cmd_games({})
        return COMMANDS[args.command](resolve_options(args))
    except NumericError as exc:
        print(f"pngdyn: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PngError, KeyError, TypeError, ValueError) as exc:
        print(f"pngdyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pngdyn: IO error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
