"""Command-line experiment runner.

Subcommands ``bound``, ``maximize``, ``bandit``, ``oracle-check`` and
``generate`` write CSV or JSON. Exit codes: 0 ok, 1 validation error,
2 runtime error, 3 failed oracle check.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bounds, graph as G, oracles
from ._validation import check_seed_set, spawn_seeds
from .bandit import adversaries as ADV
from .bandit import game, players
from .maximize import greedy_maximize, lazy_greedy_maximize, make_objective
from .simulate import configuration_count, estimate_influence, exact_influence

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 1, 2, 3
FMT = ".17g"

GAMMA_SWEEP = (0.0075, 0.75, 33)  # (first gamma_min, last gamma_min, instances)
GAMMA_MAX = 0.8


class UsageError(ValueError):
    pass


def _num(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), FMT)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_num(v) if not isinstance(v, str) else v for v in row) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


class Output:
    """Writes named files into ``--out`` or, without it, to stdout with a banner per file."""

    def __init__(self, out_dir, stream=None):
        self.out_dir = out_dir
        self.stream = stream or sys.stdout
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

    def write(self, name, text):
        if self.out_dir:
            with open(os.path.join(self.out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            self.stream.write(f"# {name}\n{text}")


# -- graph and model construction --------------------------------------------

def parse_graph_spec(spec: str, seed=None) -> G.WeightedDigraph:
    """``er:n:p``, ``pa:n:m0:m``, ``grid:r:c``, ``complete:n[:directed]``, ``chainstar:n[:w]``, ``empty:n``."""
    parts = spec.split(":")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "er":
            n = int(args[0])
            p = float(args[1]) if len(args) > 1 else 2.0 / n
            return G.erdos_renyi_directed(n, p, seed)
        if kind == "pa":
            return G.preferential_attachment(int(args[0]), int(args[1]), int(args[2]), seed)
        if kind == "grid":
            return G.grid_2d(int(args[0]), int(args[1]))
        if kind == "complete":
            directed = len(args) > 1 and args[1] in ("directed", "d", "1", "true")
            return G.complete(int(args[0]), directed)
        if kind == "chainstar":
            return G.chain_star(int(args[0]), float(args[1]) if len(args) > 1 else 0.5)
        if kind == "empty":
            return G.WeightedDigraph(int(args[0]), [], directed=True)
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad graph spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown graph family {kind!r} in {spec!r}")


def load_graph(args, seed) -> G.WeightedDigraph:
    if args.edges is not None and args.graph is not None:
        raise UsageError("give either --edges or --graph, not both")
    if args.edges is not None:
        if args.edges == "none":
            if args.n is None:
                raise UsageError("--edges none needs --n")
            return G.WeightedDigraph(args.n, [], directed=True)
        return G.load_edgelist(args.edges, n=args.n)
    if args.graph is not None:
        return parse_graph_spec(args.graph, seed)
    raise UsageError("no graph: use --edges FILE, --edges none or --graph SPEC")


def build_model(g, args, seed, gamma_min=None):
    """Trigger model from a graph and the weight options."""
    if args.triggers:
        return G.load_triggers(args.triggers)
    gmin = args.gamma_min if gamma_min is None else gamma_min
    if args.model == "lt":
        if gmin is not None:
            return G.lt_weights_gamma(g, gmin, args.gamma_max, seed)
        return G.linear_threshold(g.to_directed())
    if args.model == "ic":
        d = g.to_directed()
        if args.edge_prob is not None:
            d = d.with_weights(np.full(d.m, args.edge_prob))
        return G.independent_cascade(d)
    raise UsageError(f"unknown model {args.model!r}")


def pick_seeds(args, n, rng):
    if args.seeds is not None:
        text = args.seeds.strip()
        ids = [int(x) for x in text.split(",") if x.strip()] if text else []
        return check_seed_set(ids, n)
    size = min(args.seed_size, n)
    return np.sort(rng.choice(n, size=size, replace=False))


# -- subcommands --------------------------------------------------------------

BOUND_HEADER = ("instance", "gamma_min") + bounds.REPORT_FIELDS + ("exact", "mc_mean", "mc_stderr")
EXACT_LIMIT = 100_000  # live-edge configurations enumerated for the exact column


def cmd_bound(args, out):
    instances = args.sweep if args.sweep else 1
    if args.sweep:
        lo, hi = args.sweep_lo, args.sweep_hi
        gammas = np.linspace(lo, hi, instances).tolist() if instances > 1 else [lo]
    else:
        gammas = [args.gamma_min]
    topo_seed, *inst_seeds = spawn_seeds(args.seed, instances + 1)
    g = load_graph(args, np.random.default_rng(topo_seed))
    rows = []
    for i, (gm, s) in enumerate(zip(gammas, inst_seeds)):
        w_seed, a_seed, mc_seed = spawn_seeds(s, 3)
        model = build_model(g, args, np.random.default_rng(w_seed), gamma_min=gm)
        A = pick_seeds(args, model.n, np.random.default_rng(a_seed))
        rep = bounds.bound_report(model, A)
        if args.replications > 0:
            est = estimate_influence(model, A, args.replications, seed=mc_seed, threads=args.threads)
            mc = (est.mean, est.stderr)
        else:
            mc = (None, None)
        exact = exact_influence(model, A) if configuration_count(model, A) <= EXACT_LIMIT else None
        rows.append([i, gm] + [getattr(rep, f) for f in bounds.REPORT_FIELDS] + [exact] + list(mc))
    if args.format == "json":
        out.write("bounds.json", _json([dict(zip(BOUND_HEADER, r)) for r in rows]))
    else:
        out.write("bounds.csv", _csv(BOUND_HEADER, rows))
    return EXIT_OK


def cmd_maximize(args, out):
    topo_seed, w_seed, run_seed, eval_seed, rand_seed = spawn_seeds(args.seed, 5)
    g = load_graph(args, np.random.default_rng(topo_seed))
    if args.gamma_min is None and args.graph is not None and args.model == "lt" and not args.triggers:
        args.gamma_min = 0.075
    model = build_model(g, args, np.random.default_rng(w_seed))
    labels = [s.strip() for s in args.objectives.split(",") if s.strip()]
    if not 0 <= args.k <= model.n:
        raise UsageError(f"k={args.k} outside 0..{model.n}")
    summary, timing, traces = [], [], {}
    for label in labels:
        obj = make_objective(model, label, args.replications, run_seed)
        if args.lazy and not obj.guaranteed:
            raise UsageError(f"--lazy needs a submodular objective; {label} is not")
        t0 = time.perf_counter()
        trace = (lazy_greedy_maximize if args.lazy else greedy_maximize)(obj, args.k, model.n)
        timing.append((label, time.perf_counter() - t0))
        traces[label] = trace
        est = (estimate_influence(model, trace.selected, args.eval_replications, seed=eval_seed,
                                  threads=args.threads) if trace.selected else None)
        summary.append([label, " ".join(map(str, trace.selected)), trace.value,
                        est.mean if est else 0.0, est.stderr if est else 0.0, trace.evaluations])
    if args.k > 0:
        R = np.sort(np.random.default_rng(rand_seed).choice(model.n, size=args.k, replace=False))
        est = estimate_influence(model, R, args.eval_replications, seed=eval_seed, threads=args.threads)
        summary.append(["random", " ".join(map(str, R.tolist())), math.nan, est.mean, est.stderr, 0])
    base = dict(timing).get("lb1")
    runtime = [[label, secs, (secs / base) if base else None] for label, secs in timing]
    header = ["objective", "seeds", "objective_value", "influence_mean", "influence_stderr", "evaluations"]
    if args.format == "json":
        doc = {"influence": [dict(zip(header, r)) for r in summary],
               "traces": {lab: [dict(zip(h, row)) for h in [tr.csv_rows(timing=not args.no_timing)[0]]
                                for row in tr.csv_rows(timing=not args.no_timing)[1]]
                          for lab, tr in traces.items()}}
        if not args.no_timing:
            doc["runtime"] = [dict(zip(["objective", "seconds", "scaled_to_lb1"], r)) for r in runtime]
        out.write("maximize.json", _json(doc))
        return EXIT_OK
    for label, trace in traces.items():
        h, rows = trace.csv_rows(timing=not args.no_timing)
        out.write(f"trace_{label}.csv", ",".join(h) + "\n" + "".join(",".join(r) + "\n" for r in rows))
    out.write("influence.csv", _csv(header, summary))
    if not args.no_timing:
        out.write("runtime.csv", _csv(["objective", "seconds", "scaled_to_lb1"], runtime))
    return EXIT_OK


def make_adversary(args, g, T):
    kind = args.adversary
    dist = args.distinguished
    if kind == "empty":
        return ADV.BernoulliAdversary(0.0)
    if kind == "bernoulli":
        return ADV.BernoulliAdversary(args.adv_p)
    if kind == "clique":
        c = args.adv_c if args.adv_c is not None else 2.0 * g.n / 3.0
        delta = ADV.clique_lower_bound_delta(g.n, T, c) if args.adv_delta is None else args.adv_delta
        return ADV.CliqueAdversary(c, delta, dist)
    if kind == "source-sink":
        c0, d0, delta0 = ADV.source_sink_lower_bound_params(g.n, T)
        c = c0 if args.adv_c is None else args.adv_c
        d = d0 if args.adv_d is None else args.adv_d
        delta = delta0 if args.adv_delta is None else args.adv_delta
        return ADV.SourceSinkAdversary(c, d, delta, dist)
    raise UsageError(f"unknown adversary {kind!r}")


def make_player_factory(args):
    loss, eta = args.loss, args.eta
    single = {"exp3": lambda: players.Exp3Player(loss, eta), "osmd": lambda: players.OSMDPlayer(loss, eta)}
    if args.player in single:
        if args.k != 1:
            raise UsageError(f"player {args.player} plays one source; use --player greedy for k > 1")
        return single[args.player]
    if args.player == "greedy":
        sub = single.get(args.sub_player)
        if sub is None:
            raise UsageError(f"unknown --sub-player {args.sub_player!r}")
        return lambda: players.OnlineGreedyPlayer(sub, args.k)
    if args.player == "uniform":
        return players.UniformPlayer
    if args.player == "fixed":
        if not args.fixed_vertices:
            raise UsageError("--player fixed needs --fixed-vertices")
        vs = [int(x) for x in args.fixed_vertices.split(",")]
        return lambda: players.FixedPlayer(vs)
    raise UsageError(f"unknown player {args.player!r}")


def cmd_bandit(args, out):
    topo_seed, *rep_seeds = spawn_seeds(args.seed, args.replications + 1)
    g = parse_graph_spec(args.graph, np.random.default_rng(topo_seed)) if args.graph else None
    if g is None:
        g = G.complete(20, directed=args.adversary == "source-sink")
    config = game.GameConfig(g, args.horizon, args.k)
    adversary = make_adversary(args, g, args.horizon)
    factory = make_player_factory(args)

    def run(seed):
        return game.play_episode(config, adversary, factory(), seed)

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            logs = list(pool.map(run, rep_seeds))
    else:
        logs = [run(s) for s in rep_seeds]
    report = game.regret_report(logs)
    label = logs[0].player
    doc = report.to_dict()
    doc.update(player=label, adversary=logs[0].adversary, n=g.n, k=args.k)
    curve = game.regret_curve(logs)
    t = np.arange(1, args.horizon + 1)
    try:
        bound_key = "greedy" if args.player == "greedy" else label
        bound = game.theoretical_bound(bound_key, g.n, t, args.k)
        doc["theoretical_bound"] = float(bound[-1])
    except ValueError:
        bound = [None] * len(t)
        doc["theoretical_bound"] = None
    rows = [[int(a), float(b), c] for a, b, c in zip(t, curve, bound)]
    if args.format == "json":
        doc["curve"] = [dict(zip(["t", "pseudo_regret", "bound"], r)) for r in rows]
        out.write("regret.json", _json(doc))
    else:
        out.write("regret.json", _json(doc))
        out.write("regret_curve.csv", _csv(["t", "pseudo_regret", "bound"], rows))
    if args.episode_log:
        buf = io.StringIO()
        logs[0].write(buf)
        out.write("episode.tsv", buf.getvalue())
    return EXIT_OK


def cmd_oracle_check(args, out):
    results = []
    if args.perturb:
        rng = np.random.default_rng(spawn_seeds(args.seed, 1)[0])
        model = oracles.random_lt_model(max(3, args.max_n), rng, density=0.9)
        g = model.graph
        w = g.weight.copy()
        w[g.dst == g.dst[0]] += 1.0
        res = oracles.SuiteResult("perturbed-weights", cases=1)
        try:
            G.linear_threshold(g.with_weights(np.minimum(w, 1.0)))
            res.fail("perturbed column sums were accepted")
        except G.ModelValidationError as exc:
            res.fail(f"validation failure [{exc.code}]: {exc}")
        results.append(res)
    results += oracles.run_suites(args.seed, args.max_n, args.instances)
    rows = [[r.name, r.cases, len(r.failures), "pass" if r.passed else "fail",
             r.failures[0] if r.failures else ""] for r in results]
    for row in rows:
        row[4] = row[4].replace(",", ";").replace("\n", " ")
    header = ["suite", "cases", "failures", "status", "first_failure"]
    if args.format == "json":
        out.write("oracle.json", _json([dict(zip(header, r)) for r in rows]))
    else:
        out.write("oracle.csv", _csv(header, rows))
    if args.perturb and not results[0].passed:
        return EXIT_VALIDATION
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


def cmd_generate(args, out):
    topo_seed, w_seed = spawn_seeds(args.seed, 2)
    g = load_graph(args, np.random.default_rng(topo_seed))
    if args.gamma_min is not None:
        g = build_model(g, args, np.random.default_rng(w_seed)).graph
    buf = io.StringIO()
    G.save_edgelist(g, buf)
    out.write("graph.tsv", buf.getvalue())
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="flat key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields so reruns are byte-identical")


def _add_graph(p):
    p.add_argument("--graph", help="generator spec, e.g. er:100:0.02, pa:100:10:3, grid:10:10, chainstar:6")
    p.add_argument("--edges", help="edge-list file, or 'none' for an edgeless graph")
    p.add_argument("--n", type=int, help="vertex count (for --edges)")
    p.add_argument("--triggers", help="explicit trigger-model file")
    p.add_argument("--model", choices=("lt", "ic"), default="lt")
    p.add_argument("--gamma-min", type=float, help="reweight as b_ji = (1 - gamma_i)/d(i), gamma_i ~ U[gamma_min, gamma_max]")
    p.add_argument("--gamma-max", type=float, default=GAMMA_MAX)
    p.add_argument("--edge-prob", type=float, help="uniform edge probability for --model ic")


def build_parser():
    parser = argparse.ArgumentParser(prog="influence", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="bounds and simulated influence for one instance or a gamma sweep")
    _add_common(p)
    _add_graph(p)
    p.add_argument("--seeds", help="comma-separated seed vertices")
    p.add_argument("--seed-size", type=int, default=10, help="random seed-set size when --seeds is absent")
    p.add_argument("--replications", type=int, default=50, help="simulations per instance (0 skips)")
    p.add_argument("--sweep", type=int, default=0, help="number of gamma_min values in a sweep")
    p.add_argument("--sweep-lo", type=float, default=GAMMA_SWEEP[0])
    p.add_argument("--sweep-hi", type=float, default=GAMMA_SWEEP[1])
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("maximize", help="greedy seed selection for several objectives")
    _add_common(p)
    _add_graph(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--objectives", default="lb1,lb2,ub_trunc,mc")
    p.add_argument("--replications", type=int, default=50, help="simulations per evaluation of the mc objective")
    p.add_argument("--eval-replications", type=int, default=200)
    p.add_argument("--lazy", action="store_true")
    p.set_defaults(func=cmd_maximize)

    p = sub.add_parser("bandit", help="online influence game with regret accounting")
    _add_common(p)
    p.add_argument("--graph", help="topology spec (default complete:20)")
    p.add_argument("--adversary", choices=("empty", "bernoulli", "clique", "source-sink"), default="bernoulli")
    p.add_argument("--adv-p", type=float, default=0.1)
    p.add_argument("--adv-c", type=float)
    p.add_argument("--adv-d", type=float)
    p.add_argument("--adv-delta", type=float, help="default: lower-bound recipe for T and n")
    p.add_argument("--distinguished", type=int)
    p.add_argument("--player", choices=("exp3", "osmd", "greedy", "uniform", "fixed"), default="exp3")
    p.add_argument("--sub-player", choices=("exp3", "osmd"), default="osmd")
    p.add_argument("--loss", choices=("symmetric", "node"), default="symmetric")
    p.add_argument("--eta", type=float)
    p.add_argument("--fixed-vertices")
    p.add_argument("--horizon", "--T", dest="horizon", type=int, default=1000)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--episode-log", action="store_true", help="also write the first episode's round log")
    p.set_defaults(func=cmd_bandit)

    p = sub.add_parser("oracle-check", help="brute-force equivalence suites")
    _add_common(p)
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--perturb", action="store_true", help="inject an invalid linear threshold weighting")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("generate", help="write a generated graph as an edge list")
    _add_common(p)
    _add_graph(p)
    p.set_defaults(func=cmd_generate)
    return parser


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    items = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            items[key.replace("-", "_")] = (value, lineno)
    return items


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise UsageError(command)


def apply_config(parser, args, argv):
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "func")}
    given = {a.dest for a in sub._actions for opt in a.option_strings
             if any(tok == opt or tok.startswith(opt + "=") for tok in argv)}
    for key, (value, lineno) in read_config(args.config).items():
        if key not in actions:
            raise UsageError(f"{args.config}:{lineno}: unknown key {key!r}")
        if key in given:
            continue
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            parsed = value.lower() in ("1", "true", "yes", "on")
        else:
            try:
                parsed = action.type(value) if action.type else value
            except ValueError:
                raise UsageError(f"{args.config}:{lineno}: bad value {value!r} for {key}") from None
            if action.choices and parsed not in action.choices:
                raise UsageError(f"{args.config}:{lineno}: {key} must be one of {list(action.choices)}")
        setattr(args, key, parsed)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        if args.config:
            apply_config(parser, args, argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args, Output(args.out))
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except (UsageError, G.ModelValidationError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
