"""Command-line front end: ``cdp-lab <command> [options]``.

Every command writes its results under ``--out`` together with a manifest
holding the effective parameters and SHA-256 digests of the outputs;
``cdp-lab --replay <manifest>`` reruns it and compares the digests.

Exit status: 0 success, 1 usage error, 2 verification failure, 3 budget
refusal.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, rng
from .dynamics import evolve, sample_clock, trajectory
from .lattice import DomainError, box
from .oracle.arrangements import BudgetError

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_BUDGET = 0, 1, 2, 3
SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            a, b, *c = (int(x) for x in part.split(":"))
            out.extend(range(a, b + 1, c[0] if c else 1))
        elif part:
            out.append(int(part))
    return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "float": float(x)}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _clean(x):
    """Make floats JSON-safe (NaN and infinities become strings)."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dumps(obj):
    obj = json.loads(json.dumps(obj, default=_jsonable))
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Collects output files in memory; written and digested at the end."""

    def __init__(self, out, tag):
        self.out = Path(out)
        self.tag = tag
        self.files = {}

    def json(self, obj, suffix="json"):
        self.files[f"{self.tag}.{suffix}"] = dumps(obj)

    def csv(self, header, rows, suffix="csv"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
        self.files[f"{self.tag}.{suffix}"] = buf.getvalue()

    def gnuplot(self, xlabel, ylabel, logscale=False):
        data = f"{self.tag}.csv"
        lines = [
            "set datafile separator ','",
            "set key off",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
        ]
        if logscale:
            lines.append("set logscale y")
        lines.append(f"plot '{data}' every ::1 using 1:2:4:5 with yerrorbars, "
                     f"'{data}' every ::1 using 1:2 with lines")
        self.files[f"{self.tag}.gp"] = "\n".join(lines) + "\n"

    def write(self):
        self.out.mkdir(parents=True, exist_ok=True)
        digests = {}
        for name, text in self.files.items():
            data = text.encode("utf-8")
            (self.out / name).write_bytes(data)
            digests[name] = hashlib.sha256(data).hexdigest()
        return digests


def _edge_str(e):
    return "-".join(",".join(str(x) for x in v) for v in e)


def _curve_rows(sweep):
    return list(sweep.rows())


CURVE_HEADER = ["grid", "value", "stderr", "ci_lo", "ci_hi", "cert_fail_rate"]


# ---------------------------------------------------------------- commands


def cmd_simulate(a, out):
    reg = box(a["d"], a["R"])
    clock = sample_clock(reg, a["seed"])
    conf = evolve(clock, a["p"], a["kappa"])
    conf.check_invariants()
    traj = trajectory(clock, a["kappa"])
    out.csv(["time", "edge", "accepted"],
            ([t, _edge_str(e), int(ok)] for t, e, ok in traj if t <= a["p"]))
    out.json({
        "region": {"d": reg.d, "R": reg.R, "edges": reg.num_edges, "vertices": reg.num_vertices},
        "open_edges": sorted(conf.open_edges()),
        "open_count": int(conf.open.sum()),
        "max_degree": int(conf.degree.max(initial=0)),
    })
    return EXIT_OK


def _estimate_cmd(event):
    def run(a, out):
        from .estimator import estimate_event

        est = estimate_event(event, a["d"], a["kappa"], a["n"], a["p"], a["samples"], a["seed"],
                             a["margin"], a["threads"], a["strict"], a["budget"])
        out.json({"event": event, "estimate": est.to_dict()})
        return EXIT_OK

    return run


def cmd_sweep(a, out):
    from .estimator import sweep_p

    grid = _floats(a["p_grid"])
    sw = sweep_p(a["event"], a["d"], a["kappa"], a["n"], grid, a["samples"], a["seed"],
                 a["margin"], a["threads"], a["strict"], a["budget"])
    out.csv(CURVE_HEADER, _curve_rows(sw))
    out.gnuplot("p", a["event"])
    out.json(sw.to_dict())
    return EXIT_OK


def cmd_decay_fit(a, out):
    from .estimator import decay_fit

    fit = decay_fit(a["event"], a["d"], a["kappa"], a["p"], _ints(a["n_grid"]), a["samples"],
                    a["seed"], a["margin"], a["threads"], a["strict"], a["budget"])
    out.csv(CURVE_HEADER, _curve_rows(fit.sweep))
    out.gnuplot("n", a["event"], logscale=True)
    out.json(fit.to_dict())
    return EXIT_OK


def cmd_pc_bracket(a, out):
    from .estimator import pc_bracket

    res = pc_bracket(a["d"], a["kappa"], _ints(a["n_list"]), a["tolerance"], a["samples"],
                     a["seed"], a["margin"], a["threads"], a["level"], a["budget"])
    out.json(res)
    return EXIT_OK


def cmd_russo(a, out):
    from .oracle import russo_check

    reg = box(a["d"], a["R"])
    rows = []
    ok = True
    for p in _floats(a["p"]):
        rep = russo_check(reg, a["kappa"], a["n"], p)
        ok &= rep.residual < a["tolerance"]
        rows.append({"p": p, "derivative": rep.derivative, "pivotal_sum": rep.pivotal_sum,
                     "rhs": rep.rhs, "residual": rep.residual, "exact_zero": rep.exact_zero})
    out.json({"d": a["d"], "R": a["R"], "n": a["n"], "kappa": a["kappa"],
              "edges": reg.num_edges, "rows": rows, "holds": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_osss(a, out):
    from .oracle import osss_check

    reg = box(a["d"], a["R"])
    alg = a["algorithm"]
    alg = alg if alg == "mixture" else int(alg)
    rows = []
    ok = True
    for p in _floats(a["p"]):
        rep = osss_check(reg, a["kappa"], a["n"], p, alg)
        ok &= rep.holds
        rows.append({"p": p, "variance": rep.variance, "bound": rep.bound, "holds": rep.holds,
                     "revealment": {_edge_str(e): v for e, v in rep.revealment.items()},
                     "influence": {_edge_str(e): v for e, v in rep.influence.items()}})
    out.json({"d": a["d"], "R": a["R"], "n": a["n"], "kappa": a["kappa"], "algorithm": alg,
              "rows": rows, "holds": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diffineq(a, out):
    from .oracle import differential_inequality_check

    rows = differential_inequality_check(box(a["d"], a["R"]), a["kappa"], a["n_max"], a["p"])
    out.csv(["n", "tau", "dtau", "sigma", "lhs", "rhs", "C"],
            ([r[k] for k in ("n", "tau", "dtau", "sigma", "lhs", "rhs", "C")] for r in rows))
    ok = all(math.isfinite(r["C"]) and r["C"] > 0 for r in rows)
    out.json({"rows": rows, "all_C_finite_positive": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _parse_edge(text, reg):
    if text is None:
        return None
    if ":" in text:
        a, b = text.split(":")
        return reg.eid((tuple(int(x) for x in a.split(",")), tuple(int(x) for x in b.split(","))))
    return reg.eid(int(text))


def cmd_switching(a, out):
    from .pivotality import switching_path
    from .verify import switching_suite

    if a["trials"]:
        res = switching_suite(a["trials"], a["seed"], max_R=a["R"])
        out.json(res.to_dict())
        return EXIT_OK if res.ok else EXIT_FAIL
    reg = box(a["d"], a["R"])
    clock = sample_clock(reg, a["seed"])
    j = _parse_edge(a["edge"], reg)
    if j is None:
        j = rng.mix(a["seed"], 0xE) % reg.num_edges
    path = switching_path(clock, a["p"], a["kappa"], j, check=True)
    out.json({"edge": reg.edges[j], "vertices": path.vertices, "pivot": path.pivot,
              "cycle": path.cycle, "length": len(path.vertices) - 1,
              "values": [clock.value(e) for e in path.edges()]})
    return EXIT_OK


def cmd_pivotal_sums(a, out):
    from .oracle import SWEEP_BUDGET, p_pivotal_polynomials, u_pivotal_exact
    from .pivotality import transfer_ratio

    reg = box(a["d"], a["R"])
    rows = []
    for p in _floats(a["p"]):
        mc = transfer_ratio(reg, p, a["kappa"], a["n"], a["samples"], a["seed"])
        row = {"p": p, "monte_carlo": mc}
        if reg.num_edges <= SWEEP_BUDGET:
            sp = sum(float(q(p)) for q in p_pivotal_polynomials(reg, a["kappa"], a["n"]).values())
            su = sum(float(u_pivotal_exact(reg, a["kappa"], a["n"], p, j))
                     for j in range(reg.num_edges))
            row["exact"] = {"sum_u": su, "sum_p": sp, "ratio": su / sp if sp else None}
        rows.append(row)
    out.json({"d": a["d"], "R": a["R"], "n": a["n"], "kappa": a["kappa"], "rows": rows})
    return EXIT_OK


def cmd_explore(a, out):
    from .events import modified_one_arm
    from .explorer import choose_r, measure_revealment, run_Ar

    reg = box(a["d"], a["R"])
    if a["samples"]:
        rep = measure_revealment(reg, a["p"], a["kappa"], a["n"], a["samples"], a["seed"])
        out.csv(["edge", "delta", "stderr"],
                ([_edge_str(e), float(x), float(s)]
                 for e, x, s in zip(reg.edges, rep.delta, rep.delta_stderr)))
        out.json(rep.to_dict())
        return EXIT_OK if rep.holds else EXIT_FAIL
    clock = sample_clock(reg, a["seed"])
    r = a["r"] or choose_r(a["n"], rng.algorithm_seed(a["algorithm_seed"], 0))
    decision, revealed, state = run_Ar(clock, a["p"], a["kappa"], a["n"], r, check=True)
    truth = modified_one_arm(clock, a["p"], a["kappa"], a["n"])[0]
    out.json({"r": r, "decision": decision, "ground_truth": truth,
              "revealed": sorted(revealed), "established_open": sorted(state.T),
              "explored_vertices": sorted(state.R), "adopted_outer_sphere": state.adopted,
              "steps": [[k, e] for k, e in state.step_log]})
    return EXIT_OK if decision == truth else EXIT_FAIL


def cmd_verify(a, out):
    from .verify import run_all

    only = [s for s in a["suite"].split(",") if s] if a["suite"] else None
    results = run_all(quick=a["quick"], trials=a["trials"], seed=a["seed"], only=only)
    for r in results:
        print(r.line(), file=sys.stderr)
    out.json({"suites": [r.to_dict() for r in results], "ok": all(r.ok for r in results)})
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


# ---------------------------------------------------------------- parser

COMMON = {"threads": None, "out": "cdp-lab-out", "tag": None}
MC = {"samples": 10000, "seed": 1, "margin": 4, "strict": False, "budget": 10**10}

COMMANDS = {
    "simulate": (cmd_simulate, "run the dynamics on one clock and dump the trajectory",
                 {"d": 2, "R": 5, "kappa": 3, "p": 0.5, "seed": 1}),
    "theta": (_estimate_cmd("theta"), "estimate the one-arm probability",
              {"d": 2, "kappa": 3, "n": 5, "p": 0.5, **MC}),
    "tau": (_estimate_cmd("tau"), "estimate the modified one-arm probability",
            {"d": 2, "kappa": 3, "n": 5, "p": 0.5, **MC}),
    "sweep": (cmd_sweep, "estimate over a grid of p on coupled clocks",
              {"event": "tau", "d": 2, "kappa": 3, "n": 10,
               "p_grid": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", **MC}),
    "decay-fit": (cmd_decay_fit, "fit exponential decay in n",
                  {"event": "theta", "d": 2, "kappa": 3, "p": 0.4, "n_grid": "5:40:5", **MC}),
    "pc-bracket": (cmd_pc_bracket, "heuristic finite-size crossing of theta_n",
                   {"d": 2, "kappa": 4, "n_list": "4,8,16", "tolerance": 0.01, "level": 0.5,
                    **{**MC, "samples": 4000}}),
    "russo-check": (cmd_russo, "exact Russo formula on a small ball",
                    {"d": 2, "R": 1, "n": 1, "kappa": 3, "p": "0.5", "tolerance": 1e-9}),
    "osss-check": (cmd_osss, "exact OSSS inequality on a small ball",
                   {"d": 2, "R": 1, "n": 1, "kappa": 3, "p": "0.5", "algorithm": "mixture"}),
    "diffineq-check": (cmd_diffineq, "exact differential-inequality constants",
                       {"d": 2, "R": 2, "kappa": 3, "n_max": 2, "p": 0.5}),
    "switching-path": (cmd_switching, "switching path of one edge, or the property suite",
                       {"d": 2, "R": 4, "kappa": 3, "p": 0.5, "seed": 1, "edge": None,
                        "trials": 0}),
    "pivotal-sums": (cmd_pivotal_sums, "U- and p-pivotal sums and their ratio",
                     {"d": 2, "R": 2, "n": 2, "kappa": 3, "p": "0.5", "samples": 2000, "seed": 1}),
    "explore": (cmd_explore, "run the exploration algorithm or measure its revealment",
                {"d": 2, "R": 6, "n": 4, "kappa": 3, "p": 0.5, "seed": 1, "algorithm_seed": 1,
                 "r": 0, "samples": 0}),
    "verify": (cmd_verify, "run the property suites",
               {"quick": False, "trials": None, "suite": "", "seed": 0}),
}

HELP = {
    "d": "dimension", "R": "radius of the l1 ball", "n": "arm radius", "kappa": "degree cap",
    "p": "time threshold (comma list where accepted)", "samples": "Monte Carlo samples",
    "seed": "base seed", "margin": "extra radius beyond n", "strict": "drop uncertified samples",
    "budget": "max samples x edges", "event": "theta or tau", "p_grid": "comma list of p",
    "n_grid": "n values: list or start:stop:step", "n_list": "n values",
    "tolerance": "tolerance", "level": "fraction of theta_n(1) used as crossing level",
    "algorithm": "'mixture' or a fixed r", "n_max": "largest n", "edge": "edge id or 'x,y:x,y'",
    "trials": "number of random trials", "algorithm_seed": "seed for the choice of r",
    "r": "fixed r (0 draws it)", "quick": "small trial counts", "suite": "comma list of suites",
}


def _add_option(sp, key, default):
    flag = "--" + key.replace("_", "-")
    kw = {"default": argparse.SUPPRESS, "help": HELP.get(key, key), "dest": key}
    if isinstance(default, bool):
        sp.add_argument(flag, action="store_true", **kw)
        return
    if key in ("trials",):
        kw["type"] = int
    elif isinstance(default, int):
        kw["type"] = int
    elif isinstance(default, float):
        kw["type"] = float
    sp.add_argument(flag, **kw)


def build_parser():
    parser = _Parser(prog="cdp-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cdp-lab {__version__}")
    parser.add_argument("--replay", metavar="MANIFEST", help="rerun a manifest and compare outputs")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: $CDP_LAB_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_, defaults) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of defaults")
        sp.add_argument("--out", default=argparse.SUPPRESS, dest="sub_out",
                        help="output directory")
        sp.add_argument("--tag", default=argparse.SUPPRESS, help="output file stem")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, dest="sub_threads",
                        help="worker processes")
        for key, default in defaults.items():
            _add_option(sp, key, default)
    return parser


def resolve(command, given, config=None):
    """Effective parameters: flags > config file > defaults."""
    _, _, defaults = COMMANDS[command]
    params = dict(defaults)
    if config:
        unknown = set(config) - set(defaults) - {"threads", "tag"}
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        params.update(config)
    params.update({k: v for k, v in given.items() if k in defaults})
    if "trials" in params and params["trials"] is not None:
        params["trials"] = int(params["trials"])
    return params


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("CDP_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CDP_LAB_THREADS must be an integer, got {env!r}") from None
    return 1


def execute(command, params, out_dir, tag, threads):
    """Run one command; returns ``(exit code, manifest)``."""
    fn = COMMANDS[command][0]
    out = Outputs(out_dir, tag or command)
    call = dict(params)
    call["threads"] = threads
    t0 = time.perf_counter()
    code = fn(call, out)
    elapsed = time.perf_counter() - t0
    digests = out.write()
    manifest = {
        "schema": SCHEMA,
        "command": command,
        "params": params,
        "tag": tag or command,
        "version": __version__,
        "threads": threads,
        "duration_seconds": elapsed,
        "exit_code": code,
        "outputs": digests,
    }
    (Path(out_dir) / f"{tag or command}.manifest.json").write_text(dumps(manifest))
    return code, manifest


def replay(path, out_dir=None, threads=None):
    manifest = json.loads(Path(path).read_text())
    if manifest.get("command") not in COMMANDS:
        raise UsageError(f"manifest names unknown command {manifest.get('command')!r}")
    if manifest.get("version") != __version__:
        print(f"warning: manifest written by version {manifest.get('version')}", file=sys.stderr)
    out_dir = out_dir or str(Path(path).parent / "replay")
    params = resolve(manifest["command"], manifest["params"])
    _, new = execute(manifest["command"], params, out_dir, manifest.get("tag"),
                     _threads(threads))
    same = new["outputs"] == manifest["outputs"]
    report = {"replayed": path, "out": out_dir, "identical": same,
              "files": {k: v == new["outputs"].get(k) for k, v in manifest["outputs"].items()}}
    print(dumps(report), end="")
    return EXIT_OK if same else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    try:
        if args.get("replay"):
            return replay(args["replay"], args.get("out"), args.get("threads"))
        command = args.pop("command", None)
        if command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        config = None
        if "config" in args:
            try:
                config = json.loads(Path(args.pop("config")).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config: {exc}") from None
            if not isinstance(config, dict):
                raise UsageError("config file must hold a JSON object")
        threads = args.pop("sub_threads", None) or args.get("threads")
        if threads is None and config and "threads" in config:
            threads = int(config["threads"])
        out_dir = args.pop("sub_out", None) or args.get("out") or COMMON["out"]
        tag = args.pop("tag", None) or (config or {}).get("tag")
        params = resolve(command, args, config)
        code, manifest = execute(command, params, out_dir, tag, _threads(threads))
        print(Path(out_dir, f"{manifest['tag']}.json").read_text(), end="")
        return code
    except (UsageError, DomainError, ValueError) as exc:
        if isinstance(exc, BudgetError):
            raise
        print(f"cdp-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as exc:
        print(f"cdp-lab: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
