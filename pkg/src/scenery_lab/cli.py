"""Command line front end.

Subcommands cover simulation, the Monte Carlo experiments, full trials and
the lemma verification sweep. All JSON output is emitted as one record per
line with sorted keys, so identical inputs give byte-identical output
regardless of worker count.

Exit codes: 0 success, 1 usage or input errors, 2 failed checks.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness, localization
from .harness import NoMarkerPair, TrialConfig, marker_demo, run_sweep, run_trial, verify_lemmas
from .walks import gen_scenery, gen_walk, observe


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    scenery = gen_scenery(args.seed, args.lo, args.hi)
    walk = gen_walk(args.seed, args.steps)
    obs = observe(scenery, walk)
    if args.format == "text":
        sys.stdout.write(scenery.to_text())
        sys.stdout.write(walk.to_text())
        sys.stdout.write("observations\n")
        sys.stdout.write("\n".join(str(int(b)) for b in obs) + "\n")
        return 0
    lines = [
        _dump({"record": "scenery", **scenery.to_json()}),
        _dump({"record": "walk", **walk.to_json()}),
        _dump({"record": "observations", "values": "".join(map(str, obs.tolist()))}),
    ]
    _emit(lines, None)
    return 0


def _cmd_mc_e5(args) -> int:
    res = localization.straightness_experiment(args.seed, args.count)
    print(_dump({"record": "straightness", **res}))
    if args.check and not 0.74 <= res["fraction"] <= 0.76:
        print(
            f"check failed: straight fraction {res['fraction']:.4f} "
            "outside [0.74, 0.76]",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_mc_lemma8(args) -> int:
    try:
        res = localization.mc_lemma8(
            args.seed,
            args.n,
            args.trials,
            same_endpoints=(args.mode == "same"),
            horizon=args.horizon,
        )
    except localization.InsufficientTrials as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 2
    lines = []
    for t, s in enumerate(res.statistics):
        lines.append(
            _dump(
                {
                    "record": "statistic",
                    "trial": t,
                    "hypothesis": res.summary["hypothesis"],
                    "n": res.n,
                    "statistic": s,
                }
            )
        )
    lines.append(_dump({"record": "summary", **res.summary}))
    _emit(lines, None)
    if args.check:
        drift = abs(res.summary["mean_over_n"] - res.summary["expected_rate"])
        if drift > args.tol or res.summary["chi2_p"] <= 0.001:
            print(
                f"check failed: mean/n drift {drift:.4f} (tol {args.tol}), "
                f"chi2 p {res.summary['chi2_p']:.2e}",
                file=sys.stderr,
            )
            return 2
    return 0


def _load_config(path) -> TrialConfig:
    with open(path) as fh:
        return TrialConfig.from_json(json.load(fh))


def _trial_lines(reports) -> list:
    lines = [_dump(rep) for rep in reports]
    agg = {
        "record": "summary",
        "trials": len(reports),
        "ok": sum(1 for r in reports if r["ok"]),
        "assembled": sum(
            1 for r in reports if r["assembly"] and r["assembly"]["ok"]
        ),
        "levels": {},
    }
    for rep in reports:
        for lv in rep["levels"]:
            d = agg["levels"].setdefault(
                str(lv["level"]), {"found": 0, "correct": 0}
            )
            if lv["piece"].get("reason") is None:
                d["found"] += 1
            if lv["correct"]:
                d["correct"] += 1
    lines.append(_dump(agg))
    return lines


def _cmd_trial(args) -> int:
    try:
        config = _load_config(args.config)
    except (OSError, ValueError, KeyError) as e:
        print(f"bad config: {e}", file=sys.stderr)
        return 1
    reports = [run_trial(config, i, args.timings) for i in range(config.trials)]
    _emit(_trial_lines(reports), config.out)
    return 0


def _cmd_sweep(args) -> int:
    try:
        config = _load_config(args.config)
    except (OSError, ValueError, KeyError) as e:
        print(f"bad config: {e}", file=sys.stderr)
        return 1
    reports = run_sweep(config, threads=args.threads, include_timings=args.timings)
    _emit(_trial_lines(reports), config.out)
    return 0


def _cmd_demo_markers(args) -> int:
    if args.sequence is not None:
        raw = args.sequence
    else:
        raw = sys.stdin.read()
    tokens = raw.replace(",", " ").split()
    try:
        values = [int(t) for t in tokens]
        res = marker_demo(values)
    except (ValueError, NoMarkerPair) as e:
        print(f"bad sequence: {e}", file=sys.stderr)
        return 1
    print(_dump({"record": "markers", **res}))
    return 0


def _cmd_verify_lemmas(args) -> int:
    res = verify_lemmas(args.seed, args.instances)
    print(_dump({"record": "verification", **res}))
    if res["violations"]:
        print(f"check failed: {res['violations']} violations", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scenery-lab",
        description="Scenery reconstruction from walk observations.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a scenery, walk and observations")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--lo", type=int, default=-1000)
    sp.add_argument("--hi", type=int, default=1000)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--format", choices=("json", "text"), default="json")
    sp.set_defaults(func=_cmd_simulate)

    mc = sub.add_parser("montecarlo", help="Monte Carlo experiments")
    mcsub = mc.add_subparsers(dest="experiment", required=True)

    e5 = mcsub.add_parser("e5", help="straight-crossing fraction")
    e5.add_argument("--seed", type=int, required=True)
    e5.add_argument("--count", type=int, default=100_000)
    e5.add_argument("--check", action="store_true")
    e5.set_defaults(func=_cmd_mc_e5)

    l8 = mcsub.add_parser("lemma8", help="word statistic distribution")
    l8.add_argument("--mode", choices=("same", "different"), required=True)
    l8.add_argument("--n", type=int, required=True)
    l8.add_argument("--trials", type=int, required=True)
    l8.add_argument("--seed", type=int, required=True)
    l8.add_argument("--horizon", type=int, default=4_000_000)
    l8.add_argument("--tol", type=float, default=0.01)
    l8.add_argument("--check", action="store_true")
    l8.set_defaults(func=_cmd_mc_lemma8)

    tr = sub.add_parser("trial", help="run configured trials sequentially")
    tr.add_argument("--config", required=True)
    tr.add_argument("--timings", action="store_true")
    tr.set_defaults(func=_cmd_trial)

    sw = sub.add_parser("sweep", help="run configured trials in parallel")
    sw.add_argument("--config", required=True)
    sw.add_argument("--threads", type=int, default=None)
    sw.add_argument("--timings", action="store_true")
    sw.set_defaults(func=_cmd_sweep)

    dm = sub.add_parser("demo-markers", help="closest marker pair word")
    dm.add_argument("--sequence", default=None)
    dm.set_defaults(func=_cmd_demo_markers)

    vl = sub.add_parser("verify-lemmas", help="randomized structural checks")
    vl.add_argument("--seed", type=int, required=True)
    vl.add_argument("--instances", type=int, default=100)
    vl.set_defaults(func=_cmd_verify_lemmas)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
