"""Command-line entry point: ``bgcode run|figure|proptest|demo-gd``.

Exit codes: 0 on success, 1 when a run decodes a wrong gradient or breaks
a bound (or the property sweep finds a counterexample), 2 on a bad
configuration.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import BoundViolation, ConfigurationError, ProtocolError
from . import figures
from .config import load_config, merge
from .demo import DemoTrainingConfig, train, trajectory_csv
from .proptest import GridSpec, run_grid
from .runner import rows_to_csv, run_once

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _id_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated worker ids, got {text!r}") from exc


def _system_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="JSON file with run settings; flags override it")
    ap.add_argument("--n", type=int, help="number of workers; must equal m(s+u)")
    ap.add_argument("--s", type=int, help="malicious workers")
    ap.add_argument("--u", type=int, help="honest workers per group")
    ap.add_argument("--m", type=int, help="number of groups")
    ap.add_argument("--p", type=int, help="number of samples")
    ap.add_argument("--d", type=int, help="gradient dimension")
    ap.add_argument("--alphabet-log2", type=int, dest="alphabet_log2", help="k, the alphabet is Z_{2^k}")
    ap.add_argument("--attack", help="none, symmetrization, align_and_stall, random_corruption, adaptive_custom")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output file (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bgcode", description="Byzantine-resilient gradient coding simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the protocol and emit one CSV row per seed")
    _system_flags(run)
    run.add_argument("--repetitions", type=int, help="run seeds seed..seed+repetitions-1")
    run.add_argument("--transcript", help="JSON-lines transcript path (suffixed per seed when repeating)")
    run.add_argument("--malicious", type=_id_list, help="explicit malicious worker ids, e.g. 1,2,3")
    run.add_argument("--stragglers", type=_id_list, help="explicit straggler ids")
    run.add_argument("--n-stragglers", type=int, dest="n_stragglers", help="number of silent honest workers")
    run.add_argument("--collapse", action=argparse.BooleanOptionalAction, default=None,
                     help="symmetrization: corrupt the same index in every subgroup")
    run.add_argument("--case", type=int, choices=(1, 2), help="symmetrization: which world is the truth")
    run.add_argument("--corruption-rate", type=float, dest="corruption_rate")
    run.add_argument("--forced-local-comps", type=int, dest="forced_local_comps",
                     help="align_and_stall: local computations to force")

    fig = sub.add_parser("figure", help="write the data behind a trade-off figure as CSV")
    fig.add_argument("which", choices=figures.FIGURES + ("all",))
    fig.add_argument("--out", help="file (or directory for 'all'); stdout when omitted")
    fig.add_argument("--simulate", action="store_true", help="fig4: add a measured run at reduced dimension")
    fig.add_argument("--seed", type=int, default=0)

    prop = sub.add_parser("proptest", help="sweep small systems, adversaries and placements")
    prop.add_argument("--seed", type=int, default=0)
    prop.add_argument("--limit", type=int, help="stop after this many runs")
    prop.add_argument("--dump-dir", help="write counterexamples (config + transcript) here")
    prop.add_argument("--no-stragglers", action="store_true")
    prop.add_argument("--max-n", type=int, default=GridSpec.max_n)
    prop.add_argument("--seeds", type=int, default=GridSpec.seeds, help="seeds per grid point")

    demo = sub.add_parser("demo-gd", help="quantized least-squares gradient descent under attack")
    _system_flags(demo)
    demo.add_argument("--iterations", type=int)
    demo.add_argument("--lr", type=float)
    demo.add_argument("--frac-bits", type=int, dest="frac_bits")
    return ap


def _flags(args, names) -> dict:
    return {name: getattr(args, name, None) for name in names}


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _transcript_path(base: str, seed: int, repeated: bool) -> Path:
    path = Path(base)
    return path.with_name(f"{path.stem}.seed{seed}{path.suffix}") if repeated else path


def cmd_run(args) -> int:
    names = ("n", "s", "u", "m", "p", "d", "alphabet_log2", "attack", "seed", "out", "repetitions", "transcript",
             "malicious", "stragglers", "n_stragglers", "collapse", "case", "corruption_rate", "forced_local_comps")
    file_values = load_config(args.config) if args.config else {}
    config = merge(file_values, _flags(args, names))
    seeds = config.seeds
    rows, status = [], EXIT_OK
    for seed in seeds:
        outcome = run_once(config, seed)
        rows.append(outcome.row)
        if config.transcript:
            outcome.result.transcript.write_jsonl(_transcript_path(config.transcript, seed, len(seeds) > 1))
        if not outcome.correct:
            print(f"seed {seed}: decoded gradient is wrong", file=sys.stderr)
            status = EXIT_FAIL
        for problem in outcome.problems:
            print(f"seed {seed}: bound violation: {problem}", file=sys.stderr)
            status = EXIT_FAIL
    _write(rows_to_csv(rows), config.out)
    return status


def cmd_figure(args) -> int:
    which = figures.FIGURES if args.which == "all" else (args.which,)
    for name in which:
        params = {"simulate": True, "seed": args.seed} if name == "fig4" and args.simulate else {}
        text = figures.figure_csv(name, **params)
        if args.which == "all" and args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            _write(text, Path(args.out) / f"{name}.csv")
        else:
            _write(text, args.out)
    return EXIT_OK


def cmd_proptest(args) -> int:
    spec = GridSpec(max_n=args.max_n, seeds=args.seeds, stragglers=not args.no_stragglers)
    report = run_grid(spec, base_seed=args.seed, dump_dir=args.dump_dir, limit=args.limit)
    print(report.summary())
    for failure in report.failures[:20]:
        print(json.dumps(failure, default=str), file=sys.stderr)
    if len(report.failures) > 20:
        print(f"... {len(report.failures) - 20} more", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_demo(args) -> int:
    defaults = {"d": 8, "p": 16, "s": 2, "u": 1, "m": 2, "alphabet_log2": 32, "attack": "symmetrization"}
    file_values = load_config(args.config) if args.config else {}
    names = ("n", "s", "u", "m", "p", "d", "alphabet_log2", "attack", "seed", "out", "iterations", "lr", "frac_bits")
    config = merge({**defaults, **file_values}, _flags(args, names))
    config.system(config.seed)
    demo = DemoTrainingConfig(d=config.d, p=config.p, s=config.s, u=config.u, m=config.m,
                              alphabet_log2=config.alphabet_log2, seed=config.seed, attack=config.attack,
                              **{k: v for k, v in config.extra.items() if k in ("iterations", "lr", "frac_bits")})
    attacked = train(demo)
    reference = train(demo, use_protocol=False)
    _write(trajectory_csv(attacked, reference), config.out)
    if not attacked.same_as(reference):
        print("trajectory differs from the direct-sum reference", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"run": cmd_run, "figure": cmd_figure, "proptest": cmd_proptest, "demo-gd": cmd_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BoundViolation, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
