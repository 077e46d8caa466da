"""coedit command line: mine, instances, encode, simulate, stats, metric.

Machine-readable results go to the requested output files; tables for
humans go to stdout and logs to stderr. Exit status: 0 on success, 1 on
usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from .analysis import ParseError
from .config import RunConfig, load_config
from .encoding import EncodingError, enc_input, enc_output
from .instances import (
    DataError,
    completion_to_json,
    instance_to_json,
    read_instances,
    write_instances,
)
from .linediff import split_lines, line_diff
from .metrics import KeystrokeParams, keystroke_cost, levenshtein, lines_cost
from .mining import (
    NotEligible,
    dataset_stats,
    diff_to_target_edit,
    make_completion_instances,
    mine_repos,
    normalize_diff_tail,
    synthesize_multiround,
)
from .oracles import OracleFailure, resolve_oracle
from .simulation import aggregate, result_to_json, run_simulation
from .tokenizers import load_tokenizer

log = logging.getLogger("coedit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="coedit", description=__doc__)
    parser.add_argument("--config", type=Path, help="TOML config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("mine", help="mine git repositories into instances")
    p.add_argument("--repos", type=Path, required=True, help="directory of repositories (or one repository)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--max-commits", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--stats-out", type=Path, help="also write dataset statistics JSON")

    p = sub.add_parser("instances", help="derive transformed instance sets")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mode", choices=["multiround", "completion"], required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("encode", help="render the encoding for a file pair or a stored instance")
    p.add_argument("--before", type=Path)
    p.add_argument("--after", type=Path)
    p.add_argument("--instances", type=Path)
    p.add_argument("--index", type=int, default=0)

    p = sub.add_parser("simulate", help="run the multi-round evaluation")
    p.add_argument("--instances", type=Path, required=True)
    p.add_argument("--oracle", required=True, help="null|truth|echo|cmd:<argv>|tcp:<host:port>")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--out", type=Path, help="report JSON path")
    p.add_argument("--jobs", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--tokenizer")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--instances", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--tokenizer")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("metric", help="editing cost between two files")
    p.add_argument("--kind", choices=["lines", "lev", "keys"], required=True)
    p.add_argument("--before", type=Path, required=True)
    p.add_argument("--after", type=Path, required=True)
    p.add_argument("--jump", type=int)
    p.add_argument("--init", type=int)
    return parser


def _config_from(args) -> RunConfig:
    config = load_config(args.config)
    for attr, key in [
        ("seed", "seed"),
        ("jobs", "jobs"),
        ("tokenizer", "tokenizer"),
        ("max_rounds", "max_rounds"),
        ("timeout", "oracle_timeout"),
        ("jump", "cursor_jump_cost"),
        ("init", "init_cursor_dis"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "no_figures", False):
        config.figures = False
    return config


def _cmd_mine(args, config: RunConfig) -> int:
    result = mine_repos(args.repos, max_commits=args.max_commits)
    with open(args.out, "w", encoding="utf-8") as fp:
        count = write_instances(fp, result.instances)
    log.info("mined %d instances from %d commits", count, result.commits_walked)
    if args.stats_out:
        tokenizer = load_tokenizer(config.tokenizer)
        stats = dataset_stats(result.instances, tokenizer, result.changes)
        args.stats_out.write_text(
            json.dumps(_stats_json(stats), indent=2) + "\n", encoding="utf-8"
        )
    print(f"{count} instances -> {args.out}")
    return 0


def _cmd_instances(args, config: RunConfig) -> int:
    rng = random.Random(config.seed)
    with open(args.infile, encoding="utf-8") as fp:
        source = list(read_instances(fp))
    emitted = skipped = 0
    with open(args.out, "w", encoding="utf-8") as fp:
        if args.mode == "multiround":
            for inst in source:
                try:
                    synth = synthesize_multiround(inst, rng)
                except NotEligible:
                    skipped += 1
                    continue
                fp.write(json.dumps(instance_to_json(synth), ensure_ascii=False) + "\n")
                emitted += 1
        else:
            for comp in make_completion_instances(source):
                fp.write(json.dumps(completion_to_json(comp), ensure_ascii=False) + "\n")
                emitted += 1
            skipped = len(source) - emitted
    print(f"{emitted} {args.mode} instances -> {args.out} ({skipped} skipped)")
    return 0


def _cmd_encode(args, config: RunConfig) -> int:
    if args.instances is not None:
        with open(args.instances, encoding="utf-8") as fp:
            for i, inst in enumerate(read_instances(fp)):
                if i == args.index:
                    print(json.dumps(instance_to_json(inst), indent=2, ensure_ascii=False))
                    return 0
        print(f"error: no instance at index {args.index}", file=sys.stderr)
        return 2
    if args.before is None or args.after is None:
        print("error: encode needs --before/--after or --instances", file=sys.stderr)
        return 1
    before = split_lines(args.before.read_text(encoding="utf-8")) + [""]
    after = split_lines(args.after.read_text(encoding="utf-8")) + [""]
    diff = normalize_diff_tail(line_diff(before, after))
    unit, region, edit = diff_to_target_edit(diff)
    obj = {
        "schema": "coedit/1",
        "query": enc_input(unit, region).render(),
        "region": {"a": region.a, "n": region.n},
        "ground_truth": enc_output(edit, region).render(),
    }
    print(json.dumps(obj, indent=2, ensure_ascii=False))
    return 0


def _cmd_simulate(args, config: RunConfig) -> int:
    tokenizer = load_tokenizer(config.tokenizer)
    with open(args.instances, encoding="utf-8") as fp:
        instances = list(read_instances(fp))
    oracle = resolve_oracle(
        args.oracle,
        tokenizer,
        budget=config.reference_budget_tokens,
        timeout=config.oracle_timeout,
    )
    params = KeystrokeParams(config.cursor_jump_cost, config.init_cursor_dis)
    try:
        results = run_simulation(
            instances,
            oracle,
            max_rounds=config.max_rounds,
            params=params,
            jobs=config.jobs,
        )
    finally:
        oracle.close()
    summary = aggregate(results)
    print(f"episodes:      {summary.episodes}")
    print(f"mean rounds:   {summary.mean_rounds:.2f}")
    print(f"completed:     {summary.completed}")
    print(f"lines gain:    {summary.lines_gain_pct:.1f}%")
    print(f"levenshtein:   {summary.levenshtein_gain_pct:.1f}%")
    print(f"keystrokes:    {summary.keystrokes_gain_pct:.1f}%")
    single = summary.single_round
    print(
        "single round:  "
        f"lines {single['lines_gain_pct']:.1f}%  "
        f"levenshtein {single['levenshtein_gain_pct']:.1f}%  "
        f"keystrokes {single['keystrokes_gain_pct']:.1f}%"
    )
    if args.out:
        report = {
            "schema": "coedit-report/1",
            "oracle": args.oracle,
            "max_rounds": config.max_rounds,
            "summary": summary.to_json(),
            "episodes": [result_to_json(r) for r in results],
        }
        args.out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        if config.figures:
            from .reporting import render_simulation_figures

            for path in render_simulation_figures(results, summary, args.out):
                log.info("figure: %s", path)
    return 0


def _stats_json(stats) -> dict:
    def ts(t):
        return {
            "median": t.median,
            "mean": t.mean,
            "max": t.max,
            "frac_at_cap": t.frac_at_cap,
            "cap": t.cap,
        }

    return {
        "schema": "coedit-stats/1",
        "projects": stats.projects,
        "commits": stats.commits,
        "modified_files": stats.modified_files,
        "modified_functions": stats.modified_functions,
        "modified_lines": stats.modified_lines,
        "added_units": stats.added_units,
        "deleted_units": stats.deleted_units,
        "instances": stats.instances,
        "query_tokens": ts(stats.query_tokens),
        "output_tokens": ts(stats.output_tokens),
        "prev_change_tokens": ts(stats.prev_change_tokens),
        "signature_tokens": ts(stats.signature_tokens),
    }


def _cmd_stats(args, config: RunConfig) -> int:
    tokenizer = load_tokenizer(config.tokenizer)
    with open(args.instances, encoding="utf-8") as fp:
        instances = list(read_instances(fp))
    stats = dataset_stats(instances, tokenizer)
    obj = _stats_json(stats)
    for key in (
        "projects",
        "commits",
        "modified_files",
        "modified_functions",
        "modified_lines",
        "instances",
    ):
        print(f"{key:20} {obj[key]}")
    for key in ("query_tokens", "output_tokens", "prev_change_tokens", "signature_tokens"):
        t = obj[key]
        print(
            f"{key:20} median {t['median']:g}  mean {t['mean']:.1f}  "
            f"max {t['max']}  >=cap {100 * t['frac_at_cap']:.1f}%"
        )
    if args.out:
        args.out.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
        if config.figures:
            from .reporting import render_stats_figures

            for path in render_stats_figures(instances, tokenizer, args.out):
                log.info("figure: %s", path)
    return 0


def _cmd_metric(args, config: RunConfig) -> int:
    before = args.before.read_text(encoding="utf-8")
    after = args.after.read_text(encoding="utf-8")
    if args.kind == "lines":
        cost = lines_cost(line_diff(split_lines(before), split_lines(after)))
    elif args.kind == "lev":
        cost = levenshtein(before, after)
    else:
        params = KeystrokeParams(config.cursor_jump_cost, config.init_cursor_dis)
        cost = keystroke_cost(before, after, params)
    print(cost)
    return 0


_COMMANDS = {
    "mine": _cmd_mine,
    "instances": _cmd_instances,
    "encode": _cmd_encode,
    "simulate": _cmd_simulate,
    "stats": _cmd_stats,
    "metric": _cmd_metric,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        config = _config_from(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, config)
    except (DataError, ParseError, EncodingError, OracleFailure) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
