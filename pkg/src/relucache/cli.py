"""Command-line entry point: ``relucache <subcommand> ...``.

Exit codes: 0 success, 2 bad parameters or input, 3 infeasible depth
budget, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .adaptive_net import AdaptiveNet, build_adaptive
from .cache import enumerate_gamma
from .embed import MODES, STRICT_RELU, embed_standard, param_formula
from .errors import InfeasibleBudget, ParameterError, ReluCacheError
from .harness import (ExperimentConfig, load_config, parse_corpus, run_params,
                      run_single, sweep)
from .pwl import make_unit_ball_function
from .relu_net import weight_count

EXIT_OK, EXIT_PARAM, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


def _shared_flags(p: argparse.ArgumentParser, with_depth: bool = True) -> None:
    if with_depth:
        p.add_argument("--depth", type=str, help="depth budget N (sweep: comma-separated list)")
    p.add_argument("--corpus", help="function specs, e.g. 'pwl-random:K=37:count=5,named-analytic:sine'")
    p.add_argument("--grid", type=int, help="uniform grid size for error measurement (>= 1000)")
    p.add_argument("--mode", choices=MODES, help="embedding mode")
    p.add_argument("--prune-zero", action=argparse.BooleanOptionalAction, default=None,
                   help="drop subnetworks of the zero profile")
    p.add_argument("--seed", type=int, help="base seed for pwl-random specs")
    p.add_argument("--quantizer", choices=("nearest", "floor"), help="profile rounding rule")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relucache",
                                     description="Cache-based ReLU approximation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", help="run one budget for each function and print the record")
    _shared_flags(p)
    p.add_argument("--T", dest="T", type=int, help="explicit number of intervals (with --m)")
    p.add_argument("--m", dest="m", type=int, help="explicit profile resolution (with --T)")
    p.add_argument("--out", help="write the adaptive network as JSON (single function only)")

    p = sub.add_parser("sweep", help="run a config file and write the CSV report")
    p.add_argument("config", help="key = value config file")
    _shared_flags(p)
    p.add_argument("--out", help="CSV output path (overrides the config)")

    p = sub.add_parser("enumerate-cache", help="list every profile code for resolution m")
    p.add_argument("--m", dest="m", type=int, required=True)

    p = sub.add_parser("embed", help="turn a serialized adaptive network into a width-5 network")
    p.add_argument("input", help="adaptive network JSON (from 'approximate --out')")
    p.add_argument("--out", required=True, help="output network JSON")
    p.add_argument("--mode", choices=MODES, default=STRICT_RELU)
    p.add_argument("--prune-zero", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--plan", action="store_true", help="print the segment table")
    return parser


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "depth", None):
        try:
            out["depths"] = [int(x) for x in args.depth.split(",") if x.strip()]
        except ValueError:
            raise ParameterError(f"bad --depth {args.depth!r}") from None
    if args.grid is not None:
        out["grid"] = args.grid
    if args.mode is not None:
        out["mode"] = args.mode
    if args.prune_zero is not None:
        out["prune_zero"] = args.prune_zero
    if args.quantizer is not None:
        out["rule"] = args.quantizer
    return out


def _cmd_approximate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    corpus = parse_corpus(args.corpus or "named-analytic:sine", seed)
    explicit = args.T is not None or args.m is not None
    if explicit and (args.T is None or args.m is None):
        raise ParameterError("--T and --m must be given together")
    if not explicit and not args.depth:
        raise ParameterError("give --depth or both --T and --m")
    if args.out and len(corpus) != 1:
        raise ParameterError("--out needs exactly one function")
    opts = _overrides(args)
    depths = opts.pop("depths", [1])
    if len(depths) != 1:
        raise ParameterError("approximate takes a single --depth")
    config = ExperimentConfig(depths=depths, corpus=corpus, seed=seed, **opts)

    status = EXIT_OK
    for k, spec in enumerate(corpus):
        if explicit:
            rec = run_params(spec, args.T, args.m, config)
        else:
            rec = run_single(spec, depths[0], config)
        if k:
            print()
        print(rec.summary())
        if not rec.ok:
            status = EXIT_INFEASIBLE
    if args.out and status == EXIT_OK:
        T, m = (args.T, args.m) if explicit else param_formula(depths[0])
        net = build_adaptive(make_unit_ball_function(corpus[0]), T, m, rule=config.rule)
        with open(args.out, "w") as fh:
            json.dump(net.to_dict(), fh, indent=1)
    return status


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    opts = _overrides(args)
    if args.corpus:
        seed = args.seed if args.seed is not None else config.seed
        opts["corpus"] = parse_corpus(args.corpus, seed)
    if args.seed is not None:
        opts["seed"] = args.seed
    if args.out:
        opts["out"] = args.out
    config = replace(config, **opts)
    if not config.out:
        raise ParameterError("no output path: set 'out' in the config or pass --out")
    records = sweep(config)
    skipped = [r for r in records if not r.ok]
    done = len(records) - len(skipped)
    print(f"{done} runs written to {config.out}; {len(skipped)} skipped")
    for r in skipped:
        print(f"  skipped {r.function_id} N={r.N}: needs N >= {r.n_min}", file=sys.stderr)
    return EXIT_INFEASIBLE if skipped and not done else EXIT_OK


def _cmd_enumerate(args) -> int:
    codes = enumerate_gamma(args.m)
    for g in codes:
        print(g)
    print(f"# {len(codes)} codes", file=sys.stderr)
    return EXIT_OK


def _cmd_embed(args) -> int:
    with open(args.input) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{args.input}: not valid JSON ({exc})") from None
    try:
        net = AdaptiveNet.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ReluCacheError):
            raise
        raise ParameterError(f"{args.input}: malformed adaptive network ({exc})") from None
    emb = embed_standard(net, args.mode, args.prune_zero)
    with open(args.out, "w") as fh:
        json.dump(emb.network.to_dict(), fh)
    print(f"depth {emb.network.depth} (bound {emb.plan.bound}), "
          f"weights {weight_count(emb.network)}, mode {args.mode}")
    if args.plan:
        print(emb.plan.table())
    return EXIT_OK


_COMMANDS = {"approximate": _cmd_approximate, "sweep": _cmd_sweep,
             "enumerate-cache": _cmd_enumerate, "embed": _cmd_embed}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InfeasibleBudget as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParameterError, ReluCacheError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
