"""Command-line interface: seeded experiments and trace tooling."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as config_mod
from . import experiments, traceio
from .bank import BankState, DataPattern, parse_pattern, save_dump
from .decoder import decode_address, row_group
from .engine import CommandEngine
from .errors import ConfigError, SimulationError
from .experiments import Report
from .perfmodel import ARITIES, KERNELS


class _Parser(argparse.ArgumentParser):
    """Argument errors surface as config errors (exit code 3)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    # Global flags live in a parent parser so they work on either side of
    # the subcommand; SUPPRESS keeps subparser defaults from clobbering
    # values parsed at the top level.
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="INI config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the config seed")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="write the report here instead of stdout")
    common.add_argument("--full", action="store_true",
                        default=argparse.SUPPRESS,
                        help="full-scale trials and sampling")

    parser = _Parser(prog="pumsim", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", parents=[common],
                       help="group membership of an anchor pair")
    p.add_argument("r1", type=int)
    p.add_argument("r2", type=int)

    p = sub.add_parser("exec", parents=[common],
                       help="replay a command trace against a bank")
    p.add_argument("--trace", required=True, help="trace file to replay")
    p.add_argument("--init", default="zeros",
                   help="initial pattern: zeros|ones|random:<seed>")
    p.add_argument("--dump", help="write the final bank dump here")

    sub.add_parser("census", parents=[common],
                   help="group-size distribution over anchor pairs")
    sub.add_parser("verify", parents=[common],
                   help="copy + bulk-write verification sweep")

    p = sub.add_parser("maj", parents=[common],
                       help="success rate of one majority setup")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--pattern", default="random",
                   choices=("random", "ones", "zeros"))
    p.add_argument("--trials", type=int)

    p = sub.add_parser("characterize", parents=[common],
                       help="success-rate grid")
    p.add_argument("--m-list", type=int, nargs="+")
    p.add_argument("--n-list", type=int, nargs="+")
    p.add_argument("--patterns", nargs="+", default=["random"])

    sub.add_parser("spatial", parents=[common],
                   help="per-subarray success under a sigma profile")

    p = sub.add_parser("compute", parents=[common],
                       help="run a kernel and model its cost")
    p.add_argument("--kernel", required=True, choices=KERNELS)
    p.add_argument("--arity", type=int, default=3, choices=ARITIES)
    p.add_argument("--n", type=int, default=32, choices=(4, 8, 16, 32))
    p.add_argument("--scenario", default="realexp",
                   choices=sorted(experiments.SCENARIO_ALIASES))
    p.add_argument("--elements", type=int, default=65536)

    sub.add_parser("sensitivity", parents=[common],
                   help="scenario x arity x size speedup grid")

    p = sub.add_parser("destruct", parents=[common],
                       help="plan bank destruction")
    p.add_argument("--max-n", type=int, default=32)
    p.add_argument("--baseline", default="both",
                   choices=("rowclone", "frac", "both"))
    p.add_argument("--trace-out", help="also dump the plan as a trace file")

    return parser


def _load_config(args) -> config_mod.ExperimentConfig:
    path = getattr(args, "config", None)
    cfg = config_mod.load(path) if path else config_mod.ExperimentConfig()
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg.seed = seed
    if getattr(args, "full", False):
        cfg.trials = 10000
        cfg.groups_per_subarray = 100
        cfg.subarrays_sampled = min(3, cfg.n_subarrays)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_decode(args, cfg) -> str:
    layout = cfg.layout()
    group = row_group(args.r1, args.r2, layout)
    lines = []
    for r in (args.r1, args.r2):
        lines.append(f"# selects {r}={decode_address(r, layout).labelled(layout)}")
    rows = ";".join(str(r) for r in group.rows)
    lines.append(f"{args.r1},{args.r2},{group.n},{rows}")
    return "\n".join(lines) + "\n"


def _cmd_exec(args, cfg) -> str:
    geometry = cfg.geometry()
    bank = BankState(geometry, vdd=cfg.vdd,
                     biased_senseamps=cfg.biased_senseamps)
    bank.init_rows(range(geometry.total_rows), parse_pattern(args.init))
    try:
        trace = traceio.load_trace(args.trace)
    except OSError as exc:
        raise ConfigError(f"cannot read trace {args.trace}: {exc}") from exc
    engine = CommandEngine(cfg.layout(), cfg.timing(), cfg.analog_params())
    events = engine.execute(bank, trace)
    report = Report(
        name="exec",
        columns=("time", "event", "detail"),
        meta=experiments._base_meta(cfg),
    )
    report.meta["trace"] = args.trace
    report.meta["init"] = args.init
    for event in events:
        detail = ";".join(
            f"{k}={_fmt_info(v)}" for k, v in sorted(event.info.items())
        )
        report.rows.append((event.time, event.kind, detail))
    report.meta["snapshot"] = bank.snapshot()
    if args.dump:
        save_dump(bank, args.dump, extended=True)
    return report.render_csv()


def _fmt_info(value) -> str:
    if isinstance(value, np.ndarray):
        return np.packbits(value.astype(np.uint8)).tobytes().hex()
    if isinstance(value, (list, tuple)):
        return "|".join(str(v) for v in value)
    return str(value)


def run(args) -> str:
    cfg = _load_config(args)
    if args.command == "decode":
        return _cmd_decode(args, cfg)
    if args.command == "exec":
        return _cmd_exec(args, cfg)
    if args.command == "census":
        return experiments.run_census(cfg).render_csv()
    if args.command == "verify":
        return experiments.run_verification(cfg).render_csv()
    if args.command == "maj":
        return experiments.run_maj(
            cfg, args.m, args.n, args.pattern, trials=args.trials
        ).render_csv()
    if args.command == "characterize":
        return experiments.run_characterize(
            cfg,
            m_list=tuple(args.m_list) if args.m_list else None,
            n_list=tuple(args.n_list) if args.n_list else None,
            patterns=tuple(args.patterns),
        ).render_csv()
    if args.command == "spatial":
        return experiments.run_spatial(cfg).render_csv()
    if args.command == "compute":
        payload = experiments.run_compute(
            cfg, args.kernel, args.arity, args.n, args.scenario, args.elements
        )
        return experiments.render_json(payload)
    if args.command == "sensitivity":
        return experiments.run_sensitivity(cfg).render_csv()
    if args.command == "destruct":
        baselines = (
            ("rowclone", "frac") if args.baseline == "both"
            else (args.baseline,)
        )
        payload = experiments.run_destruct(cfg, args.max_n, baselines)
        if args.trace_out:
            from .destruct import plan_multirow

            plan = plan_multirow(cfg.layout(), cfg.geometry(),
                                 max_n=args.max_n)
            bits = np.zeros(cfg.n_bitlines, dtype=np.uint8)
            traceio.save_trace(plan.to_trace(bits, cfg.timing()),
                               args.trace_out)
        return experiments.render_json(payload)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _emit(run(args), getattr(args, "out", None))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
