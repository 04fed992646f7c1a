"""Command line entry point: ``meshfree-llns {equilibrium,covariance,shock}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import experiments as ex
from .errors import MeshfreeError

log = logging.getLogger("meshfree_llns")

SUBCOMMANDS = {
    "equilibrium": ("equilibrium_zero_flow", "equilibrium_net_flow"),
    "covariance": ("time_covariance",),
    "shock": ("standing_shock",),
}
DEFAULT_PRESETS = {"equilibrium": "table1-equilibrium", "covariance": "table1-covariance",
                   "shock": "table4-shock-mach2"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshfree-llns", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--config", metavar="PATH", help="key = value config file")
        src.add_argument("--preset", metavar="NAME", choices=sorted(ex.PRESETS))
        s.add_argument("--seed", type=int)
        s.add_argument("--samples", type=int, help="sampled steps per realization")
        s.add_argument("--skip", type=int, help="warm-up steps before sampling")
        s.add_argument("--ensemble", type=int)
        s.add_argument("--out", metavar="PATH", help="CSV output path")
        s.add_argument("--no-noise", action="store_true")
        s.add_argument("--threads", type=int)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> ex.ExperimentConfig:
    if args.config:
        cfg = ex.load_config(args.config)
    else:
        cfg = ex.preset(args.preset or DEFAULT_PRESETS[args.command])
    if cfg.scenario not in SUBCOMMANDS[args.command]:
        raise MeshfreeError(f"'{args.command}' cannot run scenario {cfg.scenario!r}")
    overrides = {"seed": args.seed, "n_steps": args.samples, "n_skip": args.skip,
                 "ensemble": args.ensemble, "threads": args.threads, "output": args.out}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.no_noise:
        overrides["noise"] = False
    return dataclasses.replace(cfg, **overrides).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        log.info("running %s: %d steps, ensemble %d", cfg.scenario, cfg.n_steps, cfg.ensemble)
        report = ex.run(cfg)
        if cfg.output:
            ex.emit_report(report, cfg.output)
        else:
            sys.stdout.write(ex.report_csv(report))
        sys.stdout.write(ex.report_summary(report))
    except MeshfreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
