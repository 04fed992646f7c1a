"""Run every built-in preset and write CSV + summary reports to a directory.

    python3 scripts/run_all.py [OUTDIR] [--quick]

``--quick`` shrinks step counts and ensembles for a smoke run.
"""
import argparse
import dataclasses
from pathlib import Path

from meshfree_llns import experiments as ex


def main():
    p = argparse.ArgumentParser()
    p.add_argument("outdir", nargs="?", default="results")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ex.PRESETS:
        cfg = dataclasses.replace(ex.preset(name), seed=args.seed)
        if args.quick:
            cfg = dataclasses.replace(cfg, n_steps=min(cfg.n_steps, 20_000), ensemble=min(cfg.ensemble, 8),
                                      n_skip=min(cfg.n_skip, 1000))
        report = ex.run(cfg)
        ex.emit_report(report, out / f"{name}.csv")
        print(ex.report_summary(report))


if __name__ == "__main__":
    main()
