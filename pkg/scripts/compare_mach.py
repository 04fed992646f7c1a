"""Shock-location variance growth for Mach 1.4 and Mach 2.0 at matched times.

    python3 scripts/compare_mach.py [ENSEMBLE]
"""
import dataclasses
import sys

from meshfree_llns import experiments as ex


def main():
    ensemble = int(sys.argv[1]) if len(sys.argv) > 1 else 100
    for name in ("shock-mach1.4", "table4-shock-mach2"):
        cfg = dataclasses.replace(ex.preset(name), ensemble=ensemble)
        r = ex.run(cfg)
        d = r.diagnostics
        print(f"mach {cfg.mach}: slope {d['slope']:.4g} cm^2/s, R^2 {d['r_squared']:.3f}, "
              f"final Var {r.series[-1, 1]:.4g} cm^2, wall {r.wall_time:.0f} s")


if __name__ == "__main__":
    main()
