"""
Tangential noise pushes the radius outward
==========================================

A particle on a radial line in R^n is kicked only tangentially: each
increment is projected onto the sphere through the current point.  No
single kick moves the particle outward, yet the squared radius S = |X|^2
climbs at the deterministic rate n - 1.  The outward motion is pure
quadratic variation, the same bookkeeping that produces the drift term of
the quotient processes in this package.

Run:  python3 demos/sphere_radial_drift.py
Artifacts land in demos/out/.
"""

from pathlib import Path

import numpy as np

from orbitflow.processes import ProcessConfig, sphere_vertical_bm
from orbitflow.reporting import emit_csv, emit_svg

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)


def main() -> None:
    cfg = ProcessConfig(t_end=1.0, dt=1e-4, seed=7)
    series = {}
    times = None

    print("squared radius of a tangentially kicked particle, t in [0, 1]")
    print(f"{'n':>3} {'fitted slope':>14} {'n - 1':>7} {'rel err':>9}")
    for n in (2, 3, 5):
        xp, s = sphere_vertical_bm(n, cfg)
        times = xp.times
        # least squares slope through the whole trajectory
        slope = float(np.polyfit(times, s, 1)[0])
        rel = abs(slope - (n - 1)) / (n - 1)
        print(f"{n:>3} {slope:>14.4f} {n - 1:>7} {rel:>9.2%}")
        series[f"n={n}"] = s
        series[f"n={n} exact"] = s[0] + (n - 1) * times

    with open(OUT / "sphere_radius.csv", "w", encoding="utf-8", newline="\n") as fh:
        emit_csv(times, np.stack([series["n=3"]], axis=1), fh)
    with open(OUT / "sphere_radius.svg", "w", encoding="utf-8", newline="\n") as fh:
        emit_svg(times, series, fh, title="squared radius under tangential noise")
    print(f"wrote {OUT / 'sphere_radius.csv'} and {OUT / 'sphere_radius.svg'}")


if __name__ == "__main__":
    main()
