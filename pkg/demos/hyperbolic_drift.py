"""
Hyperbolic Brownian motion sinks at rate one half
=================================================

Brownian motion on the upper half-plane (curvature -1) is simulated through
the determinant-one matrix group and the Moebius action.  The height
coordinate satisfies E[log y_t] = -t/2 while the horizontal mean stays at
zero: the negative curvature shows up as a deterministic downward drift in
log-height.

Run:  python3 demos/hyperbolic_drift.py
"""

from pathlib import Path

import numpy as np

from orbitflow.ensembles import poincare_ensemble
from orbitflow.processes import ProcessConfig, bm_poincare
from orbitflow.reporting import emit_csv, emit_svg

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)


def main() -> None:
    print("E[log y_t] against -t/2, 4000 paths each horizon:")
    print(f"{'t':>6} {'mean log y':>12} {'-t/2':>8} {'gap / SE':>9} {'|E[x]| / SE':>12}")
    for t_end in (0.1, 0.25, 0.5):
        z, ok = poincare_ensemble(ProcessConfig(t_end=t_end, dt=1e-3, seed=3),
                                  4000)
        logy = np.log(z[ok, 1])
        x = z[ok, 0]
        m = np.sqrt(float(ok.sum()))
        gap = abs(logy.mean() + t_end / 2.0) / (logy.std() / m)
        xgap = abs(x.mean()) / (x.std() / m)
        print(f"{t_end:>6} {logy.mean():>12.4f} {-t_end / 2:>8.4f} "
              f"{gap:>9.2f} {xgap:>12.2f}")

    # a few individual trajectories for the picture
    series = {}
    times = None
    for seed in (0, 1, 2):
        path = bm_poincare(ProcessConfig(t_end=2.0, dt=1e-3, seed=seed))
        times = path.times
        series[f"log y, seed {seed}"] = np.log(path.states[:, 1])
    series["-t/2"] = -times / 2.0
    with open(OUT / "hyperbolic_height.svg", "w", encoding="utf-8",
              newline="\n") as fh:
        emit_svg(times, series, fh, title="log-height of hyperbolic paths")

    ref = bm_poincare(ProcessConfig(t_end=2.0, dt=1e-3, seed=0))
    with open(OUT / "hyperbolic_path.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        emit_csv(ref.times, ref.states, fh)
    print(f"wrote {OUT / 'hyperbolic_path.csv'} and {OUT / 'hyperbolic_height.svg'}")


if __name__ == "__main__":
    main()
