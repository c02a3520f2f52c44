"""Command line front end: simulate / drift / verify / control / oracle.

Every run is reproducible: paths draw noise keyed by (seed, stream, path,
step), so CSV artifacts are byte-identical for any worker count, and each
output directory carries a manifest with the resolved config and content
hashes of the inputs.  Exit codes: 0 success, 1 suite or run failure,
2 config error.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FsPath

import numpy as np

from .control import integrate_control, load_schedule
from .geom import MetricR, drift_J_R, drift_J_gradient, drift_J_spectral, orbit_log_volume
from .matcore import fd_gradient, require_spd, sqrtm_spd
from .processes import (ProcessConfig, bm_bures_wasserstein, bm_cartan_hadamard,
                        bm_grassmann, bm_orthogonal, bm_poincare, bm_stiefel,
                        eigen_sde, sphere_vertical_bm, vertical_bm, wishart)
from .reporting import (build_manifest, emit_csv, emit_eigen_csv, emit_svg,
                        read_matrix_csv, write_manifest, write_matrix_csv)
from .sde import qv_oracle, worker_count
from .verify import SUITE_NAMES, run_suite

PROCESSES = ("on-bm", "stiefel", "grassmann", "poincare", "cartan-hadamard",
             "wishart", "bw-bm", "vertical-bm", "sphere-vertical",
             "eigen-wishart", "eigen-bw")

_EIGEN = ("eigen-wishart", "eigen-bw")
_NEEDS_WIDE_K = ("wishart", "bw-bm", "vertical-bm") + _EIGEN


class ConfigError(Exception):
    """Bad flags, malformed input files, or schema violations (exit 2)."""


def _load_config_file(path: str) -> dict:
    cfg = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                cfg[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return cfg


def _resolve(args, file_cfg: dict, key: str, cast, default):
    """Flag wins over config file wins over default."""
    flag = getattr(args, key.replace("-", "_"))
    if flag is not None:
        return flag
    if key in file_cfg:
        try:
            return cast(file_cfg[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from exc
    return default


def _read_matrix(path: str) -> np.ndarray:
    try:
        return read_matrix_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed matrix CSV: {exc}") from exc


def _parse_floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip()])
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc


def _run_indexed(fn, n_paths: int, workers: int) -> list:
    out = [None] * n_paths
    if workers <= 1 or n_paths <= 1:
        for p in range(n_paths):
            out[p] = fn(p)
        return out

    def job(p):
        out[p] = fn(p)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(job, range(n_paths)))
    return out


def _simulate_path(process: str, p: int, n: int, k: int, cfg: ProcessConfig,
                   opts: dict):
    """Run one path; returns (times, states, kind) with kind matrix|eigen."""
    if process == "on-bm":
        path = bm_orthogonal(n, cfg, reproject=opts["reproject"], path_index=p)
    elif process == "stiefel":
        path = bm_stiefel(n, k, cfg, path_index=p)
    elif process == "grassmann":
        path = bm_grassmann(n, k, cfg, route=opts["route"], path_index=p)
    elif process == "poincare":
        path = bm_poincare(cfg, z0=opts["z0"], path_index=p)
    elif process == "cartan-hadamard":
        path = bm_cartan_hadamard(n, cfg, path_index=p)[1]
    elif process == "wishart":
        path = wishart(n, k, cfg, path_index=p)[1]
    elif process == "bw-bm":
        path = bm_bures_wasserstein(opts["p0"], cfg, k=k, path_index=p)
    elif process == "vertical-bm":
        path = vertical_bm(opts["m0"], cfg, path_index=p)[1]
    elif process == "sphere-vertical":
        path = sphere_vertical_bm(n, cfg, path_index=p)[0]
    elif process in _EIGEN:
        kind = "wishart" if process == "eigen-wishart" else "bw"
        path = eigen_sde(kind, opts["lam0"], n, k, cfg, path_index=p)
        return path, "eigen"
    else:
        raise ConfigError(f"unknown process {process!r}")
    return path, "matrix"


def _svg_series(process: str, n: int, results: list) -> tuple:
    """Pick plot series for up to 8 paths; returns (times, {label: values})."""
    series = {}
    times = None
    if process == "sphere-vertical":
        path, _ = results[0]
        s = np.einsum("ti,ti->t", path.states, path.states)
        times = path.times
        series["S_t"] = s
        series["reference"] = s[0] + (n - 1) * (path.times - path.times[0])
        return times, series
    for p, (path, kind) in enumerate(results[:8]):
        if times is None or len(path.times) < len(times):
            times = path.times
        m = len(path.times)
        if kind == "eigen":
            for i in range(path.states.shape[1]):
                series[f"path{p}_l{i + 1}"] = path.states[:m, i]
        elif path.states.ndim == 3:
            series[f"path{p}_trace"] = np.trace(path.states[:m], axis1=1, axis2=2)
        else:
            for i in range(path.states.shape[1]):
                series[f"path{p}_x{i}"] = path.states[:m, i]
    m = len(times)
    series = {lab: np.asarray(v)[:m] for lab, v in series.items()}
    return times, series


def cmd_simulate(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else {}
    process = _resolve(args, file_cfg, "process", str, None)
    if process is None:
        raise ConfigError("simulate needs --process (or process= in the config file)")
    if process not in PROCESSES:
        raise ConfigError(f"unknown process {process!r}; choose from {', '.join(PROCESSES)}")
    n = _resolve(args, file_cfg, "n", int, 2)
    k = _resolve(args, file_cfg, "k", int, n if process in _NEEDS_WIDE_K else 1)
    t_end = _resolve(args, file_cfg, "t", float, 1.0)
    dt = _resolve(args, file_cfg, "dt", float, 1e-3)
    n_paths = _resolve(args, file_cfg, "paths", int, 1)
    seed = _resolve(args, file_cfg, "seed", int, 0)
    stream = _resolve(args, file_cfg, "stream", int, 0)
    out_dir = _resolve(args, file_cfg, "out", str, None)
    if out_dir is None:
        raise ConfigError("simulate needs --out DIR")
    if t_end <= 0 or dt <= 0 or n_paths < 1:
        raise ConfigError(f"need t > 0, dt > 0, paths >= 1; got t={t_end}, dt={dt}, paths={n_paths}")
    if n < 1 or k < 1 or k > n:
        raise ConfigError(f"need 1 <= k <= n; got n={n}, k={k}")

    inputs = {}
    opts = {"reproject": args.reproject, "route": args.route}
    if process == "bw-bm":
        if args.P0:
            opts["p0"] = _read_matrix(args.P0)
            inputs["P0"] = FsPath(args.P0).read_bytes()
        else:
            opts["p0"] = np.eye(n)
    if process == "vertical-bm":
        if args.M0:
            opts["m0"] = _read_matrix(args.M0)
            inputs["M0"] = FsPath(args.M0).read_bytes()
            n, k = opts["m0"].shape
        else:
            opts["m0"] = np.eye(n, k)
    if process in _EIGEN:
        opts["lam0"] = (_parse_floats(args.lam0, "--lam0") if args.lam0
                        else np.arange(k, 0, -1, dtype=float))
        if opts["lam0"].shape[0] != k:
            raise ConfigError(f"--lam0 has {opts['lam0'].shape[0]} entries, need k={k}")
    if process == "poincare":
        z0 = _parse_floats(args.z0, "--z0") if args.z0 else np.array([0.0, 1.0])
        if z0.shape[0] != 2 or z0[1] <= 0:
            raise ConfigError("--z0 must be x,y with y > 0")
        opts["z0"] = (float(z0[0]), float(z0[1]))

    cfg = ProcessConfig(t_end=t_end, dt=dt, seed=seed, stream=stream)
    try:
        results = _run_indexed(
            lambda p: _simulate_path(process, p, n, k, cfg, opts),
            n_paths, worker_count())
    except (ValueError, FloatingPointError) as exc:
        print(f"simulate failed: {exc}", file=sys.stderr)
        return 1

    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    stopped = []
    for p, (path, kind) in enumerate(results):
        name = f"path_{p:04d}.csv"
        with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
            if kind == "eigen":
                emit_eigen_csv(path.times, path.states, fh)
            else:
                emit_csv(path.times, path.states, fh)
        outputs.append(name)
        if path.stopped:
            stopped.append({"path": p, "step": path.stopped_step,
                            "reason": path.stop_reason})
    if args.svg:
        times, series = _svg_series(process, n, results)
        with open(out / "plot.svg", "w", encoding="utf-8", newline="\n") as fh:
            emit_svg(times, series, fh, title=process)
        outputs.append("plot.svg")

    config = {"subcommand": "simulate", "process": process, "n": n, "k": k,
              "t": t_end, "dt": dt, "paths": n_paths, "seed": seed,
              "stream": stream, "svg": bool(args.svg),
              "route": opts["route"] if process == "grassmann" else None,
              "stopped": stopped}
    manifest = build_manifest(config, inputs=inputs, outputs=outputs)
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        write_manifest(manifest, fh)
    for item in stopped:
        print(f"note: path {item['path']} stopped at step {item['step']}: {item['reason']}")
    print(f"wrote {len(outputs)} artifact(s) to {out}")
    return 0


def cmd_drift(args) -> int:
    p = _read_matrix(args.input)
    try:
        require_spd(p)
        if args.which == "spectral":
            j = drift_J_spectral(p)
        elif args.which == "gradient":
            j = drift_J_gradient(sqrtm_spd(p))
        else:
            if not args.R:
                raise ConfigError("drift --which J-R needs --R R.csv")
            j = drift_J_R(p, MetricR(_read_matrix(args.R)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_matrix_csv(j, fh)
        print(f"wrote {args.out}")
    else:
        write_matrix_csv(j, sys.stdout)
    return 0


def cmd_verify(args) -> int:
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    result, report = run_suite(args.suite, **kwargs)
    if report is not None:
        for line in report.lines():
            print(line)
        if args.out:
            out = FsPath(args.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "constants_report.json", "w", encoding="utf-8",
                      newline="\n") as fh:
                fh.write(report.to_json() + "\n")
            print(f"wrote {out / 'constants_report.json'}")
    for line in result.lines():
        print(line)
    return 0 if result.passed else 1


def cmd_control(args) -> int:
    try:
        schedule = load_schedule(args.schedule)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.schedule}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc
    p0 = _read_matrix(args.P0)
    try:
        path = integrate_control(p0, schedule, substeps=args.substeps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectory.csv", "w", encoding="utf-8", newline="\n") as fh:
        emit_csv(path.times, path.states, fh)
    increments = np.diff(path.states, axis=0)
    loewner_min = float(min(np.linalg.eigvalsh(d)[0] for d in increments))
    config = {"subcommand": "control", "schedule": args.schedule,
              "substeps": args.substeps, "segments": len(schedule.segments),
              "duration": schedule.total_duration, "loewner_min": loewner_min}
    inputs = {"schedule": FsPath(args.schedule).read_bytes(),
              "P0": FsPath(args.P0).read_bytes()}
    manifest = build_manifest(config, inputs=inputs, outputs=["trajectory.csv"])
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        write_manifest(manifest, fh)
    print(f"integrated {len(schedule.segments)} segment(s), "
          f"duration {schedule.total_duration:g}, "
          f"min increment eigenvalue {loewner_min:.3e}")
    print(f"wrote artifacts to {out}")
    return 0


def _print_qv(name: str, mean: np.ndarray, se: np.ndarray) -> None:
    print(f"{name}:")
    for row_m, row_s in zip(np.atleast_2d(mean), np.atleast_2d(se)):
        print("  " + "  ".join(f"{m:+.6f}(se {s:.1e})" for m, s in zip(row_m, row_s)))


def cmd_oracle(args) -> int:
    if args.target == "qv":
        n = args.n or 2
        k = args.k or n
        if args.kind == "wiener":
            state = np.zeros((n, k))
            diffusion = lambda t, s, dw: dw
            shape = (n, k)
        elif args.kind == "skew":
            tri = n * (n - 1) // 2
            iu = np.triu_indices(n, k=1)

            def diffusion(t, s, dw):
                a = np.zeros((n, n))
                a[iu] = np.ravel(dw) / np.sqrt(2.0)
                return a - a.T

            state = np.eye(n)
            shape = (tri,)
        else:  # sphere
            state = np.zeros((n, 1))
            state[0, 0] = 1.0
            diffusion = lambda t, s, dw: dw - s @ (s.T @ dw)
            shape = (n, 1)
        est = qv_oracle(diffusion, state, shape, args.dt, args.samples,
                        seed=args.seed)
        print(f"qv oracle: kind={args.kind} n={n} k={k} dt={args.dt:g} "
              f"samples={args.samples}")
        _print_qv("E[dX dX^T]/dt", est.outer, est.outer_se)
        _print_qv("E[dX^T dX]/dt", est.inner, est.inner_se)
        if est.square is not None:
            _print_qv("E[dX dX]/dt", est.square, est.square_se)
        return 0
    # fd-gradient of the orbit log-volume at M
    m = _read_matrix(args.input) if args.input else None
    if m is None:
        raise ConfigError("oracle --target fd-gradient needs --input M.csv")
    metric = MetricR(_read_matrix(args.R)) if args.R else None
    try:
        grad = fd_gradient(lambda x: orbit_log_volume(x, metric), m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_matrix_csv(grad, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orbitflow",
        description="Matrix-manifold diffusion simulator and verification toolkit.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="integrate a named process and write CSV paths")
    sim.add_argument("--process", choices=PROCESSES, default=None)
    sim.add_argument("--n", type=int, default=None, help="ambient dimension")
    sim.add_argument("--k", type=int, default=None, help="factor width / subspace dimension")
    sim.add_argument("--t", type=float, default=None, help="end time")
    sim.add_argument("--dt", type=float, default=None, help="step size")
    sim.add_argument("--paths", type=int, default=None, help="number of paths")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--stream", type=int, default=None, help="noise substream")
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--svg", action="store_true", help="also write plot.svg")
    sim.add_argument("--config", default=None, help="key=value config file; flags win")
    sim.add_argument("--route", choices=("pushforward", "ito"), default="pushforward",
                     help="grassmann integration route")
    sim.add_argument("--reproject", action="store_true",
                     help="orthogonality cleanup each step (on-bm)")
    sim.add_argument("--P0", default=None, help="initial SPD matrix CSV (bw-bm)")
    sim.add_argument("--M0", default=None, help="initial factor CSV (vertical-bm)")
    sim.add_argument("--lam0", default=None, help="initial eigenvalues, comma separated")
    sim.add_argument("--z0", default=None, help="half-plane start x,y (poincare)")
    sim.set_defaults(fn=cmd_simulate)

    dr = sub.add_parser("drift", help="evaluate the quotient drift field on a matrix")
    dr.add_argument("--which", choices=("spectral", "gradient", "J-R"), required=True)
    dr.add_argument("--input", required=True, help="SPD matrix CSV")
    dr.add_argument("--R", default=None, help="metric matrix CSV (J-R)")
    dr.add_argument("--out", default=None, help="output CSV file (default stdout)")
    dr.set_defaults(fn=cmd_drift)

    ver = sub.add_parser("verify", help="run a self-check suite")
    ver.add_argument("--suite", choices=SUITE_NAMES, required=True)
    ver.add_argument("--seed", type=int, default=None)
    ver.add_argument("--out", default=None,
                     help="directory for the constants report JSON")
    ver.set_defaults(fn=cmd_verify)

    ctl = sub.add_parser("control", help="integrate a piecewise-constant metric schedule")
    ctl.add_argument("--schedule", required=True, help="schedule file")
    ctl.add_argument("--P0", required=True, help="initial SPD matrix CSV")
    ctl.add_argument("--out", required=True, help="output directory")
    ctl.add_argument("--substeps", type=int, default=64)
    ctl.set_defaults(fn=cmd_control)

    orc = sub.add_parser("oracle", help="quadratic-variation and gradient oracles")
    orc.add_argument("--target", choices=("qv", "fd-gradient"), required=True)
    orc.add_argument("--kind", choices=("wiener", "skew", "sphere"), default="wiener")
    orc.add_argument("--n", type=int, default=None)
    orc.add_argument("--k", type=int, default=None)
    orc.add_argument("--dt", type=float, default=1e-3)
    orc.add_argument("--samples", type=int, default=4000)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--input", default=None, help="matrix CSV (fd-gradient)")
    orc.add_argument("--R", default=None, help="metric matrix CSV")
    orc.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
