"""Stochastic integration kernel: deterministic noise streams, Euler-Maruyama
and Heun steppers with state guards, and a quadratic-variation oracle.

Noise determinism contract: the standard normal attached to
(seed, stream, path, step, entry) is a pure function of those indices,
realized through a counter-based bit generator.  It does not depend on how
many paths are simulated, on worker-thread count, or on evaluation order.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_U64_SHIFT = np.uint64(11)
_U64_SCALE = 2.0 ** -53


def worker_count(default: int = 1) -> int:
    """Worker cap for path-parallel runs, from ORBITFLOW_THREADS if set."""
    raw = os.environ.get("ORBITFLOW_THREADS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"ORBITFLOW_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t0 + m * dt, m = 0..steps."""

    t0: float
    dt: float
    steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * self.steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)

    @classmethod
    def regular(cls, t_end: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        steps = int(round((t_end - t0) / dt))
        return cls(t0=t0, dt=dt, steps=max(steps, 1))


class NoiseSource:
    """Counter-based standard-normal supply keyed by (seed, stream).

    Per step, a Philox stream keyed (seed, stream) with counter word set to the
    step index supplies 64-bit words; path p owns the contiguous word block
    [p * count, (p + 1) * count) which is mapped to normals through the inverse
    normal CDF.  Earlier paths' values never depend on how many paths are
    drawn, which gives thread-layout independence for free.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)

    def _raw(self, step: int, nwords: int) -> np.ndarray:
        bg = np.random.Philox(key=[self.seed, self.stream], counter=[0, 0, 0, step])
        return bg.random_raw(nwords)

    @staticmethod
    def _to_normal(words: np.ndarray) -> np.ndarray:
        u = ((words >> _U64_SHIFT).astype(np.float64) + 0.5) * _U64_SCALE
        return ndtri(u)

    def normals(self, path: int, step: int, count: int) -> np.ndarray:
        """Standard normals for one (path, step); shape (count,)."""
        if count == 0:
            return np.empty(0)
        words = self._raw(step, (path + 1) * count)[path * count:]
        return self._to_normal(words)

    def normals_block(self, step: int, n_paths: int, count: int) -> np.ndarray:
        """Standard normals for paths 0..n_paths-1 at one step; shape
        (n_paths, count).  Row p is bit-identical to normals(p, step, count)."""
        if count == 0:
            return np.empty((n_paths, 0))
        words = self._raw(step, n_paths * count)
        return self._to_normal(words).reshape(n_paths, count)


def gaussian_increment(source: NoiseSource, path: int, step: int, shape, dt: float) -> np.ndarray:
    """Matrix of independent N(0, dt) entries for the given (path, step)."""
    shape = tuple(shape)
    count = int(np.prod(shape)) if shape else 1
    z = source.normals(path, step, count)
    return (np.sqrt(dt) * z).reshape(shape)


def skew_increment(source: NoiseSource, path: int, step: int, n: int, dt: float) -> np.ndarray:
    """Skew-symmetric increment with upper-triangle entries i.i.d. N(0, dt/2).

    Equals the coefficient expansion sum_{i<j} (E_ij - E_ji)/sqrt(2) * g_ij
    with g_ij i.i.d. N(0, dt).
    """
    tri = n * (n - 1) // 2
    g = source.normals(path, step, tri) * np.sqrt(dt / 2.0)
    a = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    a[iu] = g
    return a - a.T


@dataclass
class SdeProblem:
    """Problem description for `integrate`.

    drift(t, x) -> array or None; diffusion(t, x, dw) -> array or None (the
    full diffusion contribution b(x) dw, not the coefficient); noise_shape is
    the shape of dw per step.  scheme is "euler" (Ito) or "heun"
    (Stratonovich predictor-corrector).  guard(x) -> bool is checked on every
    proposed state; on failure the path stops at the last valid state rather
    than clamping.
    """

    x0: np.ndarray
    drift: object = None
    diffusion: object = None
    noise_shape: tuple = ()
    scheme: str = "euler"
    guard: object = None
    guard_name: str = "state guard"
    post_step: object = None  # optional state correction applied before the guard

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64)
        if self.scheme not in ("euler", "heun"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Path:
    """A single realized trajectory on a uniform grid.

    If the guard tripped, `stopped_step` is the index of the first rejected
    step and times/states end at the last valid state.
    """

    times: np.ndarray
    states: np.ndarray
    path_index: int = 0
    stopped_step: int | None = None
    stop_reason: str | None = None

    @property
    def stopped(self) -> bool:
        return self.stopped_step is not None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(problem: SdeProblem, grid: TimeGrid, source: NoiseSource | None = None,
              path_index: int = 0) -> Path:
    """Integrate one path of the problem over the grid.

    Euler-Maruyama:  x' = x + drift(t, x) dt + diffusion(t, x, dw)
    Heun:            predictor as above, then the average of drift/diffusion
                     evaluated at the current and predicted states with the
                     same increment (Stratonovich reading).
    """
    if problem.noise_shape and source is None:
        raise ValueError("problem has noise but no noise source was given")
    dt = grid.dt
    x = problem.x0.copy()
    states = np.empty((grid.steps + 1,) + x.shape)
    states[0] = x
    times = grid.times()
    stopped_step = None
    reason = None
    for m in range(grid.steps):
        t = times[m]
        if problem.noise_shape:
            dw = gaussian_increment(source, path_index, m, problem.noise_shape, dt)
        else:
            dw = None
        d0 = problem.drift(t, x) if problem.drift is not None else None
        s0 = problem.diffusion(t, x, dw) if problem.diffusion is not None else None
        pred = x.copy()
        if d0 is not None:
            pred = pred + d0 * dt
        if s0 is not None:
            pred = pred + s0
        if problem.scheme == "euler":
            nxt = pred
        else:
            t1 = times[m + 1]
            nxt = x.copy()
            if problem.drift is not None:
                nxt = nxt + 0.5 * (d0 + problem.drift(t1, pred)) * dt
            if problem.diffusion is not None:
                nxt = nxt + 0.5 * (s0 + problem.diffusion(t1, pred, dw))
        if problem.post_step is not None:
            nxt = problem.post_step(nxt)
        if problem.guard is not None and not problem.guard(nxt):
            stopped_step = m
            reason = problem.guard_name
            states = states[: m + 1]
            times = times[: m + 1]
            break
        x = nxt
        states[m + 1] = x
    return Path(times=times, states=states, path_index=path_index,
                stopped_step=stopped_step, stop_reason=reason)


def run_paths(problem: SdeProblem, grid: TimeGrid, source: NoiseSource,
              n_paths: int, workers: int | None = None) -> list[Path]:
    """Integrate paths 0..n_paths-1, optionally across a thread pool.

    Results are identical for any worker count: each path consumes only its
    own noise indices and the output list is assembled in path order.
    """
    if workers is None:
        workers = worker_count()
    if workers <= 1 or n_paths <= 1:
        return [integrate(problem, grid, source, p) for p in range(n_paths)]
    out: list[Path | None] = [None] * n_paths
    def job(p: int) -> None:
        out[p] = integrate(problem, grid, source, p)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(job, range(n_paths)))
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class QvEstimate:
    """Monte Carlo estimate of quadratic-variation contractions of a diffusion.

    outer ~ E[dX dX^T] / dt, inner ~ E[dX^T dX] / dt, and for square states
    square ~ E[dX dX] / dt.  Each *_se field holds entrywise standard errors.
    """

    outer: np.ndarray
    outer_se: np.ndarray
    inner: np.ndarray
    inner_se: np.ndarray
    square: np.ndarray | None
    square_se: np.ndarray | None
    samples: int


def qv_oracle(diffusion, state, noise_shape, dt: float, samples: int,
              source: NoiseSource | None = None, seed: int = 0) -> QvEstimate:
    """Estimate quadratic-variation contractions of `diffusion` at `state`.

    Draws `samples` fresh increments dw ~ N(0, dt) of `noise_shape`, forms
    dX = diffusion(0, state, dw), and averages dX dX^T / dt (and the
    transposed/product contractions).  Standard errors shrink as
    samples^(-1/2).
    """
    if source is None:
        source = NoiseSource(seed, stream=104729)  # dedicated oracle stream
    state = np.asarray(state, dtype=np.float64)
    nr, nc = state.shape
    sq = nr == nc
    s_outer = np.zeros((nr, nr))
    s2_outer = np.zeros((nr, nr))
    s_inner = np.zeros((nc, nc))
    s2_inner = np.zeros((nc, nc))
    s_square = np.zeros((nr, nc)) if sq else None
    s2_square = np.zeros((nr, nc)) if sq else None
    count = int(np.prod(noise_shape))
    block = 4096
    done = 0
    step = 0
    while done < samples:
        take = min(block, samples - done)
        z = source.normals_block(step, take, count) * np.sqrt(dt)
        for b in range(take):
            dw = z[b].reshape(noise_shape)
            dx = diffusion(0.0, state, dw)
            o = dx @ dx.T / dt
            i = dx.T @ dx / dt
            s_outer += o
            s2_outer += o * o
            s_inner += i
            s2_inner += i * i
            if sq:
                q = dx @ dx / dt
                s_square += q
                s2_square += q * q
        done += take
        step += 1
    n = float(samples)

    def moments(s, s2):
        mean = s / n
        var = np.maximum(s2 / n - mean * mean, 0.0)
        return mean, np.sqrt(var / n)

    outer, outer_se = moments(s_outer, s2_outer)
    inner, inner_se = moments(s_inner, s2_inner)
    if sq:
        square, square_se = moments(s_square, s2_square)
    else:
        square, square_se = None, None
    return QvEstimate(outer=outer, outer_se=outer_se, inner=inner, inner_se=inner_se,
                      square=square, square_se=square_se, samples=samples)
