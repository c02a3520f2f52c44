"""Integration kernel checks: noise determinism, increment statistics, steppers,
guards, and the quadratic-variation oracle."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from orbitflow.matcore import so_basis
from orbitflow.sde import (NoiseSource, Path, QvEstimate, SdeProblem, TimeGrid,
                           gaussian_increment, integrate, qv_oracle, run_paths,
                           skew_increment, worker_count)


# ---------------------------------------------------------------------------
# grid and worker plumbing


def test_time_grid_basics():
    grid = TimeGrid(t0=0.0, dt=0.25, steps=4)
    assert grid.t_end == 1.0
    assert_allclose(grid.times(), [0.0, 0.25, 0.5, 0.75, 1.0], rtol=0, atol=0)
    assert TimeGrid.regular(1.0, 1e-3).steps == 1000
    with pytest.raises(ValueError):
        TimeGrid(t0=0.0, dt=0.0, steps=3)
    with pytest.raises(ValueError):
        TimeGrid(t0=0.0, dt=0.1, steps=0)


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("ORBITFLOW_THREADS", raising=False)
    assert worker_count() == 1
    assert worker_count(default=3) == 3
    monkeypatch.setenv("ORBITFLOW_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("ORBITFLOW_THREADS", "0")
    assert worker_count() == 1
    monkeypatch.setenv("ORBITFLOW_THREADS", "two")
    with pytest.raises(ValueError):
        worker_count()


# ---------------------------------------------------------------------------
# noise determinism


def test_noise_source_validation():
    with pytest.raises(ValueError):
        NoiseSource(-1)
    with pytest.raises(ValueError):
        NoiseSource(0, stream=-2)


def test_normals_are_pure_functions_of_indices():
    src = NoiseSource(seed=11, stream=2)
    a = src.normals(path=3, step=7, count=5)
    b = NoiseSource(seed=11, stream=2).normals(path=3, step=7, count=5)
    assert_array_equal(a, b)
    # distinct indices give distinct draws
    assert np.any(src.normals(4, 7, 5) != a)
    assert np.any(src.normals(3, 8, 5) != a)
    assert np.any(NoiseSource(12, 2).normals(3, 7, 5) != a)
    assert np.any(NoiseSource(11, 3).normals(3, 7, 5) != a)
    assert src.normals(0, 0, 0).shape == (0,)


def test_block_rows_match_per_path_draws():
    src = NoiseSource(seed=5)
    block = src.normals_block(step=2, n_paths=6, count=4)
    assert block.shape == (6, 4)
    for p in range(6):
        assert_array_equal(block[p], src.normals(p, 2, 4))
    # earlier paths never depend on how many paths are drawn
    wide = src.normals_block(step=2, n_paths=13, count=4)
    assert_array_equal(wide[:6], block)


def test_normal_marginals():
    # inverse-CDF mapping of counter words should give clean N(0, 1) stats
    z = NoiseSource(seed=0).normals_block(step=0, n_paths=200, count=500).ravel()
    n = z.size
    assert abs(z.mean()) <= 4.0 / np.sqrt(n)
    assert abs(z.var() - 1.0) <= 0.05
    assert abs(np.mean(z ** 4) - 3.0) <= 0.15


# ---------------------------------------------------------------------------
# increments


def test_gaussian_increment_statistics():
    src = NoiseSource(seed=3)
    dt = 0.01
    draws = np.array([gaussian_increment(src, p, 0, (2, 3), dt) for p in range(2000)])
    assert draws.shape == (2000, 2, 3)
    n = draws.size
    assert abs(draws.mean()) <= 4.0 * np.sqrt(dt / n)
    assert abs(draws.var() - dt) <= 0.05 * dt


@pytest.mark.parametrize("n", [2, 3, 5])
def test_skew_increment_shape_and_norm(n):
    src = NoiseSource(seed=4)
    dt = 0.05
    total = 0.0
    reps = 3000
    for p in range(reps):
        a = src.normals  # keep the call sites obvious
        m = skew_increment(src, p, 0, n, dt)
        assert_array_equal(m, -m.T)
        assert np.all(np.diag(m) == 0.0)
        total += np.trace(m @ m.T)
    want = n * (n - 1) / 2.0 * dt
    assert abs(total / reps - want) <= 0.05 * want


def test_skew_increment_matches_coefficient_expansion():
    # same draw expressed through the orthonormal skew basis, bit for bit
    src = NoiseSource(seed=9)
    n, dt = 4, 0.02
    basis = so_basis(n)
    m = skew_increment(src, path=5, step=3, n=n, dt=dt)
    g = src.normals(5, 3, basis.dim) * np.sqrt(dt)
    assert_allclose(m, basis.combine(g), rtol=0, atol=1e-16)


# ---------------------------------------------------------------------------
# steppers


def _doubling_problem(scheme="euler"):
    # drift-only image flow with closed form P_t = (1 + t / tr P0) P0
    from orbitflow.geom import drift_J_spectral
    p0 = np.diag([3.0, 1.0])
    return SdeProblem(x0=p0, drift=lambda t, x: drift_J_spectral(x), scheme=scheme)


def test_integrate_requires_source_when_noisy():
    prob = SdeProblem(x0=np.zeros((1,)), diffusion=lambda t, x, dw: dw,
                      noise_shape=(1,))
    with pytest.raises(ValueError):
        integrate(prob, TimeGrid(0.0, 0.1, 2))


def test_unknown_scheme_rejected():
    with pytest.raises(ValueError):
        SdeProblem(x0=np.zeros(1), scheme="rk4")


def test_constant_problem_stays_put():
    path = integrate(SdeProblem(x0=np.array([2.0, -1.0])), TimeGrid(0.0, 0.1, 5))
    assert_array_equal(path.states, np.tile([2.0, -1.0], (6, 1)))
    assert not path.stopped


def test_zero_noise_euler_matches_closed_form_at_first_order():
    grid = TimeGrid.regular(0.5, 1e-3)
    path = integrate(_doubling_problem("euler"), grid)
    want = (1.0 + 0.5 / 4.0) * np.diag([3.0, 1.0])
    assert np.abs(path.final - want).max() <= 5e-3  # O(dt) Euler bias


def test_zero_noise_heun_is_second_order():
    grid = TimeGrid.regular(0.5, 1e-3)
    path = integrate(_doubling_problem("heun"), grid)
    want = (1.0 + 0.5 / 4.0) * np.diag([3.0, 1.0])
    assert np.abs(path.final - want).max() <= 1e-5


def test_integrate_is_deterministic():
    prob = SdeProblem(x0=np.zeros((2, 2)), diffusion=lambda t, x, dw: dw,
                      noise_shape=(2, 2))
    grid = TimeGrid(0.0, 0.01, 50)
    a = integrate(prob, grid, NoiseSource(21), path_index=3)
    b = integrate(prob, grid, NoiseSource(21), path_index=3)
    assert_array_equal(a.states, b.states)
    c = integrate(prob, grid, NoiseSource(21), path_index=4)
    assert np.any(c.states != a.states)


def test_guard_stops_without_clamping():
    prob = SdeProblem(x0=np.array([0.0]), drift=lambda t, x: np.ones(1),
                      guard=lambda x: x[0] < 2.5, guard_name="ceiling")
    path = integrate(prob, TimeGrid(0.0, 1.0, 5))
    assert path.stopped and path.stopped_step == 2
    assert path.stop_reason == "ceiling"
    # last valid state is kept; the offending state is discarded, not clamped
    assert_allclose(path.states[:, 0], [0.0, 1.0, 2.0], rtol=0, atol=0)
    assert_allclose(path.times, [0.0, 1.0, 2.0], rtol=0, atol=0)


def test_post_step_runs_before_guard():
    prob = SdeProblem(x0=np.array([1.0]), drift=lambda t, x: x,
                      post_step=lambda x: np.minimum(x, 1.5),
                      guard=lambda x: x[0] <= 1.5)
    path = integrate(prob, TimeGrid(0.0, 1.0, 3))
    assert not path.stopped
    assert path.final[0] == 1.5


def test_run_paths_matches_single_calls_any_worker_count():
    prob = SdeProblem(x0=np.zeros((2,)), drift=lambda t, x: -x,
                      diffusion=lambda t, x, dw: dw, noise_shape=(2,))
    grid = TimeGrid(0.0, 0.05, 20)
    src = NoiseSource(33)
    serial = run_paths(prob, grid, src, n_paths=6, workers=1)
    threaded = run_paths(prob, grid, src, n_paths=6, workers=4)
    for p in range(6):
        assert serial[p].path_index == p
        assert_array_equal(serial[p].states, threaded[p].states)
        assert_array_equal(serial[p].states,
                           integrate(prob, grid, src, path_index=p).states)


def test_scalar_brownian_second_moment():
    # X_1 is exactly N(0, 1) for pure Brownian increments on any grid
    prob = SdeProblem(x0=np.zeros((1,)), diffusion=lambda t, x, dw: dw,
                      noise_shape=(1,))
    grid = TimeGrid(0.0, 0.125, 8)
    paths = run_paths(prob, grid, NoiseSource(12), n_paths=4000, workers=1)
    x1 = np.array([p.final[0] for p in paths])
    m2 = np.mean(x1 ** 2)
    se = np.std(x1 ** 2) / np.sqrt(x1.size)
    assert abs(m2 - 1.0) <= 3.0 * se


def test_heun_reads_noise_as_stratonovich():
    # dX = X dW: the Ito reading keeps E[X_t] = 1 while the Stratonovich
    # (Heun) reading gives E[X_t] = exp(t / 2)
    t_end, dt, n_paths = 0.5, 1.0 / 100.0, 1000
    grid = TimeGrid.regular(t_end, dt)

    def make(scheme):
        return SdeProblem(x0=np.ones(1), diffusion=lambda t, x, dw: x * dw,
                          noise_shape=(1,), scheme=scheme)

    src = NoiseSource(77)
    euler = np.array([p.final[0]
                      for p in run_paths(make("euler"), grid, src, n_paths, workers=1)])
    heun = np.array([p.final[0]
                     for p in run_paths(make("heun"), grid, src, n_paths, workers=1)])
    se_e = np.std(euler) / np.sqrt(n_paths)
    se_h = np.std(heun) / np.sqrt(n_paths)
    assert abs(euler.mean() - 1.0) <= 3.0 * se_e + 5.0 * dt
    assert abs(heun.mean() - np.exp(t_end / 2.0)) <= 3.0 * se_h + 5.0 * dt


# ---------------------------------------------------------------------------
# quadratic-variation oracle


def _skew_from_flat(g, n):
    a = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    a[iu] = g / np.sqrt(2.0)
    return a - a.T


def test_qv_oracle_square_wiener():
    n, dt, samples = 3, 1e-3, 6000
    est = qv_oracle(lambda t, x, dw: dw, np.zeros((n, n)), (n, n), dt, samples)
    assert est.samples == samples
    assert np.all(np.abs(est.outer - n * np.eye(n)) <= 3.0 * est.outer_se + 1e-12)
    assert np.all(np.abs(est.inner - n * np.eye(n)) <= 3.0 * est.inner_se + 1e-12)
    assert np.all(np.abs(est.square - np.eye(n)) <= 3.0 * est.square_se + 1e-12)


def test_qv_oracle_rectangular_wiener():
    n, k, dt, samples = 4, 2, 1e-3, 6000
    est = qv_oracle(lambda t, x, dw: dw, np.zeros((n, k)), (n, k), dt, samples)
    assert est.square is None and est.square_se is None
    assert np.all(np.abs(est.outer - k * np.eye(n)) <= 3.0 * est.outer_se + 1e-12)
    assert np.all(np.abs(est.inner - n * np.eye(k)) <= 3.0 * est.inner_se + 1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_qv_oracle_skew_increments(n):
    tri = n * (n - 1) // 2
    dt, samples = 1e-3, 6000
    est = qv_oracle(lambda t, x, dw: _skew_from_flat(dw, n), np.zeros((n, n)),
                    (tri,), dt, samples)
    half = (n - 1) / 2.0
    assert np.all(np.abs(est.outer - half * np.eye(n)) <= 3.0 * est.outer_se + 1e-12)
    assert np.all(np.abs(est.square + half * np.eye(n)) <= 3.0 * est.square_se + 1e-12)


def test_qv_oracle_se_scaling():
    # standard errors shrink like samples^(-1/2) over three decades
    sizes = [100, 1000, 10000]
    ses = []
    for s in sizes:
        est = qv_oracle(lambda t, x, dw: dw, np.zeros((1, 1)), (1, 1), 1e-2, s)
        ses.append(est.outer_se[0, 0])
    slope = np.polyfit(np.log(sizes), np.log(ses), 1)[0]
    assert abs(slope + 0.5) <= 0.1


def test_qv_oracle_reproducible():
    a = qv_oracle(lambda t, x, dw: dw, np.zeros((2, 2)), (2, 2), 1e-3, 500, seed=6)
    b = qv_oracle(lambda t, x, dw: dw, np.zeros((2, 2)), (2, 2), 1e-3, 500, seed=6)
    assert_array_equal(a.outer, b.outer)
    assert_array_equal(a.inner_se, b.inner_se)
