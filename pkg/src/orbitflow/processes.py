"""Named stochastic processes and deterministic flows on matrix manifolds.

Single-path implementations built on the `sde` kernel.  Group-valued
diffusions integrate the right-invariant Stratonovich equation dX = X o dW
with the Heun scheme; quotient-valued processes are either pushforwards of a
group path or direct Ito schemes whose correction terms were fixed by the
quadratic-variation oracle (see the constants verification suite for the
adjudicated values).
"""

from dataclasses import dataclass

import numpy as np

from .matcore import LieBasis, as_matrix, eigh_desc, require_orthogonal, require_spd, \
    sl2_basis, so_basis, sqrtm_spd, sym_part
from .geom import MetricR, drift_J_R, drift_J_spectral, vertical_project
from .sde import NoiseSource, Path, SdeProblem, TimeGrid, integrate

# Re-exported name for eigenvalue trajectories; same layout as Path with the
# states holding eigenvalue vectors.
EigenPath = Path


@dataclass(frozen=True)
class ProcessConfig:
    """Shared simulation settings for the named processes.

    zero_noise replaces every increment with zeros, which exposes the
    deterministic drift skeleton of an Ito scheme (and freezes a pure
    Stratonovich transport).
    """

    t_end: float
    dt: float
    seed: int = 0
    stream: int = 0
    zero_noise: bool = False

    def grid(self) -> TimeGrid:
        return TimeGrid.regular(self.t_end, self.dt)

    def source(self) -> NoiseSource:
        if self.zero_noise:
            return _ZeroNoise(self.seed, self.stream)
        return NoiseSource(self.seed, self.stream)


class _ZeroNoise(NoiseSource):
    """Noise source that supplies zeros; used by the zero_noise diagnostics."""

    def normals(self, path, step, count):
        return np.zeros(count)

    def normals_block(self, step, n_paths, count):
        return np.zeros((n_paths, count))


def _orth_defect(q: np.ndarray) -> float:
    n = q.shape[0]
    return float(np.linalg.norm(q.T @ q - np.eye(n)))


def _newton_orth(q: np.ndarray) -> np.ndarray:
    # one Newton step toward the orthogonal polar factor: Q (3 I - Q^T Q) / 2
    return 1.5 * q - 0.5 * (q @ (q.T @ q))


def invariant_bm(basis: LieBasis, x0, cfg: ProcessConfig, guard=None,
                 guard_name: str = "group guard", post_step=None,
                 path_index: int = 0) -> Path:
    """Right-invariant Brownian motion dX = X o dW on a matrix group.

    dW = sum_a B_a dW^a over the given Lie-algebra basis with independent
    standard Wiener coefficients; Heun (Stratonovich) stepping.
    """
    x0 = as_matrix(x0)

    def diffusion(t, x, dw):
        return x @ basis.combine(dw)

    problem = SdeProblem(x0=x0, diffusion=diffusion, noise_shape=(basis.dim,),
                         scheme="heun", guard=guard, guard_name=guard_name,
                         post_step=post_step)
    return integrate(problem, cfg.grid(), cfg.source(), path_index)


def bm_orthogonal(n: int, cfg: ProcessConfig, guard_tol: float = 1e-2,
                  reproject: bool = False, path_index: int = 0) -> Path:
    """Brownian motion on O(n), started at the identity.

    The raw Heun step drifts off the group at fourth order in the increment;
    by default the drift is only guarded (stop, not clamp).  With
    reproject=True a Newton correction toward the orthogonal polar factor is
    applied each step.
    """
    guard = lambda q: _orth_defect(q) <= guard_tol
    post = _newton_orth if reproject else None
    return invariant_bm(so_basis(n), np.eye(n), cfg, guard=guard,
                        guard_name="orthogonality guard", post_step=post,
                        path_index=path_index)


def bm_stiefel(n: int, k: int, cfg: ProcessConfig, guard_tol: float = 1e-2,
               path_index: int = 0) -> Path:
    """Brownian motion on the Stiefel manifold of orthonormal k-frames.

    Pushforward of the O(n) path through column truncation; for k = n the
    path coincides with bm_orthogonal exactly.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    qp = bm_orthogonal(n, cfg, guard_tol=guard_tol, path_index=path_index)
    return Path(times=qp.times, states=qp.states[:, :, :k].copy(),
                path_index=qp.path_index, stopped_step=qp.stopped_step,
                stop_reason=qp.stop_reason)


def bm_grassmann(n: int, k: int, cfg: ProcessConfig, route: str = "pushforward",
                 guard_tol: float = 1e-2, path_index: int = 0) -> Path:
    """Brownian motion on the Grassmannian in projector coordinates.

    route="pushforward": map a reprojected O(n) path Q through
        P = Q I_kn Q^T  (I_kn = diag of k ones),
    which keeps P an exact projector up to the orthogonality of Q.

    route="ito": direct Euler-Maruyama on P,
        dP = Q (dA I_kn - I_kn dA) Q^T + (k/2 I - n/2 P) dt,
    with Q the eigenframe of the current P.  The drift constants come from
    the quadratic-variation oracle; they make tr P a conserved quantity in
    expectation, which the stated -2nP correction in circulation fails to do.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if route == "pushforward":
        qp = bm_orthogonal(n, cfg, guard_tol=guard_tol, reproject=True,
                           path_index=path_index)
        states = np.einsum("mij,mkj->mik", qp.states[:, :, :k], qp.states[:, :, :k])
        return Path(times=qp.times, states=states, path_index=qp.path_index,
                    stopped_step=qp.stopped_step, stop_reason=qp.stop_reason)
    if route != "ito":
        raise ValueError(f"unknown route {route!r}")

    ikn = np.zeros((n, n))
    ikn[np.arange(k), np.arange(k)] = 1.0
    tri = n * (n - 1) // 2
    iu = np.triu_indices(n, k=1)

    def diffusion(t, p, dw):
        a = np.zeros((n, n))
        a[iu] = dw / np.sqrt(2.0)
        a = a - a.T
        u = eigh_desc(sym_part(p)).vectors
        b = a @ ikn - ikn @ a
        return u @ b @ u.T

    def drift(t, p):
        return 0.5 * k * np.eye(n) - 0.5 * n * p

    def guard(p):
        return (np.linalg.norm(p @ p - p) <= guard_tol
                and abs(np.trace(p) - k) <= guard_tol)

    problem = SdeProblem(x0=ikn, drift=drift, diffusion=diffusion,
                         noise_shape=(tri,), scheme="euler", guard=guard,
                         guard_name="projector guard", post_step=sym_part)
    return integrate(problem, cfg.grid(), cfg.source(), path_index)


def flag_projection(q, dims) -> tuple:
    """Nested-subspace projectors of a flag from an orthogonal matrix.

    dims are strictly increasing subspace dimensions; component i is the
    projector onto the span of the first dims[i] columns of q.
    """
    q = require_orthogonal(q)
    dims = [int(d) for d in dims]
    if any(d2 <= d1 for d1, d2 in zip(dims, dims[1:])) or not dims:
        raise ValueError("dims must be strictly increasing and non-empty")
    if dims[-1] > q.shape[0]:
        raise ValueError("dims exceed the ambient dimension")
    return tuple(q[:, :d] @ q[:, :d].T for d in dims)


def sl2_to_halfplane(m: np.ndarray) -> tuple[float, float]:
    """Moebius action of a real 2x2 matrix on the base point i."""
    a, b = m[0]
    c, d = m[1]
    den = c * c + d * d
    return ((a * c + b * d) / den, (a * d - b * c) / den)


def halfplane_start(x: float, y: float) -> np.ndarray:
    """A determinant-one matrix sending i to x + i y (y > 0)."""
    if y <= 0:
        raise ValueError("need y > 0")
    s = np.sqrt(y)
    return np.array([[s, x / s], [0.0, 1.0 / s]])


def bm_poincare(cfg: ProcessConfig, z0: tuple[float, float] = (0.0, 1.0),
                det_tol: float = 1e-2, y_floor: float = 1e-8,
                path_index: int = 0) -> Path:
    """Hyperbolic Brownian motion on the upper half-plane.

    Simulates the invariant diffusion on the determinant-one group with the
    three-generator basis (boost, dilation, rotation) and projects through
    the Moebius action; the rotation generator spans the fiber over the base
    point.  States are (x, y) pairs.
    """
    m0 = halfplane_start(*z0)

    def guard(m):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1.0) > det_tol:
            return False
        return det / (m[1, 0] ** 2 + m[1, 1] ** 2) > y_floor

    mp = invariant_bm(sl2_basis(), m0, cfg, guard=guard,
                      guard_name="half-plane guard", path_index=path_index)
    states = np.empty((mp.states.shape[0], 2))
    for i, m in enumerate(mp.states):
        states[i] = sl2_to_halfplane(m)
    return Path(times=mp.times, states=states, path_index=mp.path_index,
                stopped_step=mp.stopped_step, stop_reason=mp.stop_reason)


def bm_cartan_hadamard(n: int, cfg: ProcessConfig, g0=None,
                       det_floor: float = 1e-12,
                       path_index: int = 0) -> tuple[Path, Path]:
    """Brownian motion on the full matrix group and its SPD image G G^T.

    Ito form dG = G dW + G/2 dt (the drift is the Stratonovich correction
    dW dW = I dt contracted once); the image satisfies
    dP = G (dW + dW^T) G^T + (n + 1) P dt, so E[tr P_t] grows like
    exp((n + 1) t).
    """
    g0 = np.eye(n) if g0 is None else as_matrix(g0)

    def drift(t, g):
        return 0.5 * g

    def diffusion(t, g, dw):
        return g @ dw

    def guard(g):
        return np.all(np.isfinite(g)) and abs(np.linalg.det(g)) > det_floor

    problem = SdeProblem(x0=g0, drift=drift, diffusion=diffusion,
                         noise_shape=(n, n), scheme="euler", guard=guard,
                         guard_name="invertibility guard")
    gp = integrate(problem, cfg.grid(), cfg.source(), path_index)
    spd = np.einsum("mij,mkj->mik", gp.states, gp.states)
    return gp, Path(times=gp.times, states=spd, path_index=gp.path_index,
                    stopped_step=gp.stopped_step, stop_reason=gp.stop_reason)


def rect_factor(p, k: int) -> np.ndarray:
    """An n x k factor M with M M^T = P for P of rank at most k."""
    dec = eigh_desc(p)
    lam = dec.eigenvalues
    if np.any(lam[:k] < 0) or (lam.shape[0] > k and abs(lam[k:]).max() > 1e-8 * max(lam[0], 1.0)):
        raise ValueError("matrix has no factor of the requested width")
    return dec.vectors[:, :k] * np.sqrt(np.maximum(lam[:k], 0.0))


def wishart(n: int, k: int, cfg: ProcessConfig, p0=None, w0=None,
            path_index: int = 0) -> tuple[Path, Path]:
    """Wishart process: P = W W^T along an n x k matrix Wiener path.

    The Wiener path is exact (cumulative increments), so P is a Gram matrix
    at every grid point and stays positive semidefinite by construction.
    Ito form: dP = dW W^T + W dW^T + k I dt, the additive constant being the
    column count k (the square-dimension constant in circulation is only
    correct for k = n).
    """
    if w0 is not None:
        w0 = as_matrix(w0)
        if w0.shape != (n, k):
            raise ValueError("w0 must be n x k")
    elif p0 is not None:
        w0 = rect_factor(require_spd(p0) if k == n else sym_part(p0), k)
    else:
        w0 = np.eye(n, k)

    def diffusion(t, w, dw):
        return dw

    problem = SdeProblem(x0=w0, diffusion=diffusion, noise_shape=(n, k),
                         scheme="euler")
    wp = integrate(problem, cfg.grid(), cfg.source(), path_index)
    spd = np.einsum("mij,mkj->mik", wp.states, wp.states)
    return wp, Path(times=wp.times, states=spd, path_index=wp.path_index,
                    stopped_step=wp.stopped_step, stop_reason=wp.stop_reason)


def bm_bures_wasserstein(p0, cfg: ProcessConfig, k: int | None = None,
                         eig_floor: float = 1e-8, path_index: int = 0) -> Path:
    """Brownian motion on the SPD cone for the quotient metric.

    Euler-Maruyama on
        dP = dW M^T + M dW^T + (k I - J(P)) dt,   M M^T = P,
    where J is the spectral quotient drift; subtracting J removes the drift
    that orbit-valued noise would otherwise push onto the image.  Paths stop
    when the spectrum hits the rank guard.
    """
    p0 = require_spd(p0)
    n = p0.shape[0]
    kk = n if k is None else k

    def drift(t, p):
        return kk * np.eye(n) - drift_J_spectral(p)

    def diffusion(t, p, dw):
        m = sqrtm_spd(sym_part(p)) if kk == n else rect_factor(sym_part(p), kk)
        return dw @ m.T + m @ dw.T

    def guard(p):
        w = np.linalg.eigvalsh(sym_part(p))
        return w[0] > eig_floor * max(w[-1], 0.0) and w[-1] > 0.0

    problem = SdeProblem(x0=p0, drift=drift, diffusion=diffusion,
                         noise_shape=(n, kk), scheme="euler", guard=guard,
                         guard_name="rank guard", post_step=sym_part)
    return integrate(problem, cfg.grid(), cfg.source(), path_index)


def eigen_drift(kind: str, lam: np.ndarray, n: int) -> np.ndarray:
    """Drift of the eigenvalue diffusions.

    kind="wishart": d_i = n + sum_{j != i} (l_i + l_j) / (l_i - l_j)
    kind="bw":      d_i = n + sum_{j != i} l_j (3 l_i + l_j) / (l_i^2 - l_j^2)

    The two differ exactly by the spectral quotient drift
    sum_{j != i} l_i / (l_i + l_j).
    """
    m = lam.shape[0]
    out = np.full(m, float(n))
    for i in range(m):
        for j in range(m):
            if j == i:
                continue
            if kind == "wishart":
                out[i] += (lam[i] + lam[j]) / (lam[i] - lam[j])
            elif kind == "bw":
                out[i] += lam[j] * (3.0 * lam[i] + lam[j]) / (lam[i] ** 2 - lam[j] ** 2)
            else:
                raise ValueError(f"unknown kind {kind!r}")
    return out


def eigen_sde(kind: str, lam0, n: int, k: int, cfg: ProcessConfig,
              lam_floor: float = 1e-12, gap_floor: float = 1e-10,
              path_index: int = 0) -> EigenPath:
    """Autonomous eigenvalue diffusion d l_i = 2 sqrt(l_i) d b_i + drift dt.

    lam0 holds the k nonzero eigenvalues in strictly descending order; the
    additive drift constant is n.  Paths stop (never clamp) when positivity
    or the strict ordering is about to fail, since the interaction terms are
    singular at collisions.
    """
    lam0 = np.asarray(lam0, dtype=np.float64)
    if lam0.shape != (k,):
        raise ValueError("lam0 must hold k eigenvalues")
    if np.any(np.diff(lam0) >= 0) and k > 1:
        raise ValueError("lam0 must be strictly descending")

    def drift(t, lam):
        return eigen_drift(kind, lam, n)

    def diffusion(t, lam, dw):
        return 2.0 * np.sqrt(np.maximum(lam, 0.0)) * dw

    def guard(lam):
        if not np.all(np.isfinite(lam)) or lam[-1] <= lam_floor:
            return False
        return k == 1 or np.all(-np.diff(lam) > gap_floor)

    problem = SdeProblem(x0=lam0, drift=drift, diffusion=diffusion,
                         noise_shape=(k,), scheme="euler", guard=guard,
                         guard_name="spectrum guard")
    return integrate(problem, cfg.grid(), cfg.source(), path_index)


def vertical_bm(m0, cfg: ProcessConfig, metric: MetricR | None = None,
                rank_tol: float = 1e-8, path_index: int = 0) -> tuple[Path, Path]:
    """Fiber-valued Brownian motion dX = Pr_vertical(dW) and its image X X^T.

    The image has no martingale part (vertical pushforwards cancel in
    X K X^T + X K^T X^T), so it tracks the deterministic quotient flow up to
    an O(sqrt(dt)) discretization halo.
    """
    m0 = as_matrix(m0)
    gi = None if metric is None else metric.factor_inv

    def diffusion(t, x, dw):
        w = dw if gi is None else gi @ dw
        return vertical_project(x, w, metric)

    def guard(x):
        sv = np.linalg.svd(x, compute_uv=False)
        return sv[-1] > rank_tol * sv[0]

    problem = SdeProblem(x0=m0, diffusion=diffusion, noise_shape=m0.shape,
                         scheme="euler", guard=guard, guard_name="rank guard")
    xp = integrate(problem, cfg.grid(), cfg.source(), path_index)
    image = np.einsum("mij,mkj->mik", xp.states, xp.states)
    return xp, Path(times=xp.times, states=image, path_index=xp.path_index,
                    stopped_step=xp.stopped_step, stop_reason=xp.stop_reason)


def sphere_vertical_bm(n: int, cfg: ProcessConfig, x0=None,
                       norm_floor: float = 1e-8,
                       path_index: int = 0) -> tuple[Path, np.ndarray]:
    """Sphere-tangent noise on a radial line: dX = (I - x x^T / |x|^2) dW.

    The squared radius S = |X|^2 then grows at the deterministic rate n - 1
    (the full quadratic variation of the projected increments, with no 1/2:
    the radial martingale part is annihilated by the projector).  Returns the
    path and the S trajectory.
    """
    if x0 is None:
        x0 = np.zeros(n)
        x0[0] = 1.0
    else:
        x0 = np.asarray(x0, dtype=np.float64)

    def diffusion(t, x, dw):
        s = float(x @ x)
        return dw - x * (float(x @ dw) / s)

    def guard(x):
        return float(x @ x) > norm_floor ** 2

    problem = SdeProblem(x0=x0, diffusion=diffusion, noise_shape=(n,),
                         scheme="euler", guard=guard, guard_name="origin guard")
    xp = integrate(problem, cfg.grid(), cfg.source(), path_index)
    s = np.einsum("mi,mi->m", xp.states, xp.states)
    return xp, s


def mcf_ode(p0, t_end: float, steps: int, metric: MetricR | None = None) -> Path:
    """Classical RK4 integration of the quotient flow dP/dt = J(P).

    With a metric argument the transported drift drift_J_R is used.  The
    trace grows exactly linearly with slope n(n-1)/2 in the Euclidean case,
    which RK4 reproduces to rounding.
    """
    p0 = require_spd(p0)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    f = (lambda p: drift_J_spectral(p)) if metric is None else (lambda p: drift_J_R(p, metric))
    h = t_end / steps
    states = np.empty((steps + 1,) + p0.shape)
    states[0] = p0
    p = p0.copy()
    for m in range(steps):
        k1 = f(p)
        k2 = f(sym_part(p + 0.5 * h * k1))
        k3 = f(sym_part(p + 0.5 * h * k2))
        k4 = f(sym_part(p + h * k3))
        p = sym_part(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        states[m + 1] = p
    times = np.linspace(0.0, t_end, steps + 1)
    return Path(times=times, states=states)
