"""Geometry of the factorization map M -> M M^T on full-rank n x k matrices.

The fibers are the right orbits M O(k); the quotient is the cone of positive
(semi)definite matrices.  This module provides the vertical/horizontal
splitting, fiber orthonormal frames, second fundamental form and mean
curvature of the fibers, orbit log-volume, and the induced drift field on the
quotient in three independent forms:

* drift_J_spectral - closed spectral form,
* drift_J_gradient - finite-difference gradient of the orbit log-volume,
* drift_J_R        - the spectral form transported to a left-invariant
                     metric tr(R V W^T).

The three are cross-validated against each other in the test suite; none is
defined in terms of another beyond what the formulas below state.
"""

from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    as_matrix,
    eigh_desc,
    fd_gradient,
    require_skew,
    require_spd,
    solve_lyapunov,
    sqrtm_spd,
    sym_part,
    so_pairs,
    TAU_RANK,
)

# Scale applied to the pushed-forward log-volume gradient so that the gradient
# route reproduces the spectral drift.  The naive fiber-dimension/2 scaling is
# correct only for k = 2 fibers; the cross-validation tests pin 1/2 for all k.
KAPPA_DRIFT = 0.5


@dataclass(frozen=True)
class MetricR:
    """Left inner product <V, W> = tr(R V W^T) with R symmetric positive definite.

    The cached factor is the symmetric square root G (G^T G = G G^T = R), which
    makes the conjugation formulas below independent of factor choice.
    """

    R: np.ndarray
    factor: np.ndarray = field(init=False, repr=False)
    factor_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = require_spd(self.R)
        g = sqrtm_spd(r)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "factor", g)
        object.__setattr__(self, "factor_inv", np.linalg.inv(g))

    @classmethod
    def euclidean(cls, n: int) -> "MetricR":
        return cls(np.eye(n))

    def inner(self, v, w) -> float:
        return float(np.trace(self.R @ as_matrix(v) @ as_matrix(w).T))


def _metric_or_euclidean(metric, n: int) -> MetricR:
    return MetricR.euclidean(n) if metric is None else metric


def fiber_dim(k: int) -> int:
    """Dimension of the orthogonal-group fiber, k(k-1)/2."""
    return k * (k - 1) // 2


def vertical_project(m, w, metric: MetricR | None = None) -> np.ndarray:
    """Project a tangent vector onto the fiber tangent M * skew(k).

    The output is M K where the skew matrix K solves
        (M^T R M) K + K (M^T R M) = M^T R W - W^T R M,
    which is the normal equation for metric-orthogonal projection onto the
    orbit direction space.
    """
    m = as_matrix(m)
    w = as_matrix(w)
    r = _metric_or_euclidean(metric, m.shape[0]).R
    rm = r @ m
    gram = m.T @ rm
    rhs = rm.T @ w - w.T @ rm
    k = solve_lyapunov(gram, rhs)
    return m @ k


def horizontal_project(m, w, metric: MetricR | None = None) -> np.ndarray:
    """Metric-orthogonal complement of the vertical part; vertical + horizontal
    recovers the input exactly."""
    w = as_matrix(w)
    return w - vertical_project(m, w, metric)


def horizontal_from_sym_solve(m, w) -> np.ndarray:
    """Alternative horizontal projection for square full-rank M (Frobenius).

    Writes the tangent as W = E M, solves S P + P S = P E^T + E P for the
    symmetric S with P = M M^T, and returns S M.  Dual route to
    horizontal_project for cross-checks; symmetric-times-M is the Frobenius
    orthogonal complement of M times skew.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("symmetric-solve route needs square M")
    w = as_matrix(w)
    p = m @ m.T
    e = w @ np.linalg.inv(m)
    s = solve_lyapunov(p, p @ e.T + e @ p)
    return s @ m


def _onb_generators(m, metric: MetricR | None) -> list[np.ndarray]:
    """Skew generators A with {M A} an orthonormal fiber frame at M.

    Diagonalize M^T R M = V diag(l^2) V^T; the generators are
    V A~_ij V^T with A~_ij = (E_ij - E_ji) / sqrt(l_i^2 + l_j^2).
    """
    m = as_matrix(m)
    kdim = m.shape[1]
    r = _metric_or_euclidean(metric, m.shape[0]).R
    dec = eigh_desc(m.T @ r @ m)
    lam = dec.eigenvalues
    if lam[-1] <= TAU_RANK * lam[0]:
        raise ValueError("fiber frame needs full-rank M")
    v = dec.vectors
    gens = []
    for i, j in so_pairs(kdim):
        a = np.zeros((kdim, kdim))
        scale = 1.0 / np.sqrt(lam[i] + lam[j])
        a[i, j] = scale
        a[j, i] = -scale
        gens.append(v @ a @ v.T)
    return gens


def vertical_onb(m, metric: MetricR | None = None) -> list[np.ndarray]:
    """Orthonormal basis of the fiber tangent space at M under the metric."""
    m = as_matrix(m)
    return [m @ a for a in _onb_generators(m, metric)]


def sff_vertical(m, a, metric: MetricR | None = None) -> np.ndarray:
    """Second fundamental form of the fiber along the vertical field M A.

    For the curve t -> M exp(t A) the acceleration is M A^2; the form is its
    component normal to the fiber, i.e. the horizontal part of M A^2.
    """
    m = as_matrix(m)
    a = require_skew(a)
    return horizontal_project(m, m @ a @ a, metric)


def mean_curvature(m, metric: MetricR | None = None) -> np.ndarray:
    """Mean curvature vector of the fiber through M (average of sff over an
    orthonormal fiber frame)."""
    m = as_matrix(m)
    dim = fiber_dim(m.shape[1])
    if dim == 0:
        return np.zeros_like(m)
    total = np.zeros_like(m)
    for a in _onb_generators(m, metric):
        total += sff_vertical(m, a, metric)
    return total / dim


def metric_gram(p, check: bool = True) -> np.ndarray:
    """Gram matrix of the orbit tangent frame {M A_ij / sqrt(2)} given P = M^T M.

    Entries over pairs (i<j), (m<l):
        g = (d_jl P_im + d_im P_jl - d_jm P_il - d_il P_jm) / 2.
    Symmetric positive definite whenever P is.
    """
    p = require_spd(p) if check else sym_part(p)
    kdim = p.shape[0]
    pairs = so_pairs(kdim)
    npairs = len(pairs)
    g = np.empty((npairs, npairs))
    for a, (i, j) in enumerate(pairs):
        for b, (mm, ll) in enumerate(pairs):
            val = 0.0
            if j == ll:
                val += p[i, mm]
            if i == mm:
                val += p[j, ll]
            if j == mm:
                val -= p[i, ll]
            if i == ll:
                val -= p[j, mm]
            g[a, b] = 0.5 * val
    return g


def orbit_log_volume(m, metric: MetricR | None = None) -> float:
    """Log-volume of the orbit M O(k) under the metric, up to the constant
    group-volume factor: (1/2) log det of the orbit-frame Gram matrix."""
    m = as_matrix(m)
    if m.shape[1] == 1:
        # single-column orbits are points; volume factor is trivial
        return 0.0
    r = _metric_or_euclidean(metric, m.shape[0]).R
    g = metric_gram(m.T @ r @ m, check=False)
    sign, logdet = np.linalg.slogdet(g)
    if sign <= 0:
        raise ValueError("orbit frame is degenerate")
    return 0.5 * float(logdet)


def drift_J_spectral(p, rank_tol: float = TAU_RANK) -> np.ndarray:
    """Quotient drift field in closed spectral form.

    For P = U diag(lam) U^T with positive eigenvalues the drift is
        U diag( sum_{j != i} lam_i / (lam_i + lam_j) ) U^T.
    Trailing (near-)zero eigenvalues are held at zero, with the sums running
    over the positive part of the spectrum only.
    """
    dec = eigh_desc(p)
    lam = dec.eigenvalues
    n = lam.shape[0]
    if lam[0] <= 0.0:
        raise ValueError("drift needs a nonzero positive semidefinite matrix")
    if lam[-1] < -rank_tol * lam[0]:
        raise ValueError("negative eigenvalue outside rank tolerance")
    pos = lam > rank_tol * lam[0]
    d = np.zeros(n)
    idx = np.flatnonzero(pos)
    for i in idx:
        acc = 0.0
        for j in idx:
            if j != i:
                acc += lam[i] / (lam[i] + lam[j])
        d[i] = acc
    u = dec.vectors
    return sym_part((u * d) @ u.T)


def drift_J_gradient(m, metric: MetricR | None = None, h: float | None = None) -> np.ndarray:
    """Quotient drift via the log-volume gradient route (finite differences).

    Computes V = grad orbit_log_volume at the metric-flattened point G M and
    pushes it to the quotient: KAPPA_DRIFT * (V (GM)^T + (GM) V^T), pulled back
    through G^-1 on both sides.  With the Euclidean metric this is
    KAPPA_DRIFT * (V M^T + M V^T).
    """
    m = as_matrix(m)
    met = _metric_or_euclidean(metric, m.shape[0])
    mt = met.factor @ m

    def logvol(x):
        return orbit_log_volume(x, None)

    v = fd_gradient(logvol, mt, h=h)
    j = KAPPA_DRIFT * (v @ mt.T + mt @ v.T)
    gi = met.factor_inv
    return sym_part(gi @ j @ gi.T)


def drift_J_R(p, metric: MetricR) -> np.ndarray:
    """Quotient drift under the metric tr(R V W^T), R = G^T G.

    Conjugate to the Euclidean drift through the isometry M -> G M:
        G^-T  drift_J_spectral(G^T P G)  G^-1
    with the symmetric factor G cached in the metric (for which this agrees
    with the orientation G^-1 J(G P G^T) G^-T, and orthogonal-equivariance of
    the spectral form makes the value factor-independent).
    """
    p = as_matrix(p)
    g = metric.factor
    gi = metric.factor_inv
    inner = drift_J_spectral(g.T @ p @ g)
    return sym_part(gi.T @ inner @ gi)


def ito_correction_sum(m, metric: MetricR | None = None) -> np.ndarray:
    """Sum of xi xi^T over the fiber orthonormal frame at M.

    This is the quadratic-variation contribution of fiber-valued noise to the
    image process; it must reproduce drift_J_spectral(M M^T) exactly in the
    Euclidean metric.
    """
    m = as_matrix(m)
    out = np.zeros((m.shape[0], m.shape[0]))
    for xi in vertical_onb(m, metric):
        out += xi @ xi.T
    return out
