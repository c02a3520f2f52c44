"""Dense matrix kernels: validated constructors, spectral ops, Lyapunov solves,
finite-difference gradients, and the Lie-algebra bases used by the geometry layer.

Everything operates on plain float64 ndarrays; the role-specific types
(symmetric, skew, SPD, orthogonal) are enforced by the require_* validators
rather than wrapper classes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Shared tolerances. SPD and rank checks are relative to the largest
# eigenvalue/singular value; the others are absolute on unit-scale residuals.
TAU_SPD = 1e-10
TAU_ORTH = 1e-8
TAU_EIG = 1e-10
TAU_LYAP = 1e-10
TAU_RANK = 1e-8


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D float64 array without copying when possible."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def sym_part(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    return 0.5 * (a + a.T)


def skew_part(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    return 0.5 * (a - a.T)


def require_symmetric(a, tol: float = 1e-12) -> np.ndarray:
    """Validate symmetry to `tol` (relative) and return the symmetrized array."""
    a = as_matrix(a)
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric")
    return sym_part(a)


def require_skew(a, tol: float = 1e-12) -> np.ndarray:
    a = as_matrix(a)
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a + a.T).max() > tol * scale:
        raise ValueError("matrix is not skew-symmetric")
    return skew_part(a)


def require_spd(a, tol: float = TAU_SPD) -> np.ndarray:
    """Validate symmetric positive definiteness: every eigenvalue must exceed
    tol * lambda_max."""
    s = require_symmetric(a, tol=1e-10)
    w = np.linalg.eigvalsh(s)
    lam_max = float(w[-1])
    if lam_max <= 0.0 or float(w[0]) <= tol * lam_max:
        raise ValueError(f"matrix is not positive definite (eigenvalues {w})")
    return s


def require_orthogonal(q, tol: float = TAU_ORTH) -> np.ndarray:
    q = as_matrix(q)
    n = q.shape[0]
    if q.shape[1] != n:
        raise ValueError("orthogonal check needs a square matrix")
    if np.abs(q.T @ q - np.eye(n)).max() > tol:
        raise ValueError("matrix is not orthogonal")
    return q


def require_full_rank(m, tol: float = TAU_RANK) -> np.ndarray:
    """Validate that all singular values exceed tol * sigma_max."""
    m = as_matrix(m)
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] <= 0.0 or sv[-1] <= tol * sv[0]:
        raise ValueError("matrix is rank deficient")
    return m


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: np.ndarray   # shape (n,), descending
    vectors: np.ndarray       # shape (n, n), columns match eigenvalues

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.T


def eigh_desc(s) -> Spectrum:
    """Symmetric eigendecomposition with descending eigenvalue order."""
    s = require_symmetric(s, tol=1e-10)
    w, v = np.linalg.eigh(s)
    return Spectrum(eigenvalues=w[::-1].copy(), vectors=v[:, ::-1].copy())


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring via scipy)."""
    return np.asarray(scipy.linalg.expm(as_matrix(a)), dtype=np.float64)


def sqrtm_spd(p) -> np.ndarray:
    """Symmetric square root of an SPD matrix via eigendecomposition.

    The output is symmetrized in storage so that callers may rely on
    G == G.T exactly.
    """
    dec = eigh_desc(p)
    if dec.eigenvalues[-1] <= 0.0:
        raise ValueError("square root needs a positive definite matrix")
    return sym_part((dec.vectors * np.sqrt(dec.eigenvalues)) @ dec.vectors.T)


def solve_lyapunov(p, b) -> np.ndarray:
    """Solve P X + X P = B for X, with P symmetric positive definite.

    Parameters
    ----------
    p : (k, k) array, SPD
    b : (k, k) array

    Returns
    -------
    x : (k, k) array
        In the eigenbasis of P the solution is elementwise:
        x_ij = b_ij / (lam_i + lam_j).  If `b` is exactly symmetric (or
        exactly skew) the output is canonicalized to the same storage class,
        which the true solution belongs to.

    Raises
    ------
    ValueError
        If P is not SPD; lam_i + lam_j may then vanish and the pencil is
        singular.
    """
    b = as_matrix(b)
    dec = eigh_desc(p)
    lam = dec.eigenvalues
    if lam[-1] <= TAU_SPD * max(lam[0], 0.0) or lam[-1] <= 0.0:
        raise ValueError("Lyapunov solve needs a positive definite coefficient")
    u = dec.vectors
    bt = u.T @ b @ u
    x = u @ (bt / np.add.outer(lam, lam)) @ u.T
    # the exact solution inherits b's symmetry class; canonicalize storage
    if np.array_equal(b, b.T):
        x = sym_part(x)
    elif np.array_equal(b, -b.T):
        x = skew_part(x)
    return x


def fd_gradient(f, m, h: float | None = None) -> np.ndarray:
    """Entrywise central-difference gradient of a scalar field on matrices.

    Parameters
    ----------
    f : callable
        Maps an (n, k) array to a finite float.
    m : (n, k) array
        Point at which to differentiate.
    h : float, optional
        Step size; defaults to 1e-5 * (1 + max|m|).

    Returns
    -------
    g : (n, k) array with g[a, b] = (f(m + h E_ab) - f(m - h E_ab)) / (2 h).
    """
    m = as_matrix(m)
    if h is None:
        h = 1e-5 * (1.0 + float(np.abs(m).max()))
    g = np.empty_like(m)
    pert = m.copy()
    for a in range(m.shape[0]):
        for b in range(m.shape[1]):
            orig = pert[a, b]
            pert[a, b] = orig + h
            fp = f(pert)
            pert[a, b] = orig - h
            fm = f(pert)
            pert[a, b] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise ValueError(f"non-finite field value at entry ({a}, {b})")
            g[a, b] = (fp - fm) / (2.0 * h)
    return g


@dataclass(frozen=True)
class LieBasis:
    """An ordered basis of a matrix Lie algebra."""

    name: str
    mats: tuple

    @property
    def dim(self) -> int:
        return len(self.mats)

    def combine(self, coeffs) -> np.ndarray:
        """Linear combination sum_a coeffs[a] * mats[a]."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        out = np.zeros_like(self.mats[0])
        for c, mat in zip(coeffs, self.mats):
            out += c * mat
        return out


def so_pairs(n: int) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def so_basis(n: int) -> LieBasis:
    """Frobenius-orthonormal basis of the skew matrices: (E_ij - E_ji)/sqrt(2)."""
    mats = []
    for i, j in so_pairs(n):
        a = np.zeros((n, n))
        a[i, j] = 1.0 / np.sqrt(2.0)
        a[j, i] = -1.0 / np.sqrt(2.0)
        mats.append(a)
    return LieBasis(name=f"so({n})", mats=tuple(mats))


def sl2_basis() -> LieBasis:
    """Traceless 2x2 basis (symmetric off-diag, diagonal, rotation generator).

    The three matrices are orthonormal for the inner product in which the
    hyperbolic-plane projection of the group diffusion is standard Brownian
    motion; the rotation generator spans the stabilizer of the base point.
    """
    x = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
    y = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]])
    z = 0.5 * np.array([[0.0, -1.0], [1.0, 0.0]])
    return LieBasis(name="sl2", mats=(x, y, z))


def gl_basis(n: int) -> LieBasis:
    """Standard entrywise basis E_ab of all n x n matrices."""
    mats = []
    for a in range(n):
        for b in range(n):
            e = np.zeros((n, n))
            e[a, b] = 1.0
            mats.append(e)
    return LieBasis(name=f"gl({n})", mats=tuple(mats))
