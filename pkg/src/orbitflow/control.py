"""Controllability layer: the eigenvalue interaction field, its Jacobian and
sum-of-squares certificate, accessible-direction sampling, schedule
integration, and a reachability probe along commuting controls.

The central object is the vector field
    alpha(lam)_i = sum_{j != i} 1 / (lam_i + lam_j)
on descending positive spectra; the matrix controls realize directions
M V diag(alpha) V^T M^T at a base point P = M M^T.
"""

from dataclasses import dataclass

import numpy as np

from .matcore import as_matrix, require_spd, sqrtm_spd, sym_part
from .geom import MetricR, drift_J_R
from .processes import Path


def alpha(lam) -> np.ndarray:
    """Interaction field alpha(lam)_i = sum_{j != i} 1/(lam_i + lam_j).

    Summation runs over j ascending so that the cone-sum route
    (alpha_from_pairs) accumulates the identical floating-point values.
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += 1.0 / (lam[i] + lam[j])
        out[i] = acc
    return out


def alpha_from_pairs(lam) -> np.ndarray:
    """Cone-sum route: alpha(lam) = sum_{i<j} (e_i + e_j) / (lam_i + lam_j).

    Exhibits alpha as a strictly positive combination of the cone generators
    e_i + e_j; agrees with `alpha` exactly (same additions, same order).
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            w = 1.0 / (lam[i] + lam[j])
            out[i] += w
            out[j] += w
    return out


def alpha_jacobian(lam) -> np.ndarray:
    """Closed-form Jacobian of alpha.

    d_alpha[i, j] = -1/(lam_i + lam_j)^2 for i != j and
    d_alpha[i, i] = -sum_{j != i} 1/(lam_i + lam_j)^2.  Negative
    semidefinite always; singular for n = 2 (row sums vanish) and negative
    definite for n >= 3.
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if j != i:
                w = 1.0 / (lam[i] + lam[j]) ** 2
                d[i, j] = -w
                d[i, i] -= w
    return d


def alpha_sos(lam) -> list[np.ndarray]:
    """Sum-of-squares factors for the Jacobian: -d_alpha = sum_k M_k M_k^T.

    M_k is supported on rows k..n-1: row k holds 1/(lam_k + lam_j) in
    column j for j > k, and each row j > k holds the same value on its own
    diagonal position.  rank(M_k) = n - 1 - k (zero-based), so the ladder
    certifies negative definiteness for n >= 3 and the rank-one defect at
    n = 2.
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    mats = []
    for k in range(n - 1):
        mk = np.zeros((n, n))
        for j in range(k + 1, n):
            w = 1.0 / (lam[k] + lam[j])
            mk[k, j] = w
            mk[j, j] = w
        mats.append(mk)
    return mats


def alpha_sos_sum(lam) -> np.ndarray:
    """Assembled certificate sum_k M_k M_k^T (should equal -alpha_jacobian)."""
    total = None
    for mk in alpha_sos(lam):
        term = mk @ mk.T
        total = term if total is None else total + term
    return total


@dataclass(frozen=True)
class AccessibleSample:
    """A sampled accessible direction with its generating frame and spectrum."""

    direction: np.ndarray
    frame: np.ndarray
    spectrum: np.ndarray


def accessible_sample(p, count: int, seed: int = 0,
                      spread: float = 0.75) -> list[AccessibleSample]:
    """Seeded sample of accessible flow directions at the base point P.

    Each direction is M (V diag(alpha(mu)) V^T) M^T with M M^T = P, a Haar
    orthogonal V, and a log-normal positive spectrum mu; every draw is
    symmetric positive definite.  The construction commutes with the choice
    of factor M: replacing M by M Q re-parametrizes V only.
    """
    p = require_spd(p)
    n = p.shape[0]
    m = sqrtm_spd(p)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z = rng.standard_normal((n, n))
        q, r = np.linalg.qr(z)
        v = q * np.sign(np.diagonal(r))  # fix QR sign convention
        mu = np.sort(np.exp(spread * rng.standard_normal(n)))[::-1]
        c = (v * alpha(mu)) @ v.T
        out.append(AccessibleSample(direction=sym_part(m @ c @ m.T),
                                    frame=v, spectrum=mu))
    return out


@dataclass(frozen=True)
class ScheduleSegment:
    """One piecewise-constant control: hold the metric R for `duration`."""

    duration: float
    R: np.ndarray

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")
        object.__setattr__(self, "R", require_spd(self.R))


@dataclass(frozen=True)
class ControlSchedule:
    """A finite sequence of piecewise-constant metric controls."""

    segments: tuple

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))


def parse_schedule(text: str) -> ControlSchedule:
    """Parse the schedule file format.

    One segment per line: `duration; R = [r11, r12, ..., rnn]` with the n^2
    entries row-major, or `G = [...]` for a factor (the metric is then
    G^T G).  `#` starts a comment; blank lines are skipped.
    """
    segments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            dur_part, mat_part = line.split(";", 1)
            duration = float(dur_part.strip())
            name, payload = mat_part.split("=", 1)
            name = name.strip()
            if name not in ("R", "G"):
                raise ValueError(f"expected R or G, got {name!r}")
            payload = payload.strip()
            if not (payload.startswith("[") and payload.endswith("]")):
                raise ValueError("matrix entries must be bracketed")
            entries = [float(tok) for tok in payload[1:-1].split(",") if tok.strip()]
            n = int(round(np.sqrt(len(entries))))
            if n * n != len(entries):
                raise ValueError(f"{len(entries)} entries do not form a square matrix")
            mat = np.array(entries).reshape(n, n)
            r = mat.T @ mat if name == "G" else mat
            segments.append(ScheduleSegment(duration=duration, R=r))
        except ValueError as exc:
            raise ValueError(f"schedule line {lineno}: {exc}") from exc
    if not segments:
        raise ValueError("schedule contains no segments")
    return ControlSchedule(segments=tuple(segments))


def load_schedule(path) -> ControlSchedule:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_schedule(fh.read())


def _rk4_segment(p0: np.ndarray, f, duration: float, substeps: int) -> np.ndarray:
    h = duration / substeps
    p = p0
    states = np.empty((substeps,) + p0.shape)
    for m in range(substeps):
        k1 = f(p)
        k2 = f(sym_part(p + 0.5 * h * k1))
        k3 = f(sym_part(p + 0.5 * h * k2))
        k4 = f(sym_part(p + h * k3))
        p = sym_part(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        states[m] = p
    return states


def integrate_control(p0, schedule: ControlSchedule, substeps: int = 64) -> Path:
    """RK4 integration of dP/dt = drift under the scheduled metrics.

    Each segment holds its metric constant and is split into `substeps` RK4
    steps.  Every Loewner increment of the exact flow is positive definite,
    so consecutive saved states satisfy P(t2) - P(t1) > 0 up to integrator
    rounding.
    """
    p0 = require_spd(p0)
    times = [0.0]
    states = [p0]
    t = 0.0
    p = p0
    for seg in schedule.segments:
        metric = MetricR(seg.R)
        f = lambda q: drift_J_R(q, metric)
        seg_states = _rk4_segment(p, f, seg.duration, substeps)
        h = seg.duration / substeps
        for m in range(substeps):
            t += h
            times.append(t)
            states.append(seg_states[m])
        p = seg_states[-1]
    return Path(times=np.array(times), states=np.stack(states))


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of a reachability probe along commuting controls.

    log_gain is the achieved change of log-eigenvalues in the probe frame;
    target is the requested cone vector.  minkowski_residual measures the
    literal additive-target reading `endpoint = start + U diag(exp target) U^T`
    and is reported without being asserted.  loewner_min is the smallest
    eigenvalue of endpoint - start (should be nonnegative up to rounding).
    """

    endpoint: np.ndarray
    target: np.ndarray
    log_gain: np.ndarray
    log_gain_error: float
    frame_offdiag: float
    minkowski_residual: float
    loewner_min: float
    duration: float
    truncated: bool


def reach_probe(p0, u, cone_coeffs, t_budget: float | None = None,
                stiff: float = 1e8, substeps: int = 256) -> ProbeReport:
    """Drive P along commuting controls toward a cone direction.

    cone_coeffs[(i, j)] >= 0 weight the generators e_i + e_j of the target
    log-spectrum move sum c_ij (e_i + e_j) in the frame u.  Each active pair
    runs for unit duration with the control spectrum (1/(2 c_ij)) on the pair
    and `stiff` elsewhere, making the realized interaction field approximate
    c_ij (e_i + e_j).  All controls share the eigenframe u, so the flow stays
    diagonal in that frame and the eigenvalue logs integrate the interaction
    field directly.
    """
    p0 = require_spd(p0)
    n = p0.shape[0]
    u = as_matrix(u)
    target = np.zeros(n)
    legs = []
    for (i, j), c in sorted(cone_coeffs.items()):
        if c < 0:
            raise ValueError("cone coefficients must be nonnegative")
        if c == 0:
            continue
        if not 0 <= i < j < n:
            raise ValueError(f"bad pair ({i}, {j})")
        target[i] += c
        target[j] += c
        legs.append((i, j, c))

    total = float(len(legs))
    truncated = False
    if t_budget is not None and total > t_budget:
        truncated = True
    p = p0
    elapsed = 0.0
    for (i, j, c) in legs:
        leg_time = 1.0
        if t_budget is not None and elapsed + leg_time > t_budget:
            leg_time = max(t_budget - elapsed, 0.0)
        if leg_time <= 0.0:
            break
        mu = np.full(n, stiff)
        mu[i] = mu[j] = 1.0 / (2.0 * c)
        cmat = (u * alpha(mu)) @ u.T

        def fdir(q):
            m = sqrtm_spd(q)
            return sym_part(m @ cmat @ m.T)

        p = _rk4_segment(p, fdir, leg_time, substeps)[-1]
        elapsed += leg_time

    # express the endpoint in the probe frame to read off eigenvalue moves
    in_frame = u.T @ p @ u
    diag = np.diagonal(in_frame)
    off = in_frame - np.diag(diag)
    frame_offdiag = float(np.abs(off).max() / max(np.abs(diag).max(), 1e-300))
    lam0_frame = np.diagonal(u.T @ p0 @ u)
    log_gain = np.log(np.maximum(diag, 1e-300)) - np.log(np.maximum(lam0_frame, 1e-300))
    log_err = float(np.abs(log_gain - target).max()) if not truncated else float("nan")
    nominal = u @ np.diag(np.exp(target)) @ u.T
    minkowski = float(np.linalg.norm((p - p0) - nominal))
    loewner_min = float(np.linalg.eigvalsh(sym_part(p - p0))[0]) if legs else 0.0
    return ProbeReport(endpoint=p, target=target, log_gain=log_gain,
                       log_gain_error=log_err, frame_offdiag=frame_offdiag,
                       minkowski_residual=minkowski, loewner_min=loewner_min,
                       duration=elapsed, truncated=truncated)
