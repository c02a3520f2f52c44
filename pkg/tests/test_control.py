"""Controllability checks: interaction field routes, Jacobian certificates,
schedule parsing and integration, and the reachability probe."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from orbitflow.control import (AccessibleSample, ControlSchedule, ProbeReport,
                               ScheduleSegment, accessible_sample, alpha,
                               alpha_from_pairs, alpha_jacobian, alpha_sos,
                               alpha_sos_sum, integrate_control, load_schedule,
                               parse_schedule, reach_probe)


def _spectrum(rng, n, spread=0.8):
    return np.sort(np.exp(spread * rng.standard_normal(n)))[::-1]


# ---------------------------------------------------------------------------
# interaction field


def test_alpha_frozen_values():
    assert_allclose(alpha([1.0, 1.0]), [0.5, 0.5], rtol=0, atol=0)
    assert_allclose(alpha([2.0, 1.0]), [1.0 / 3, 1.0 / 3], rtol=0, atol=1e-16)
    assert_allclose(alpha([3.0, 2.0, 1.0]),
                    [1.0 / 5 + 1.0 / 4, 1.0 / 5 + 1.0 / 3, 1.0 / 4 + 1.0 / 3],
                    rtol=0, atol=1e-16)


@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_alpha_routes_agree_bit_for_bit(n):
    # the cone-sum route performs the same additions in the same order
    rng = np.random.default_rng(n)
    for _ in range(25):
        lam = _spectrum(rng, n)
        assert_array_equal(alpha(lam), alpha_from_pairs(lam))


def test_alpha_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    lam = _spectrum(rng, 4)
    jac = alpha_jacobian(lam)
    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        col = (alpha(lam + e) - alpha(lam - e)) / (2.0 * h)
        assert_allclose(jac[:, j], col, rtol=0, atol=1e-6)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_alpha_jacobian_negative_definite(n):
    rng = np.random.default_rng(20 + n)
    for _ in range(50):
        w = np.linalg.eigvalsh(alpha_jacobian(_spectrum(rng, n, spread=1.2)))
        assert w[-1] < 0.0


def test_alpha_jacobian_singular_for_two_levels():
    # row sums vanish at n = 2: one zero mode, one strictly negative
    rng = np.random.default_rng(2)
    for _ in range(20):
        w = np.linalg.eigvalsh(alpha_jacobian(_spectrum(rng, 2)))
        assert abs(w[-1]) <= 1e-13 * abs(w[0])
        assert w[0] < 0.0


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_sos_certificate_assembles_jacobian(n):
    rng = np.random.default_rng(40 + n)
    lam = _spectrum(rng, n)
    total = alpha_sos_sum(lam)
    assert_allclose(total, -alpha_jacobian(lam), rtol=0, atol=1e-12)
    ranks = [np.linalg.matrix_rank(mk) for mk in alpha_sos(lam)]
    assert ranks == list(range(n - 1, 0, -1))


# ---------------------------------------------------------------------------
# accessible directions


def test_accessible_sample_draws_are_spd_and_seeded():
    p = np.diag([3.0, 1.0])
    draws = accessible_sample(p, count=5, seed=12)
    again = accessible_sample(p, count=5, seed=12)
    assert len(draws) == 5
    for a, b in zip(draws, again):
        assert isinstance(a, AccessibleSample)
        assert_array_equal(a.direction, b.direction)
        assert np.linalg.eigvalsh(a.direction)[0] > 0.0
        assert_allclose(a.frame.T @ a.frame, np.eye(2), rtol=0, atol=1e-12)
        assert np.all(np.diff(a.spectrum) <= 0) and a.spectrum[-1] > 0


# ---------------------------------------------------------------------------
# schedules


def test_schedule_segment_validation():
    with pytest.raises(ValueError):
        ScheduleSegment(duration=0.0, R=np.eye(2))
    with pytest.raises(ValueError):
        ScheduleSegment(duration=1.0, R=np.diag([1.0, -1.0]))


def test_parse_schedule_r_and_g_forms():
    text = """
    # metric schedule, two segments
    0.5; R = [1, 0, 0, 2]

    1.5; G = [1, 1, 0, 1]  # factor form
    """
    sched = parse_schedule(text)
    assert len(sched.segments) == 2
    assert sched.total_duration == 2.0
    assert_allclose(sched.segments[0].R, np.diag([1.0, 2.0]), rtol=0, atol=0)
    g = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert_allclose(sched.segments[1].R, g.T @ g, rtol=0, atol=0)


@pytest.mark.parametrize("bad,frag", [
    ("1.0; R = [1, 0, 0]", "line 1"),          # not a square count
    ("1.0; X = [1]", "line 1"),                # unknown matrix name
    ("1.0; R = 1, 0, 0, 1", "line 1"),         # missing brackets
    ("oops; R = [1]", "line 1"),               # bad duration
    ("# nothing here", "no segments"),
    ("1.0; R = [1, 0, 0, -1]", "line 1"),      # not positive definite
])
def test_parse_schedule_errors_carry_line_numbers(bad, frag):
    with pytest.raises(ValueError, match=frag):
        parse_schedule(bad)


def test_parse_schedule_error_points_at_offending_line():
    text = "1.0; R = [1, 0, 0, 1]\n\n2.0; R = [1, 2]\n"
    with pytest.raises(ValueError, match="line 3"):
        parse_schedule(text)


def test_load_schedule_reads_files(tmp_path):
    f = tmp_path / "sched.txt"
    f.write_text("0.25; R = [2, 0, 0, 1]\n")
    sched = load_schedule(f)
    assert sched.segments[0].duration == 0.25


# ---------------------------------------------------------------------------
# schedule integration


def test_integrate_control_euclidean_trace_growth():
    sched = parse_schedule("0.5; R = [1, 0, 0, 1]")
    path = integrate_control(np.diag([3.0, 1.0]), sched, substeps=32)
    assert path.times.shape == (33,)
    assert_array_equal(path.states[0], np.diag([3.0, 1.0]))
    # Euclidean segment: trace grows at the exact rate n(n-1)/2 = 1
    assert abs(np.trace(path.final) - (4.0 + 0.5)) <= 1e-10


def test_integrate_control_increments_are_loewner_monotone():
    text = "0.4; R = [2, 0.3, 0.3, 1]\n0.6; G = [1, 0.5, 0, 1]\n"
    path = integrate_control(np.diag([2.0, 0.5]), parse_schedule(text), substeps=16)
    assert path.times.shape == (33,)
    worst = min(np.linalg.eigvalsh(b - a)[0]
                for a, b in zip(path.states, path.states[1:]))
    assert worst > -1e-10


def test_integrate_control_rejects_indefinite_start():
    with pytest.raises(ValueError):
        integrate_control(np.diag([1.0, -1.0]), parse_schedule("1; R = [1,0,0,1]"))


# ---------------------------------------------------------------------------
# reachability probe


def test_reach_probe_no_controls_is_identity():
    p0 = np.diag([2.0, 1.0])
    rep = reach_probe(p0, np.eye(2), {})
    assert_array_equal(rep.endpoint, p0)
    assert rep.duration == 0.0 and rep.loewner_min == 0.0
    assert not rep.truncated
    assert_array_equal(rep.target, np.zeros(2))


def test_reach_probe_diagonal_pair():
    p0 = np.diag([2.0, 1.0])
    rep = reach_probe(p0, np.eye(2), {(0, 1): 0.4})
    assert isinstance(rep, ProbeReport)
    assert_allclose(rep.target, [0.4, 0.4], rtol=0, atol=0)
    assert rep.log_gain_error <= 1e-2
    assert rep.frame_offdiag <= 1e-10
    assert rep.loewner_min > -1e-10
    assert rep.duration == 1.0


def test_reach_probe_two_legs_in_a_shared_frame():
    rng = np.random.default_rng(5)
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    u = q * np.sign(np.diag(r))
    p0 = u @ np.diag([3.0, 2.0, 1.0]) @ u.T
    rep = reach_probe(p0, u, {(0, 1): 0.3, (1, 2): 0.2})
    assert_allclose(rep.target, [0.3, 0.5, 0.2], rtol=0, atol=1e-15)
    assert rep.log_gain_error <= 1e-2
    assert rep.duration == 2.0


def test_reach_probe_budget_truncation():
    rep = reach_probe(np.diag([2.0, 1.0]), np.eye(2), {(0, 1): 0.4}, t_budget=0.5)
    assert rep.truncated
    assert rep.duration == 0.5
    assert np.isnan(rep.log_gain_error)


def test_reach_probe_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        reach_probe(np.eye(2), np.eye(2), {(0, 1): -1.0})
    with pytest.raises(ValueError):
        reach_probe(np.eye(2), np.eye(2), {(1, 0): 0.5})
