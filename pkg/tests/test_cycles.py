import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylcycles.cycles import (
    CrossingSequence,
    CyclicBidiagonal,
    assemble_system,
    d_prime_from_times,
    d_prime_product,
    extract_sequence,
    find_cycles,
    newton_refine,
    reflow_check,
    search_cycles,
    search_radius,
    transition_residual,
)
from cylcycles.errors import AmbiguousRegion, DivisionNearZero, NotApplicable, NotPeriodic, SingularJacobian
from cylcycles.experiments import absolute_value_field, harmonic_abs_field, max_crossings_field, persistence
from cylcycles.field import make_field, max_crossings, perturb, two_region
from cylcycles.flow import displacement, flow_with_events
from cylcycles.quadrature import integrate
from cylcycles.trigpoly import TWO_PI, TrigPoly, antiderivative

ZERO = TrigPoly()
ONE = TrigPoly(1.0)


# -- sequences --------------------------------------------------------------------

def test_sequence_invariants():
    with pytest.raises(AmbiguousRegion):
        CrossingSequence((1, 1, 1))
    with pytest.raises(AmbiguousRegion):
        CrossingSequence((1, 3))
    with pytest.raises(AmbiguousRegion):
        CrossingSequence(())


def test_canonical_form_and_equality():
    X = CrossingSequence((2, 2, 1, 1))
    assert X.canonical_form == (1, 1, 2, 2)
    assert X == CrossingSequence((1, 2, 2, 1)) and hash(X) == hash(CrossingSequence((2, 1, 1, 2)))
    assert X != CrossingSequence((1, 2, 1, 2))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=2, max_size=10).filter(lambda v: len(v) % 2 == 0), st.integers(0, 9))
def test_rotation_invariance(lines, r):
    lines = tuple(lines)
    if any(abs(lines[j] - lines[(j + 1) % len(lines)]) > 1 for j in range(len(lines))):
        return
    r %= len(lines)
    assert CrossingSequence(lines) == CrossingSequence(lines[r:] + lines[:r])


def test_leg_pieces():
    # down through 2 then 1, back up through 1 then 2
    X = CrossingSequence((2, 1, 1, 2))
    assert [X.leg_piece(j) for j in range(1, 5)] == [2, 1, 2, 3]
    # bounce above line 1: arrive from below, leave, come back
    X = CrossingSequence((1, 1))
    assert [X.leg_piece(j) for j in (1, 2)] == [2, 1]
    assert [CrossingSequence((1, 1), False).leg_piece(j) for j in (1, 2)] == [1, 2]
    # repeated crossings alternate sides after the last strict move
    X = CrossingSequence((1, 2, 2, 2, 2, 1))
    assert [X.leg_piece(j) for j in range(1, 7)] == [2, 3, 2, 3, 2, 1]


def test_extract_sequence_max_crossings():
    F = max_crossings_field(1, 2)
    times, X = extract_sequence(flow_with_events(F, 0.0, 4.5, TWO_PI))
    assert X == CrossingSequence((2, 2, 1, 1))
    assert len(times) == 4


def test_extract_sequence_errors():
    F = make_field([], [(-ONE, ONE)])
    with pytest.raises(NotApplicable):
        extract_sequence(flow_with_events(F, 0.0, 1.0, TWO_PI))
    with pytest.raises(NotPeriodic):
        extract_sequence(flow_with_events(F, 0.0, 3.0, TWO_PI))


# -- residuals and Jacobian ---------------------------------------------------------

def test_transition_residual_examples():
    F = two_region(ZERO, TrigPoly.sin(1), ZERO, TrigPoly.sin(1))
    X = CrossingSequence((1, 1))
    assert transition_residual(F, 1, X, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)
    assert transition_residual(F, 1, X, 1.3, 1.3) == 0.0


def test_transition_residual_against_direct_quadrature(harmonic_results):
    F, res = harmonic_results[5]
    for c in res.cycles:
        k = c.sequence.k
        for j in range(1, k + 1):
            s1, s2 = c.times[j - 1], (c.times[j] if j < k else c.times[0] + TWO_PI)
            a, b = F.piece(c.sequence.leg_piece(j))
            A = antiderivative(a)
            direct = integrate(lambda s: b(s) * math.exp(-A(s)), s1, s2)
            x1, x2 = F.line(c.sequence.lines[j - 1]), F.line(c.sequence.lines[j % k])
            q = x1 * math.exp(-A(s1)) + direct - x2 * math.exp(-A(s2))
            assert abs(q) <= 1e-9
            assert abs(transition_residual(F, j, c.sequence, s1, s2)) <= 1e-9


def test_k2_hand_jacobian():
    F = two_region(ZERO, ONE, ZERO, ONE)
    _, J = assemble_system(F, CrossingSequence((1, 1)), [1.0, 2.5])
    np.testing.assert_allclose(J.d, [1, 1])
    np.testing.assert_allclose(J.c, [1, 1])
    assert J.det() == 0.0
    with pytest.raises(SingularJacobian):
        newton_refine(F, CrossingSequence((1, 1)), [1.0, 2.5])


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6, 7, 8])
def test_cyclic_bidiagonal_det_and_solve(k):
    rng = np.random.default_rng(k)
    d, c = rng.uniform(0.5, 2, k) * rng.choice([-1, 1], k), rng.uniform(0.5, 2, k) * rng.choice([-1, 1], k)
    J = CyclicBidiagonal(d, c)
    dense = J.to_dense()
    assert J.det() == pytest.approx(np.linalg.det(dense), rel=1e-12, abs=1e-12)
    if k % 2 == 0:
        assert J.det() == pytest.approx(np.prod(d) - np.prod(c), rel=1e-12)
    r = rng.normal(size=k)
    np.testing.assert_allclose(J.solve(r), np.linalg.solve(dense, r), rtol=1e-10, atol=1e-12)


def test_fd_jacobian(harmonic_results):
    F, res = harmonic_results[5]
    c = res.cycles[0]
    t = np.array(c.times)
    _, J = assemble_system(F, c.sequence, t)
    dense = J.to_dense()
    h = 1e-6
    for i in range(len(t)):
        e = np.zeros(len(t))
        e[i] = h
        rp, _ = assemble_system(F, c.sequence, t + e)
        rm, _ = assemble_system(F, c.sequence, t - e)
        col = (rp - rm) / (2 * h)
        for j in range(len(t)):
            assert col[j] == pytest.approx(dense[j, i], rel=1e-6, abs=1e-9)


# -- Newton and certification ---------------------------------------------------------

def test_newton_fixed_point_and_recovery(harmonic_results):
    F, res = harmonic_results[4]
    for c in res.cycles:
        out = newton_refine(F, c.sequence, c.times)
        assert out.iterations <= 1 and out.converged
        np.testing.assert_allclose(out.times, c.times, atol=1e-12)
        rng = np.random.default_rng(0)
        start = np.array(c.times) + rng.uniform(-1e-4, 1e-4, len(c.times))
        out = newton_refine(F, c.sequence, start)
        assert out.converged and out.residual_norm <= 1e-11
        np.testing.assert_allclose(out.times, c.times, atol=1e-11)


def test_cycle_invariants(harmonic_results):
    for k, (F, res) in harmonic_results.items():
        seqs = set()
        for c in res.cycles:
            assert abs(displacement(F, c.x0)) <= 1e-10
            assert c.residual_norm <= 1e-9 and c.simple == (abs(c.d_prime) > 1e-8)
            assert c.sequence.k <= max_crossings(F)
            assert all(0 < t <= TWO_PI for t in c.times) and list(c.times) == sorted(c.times)
            closure, same = reflow_check(F, c)
            assert closure <= 1e-9 and same
            seqs.add(c.sequence)
        assert len(seqs) <= max_crossings(F)


def test_d_prime_matches_finite_difference_and_det(harmonic_results):
    for F, res in harmonic_results.values():
        for c in res.cycles:
            h = 1e-6
            fd = (displacement(F, c.x0 + h) - displacement(F, c.x0 - h)) / (2 * h)
            assert d_prime_product(F, c) == pytest.approx(fd, rel=1e-6)
            _, J = assemble_system(F, c.sequence, c.times)
            assert J.det() == pytest.approx(np.prod(J.c) * c.d_prime, rel=1e-8)


def test_d_prime_zero_on_periodic_family():
    F = max_crossings_field(1, 2)
    times, X = extract_sequence(flow_with_events(F, 0.0, 4.5, TWO_PI))
    assert abs(d_prime_from_times(F, X, times)) < 1e-12


def test_d_prime_division_near_zero():
    F = two_region(ZERO, TrigPoly.sin(1), ZERO, TrigPoly.sin(1))
    with pytest.raises(DivisionNearZero):
        d_prime_from_times(F, CrossingSequence((1, 1)), [0.5, math.pi])


def test_find_cycles_harmonic_k5(harmonic_results):
    F, res = harmonic_results[5]
    assert len(res.cycles) >= 3
    assert all(c.sequence == CrossingSequence((1, 1)) for c in res.cycles)


def test_find_cycles_positive_forcing():
    F = absolute_value_field(TrigPoly(0.1, [0.3], [-0.2]), ONE)
    assert find_cycles(F, grid=256) == []


def test_single_piece_equilibrium_reported_as_constant_sign():
    res = search_cycles(make_field([], [(-ONE, ONE)]), grid=128)
    assert res.cycles == []
    (c,) = res.constant_sign
    assert c.x_star == pytest.approx(1.0, abs=1e-12)


def test_continuum_flagged_for_periodic_family():
    res = search_cycles(max_crossings_field(1, 2), grid=256)
    assert res.cycles == [] and res.continua


def test_search_radius_covers_thresholds():
    F = max_crossings_field(1, 2)
    R = search_radius(F)
    assert R >= 3 * TWO_PI


def test_simple_cycles_persist_within_window():
    F = harmonic_abs_field(5, 1.0)
    cycles = find_cycles(F, grid=1024)
    assert len(cycles) >= 3
    for c in cycles:
        assert abs(c.d_prime) > 1e-6
        for lam in (1e-4, -1e-4):
            moved = persistence(F, c.x0, lam)
            assert moved is not None and abs(moved.x0 - c.x0) < 1e-2


def test_persistence_shift_follows_first_order_prediction(harmonic_results):
    # with |d'| ~ 1e-2 the shift is ~5e-2; check it against -lam * d_lambda / d'
    F, res = harmonic_results[5]
    h = 1e-6
    for c in res.cycles:
        d_lam = (displacement(perturb(F, h), c.x0) - displacement(perturb(F, -h), c.x0)) / (2 * h)
        for lam in (1e-4, -1e-4):
            predicted = -lam * d_lam / c.d_prime
            moved = persistence(F, c.x0, lam, window=4 * abs(predicted), grid=200)
            assert moved is not None
            assert moved.x0 - c.x0 == pytest.approx(predicted, rel=0.1)


def test_parallel_scan_matches_serial():
    F = absolute_value_field(TrigPoly.cos(3, 0.1 / TWO_PI), TrigPoly.sin(1))
    serial = search_cycles(F, -2.5, 0.5, 200)
    parallel = search_cycles(F, -2.5, 0.5, 200, workers=2)
    assert [c.x0 for c in serial.cycles] == [c.x0 for c in parallel.cycles]
