"""Interval calculus tests: exact rational endpoints, closed forms, lattice sums."""

import math
from fractions import Fraction

import numpy as np
import pytest

from pellipt import ranges


# ---------------------------------------------------------------------------
# p_elliptic_interval


def test_p_elliptic_full_range_at_mu_one():
    iv = ranges.p_elliptic_interval(1)
    assert iv.q_lo == 1 and iv.q_hi == math.inf
    assert iv.clipped_lo and iv.clipped_hi
    assert not iv.lo_closed and not iv.hi_closed


def test_p_elliptic_scalar_value():
    iv = ranges.p_elliptic_interval(1 / math.sqrt(2))
    assert float(iv.lo_inv) == pytest.approx((1 - 1 / math.sqrt(2)) / 2, abs=1e-15)
    assert float(iv.hi_inv) == pytest.approx((1 + 1 / math.sqrt(2)) / 2, abs=1e-15)
    assert iv.contains(2) and iv.contains(4)
    assert not iv.contains(100.0)


def test_p_elliptic_degenerate_and_sentinel():
    point = ranges.p_elliptic_interval(0)
    assert point.degenerate and point.contains(2) and not point.contains(2.1)
    full = ranges.p_elliptic_interval(math.inf)
    assert full.q_hi == math.inf and full.clipped_lo and full.clipped_hi


# ---------------------------------------------------------------------------
# theorem intervals


def test_extrapolation_closed_forms():
    iv = ranges.extrapolation_interval(2, 3)
    assert (iv.q_lo, iv.q_hi) == (Fraction(6, 5), Fraction(6))
    assert iv.lo_closed and iv.hi_closed
    iv = ranges.extrapolation_interval(6, 3)
    assert (iv.q_lo, iv.q_hi) == (Fraction(18, 17), Fraction(18))
    iv = ranges.extrapolation_interval(2, 4)
    assert (iv.q_lo, iv.q_hi) == (Fraction(4, 3), Fraction(4))


def test_extrapolation_rejects_low_dimension():
    with pytest.raises(ValueError):
        ranges.extrapolation_interval(2, 2)


def test_extrapolation_shift_flag():
    assert not ranges.extrapolation_interval(3, 3).shifted
    assert ranges.extrapolation_interval(3, 3, homogeneous=False).shifted


def test_contraction_closed_forms():
    assert ranges.contraction_interval(2).degenerate
    iv = ranges.contraction_interval(4)
    assert (iv.q_lo, iv.q_hi) == (Fraction(4, 3), Fraction(4))
    a, b = ranges.contraction_interval(4), ranges.contraction_interval(Fraction(4, 3))
    assert (a.lo_inv, a.hi_inv) == (b.lo_inv, b.hi_inv)


def test_generic_closed_forms():
    iv = ranges.generic_interval(1, 1, 3)
    assert iv.clipped_lo and iv.clipped_hi and iv.q_hi == math.inf
    iv = ranges.generic_interval(1, 2, 3)
    assert (iv.lo_inv, iv.hi_inv) == (Fraction(1, 12), Fraction(11, 12))
    assert not iv.lo_closed and not iv.hi_closed
    tiny = ranges.generic_interval(Fraction(1, 10 ** 9), 1, 3)
    assert tiny.hi_inv - tiny.lo_inv == pytest.approx(2 / 3, abs=1e-8)
    with pytest.raises(ValueError):
        ranges.generic_interval(2, 1, 3)
    with pytest.raises(ValueError):
        ranges.generic_interval(0, 1, 3)


def test_symmetry_and_inclusion_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = Fraction(int(rng.integers(101, 999)), 100)
        d = int(rng.integers(3, 9))
        ex = ranges.extrapolation_interval(p, d)
        co = ranges.contraction_interval(p)
        assert ex.is_symmetric() and co.is_symmetric()
        if not co.degenerate:
            assert co.lo_inv + co.hi_inv == 1
        assert co.is_subset_of(ex)


def test_extrapolation_monotone_in_eccentricity():
    prev = ranges.extrapolation_interval(2, 3)
    for p in (Fraction(5, 2), 3, 4, 8, 100):
        cur = ranges.extrapolation_interval(p, 3)
        assert prev.is_subset_of(cur)
        prev = cur


# ---------------------------------------------------------------------------
# constants


def test_offdiag_constant_values():
    assert ranges.offdiag_constant(1, 1, 0, 0) == 2.0
    assert ranges.offdiag_constant(1, 2, 0, 0) == 6.0


def test_offdiag_constant_monotone_in_psi():
    omega = 0.3
    vals = [ranges.offdiag_constant(1.0, 1.5, omega, psi)
            for psi in np.linspace(0, math.pi / 2 - omega - 1e-3, 20)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        ranges.offdiag_constant(1, 1, 0.8, math.pi / 2 - 0.8)


def test_rotated_lower_bound_values():
    assert ranges.rotated_lower_bound(1.0, 0.5, 0.0) == pytest.approx(1.0)
    val = ranges.rotated_lower_bound(1.0, math.pi / 4, math.pi / 8)
    assert val == pytest.approx(math.cos(3 * math.pi / 8) / math.cos(math.pi / 4), abs=1e-12)
    vals = [ranges.rotated_lower_bound(1.0, 0.4, psi)
            for psi in np.linspace(0, math.pi / 2 - 0.4 - 1e-3, 20)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_pq_exponent_values():
    assert ranges.pq_exponent(3, 3, 5) == 0
    assert ranges.pq_exponent(2, 6, 3) == Fraction(-1, 2)
    with pytest.raises(ValueError):
        ranges.pq_exponent(4, 2, 3)


def test_nash_theta_values():
    assert ranges.nash_theta(2, 3) == 0
    assert ranges.nash_theta(Fraction(3, 2), 3) == Fraction(1, 3)
    # defining equation holds identically
    for p in (Fraction(3, 2), Fraction(5, 4), Fraction(9, 5)):
        for d in (3, 4, 5):
            th = ranges.nash_theta(p, d)
            assert (1 - th) / p + th / ranges.sobolev_conjugate(d) == Fraction(1, 2)


# ---------------------------------------------------------------------------
# od_sum_bound


def test_od_sum_matches_direct_summation_1d():
    # parameters chosen so g(r) = exp(-r^2) and the prefactor is 1
    C, theta, q, z = 0.25, 1.0, 2.0, 1.0
    got = ranges.od_sum_bound(C, theta, q, 1, s=1.0, z_mod=z, truncation=20)
    want = sum(math.exp(-max(abs(k) - 1.0, 0.0) ** 2) for k in range(-20, 21))
    assert got == pytest.approx(want, abs=1e-12)


def test_od_sum_truncation_stable():
    a = ranges.od_sum_bound(2.0, 0.5, 2.0, 2, s=1.0, z_mod=1.0, truncation=40)
    b = ranges.od_sum_bound(2.0, 0.5, 2.0, 2, s=1.0, z_mod=1.0, truncation=80)
    assert abs(a - b) <= 1e-12 * abs(b)


def test_od_sum_z_independent_at_q2():
    vals = [ranges.od_sum_bound(2.0, 0.7, 2.0, 3, s=math.sqrt(z), z_mod=z, truncation=40)
            for z in (0.1, 1.0, 10.0)]
    assert max(vals) - min(vals) <= 1e-10 * max(vals)


def test_od_sum_rejects_divergent():
    with pytest.raises(ValueError):
        ranges.od_sum_bound(1.0, 0.0, 2.0, 1, s=1.0, z_mod=1.0)
    with pytest.raises(ValueError):
        # truncation far too small for a slow-decaying profile
        ranges.od_sum_bound(50.0, 0.01, 2.0, 1, s=0.1, z_mod=1.0, truncation=2)


# ---------------------------------------------------------------------------
# QInterval mechanics


def test_interval_membership_and_subset_logic():
    closed = ranges.contraction_interval(4)       # [4/3, 4] in q
    assert closed.contains(4) and closed.contains(Fraction(4, 3))
    assert not closed.contains(4.2)
    opened = ranges.generic_interval(1, 2, 3)
    assert not opened.contains_inv(opened.lo_inv)
    assert closed.is_subset_of(ranges.extrapolation_interval(4, 3))
    assert not ranges.extrapolation_interval(4, 3).is_subset_of(closed)


def test_interval_display():
    assert str(ranges.extrapolation_interval(2, 3)) == "q in [6/5, 6]"
    assert str(ranges.generic_interval(1, 1, 3)) == "q in (1, inf)"
    assert str(ranges.contraction_interval(2)) == "q = 2"
