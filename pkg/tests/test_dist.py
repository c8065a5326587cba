"""Exact distribution arithmetic against brute-force enumeration."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from asymtail.dist import (
    DistError,
    FiniteDist,
    RngSpec,
    bc,
    bs,
    convolve,
    delta,
    expect,
    from_pairs,
    iid_sum,
    sample,
    scale,
    shift,
    st,
    tail,
    weighted_bs_sum,
)
from asymtail.moments import AbsPower, AffineCombo, CoshMoment, Exponential, PowerPlus


def brute_weighted_sum(p, coeffs):
    """2^n enumeration of sum c_i BS_i, the slow reference."""
    base = bs(p)
    acc = {}
    for signs in itertools.product(range(2), repeat=len(coeffs)):
        v = sum(c * base.values[s] for c, s in zip(coeffs, signs))
        w = math.prod(base.masses[s] for s in signs)
        acc[round(v, 9)] = acc.get(round(v, 9), 0.0) + w
    return sorted(acc.items())


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.8])
@pytest.mark.parametrize("coeffs", [
    (1.0, 1.0),
    (1.0, 2.0, 0.5),
    (0.3, 0.7, 1.1, 1.9),
    (1.0,) * 10,
])
def test_weighted_bs_sum_matches_bruteforce(p, coeffs):
    d = weighted_bs_sum(p, coeffs)
    ref = brute_weighted_sum(p, coeffs)
    got = {round(v, 9): m for v, m in d.atoms()}
    assert len(got) == len(ref)
    for v, w in ref:
        assert got[v] == pytest.approx(w, rel=1e-12, abs=1e-15)


def test_bs_frozen_atoms():
    d = bs(0.2)
    assert d.values == pytest.approx([-0.5, 2.0])
    assert d.masses == pytest.approx([0.8, 0.2])
    assert d.mean() == pytest.approx(0.0, abs=1e-15)
    assert d.var() == pytest.approx(1.0, rel=1e-14)


def test_st_is_standardized_three_point():
    d = st(0.25)
    assert d.values == pytest.approx([-2.0, 0.0, 2.0])
    assert d.masses == pytest.approx([0.125, 0.75, 0.125])
    assert d.var() == pytest.approx(1.0, rel=1e-14)
    assert d.moment(4) == pytest.approx(1 / 0.25, rel=1e-14)  # kurtosis 1/p
    assert d.is_symmetric()


def test_bc_centered_bernoulli():
    d = bc(0.3)
    assert d.values == pytest.approx([-0.3, 0.7])
    assert d.masses == pytest.approx([0.7, 0.3])
    assert d.var() == pytest.approx(0.21, rel=1e-14)


def test_iid_sum_coin_flips():
    d = iid_sum(bs(0.5), 2)
    assert d.values == pytest.approx([-2.0, 0.0, 2.0])
    assert d.masses == pytest.approx([0.25, 0.5, 0.25])


def test_tail_at_top_atom():
    d = iid_sum(bs(0.3), 3)
    assert tail(d, d.max_value) == pytest.approx(0.3 ** 3, rel=1e-13)
    assert tail(d, d.max_value + 1.0) == 0.0
    assert tail(d, d.min_value - 1.0) == pytest.approx(1.0, abs=1e-12)


def test_convolve_of_mirrored_bs_is_scaled_st():
    # bs(p) + bs(1-p) has the symmetric three-point shape
    left = convolve(bs(0.2), bs(0.8))
    right = scale(st(0.32), math.sqrt(2.0))
    assert left.values == pytest.approx(right.values, rel=1e-12)
    assert left.masses == pytest.approx(right.masses, rel=1e-12)


def test_json_roundtrip_is_exact():
    d = weighted_bs_sum(0.17, [1.0, 0.6, 2.2])
    back = FiniteDist.from_json(d.to_json())
    assert np.array_equal(back.values, d.values)
    assert np.array_equal(back.masses, d.masses)


def test_from_pairs_merges_duplicate_atoms():
    d = from_pairs([(1.0, 0.25), (1.0, 0.25), (0.0, 0.5)])
    assert d.n_atoms == 2
    assert d.masses == pytest.approx([0.5, 0.5])


def test_invalid_masses_rejected():
    with pytest.raises(DistError):
        from_pairs([(0.0, 0.4), (1.0, 0.4)])  # sums to 0.8
    with pytest.raises(DistError):
        from_pairs([(0.0, 1.2), (1.0, -0.2)])


def test_delta_point_mass():
    d = delta(3.0)
    assert d.atoms() == [(3.0, 1.0)]
    assert d.mean() == 3.0
    assert d.var() == 0.0


def test_shift_and_scale_compose():
    d = bs(0.4)
    e = shift(scale(d, 2.0), 1.0)
    assert e.mean() == pytest.approx(1.0, abs=1e-14)
    assert e.var() == pytest.approx(4.0, rel=1e-13)


@given(p=hst.floats(0.01, 0.99), n=hst.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_iid_sum_mass_and_moments(p, n):
    d = iid_sum(bs(p), n)
    assert math.fsum(d.masses) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(d.values) > 0)
    assert d.mean() == pytest.approx(0.0, abs=1e-9)
    assert d.var() == pytest.approx(n, rel=1e-9)


@given(p=hst.floats(0.01, 0.99), x=hst.floats(-5, 5))
@settings(max_examples=60, deadline=None)
def test_tail_monotone_and_bounded(p, x):
    d = iid_sum(bs(p), 3)
    t1 = tail(d, x)
    t2 = tail(d, x + 0.25)
    assert 0.0 <= t2 <= t1 <= 1.0


@given(hst.lists(hst.tuples(hst.floats(-4, 4), hst.floats(0.01, 1.0)),
                 min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_from_pairs_normalizable(pairs):
    total = sum(w for _, w in pairs)
    d = from_pairs([(v, w / total) for v, w in pairs])
    assert math.fsum(d.masses) == pytest.approx(1.0, abs=1e-12)
    assert d.n_atoms <= len(pairs)


def test_expect_matches_moment_functions():
    d = weighted_bs_sum(0.3, [1.0, 1.5])
    f = PowerPlus(3.0, t=0.5)
    direct = sum(m * max(v - 0.5, 0.0) ** 3 for v, m in d.atoms())
    assert expect(d, f) == pytest.approx(direct, rel=1e-14)

    g = Exponential(0.7)
    direct = sum(m * math.exp(0.7 * v) for v, m in d.atoms())
    assert expect(d, g) == pytest.approx(direct, rel=1e-14)

    h = AffineCombo(terms=((2.0, f), (0.5, g)), a=1.0, b=-0.25)
    direct = 1.0 - 0.25 * d.mean() + 2.0 * expect(d, f) + 0.5 * expect(d, g)
    assert expect(d, h) == pytest.approx(direct, rel=1e-13)


def test_abs_power_and_cosh_agree_with_definitions():
    d = st(0.4)
    assert expect(d, AbsPower(3.0, t=0.1)) == pytest.approx(
        sum(m * abs(v - 0.1) ** 3 for v, m in d.atoms()), rel=1e-14)
    assert expect(d, CoshMoment(1.2)) == pytest.approx(
        sum(m * math.cosh(1.2 * v) for v, m in d.atoms()), rel=1e-14)


def test_power_plus_zero_exponent_is_indicator():
    f = PowerPlus(0.0, t=0.0)
    assert list(f(np.array([-1.0, 0.0, 2.0]))) == [0.0, 0.0, 1.0]


def test_sampling_is_deterministic_and_unbiased():
    d = weighted_bs_sum(0.3, [1.0, 1.0, 1.0])
    spec = RngSpec(seed=1234, stream=7)
    xs = sample(d, spec, 200_000)
    ys = sample(d, RngSpec(seed=1234, stream=7), 200_000)
    assert np.array_equal(xs, ys)
    assert abs(np.mean(xs)) <= 4e-3  # sd of the mean is ~0.0039
    zs = sample(d, RngSpec(seed=1234, stream=8), 1000)
    assert not np.array_equal(xs[:1000], zs)


def test_substream_derivation():
    spec = RngSpec(seed=9)
    a = spec.substream(0).generator().random(4)
    b = spec.substream(1).generator().random(4)
    assert not np.array_equal(a, b)
    again = spec.substream(0).generator().random(4)
    assert np.array_equal(a, again)
