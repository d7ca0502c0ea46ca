"""Bessel scale, Sobolev norms, embedding and compactness surrogates."""

import numpy as np
import pytest

from latticeops import (
    LatticeSequence,
    LatticeWindow,
    bessel_apply,
    bessel_symbol,
    default_grid,
    embedding_check,
    inclusion_spectrum,
    parse_symbol,
    smoothing_spectrum,
    sobolev_norm,
)
from latticeops.quantization import assemble_matrix


def test_bessel_zero_is_identity():
    rng = np.random.default_rng(1)
    w = LatticeWindow(1, 8)
    u = LatticeSequence.random(w, rng)
    assert np.array_equal(bessel_apply(0.0, u).values, u.values)


def test_bessel_inverse_pair():
    rng = np.random.default_rng(2)
    w = LatticeWindow(2, 4)
    u = LatticeSequence.random(w, rng)
    back = bessel_apply(-1.7, bessel_apply(1.7, u))
    assert np.max(np.abs(back.values - u.values)) < 1e-12


def test_bessel_delta_example():
    w = LatticeWindow(2, 3)
    u = LatticeSequence.delta(w, (1, 1))
    out = bessel_apply(2.0, u)
    assert out[(1, 1)] == pytest.approx(3.0)


def test_bessel_semigroup():
    rng = np.random.default_rng(3)
    w = LatticeWindow(1, 16)
    u = LatticeSequence.random(w, rng)
    lhs = bessel_apply(1.5, bessel_apply(-0.5, u)).values
    assert np.max(np.abs(lhs - bessel_apply(1.0, u).values)) < 1e-12


def test_norm_s0_is_l2():
    rng = np.random.default_rng(4)
    w = LatticeWindow(1, 8)
    u = LatticeSequence.random(w, rng)
    assert sobolev_norm(0.0, u) == pytest.approx(u.norm())


def test_delta_has_unit_norm_every_s():
    w = LatticeWindow(1, 8)
    d = LatticeSequence.delta(w)
    for s in (-3.0, -0.5, 0.0, 2.0, 4.0):
        assert sobolev_norm(s, d) == pytest.approx(1.0)


def test_bessel_isometry():
    # J_t maps H^{s+t,2} onto H^{s,2} isometrically
    rng = np.random.default_rng(5)
    w = LatticeWindow(1, 16)
    for _ in range(10):
        u = LatticeSequence.random(w, rng)
        assert sobolev_norm(1.0, bessel_apply(2.0, u)) == pytest.approx(
            sobolev_norm(3.0, u), rel=1e-12)


def test_embedding_single_point_ratio():
    w = LatticeWindow(1, 8)
    rep = embedding_check(0.0, 2.0, [LatticeSequence.delta(w, (3,))])
    assert rep.max_ratio == pytest.approx((1 + 9.0) ** -1)
    rep0 = embedding_check(-1.0, 1.0, [LatticeSequence.delta(w)])
    assert rep0.max_ratio == pytest.approx(1.0)


def test_embedding_random_constant_one():
    rng = np.random.default_rng(6)
    w = LatticeWindow(1, 32)
    samples = [LatticeSequence.random(w, rng) for _ in range(30)]
    rep = embedding_check(0.0, 2.0, samples)
    assert rep.passed and rep.max_ratio <= 1.0 + 1e-12


def test_embedding_rejects_wrong_order():
    w = LatticeWindow(1, 4)
    with pytest.raises(ValueError):
        embedding_check(2.0, 0.0, [LatticeSequence.delta(w)])


def test_inclusion_spectrum_values():
    rep = inclusion_spectrum(0.0, 1.0, [4], n=1)
    sv = rep.singular_values[0]
    assert sv[0] == pytest.approx(1.0)
    expected = np.sort((1.0 + np.arange(-4, 5) ** 2.0) ** -0.5)[::-1]
    assert np.allclose(sv, expected)


def test_inclusion_tail_exponent():
    rep = inclusion_spectrum(0.0, 1.0, [256], n=1)
    assert rep.fit_exponent == pytest.approx(-1.0, abs=0.2)


def test_inclusion_rejects_s_ge_t():
    with pytest.raises(ValueError):
        inclusion_spectrum(1.0, 1.0, [8])


def test_smoothing_spectrum_values_and_growth():
    rep = smoothing_spectrum(2.0, [16, 32, 64], n=1)
    sv16 = rep.singular_values[0]
    assert sv16[0] == pytest.approx(1.0)
    assert sv16[-1] == pytest.approx(1.0 / (1 + 16 ** 2))
    counts = rep.count_below(0.1)
    assert counts[0] < counts[1] < counts[2]
    fracs = rep.fraction_below(0.1)
    assert fracs[0] < fracs[1] < fracs[2]
    with pytest.raises(ValueError):
        smoothing_spectrum(0.0, [8])


def test_operator_sobolev_boundedness_ratios():
    # ||T_sigma u||_{s-m,2} / ||u||_{s,2} stays bounded as N grows
    rng = np.random.default_rng(7)
    sigma = parse_symbol("2 + exp(i*twopi*x1)/(1+k1^2)", 1, order=0)
    worst = []
    for N in (8, 16, 32):
        w = LatticeWindow(1, N)
        A = assemble_matrix(sigma, w, default_grid(w))
        ratios = []
        for _ in range(20):
            u = LatticeSequence.random(w, rng)
            Tu = LatticeSequence(w, A.entries @ u.values)
            ratios.append(sobolev_norm(1.0, Tu) / sobolev_norm(1.0, u))
        worst.append(max(ratios))
    assert worst[1] < 1.5 * worst[0]
    assert worst[2] < 1.5 * worst[1]
