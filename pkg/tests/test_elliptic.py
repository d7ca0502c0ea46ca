"""Parametrix construction, decay reports, ADN estimates, solving."""

import numpy as np
import pytest

from latticeops import (
    LatticeSequence,
    LatticeWindow,
    adn_verify,
    apply,
    bessel_symbol,
    default_grid,
    parametrix,
    parse_symbol,
    residual_decay_report,
    solve,
    sobolev_norm,
)
from latticeops.elliptic import residual_order_sequence
from latticeops.errors import EllipticityError
from latticeops.quantization import assemble_matrix, extract_symbol, interior_margin
from latticeops.quantization import OperatorMatrix
from latticeops.symbols import GridSymbol

PERTURBED = "2 + exp(i*twopi*x1)/(1+k1^2)"
# slower-decaying member of the same family; its residual orders stay
# far enough above the double-precision floor to be measurable at J = 3
PERTURBED_SLOW = "2 + exp(i*twopi*x1)/(1+k1^2)^(1/4)"


def test_parametrix_multiplier_is_exact():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    par = parametrix(bessel_symbol(2), 2.0, 1, w, g)
    assert np.max(np.abs(par.left_residual.values)) < 1e-12
    assert np.max(np.abs(par.right_residual.values)) < 1e-12
    assert par.regularized_points == []
    # tau0 = 1/sigma on the diagonal
    K = w.points[:, 0].astype(float)
    assert np.max(np.abs(par.tau.values - (1.0 / (1 + K ** 2))[:, None])) < 1e-12


def test_parametrix_constant_two():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    par = parametrix(parse_symbol("2", 1, order=0), 0.0, 2, w, g)
    assert np.max(np.abs(par.tau.values - 0.5)) < 1e-12
    assert np.max(np.abs(par.left_residual.values)) < 1e-12


def test_parametrix_refuses_non_elliptic():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    with pytest.raises(EllipticityError) as exc:
        parametrix(parse_symbol("sin(twopi*x1)", 1, order=0), 0.0, 1, w, g)
    assert exc.value.report is not None and not exc.value.report.elliptic


def test_parametrix_rejects_zero_steps():
    w = LatticeWindow(1, 16)
    with pytest.raises(ValueError):
        parametrix(parse_symbol("2", 1, order=0), 0.0, 0, w, default_grid(w))


def test_parametrix_matrix_residual_agreement():
    # assemble(left_residual) agrees with B A - I on interior rows
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    sigma = parse_symbol(PERTURBED, 1, order=0)
    par = parametrix(sigma, 0.0, 2, w, g)
    defect = par.matrix.entries @ par.sigma_matrix.entries - np.eye(w.size)
    back = assemble_matrix(par.left_residual, w, g).entries
    mask = w.interior_mask(par.left_residual.interior_margin)
    assert np.max(np.abs((back - defect)[mask])) < 1e-8


def test_residual_order_drops_per_step():
    w = LatticeWindow(1, 32)
    g = default_grid(w)
    sigma = parse_symbol(PERTURBED_SLOW, 1, order=0)
    orders = residual_order_sequence(sigma, 0.0, w, g, J_max=3)
    drops = [a - b for a, b in zip(orders, orders[1:])]
    assert all(d >= 0.8 for d in drops), (orders, drops)
    # regression guard from the residual order invariant
    for J, o in enumerate(orders, start=1):
        assert o <= -J + 0.5


def test_decay_report_zero_residual():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    rho = GridSymbol(w, g, np.zeros((w.size, g.size), dtype=complex),
                     order=None, interior_margin=interior_margin(w))
    rep = residual_decay_report(rho, 3)
    assert all(max(rep.shell_sups[p], default=0.0) == 0.0 for p in rep.powers)
    assert rep.schwartz_like


def test_decay_report_superpolynomial():
    w = LatticeWindow(1, 32)
    g = default_grid(w)
    K = np.abs(w.points[:, 0].astype(float))
    vals = np.repeat((2.0 ** -K)[:, None], g.size, axis=1).astype(complex)
    rho = GridSymbol(w, g, vals, order=None, interior_margin=1)
    rep = residual_decay_report(rho, 6)
    assert rep.schwartz_like


def test_decay_report_parametrix_residual():
    w = LatticeWindow(1, 32)
    g = default_grid(w)
    par = parametrix(parse_symbol(PERTURBED, 1, order=0), 0.0, 3, w, g)
    rep = residual_decay_report(par.left_residual, 3)
    assert rep.schwartz_like


def test_adn_delta_ratio_is_two():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    d = LatticeSequence.delta(w)
    for m in (1.0, 2.0):
        Td = apply(bessel_symbol(m), d, g)
        ratio = (Td.norm() + d.norm()) / sobolev_norm(m, d)
        assert ratio == pytest.approx(2.0, abs=1e-10)


def test_adn_bessel2_ratios_in_range():
    w = LatticeWindow(1, 32)
    rep = adn_verify(bessel_symbol(2), 2.0, w, default_grid(w), samples=100)
    assert 1.0 < rep.C1 <= rep.C2 <= 2.0 + 1e-12
    assert all(1.0 < r <= 2.0 + 1e-12 for r in rep.ratios)


def test_adn_stability_for_perturbed_family():
    w = LatticeWindow(1, 32)
    sigma = parse_symbol(PERTURBED, 1, order=0)
    rep = adn_verify(sigma, 0.0, w, default_grid(w), samples=50)
    assert rep.C1 > 0
    assert rep.rerun_N == 64
    assert abs(rep.rerun_C1 - rep.C1) <= 0.25 * rep.C1
    assert abs(rep.rerun_C2 - rep.C2) <= 0.25 * rep.C2


def test_adn_refuses_non_elliptic():
    w = LatticeWindow(1, 16)
    with pytest.raises(EllipticityError):
        adn_verify(parse_symbol("sin(twopi*x1)", 1, order=0), 0.0,
                   w, default_grid(w), samples=3)


def test_solve_multiplier_delta():
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    f = LatticeSequence.delta(w)
    res = solve(bessel_symbol(2), 2.0, f, w, g, tol=1e-10)
    assert res.solution[(0,)] == pytest.approx(1.0, abs=1e-9)
    assert res.residual_interior <= 1e-10


def test_solve_constant_two():
    rng = np.random.default_rng(8)
    w = LatticeWindow(1, 16)
    g = default_grid(w)
    f = LatticeSequence.random(w, rng)
    res = solve(parse_symbol("2", 1, order=0), 0.0, f, w, g, tol=1e-12)
    assert np.max(np.abs(res.solution.values - f.values / 2)) < 1e-10


def test_solve_matches_dense_direct():
    rng = np.random.default_rng(9)
    w = LatticeWindow(1, 32)
    g = default_grid(w)
    sigma = parse_symbol(PERTURBED, 1, order=0)
    f = LatticeSequence.random(w, rng)
    res = solve(sigma, 0.0, f, w, g, tol=1e-8)
    assert res.residual_interior <= 1e-8
    direct = np.linalg.solve(assemble_matrix(sigma, w, g).entries, f.values)
    assert np.max(np.abs(res.solution.values - direct)) < 1e-6
    report = res.report_dict()
    assert set(report) == {"residual_interior", "residual_boundary",
                           "iterations", "seed", "fallback_used"}
