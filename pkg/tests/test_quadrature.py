import math

import numpy as np
import pytest

from thirdassay import quadrature
from thirdassay.exceptions import ConvergenceError, DomainError, InputError
from thirdassay.quadrature import Rectangle


def test_gauss_nodes_and_weights():
    nodes, weights = np.polynomial.legendre.leggauss(7)
    used = quadrature.GAUSS_WEIGHTS != 0.0
    np.testing.assert_allclose(quadrature.NODES[used], nodes, atol=1e-15)
    np.testing.assert_allclose(quadrature.GAUSS_WEIGHTS[used], weights, atol=1e-15)


def test_rule_weights_sum_to_interval_length():
    assert quadrature.KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert quadrature.GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)


def test_kronrod_degree_of_exactness():
    value, _, _ = quadrature.gauss_kronrod(lambda x: x ** 22, np.array(-1.0), np.array(1.0))
    assert value == pytest.approx(2.0 / 23.0, rel=1e-13)


def test_smooth_integral():
    result = quadrature.integrate_1d(np.exp, 0.0, 1.0, tol=1e-12)
    assert result.value == pytest.approx(math.e - 1.0, abs=1e-12)
    assert result.error_estimate <= 1e-12
    assert result.evaluations >= 15


def test_kink_with_and_without_breakpoint():
    with_point = quadrature.integrate_1d(np.abs, -1.0, 2.0, tol=1e-10, points=[0.0])
    without = quadrature.integrate_1d(np.abs, -1.0, 2.0, tol=1e-10)
    assert with_point.value == pytest.approx(2.5, abs=1e-12)
    assert without.value == pytest.approx(2.5, abs=1e-9)
    assert with_point.evaluations < without.evaluations


def test_jump_is_found_by_bisection():
    result = quadrature.integrate_1d(lambda x: (x < 0.3).astype(float), 0.0, 1.0, tol=1e-10)
    assert result.value == pytest.approx(0.3, abs=1e-8)


def test_degenerate_and_invalid_limits():
    assert quadrature.integrate_1d(np.exp, 1.0, 1.0).value == 0.0
    with pytest.raises(DomainError):
        quadrature.integrate_1d(np.exp, 1.0, 0.0)
    with pytest.raises(InputError):
        quadrature.integrate_1d(np.exp, 0.0, np.inf)
    with pytest.raises(DomainError):
        quadrature.integrate_1d(np.exp, 0.0, 1.0, tol=0.0)


def test_budget_exhaustion_carries_best_estimate():
    with pytest.raises(ConvergenceError) as info:
        quadrature.integrate_1d(lambda x: (x < 0.3).astype(float), 0.0, 1.0, tol=1e-12, max_evaluations=30)
    best = info.value.best
    assert isinstance(best, quadrature.IntegrationResult)
    assert best.value == pytest.approx(0.3, abs=0.1)


def test_iterated_2d_smooth():
    result = quadrature.integrate_2d(lambda x, ys: x * ys, Rectangle(0.0, 1.0, 0.0, 1.0), tol=1e-10)
    assert result.value == pytest.approx(0.25, abs=1e-10)


def test_iterated_2d_indicator():
    result = quadrature.integrate_2d(lambda x, ys: (ys < x).astype(float), Rectangle(0.0, 1.0, 0.0, 1.0), tol=1e-8)
    assert result.value == pytest.approx(0.5, abs=1e-7)


def test_batch_matches_closed_form():
    upper = np.array([0.5, 1.0, 2.0, 3.0])
    edges = np.stack([np.zeros_like(upper), upper], axis=1)
    result = quadrature.integrate_batch(lambda nodes, rows: nodes ** 2, edges, tol=1e-12)
    np.testing.assert_allclose(result.value, upper ** 3 / 3.0, rtol=1e-13)


def test_batch_rows_see_their_own_parameters():
    scales = np.array([1.0, 2.0, 4.0])
    edges = np.tile([-10.0, 0.0, 10.0], (3, 1))

    def gaussian(nodes, rows):
        s = scales[rows][:, None, None]
        return np.exp(-0.5 * (nodes / s) ** 2) / (s * math.sqrt(2 * math.pi))

    result = quadrature.integrate_batch(gaussian, edges, tol=1e-10)
    expected = [math.erf(10.0 / (s * math.sqrt(2))) for s in scales]
    np.testing.assert_allclose(result.value, expected, atol=1e-10)


def test_batch_gives_up_on_jump():
    edges = np.array([[0.0, 1.0]])
    with pytest.raises(ConvergenceError):
        quadrature.integrate_batch(lambda nodes, rows: (nodes < 1 / math.pi).astype(float), edges,
                                   tol=1e-12, max_sub=4)


def test_linear_integrand_is_exact():
    assert quadrature.integrate_1d(lambda x: x, 0.0, 1.0).value == pytest.approx(0.5, abs=1e-15)


def test_laplace_kink_at_midpoint():
    f = lambda x: np.exp(-math.sqrt(2.0) * np.abs(x)) / math.sqrt(2.0)
    result = quadrature.integrate_1d(f, -10.0, 10.0, tol=1e-11)
    assert result.value == pytest.approx(1.0 - math.exp(-math.sqrt(2.0) * 10.0), abs=1e-10)


@pytest.mark.parametrize('c', [-1.0, 2.0, 10.0])
def test_linearity_and_additivity(c):
    tol = 1e-10
    f = lambda x: np.sin(3 * x) + x ** 2
    whole = quadrature.integrate_1d(f, -1.0, 2.0, tol=tol).value
    scaled = quadrature.integrate_1d(lambda x: c * f(x), -1.0, 2.0, tol=tol).value
    parts = sum(quadrature.integrate_1d(f, a, b, tol=tol).value for a, b in [(-1.0, 0.37), (0.37, 2.0)])
    assert scaled == pytest.approx(c * whole, abs=2 * tol * abs(c))
    assert parts == pytest.approx(whole, abs=2 * tol)


def test_2d_constant():
    result = quadrature.integrate_2d(lambda x, ys: np.ones_like(ys), Rectangle(0.0, 1.0, 0.0, 1.0))
    assert result.value == pytest.approx(1.0, abs=1e-12)


def test_2d_normal_product():
    phi = lambda t: np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    result = quadrature.integrate_2d(lambda x, ys: phi(x) * phi(ys), Rectangle(-8.0, 8.0, -8.0, 8.0), tol=1e-9)
    assert result.value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize('jump', [0.003, 0.9985])
def test_jump_beyond_the_outermost_node_is_found(jump):
    # Both jumps sit between [0, 1]'s outermost Kronrod node and its end, so all 15 nodes agree
    result = quadrature.integrate_1d(lambda y: (y < jump).astype(float), 0.0, 1.0, tol=1e-10)
    assert result.value == pytest.approx(jump, abs=1e-9)
    assert result.evaluations > quadrature.PANEL_EVALUATIONS


def test_end_samples_do_not_charge_a_jump_on_a_breakpoint():
    result = quadrature.integrate_1d(lambda x: (x < 0.3).astype(float), 0.0, 1.0, tol=1e-12, points=[0.3])
    assert result.value == pytest.approx(0.3, abs=1e-15)
    assert result.evaluations == 2 * quadrature.PANEL_EVALUATIONS


def test_end_error_is_zero_for_straight_lines():
    ends = np.stack([np.full(3, 0.0), np.full(3, 0.0)], axis=-1)
    fv = np.zeros((3, 15))
    np.testing.assert_array_equal(quadrature._end_error(fv, ends, np.ones(3)), np.zeros(3))
    _, err, _ = quadrature.gauss_kronrod(lambda x: 2.0 * x + 1.0, np.array([0.0]), np.array([1.0]), check_ends=True)
    assert err[0] < 1e-13


def test_iterated_2d_with_breakpoints():
    region = Rectangle(0.0, 1.0, 0.0, 1.0)
    plain = quadrature.integrate_2d(lambda x, ys: (ys < 0.003).astype(float) * np.abs(x - 0.4), region, tol=1e-9)
    split = quadrature.integrate_2d(lambda x, ys: (ys < 0.003).astype(float) * np.abs(x - 0.4), region, tol=1e-9,
                                    x_points=[0.4], y_points=[0.003])
    expected = 0.003 * (0.4 ** 2 + 0.6 ** 2) / 2.0
    assert plain.value == pytest.approx(expected, abs=1e-8)
    assert split.value == pytest.approx(expected, abs=1e-12)
    assert split.evaluations < plain.evaluations
