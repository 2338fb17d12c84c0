import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from radsolve.quadrature import (
    CumulativeInterpolant,
    DivergenceVerdict,
    GridFunction,
    RadialGrid,
    classify_tail,
    cumulative_gauss2,
    cumulative_integral,
    power_weighted_cumulative,
    probe_divergence,
)


def test_grid_basics():
    g = RadialGrid(2.0, 10)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 2.0
    assert len(g) == 11
    assert g.spacing == pytest.approx(0.2)


def test_grid_rejects_small_m():
    with pytest.raises(ValueError, match="M >= 8"):
        RadialGrid(1.0, 4)


def test_grid_function_checks_shape_and_finiteness():
    g = RadialGrid(1.0, 8)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(5))
    with pytest.raises(ValueError):
        GridFunction(g, np.full(9, np.inf))


def test_cumulative_zero_integrand():
    g = RadialGrid(3.0, 16)
    out = cumulative_integral(GridFunction(g, np.zeros(17)))
    assert np.all(out.values == 0.0)


def test_cumulative_constant_is_exact():
    g = RadialGrid(2.0, 64)
    out = cumulative_integral(GridFunction(g, np.ones(65)))
    assert out.values[-1] == pytest.approx(2.0, abs=1e-14)


def test_cumulative_affine_is_exact():
    g = RadialGrid(1.0, 1000)
    out = cumulative_integral(GridFunction(g, g.nodes))
    assert out.values[-1] == pytest.approx(0.5, abs=1e-14)
    assert out.values[0] == 0.0


def test_cumulative_second_order_on_cubic():
    # integral of r^3 over [0,1] is 1/4; halving the spacing cuts the error ~4x
    errs = []
    for M in (100, 200, 400):
        g = RadialGrid(1.0, M)
        out = cumulative_integral(GridFunction(g, g.nodes ** 3))
        errs.append(abs(out.values[-1] - 0.25))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


@given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=9, max_size=60))
def test_cumulative_monotone_for_nonnegative_integrands(vals):
    g = RadialGrid(1.0, len(vals) - 1)
    out = cumulative_integral(GridFunction(g, np.array(vals)))
    assert np.all(np.diff(out.values) >= 0.0)


def test_power_weighted_matches_monomial_exactly():
    # integrating s^2 * 1 must give t^3/3 to rounding on any grid
    x = np.linspace(0.0, 2.0, 33)
    out = power_weighted_cumulative(x, np.ones_like(x), 2)
    assert np.allclose(out, x ** 3 / 3.0, rtol=1e-14, atol=1e-14)


def test_power_weighted_linear_smooth_part_exact():
    x = np.linspace(0.0, 1.0, 17)
    out = power_weighted_cumulative(x, 2.0 * x, 3)  # integral of 2 s^4
    assert np.allclose(out, 2.0 * x ** 5 / 5.0, rtol=1e-13, atol=1e-15)


def test_power_weighted_power_zero_is_trapezoid():
    x = np.linspace(0.0, 1.0, 9)
    v = np.cos(x)
    from radsolve.quadrature import cumulative_trapezoid
    assert np.array_equal(power_weighted_cumulative(x, v, 0), cumulative_trapezoid(x, v))


def test_gauss2_is_fourth_order():
    x = np.linspace(0.0, 1.0, 101)
    out = cumulative_gauss2(x, lambda s: np.exp(s))
    assert abs(out[-1] - (np.e - 1.0)) < 1e-11


# --- probing ----------------------------------------------------------------

def test_probe_convergent_quadratic_tail():
    v = probe_divergence(lambda r: 1.0 / (1.0 + r) ** 2, 1.0, 8)
    assert v.verdict == "converges"
    assert v.limit == pytest.approx(0.5, rel=0.05)


def test_probe_divergent_harmonic_tail():
    v = probe_divergence(lambda r: 1.0 / (1.0 + r), 1.0, 8)
    assert v.verdict == "diverges"
    assert v.limit is None


def test_probe_zero_integrand():
    v = probe_divergence(lambda r: np.zeros_like(np.asarray(r)), 1.0, 6)
    assert v.verdict == "converges"
    assert v.limit == 0.0


def test_probe_domain_error_is_inconclusive():
    def bad(r):
        raise ZeroDivisionError("boom")

    v = probe_divergence(bad, 1.0, 5)
    assert v.verdict == "inconclusive"
    assert "boom" in v.note


def test_probe_nonfinite_integrand_is_inconclusive():
    v = probe_divergence(lambda r: np.full_like(np.asarray(r, dtype=float), np.inf), 1.0, 5)
    assert v.verdict == "inconclusive"


def test_probe_rejects_negative_integrand():
    with pytest.raises(ValueError, match="nonnegative"):
        probe_divergence(lambda r: -np.ones_like(np.asarray(r)), 1.0, 5)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_probe_scaling_invariance(c):
    base = probe_divergence(lambda r: 1.0 / (1.0 + r) ** 2, 1.0, 8)
    scaled = probe_divergence(lambda r: c / (1.0 + r) ** 2, 1.0, 8)
    assert scaled.verdict == base.verdict
    assert scaled.limit == pytest.approx(c * base.limit, rel=1e-9)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_probe_scaling_preserves_divergence(c):
    scaled = probe_divergence(lambda r: c / (1.0 + r), 1.0, 6)
    assert scaled.verdict == "diverges"


def test_verdict_invariants():
    with pytest.raises(ValueError):
        DivergenceVerdict("converges")  # no limit
    with pytest.raises(ValueError):
        DivergenceVerdict("diverges", limit=1.0)
    with pytest.raises(ValueError):
        DivergenceVerdict("converges", limit=0.5, partials=(0.9,))


def test_classify_tail_needs_three_increments():
    with pytest.raises(ValueError):
        classify_tail([1.0, 0.5], 0.9)


def test_cumulative_interpolant_tracks_primitive():
    ci = CumulativeInterpolant(lambda t: np.asarray(t), 64.0, power=0)
    for t in (0.5, 1.0, 7.3, 64.0):
        assert ci(t) == pytest.approx(t * t / 2.0, rel=1e-6)
    ci3 = CumulativeInterpolant(lambda t: np.ones_like(np.asarray(t)), 32.0, power=2)
    assert ci3(8.0) == pytest.approx(8.0 ** 3 / 3.0, rel=1e-9)
