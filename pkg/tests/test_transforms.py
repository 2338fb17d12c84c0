import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from radsolve.quadrature import ProbeConfig, RadialGrid
from radsolve.transforms import (
    FInverseRangeError,
    ProblemSpec,
    build_A,
    build_F,
    build_H,
    build_transform_tables,
    estimate_A_inf,
    estimate_F_inf,
    eval_F,
    invert_F,
    invert_F_many,
    validate_hypotheses,
)

# independent oracle values (closed forms / high-precision quadrature)
TWO_OVER_THREE_ROOT_THREE = 0.38490017945975050967  # (2/3) * (1/3)^(1/2)
LN2 = 0.69314718055994530942
A_INF_DECAYING = 0.16574309436736304  # barrier limit for a = (1+r)^-4, N = 3, p = 2


def linear_spec():
    return ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1")


def test_spec_validation():
    with pytest.raises(ValueError, match="N must be"):
        ProblemSpec.from_strings(2, 1, 2.0, "0", "1", "u1")
    with pytest.raises(ValueError, match="p_j must be > 1"):
        ProblemSpec.from_strings(3, 1, 1.0, "0", "1", "u1")
    with pytest.raises(ValueError, match="anchor"):
        ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1", anchor=0.0)


def test_H_without_gradient_term_is_pure_power():
    grid = RadialGrid(2.0, 64)
    H = build_H(linear_spec(), grid, 0)
    assert np.allclose(H.values, grid.nodes ** 2, rtol=1e-14, atol=0.0)
    assert H.values[0] == 0.0


def test_H_with_constant_gradient_coefficient():
    # cumulative of a constant is exact under the trapezoid rule
    spec = ProblemSpec.from_strings(3, 1, 2.0, "1", "1", "u1")
    grid = RadialGrid(2.0, 128)
    H = build_H(spec, grid, 0)
    assert np.allclose(H.values, grid.nodes ** 2 * np.exp(grid.nodes), rtol=1e-13)


def test_A_closed_form_quadratic():
    grid = RadialGrid(1.0, 2000)
    A = build_A(linear_spec(), grid, 0)
    assert abs(A.values[-1] - 1.0 / 6.0) / (1.0 / 6.0) < 1e-6
    assert A.values[0] == 0.0


def test_A_zero_source():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "0", "u1")
    grid = RadialGrid(1.0, 64)
    A = build_A(spec, grid, 0)
    assert np.all(A.values == 0.0)


def test_A_closed_form_p3():
    spec = ProblemSpec.from_strings(3, 1, 3.0, "0", "1", "u1")
    grid = RadialGrid(1.0, 2000)
    A = build_A(spec, grid, 0)
    assert abs(A.values[-1] - TWO_OVER_THREE_ROOT_THREE) / TWO_OVER_THREE_ROOT_THREE < 1e-4


def test_A_nondecreasing_with_zero_start():
    spec = ProblemSpec.from_strings(4, 2, [2.0, 2.5], ["0.2", "0"],
                                    ["1", "exp(-r)"], ["u1 + u2", "u1*u2"])
    grid = RadialGrid(3.0, 200)
    for j in range(2):
        A = build_A(spec, grid, j)
        assert A.values[0] == 0.0
        assert np.all(np.diff(A.values) >= 0.0)


@given(st.floats(min_value=0.1, max_value=10.0))
def test_A_scales_linearly_with_source_when_p_is_2(c):
    grid = RadialGrid(1.0, 128)
    base = build_A(ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1"), grid, 0)
    scaled = build_A(ProblemSpec.from_strings(3, 1, 2.0, "0", repr(c), "u1"), grid, 0)
    assert np.allclose(scaled.values, c * base.values, rtol=1e-12, atol=1e-300)


def test_F_closed_form_log():
    table = build_F(linear_spec(), s_max=4.0)
    assert abs(eval_F(table, 3.0) - LN2) < 1e-8
    assert table.step <= 1e-3


def test_F_unit_integrand_for_zero_nonlinearity():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "0")
    table = build_F(spec, s_max=5.0)
    ss = np.linspace(1.0, 5.0, 11)
    assert np.allclose(eval_F(table, ss), ss - 1.0, atol=1e-12)


def test_F_strictly_increasing():
    table = build_F(ProblemSpec.from_strings(3, 2, [2.0, 3.0], ["0", "0"],
                                             ["1", "1"], ["u1^2", "u1 + u2"]), 6.0)
    assert np.all(np.diff(table.values) > 0.0)


def test_invert_F_round_trip():
    table = build_F(linear_spec(), s_max=8.0)
    for s in np.linspace(1.0, 7.5, 100):
        y = float(eval_F(table, s))
        s_back, table = invert_F(table, y)
        assert abs(s_back - s) < 1e-8


def test_invert_F_known_value():
    table = build_F(linear_spec(), s_max=4.0)
    s, _ = invert_F(table, LN2)
    assert abs(s - 3.0) < 1e-6


def test_invert_F_linear_case_auto_extends():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "0")
    table = build_F(spec, s_max=2.0)
    s, table = invert_F(table, 100.0)  # F(s) = s - 1, so the answer is 101
    assert s == pytest.approx(101.0, abs=1e-9)
    assert table.s_max >= 101.0


def test_invert_F_beyond_finite_range():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1^3")
    f_inf = estimate_F_inf(spec)
    assert f_inf.verdict == "converges"
    table = build_F(spec, s_max=4.0, f_inf=f_inf)
    with pytest.raises(FInverseRangeError, match="beyond the range"):
        invert_F(table, 1.0)


def test_estimate_F_inf_fixtures():
    assert estimate_F_inf(linear_spec()).verdict == "diverges"
    cubic = estimate_F_inf(ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "u1^3"))
    assert cubic.verdict == "converges"
    assert cubic.limit == pytest.approx(0.37355072789142418, rel=0.01)


def test_estimate_A_inf_fixtures():
    diverging = estimate_A_inf(linear_spec(), 0)
    assert diverging.verdict == "diverges"
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "(1+r)^(-4)", "u1")
    converging = estimate_A_inf(spec, 0)
    assert converging.verdict == "converges"
    assert converging.limit == pytest.approx(A_INF_DECAYING, rel=0.02)


def test_estimate_A_inf_zero_source():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "0", "u1")
    v = estimate_A_inf(spec, 0)
    assert v.verdict == "converges"
    assert v.limit == 0.0


def test_estimate_A_inf_overflowing_weight_is_inconclusive():
    # exp of the cumulative gradient coefficient overflows far out; the probe
    # reports that honestly instead of raising
    spec = ProblemSpec.from_strings(3, 1, 2.0, "1", "1", "u1")
    v = estimate_A_inf(spec, 0)
    assert v.verdict == "inconclusive"
    assert v.note


def test_tables_immutable_assembly():
    spec = linear_spec()
    grid = RadialGrid(2.0, 64)
    tables = build_transform_tables(spec, grid, ProbeConfig(horizon_count=6))
    assert tables.F_inf.verdict == "diverges"
    assert tables.A_inf[0].verdict == "diverges"
    assert tables.H[0].values[0] == 0.0
    with pytest.raises((AttributeError, TypeError)):
        tables.F = None


def test_validate_hypotheses_flags_bad_instance():
    spec = ProblemSpec.from_strings(3, 1, 2.0, "0", "1", "1/(1+u1)")
    reports = validate_hypotheses(spec, 2.0, 10.0, samples=21)
    assert not reports["f[0] nondecreasing"].passed
    assert all(reports[k].passed for k in reports if k != "f[0] nondecreasing")
