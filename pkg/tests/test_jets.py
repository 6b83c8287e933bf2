import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtdkit import jets
from gtdkit.errors import DomainError
from gtdkit.jets import Jet, constant, extract_partial, seed_point, seed_variable


def jet_from_coeffs(coeffs, nvars=2, order=4):
    table, _ = jets._index_table(nvars, order)
    arr = np.zeros(len(table))
    arr[: len(coeffs)] = coeffs
    return Jet(nvars, order, arr)


# -- seeding ---------------------------------------------------------------------


def test_seed_single_variable():
    j = seed_variable(0, 2.0, nvars=1, order=2)
    assert list(j.coeffs) == [2.0, 1.0, 0.0]


def test_seed_second_of_two():
    j = seed_variable(1, 3.0, nvars=2, order=1)
    assert j.value == 3.0
    assert extract_partial(j, (0, 1)) == 1.0
    assert extract_partial(j, (1, 0)) == 0.0


def test_seed_index_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        seed_variable(5, 1.0, nvars=2, order=4)


# -- arithmetic ------------------------------------------------------------------


def test_square_of_one_plus_x():
    x = seed_variable(0, 0.0, nvars=1, order=2)
    sq = (1 + x) * (1 + x)
    assert list(sq.coeffs) == [1.0, 2.0, 1.0]


def test_self_division_is_unit():
    a = jet_from_coeffs([2.0, -1.0, 0.5, 0.3, -0.2], nvars=1, order=4)
    one = a / a
    expected = np.zeros_like(one.coeffs)
    expected[0] = 1.0
    assert np.allclose(one.coeffs, expected, atol=1e-14)


def test_div_mul_round_trip():
    a = jet_from_coeffs([0.7, 1.3, -0.4, 0.9, -1.1, 0.2], nvars=2, order=4)
    b = jet_from_coeffs([1.9, -0.8, 0.6, -0.5, 1.4, -0.3], nvars=2, order=4)
    back = (a / b) * b
    assert np.allclose(back.coeffs, a.coeffs, rtol=1e-13, atol=1e-13)


def test_division_by_zero_constant():
    a = seed_variable(0, 1.0, nvars=1, order=3)
    b = seed_variable(0, 0.0, nvars=1, order=3)
    with pytest.raises(DomainError):
        a / b


def test_shape_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        seed_variable(0, 1.0, 1, 2) + seed_variable(0, 1.0, 2, 2)


def test_scalar_mixing():
    x = seed_variable(0, 3.0, nvars=1, order=2)
    assert (2 * x - x - x).value == 0.0
    assert (1 / (1 + 0 * x)).value == 1.0


# -- elementary functions ---------------------------------------------------------


def test_exp_series():
    x = seed_variable(0, 0.0, nvars=1, order=4)
    e = jets.exp(x)
    assert np.allclose(e.coeffs, [1, 1, 1 / 2, 1 / 6, 1 / 24], rtol=1e-15)


def test_sqrt_constant_term():
    a = seed_variable(0, 4.0, nvars=1, order=3)
    assert jets.power(a, 0.5).value == 2.0


def test_ln_negative_constant():
    with pytest.raises(DomainError):
        jets.ln(constant(-1.0, 1, 3))


def test_fractional_power_negative_base():
    with pytest.raises(DomainError):
        jets.power(constant(-2.0, 1, 3), 2 / 3)


def test_integer_power_negative_base():
    a = seed_variable(0, -2.0, nvars=1, order=2)
    cube = jets.power(a, 3)
    assert cube.value == -8.0
    assert extract_partial(cube, (1,)) == 12.0  # 3 x^2


def test_negative_integer_power():
    a = seed_variable(0, 2.0, nvars=1, order=3)
    inv2 = jets.power(a, -2)
    assert inv2.value == 0.25
    assert math.isclose(extract_partial(inv2, (1,)), -2 / 8, rel_tol=1e-14)


def test_sin_cos_pythagoras():
    x = seed_variable(0, 0.7, nvars=1, order=4)
    s, c = jets.sin(x), jets.cos(x)
    unit = s * s + c * c
    expected = np.zeros_like(unit.coeffs)
    expected[0] = 1.0
    assert np.allclose(unit.coeffs, expected, atol=1e-15)


# -- extraction -------------------------------------------------------------------


def test_extract_mixed_partial():
    x, y = seed_point((1.0, 1.0), order=4)
    f = x * x * y
    assert extract_partial(f, (1, 1)) == 2.0


def test_extract_fourth_derivative():
    x = seed_variable(0, 1.7, nvars=1, order=4)
    f = jets.power(x, 4)
    assert math.isclose(extract_partial(f, (4,)), 24.0, rel_tol=1e-12)


def test_extract_beyond_order():
    x = seed_variable(0, 0.0, nvars=1, order=4)
    with pytest.raises(ValueError, match="exceeds"):
        extract_partial(x, (5,))


def test_immutability():
    x = seed_variable(0, 1.0, 1, 2)
    with pytest.raises(AttributeError):
        x.order = 3
    with pytest.raises(ValueError):
        x.coeffs[0] = 5.0


def test_truncate_and_derive():
    x, y = seed_point((0.5, -1.2), order=4)
    f = jets.exp(x) * y * y * y
    d2 = jets.derive(f, (1, 1))  # d^2 f / dx dy = 3 e^x y^2, now order 2
    assert d2.order == 2
    assert math.isclose(d2.value, 3 * math.exp(0.5) * 1.44, rel_tol=1e-13)
    assert jets.truncate(f, 2).order == 2
    assert jets.truncate(f, 2).value == f.value


# -- spec invariants ---------------------------------------------------------------

coeff_arrays = st.lists(
    st.floats(min_value=-2.0, max_value=2.0, allow_nan=False), min_size=15, max_size=15
)


@settings(max_examples=100, deadline=None)
@given(coeff_arrays, coeff_arrays)
def test_leibniz_property(ca, cb):
    a = jet_from_coeffs(ca, nvars=2, order=4)
    b = jet_from_coeffs(cb, nvars=2, order=4)
    prod = a * b
    for v in range(2):
        alpha = (1, 0) if v == 0 else (0, 1)
        lhs = extract_partial(prod, alpha)
        rhs = a.value * extract_partial(b, alpha) + b.value * extract_partial(a, alpha)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=0.1, max_value=10.0),
    st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), min_size=14, max_size=14),
)
def test_chain_consistency_exp_ln(c0, rest):
    a = jet_from_coeffs([c0] + rest, nvars=2, order=4)
    back = jets.exp(jets.ln(a))
    assert np.allclose(back.coeffs, a.coeffs, rtol=1e-12, atol=1e-12)


def test_power_matches_exp_ln():
    a = jet_from_coeffs([3.0, 0.4, -0.7, 0.2, 0.1, -0.3], nvars=2, order=4)
    direct = jets.power(a, 0.37)
    via_log = jets.exp(0.37 * jets.ln(a))
    assert np.allclose(direct.coeffs, via_log.coeffs, rtol=1e-12, atol=1e-13)


def test_derivative_exactness_exp_x_y_cubed():
    x0, y0 = 0.3, 1.4
    x, y = seed_point((x0, y0), order=4)
    f = jets.exp(x) * y * y * y

    def analytic(i, j):
        dy = {0: y0**3, 1: 3 * y0**2, 2: 6 * y0, 3: 6.0}.get(j, 0.0)
        return math.exp(x0) * dy

    for i in range(5):
        for j in range(5 - i):
            got = extract_partial(f, (i, j))
            want = analytic(i, j)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-10)
