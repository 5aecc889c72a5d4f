"""Exactness and ring-law tests for the truncated-series arithmetic."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from higgspairs.series import (
    FormulaIntegrityError,
    Series,
    TruncationError,
    add,
    coeff_extract,
    exact_divide,
    expand_geometric,
    monomial,
    mul,
    pow_binomial,
    render,
    scale,
)

UP_TX = {"t": 8, "x": 6}


def random_series(rng, vars=("t", "x"), upper=None, t_lower=0, terms=4):
    upper = dict(upper or UP_TX)
    coeffs = {}
    for _ in range(terms):
        key = []
        for v in vars:
            lo = t_lower if v == "t" else 0
            key.append(rng.randint(lo, upper[v]))
        if rng.random() < 0.3:
            c = Fraction(rng.randint(-6, 6), rng.randint(1, 5))
        else:
            c = rng.randint(-6, 6)
        coeffs[tuple(key)] = c
    return Series(coeffs, vars, upper, t_lower)


# -- construction and validation --------------------------------------


def test_constructor_drops_zero_and_out_of_window():
    s = Series({(0, 0): 3, (1, 2): 0, (9, 0): 5, (2, 7): 4}, ("t", "x"), UP_TX)
    assert s.coeffs == {(0, 0): 3}


def test_constructor_rejects_unknown_variable():
    with pytest.raises(ValueError):
        Series({}, ("t", "q"), {"t": 2, "q": 2})


def test_constructor_rejects_empty_window():
    with pytest.raises(ValueError):
        Series({}, ("x",), {"x": -1})


def test_constructor_rejects_float_and_bool_coefficients():
    with pytest.raises(TypeError):
        Series({(0,): 0.5}, ("t",), {"t": 2})
    with pytest.raises(TypeError):
        Series({(0,): True}, ("t",), {"t": 2})


def test_constructor_normalises_integral_fractions():
    s = Series({(1,): Fraction(4, 2)}, ("t",), {"t": 2})
    assert s.coeffs == {(1,): 2}
    assert type(s.coeffs[(1,)]) is int


def test_constructor_rejects_mismatched_exponent_arity():
    with pytest.raises(ValueError):
        Series({(1, 2): 1}, ("t",), {"t": 4})


def test_variables_stored_in_canonical_order():
    s = Series({(0, 0): 1}, ("x", "t"), {"t": 2, "x": 2})
    assert s.vars == ("t", "x")


def test_monomial_requires_window_for_each_exponent():
    m = monomial(3, {"t": 2, "x": 1}, UP_TX)
    assert m.coeffs == {(2, 1): 3}
    with pytest.raises(ValueError):
        monomial(1, {"y": 1}, UP_TX)


def test_as_constant():
    assert Series.zero(("t",), {"t": 3}).as_constant() == 0
    assert Series.constant(7, ("t",), {"t": 3}).as_constant() == 7
    with pytest.raises(ValueError):
        monomial(1, {"t": 1}, {"t": 3}).as_constant()


def test_laurent_window_admits_negative_t():
    s = monomial(2, {"t": -3}, {"t": 2}, t_lower=-4)
    assert s.coeffs == {(-3,): 2}
    # x is never Laurent: a negative x exponent falls outside every window
    assert monomial(1, {"x": -1}, {"x": 3}).is_zero()


# -- ring laws ---------------------------------------------------------


def test_addition_and_subtraction_roundtrip():
    rng = random.Random(11)
    for _ in range(40):
        a = random_series(rng)
        b = random_series(rng)
        assert (a + b) - b == a
        assert a + Series.zero(a.vars, a.upper) == a
        assert a - a == Series.zero(a.vars, a.upper)


def test_multiplication_commutes():
    rng = random.Random(5)
    for _ in range(40):
        a = random_series(rng)
        b = random_series(rng)
        assert a * b == b * a


def test_multiplication_associates_inside_window():
    # Nonnegative t exponents cannot re-enter the window after truncation,
    # so associativity is exact here.
    rng = random.Random(7)
    for _ in range(40):
        a = random_series(rng, terms=3)
        b = random_series(rng, terms=3)
        c = random_series(rng, terms=3)
        assert (a * b) * c == a * (b * c)


def test_multiplication_distributes():
    rng = random.Random(3)
    for _ in range(40):
        a = random_series(rng, terms=3)
        b = random_series(rng, terms=3)
        c = random_series(rng, terms=3)
        assert a * (b + c) == a * b + a * c


def test_product_coefficients_stay_exact():
    rng = random.Random(13)
    for _ in range(20):
        a = random_series(rng)
        b = random_series(rng)
        for c in (a * b).coeffs.values():
            assert isinstance(c, (int, Fraction)) and not isinstance(c, bool)


def test_scalar_scale():
    s = monomial(3, {"t": 1}, {"t": 4}) + Series.constant(1, ("t",), {"t": 4})
    assert scale(s, Fraction(1, 3)).coeffs == {(1,): 1, (0,): Fraction(1, 3)}
    assert scale(s, 0).is_zero()


def test_unification_across_windows_and_variables():
    a = monomial(1, {"t": 2}, {"t": 8})
    b = monomial(1, {"x": 1}, {"x": 5})
    p = a * b
    assert p.vars == ("t", "x")
    assert p.coeffs == {(2, 1): 1}
    # common window takes the min upper bound per shared variable
    wide = monomial(1, {"t": 6}, {"t": 10})
    narrow = monomial(1, {"t": 3}, {"t": 4})
    assert (wide * narrow).is_zero()  # 9 exceeds min(10, 4)


def test_truncation_discards_high_orders():
    t = monomial(1, {"t": 1}, {"t": 3})
    p = t * t * t * t
    assert p.is_zero()


# -- geometric expansion ----------------------------------------------


def test_expand_geometric_inverts_one_minus_monomial():
    rng = random.Random(23)
    one = Series.constant(1, ("t", "x"), UP_TX, t_lower=-4)
    for _ in range(10):
        c = monomial(
            rng.randint(1, 3),
            {"t": rng.randint(-2, 2), "x": rng.randint(1, 2)},
            UP_TX,
            t_lower=-4,
        )
        geo = expand_geometric(c)
        prod = (one - c) * geo
        # agreement holds on the sub-window the product can still reach
        slack = max(abs(k[0]) for k in c.coeffs)
        probe = {"t": UP_TX["t"] - slack, "x": UP_TX["x"] - 2}
        for ke in list(prod.coeffs) + [(0, 0)]:
            if abs(ke[0]) <= probe["t"] and ke[1] <= probe["x"]:
                want = 1 if ke == (0, 0) else 0
                assert prod.coeffs.get(ke, 0) == want


def test_expand_geometric_requires_monomial_with_graded_direction():
    two_terms = Series.constant(1, ("x",), {"x": 4}) + monomial(1, {"x": 1}, {"x": 4})
    with pytest.raises(ValueError):
        expand_geometric(two_terms)
    with pytest.raises(ValueError):
        expand_geometric(monomial(1, {"t": 1}, {"t": 4}))  # pure t never truncates


# -- binomial powers ---------------------------------------------------


def test_pow_binomial_matches_repeated_multiplication():
    base = Series.constant(1, ("t", "x"), UP_TX) + monomial(2, {"t": 1, "x": 1}, UP_TX)
    acc = Series.constant(1, ("t", "x"), UP_TX)
    for n in range(6):
        assert pow_binomial(base, n) == acc
        acc = acc * base


def test_pow_binomial_coefficients_are_binomials():
    base = Series.constant(1, ("x",), {"x": 12}) + monomial(1, {"x": 1}, {"x": 12})
    p = pow_binomial(base, 9)
    assert p.coeffs == {(j,): math.comb(9, j) for j in range(10)}


def test_pow_binomial_rejects_bad_input():
    base = Series.constant(1, ("x",), {"x": 4}) + monomial(1, {"x": 1}, {"x": 4})
    with pytest.raises(ValueError):
        pow_binomial(base, -1)
    with pytest.raises(ValueError):
        pow_binomial(base, True)
    two = base + monomial(1, {"x": 2}, {"x": 4})
    with pytest.raises(ValueError):
        pow_binomial(two, 2)
    shifted = Series.constant(2, ("x",), {"x": 4}) + monomial(1, {"x": 1}, {"x": 4})
    with pytest.raises(ValueError):
        pow_binomial(shifted, 2)


# -- coefficient extraction -------------------------------------------


def test_coeff_extract_selects_and_reduces_variables():
    s = monomial(3, {"t": 2, "x": 1}, UP_TX) + monomial(5, {"t": 2, "x": 3}, UP_TX)
    sub = coeff_extract(s, {"x": 1})
    assert sub.vars == ("t",)
    assert sub.coeffs == {(2,): 3}
    assert coeff_extract(s, {"t": 2, "x": 3}).as_constant() == 5
    assert coeff_extract(s, {"x": 2}).is_zero()


def test_coeff_extract_outside_window_raises():
    s = monomial(1, {"t": 1}, {"t": 4}, t_lower=-2)
    with pytest.raises(TruncationError):
        coeff_extract(s, {"t": 5})
    with pytest.raises(TruncationError):
        coeff_extract(s, {"t": -3})
    with pytest.raises(ValueError):
        coeff_extract(s, {"x": 0})


def test_truncation_error_is_a_formula_integrity_error():
    assert issubclass(TruncationError, FormulaIntegrityError)


# -- exact division ----------------------------------------------------


def test_exact_divide_recovers_quotient():
    rng = random.Random(31)
    upper = {"t": 14, "x": 4}
    for _ in range(20):
        q = random_series(rng, upper={"t": 8, "x": 4}, terms=4)
        q = q.embedded(("t", "x"), upper, 0)
        e = rng.randint(1, 3)
        c = rng.randint(-3, 3) or 1
        factor = Series.constant(1, ("t", "x"), upper) - monomial(c, {"t": e}, upper)
        assert exact_divide(q * factor, factor) == q


def test_exact_divide_nonzero_remainder_raises():
    upper = {"t": 6}
    s = Series.constant(1, ("t",), upper) + monomial(1, {"t": 1}, upper)
    factor = Series.constant(1, ("t",), upper) - monomial(1, {"t": 2}, upper)
    with pytest.raises(FormulaIntegrityError):
        exact_divide(s, factor)


def test_exact_divide_validates_divisor_shape():
    upper = {"t": 6, "x": 3}
    s = monomial(1, {"t": 2}, upper)
    with pytest.raises(ValueError):
        exact_divide(s, monomial(1, {"t": 1}, upper))  # no constant 1
    bad = Series.constant(1, ("t", "x"), upper) - monomial(1, {"x": 1}, upper)
    with pytest.raises(ValueError):
        exact_divide(s, bad)  # divisor must step in t
    mixed = Series.constant(1, ("t", "x"), upper) - monomial(1, {"t": 1, "x": 1}, upper)
    with pytest.raises(ValueError):
        exact_divide(s, mixed)


def test_exact_divide_t_free_dividend():
    upper = {"t": 6, "x": 3}
    factor = Series.constant(1, ("t", "x"), upper) - monomial(1, {"t": 2}, upper)
    zero_tfree = Series.zero(("x",), {"x": 3})
    assert exact_divide(zero_tfree, factor).is_zero()
    with pytest.raises(ValueError):
        exact_divide(Series.constant(1, ("x",), {"x": 3}), factor)


# -- rendering ---------------------------------------------------------


def test_render_is_deterministic_and_readable():
    upper = {"t": 5, "x": 3}
    s = (
        Series.constant(1, ("t", "x"), upper, t_lower=-2)
        - monomial(1, {"t": 1}, upper, t_lower=-2)
        + monomial(2, {"t": 2, "x": 1}, upper, t_lower=-2)
        + monomial(Fraction(1, 2), {"t": -1}, upper, t_lower=-2)
    )
    assert render(s) == "1/2*t^-1 + 1 - t + 2*t^2*x"
    assert render(Series.zero(("t",), {"t": 1})) == "0"
    assert render(-monomial(1, {"t": 1}, {"t": 2})) == "-t"
    assert str(s) == render(s)
