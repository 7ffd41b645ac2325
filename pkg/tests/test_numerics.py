import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rexmap.numerics import (
    HALF,
    MixedSurdError,
    Scalar,
    floor_quotient,
    format_scalar,
    parse_scalar,
    reduce_mod_G,
)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=10**6)


def surds():
    return st.builds(
        lambda a, b, c: Scalar.surd(a, b, c, 2),
        st.integers(-10**6, 10**6),
        st.integers(-10**6, 10**6),
        st.integers(1, 10**6),
    )


def test_parse_and_format_examples():
    assert parse_scalar("3/4") == Scalar(3, 4)
    assert parse_scalar("0.3") == Scalar(3, 10)
    x = parse_scalar("(2-1*sqrt(2))/2")
    assert format_scalar(x) == "(2-1*sqrt(2))/2"
    assert format_scalar(Scalar(0)) == "0/1"
    assert parse_scalar(format_scalar(x)) == x
    with pytest.raises(ValueError):
        parse_scalar("sqrt(")


@given(surds())
def test_format_round_trip(x):
    assert parse_scalar(format_scalar(x)) == x


def test_surd_field_mixing_is_rejected():
    with pytest.raises(MixedSurdError):
        Scalar.surd(0, 1, 1, 2) + Scalar.surd(0, 1, 1, 3)


def test_square_parts_are_extracted():
    assert Scalar.surd(0, 1, 1, 8) == Scalar.surd(0, 2, 1, 2)
    assert Scalar.surd(1, 1, 1, 9) == Scalar(4)


@settings(max_examples=300)
@given(surds(), surds())
def test_sign_agrees_with_high_precision(x, y):
    d = x - y
    with mpmath.workdps(200):
        val = d.to_mpf(200)
        expect = 0 if val == 0 else (1 if val > 0 else -1)
    assert d.sign() == expect


def test_total_order_on_mixed_values():
    rng = random.Random(3)
    vals = [Scalar.surd(rng.randint(-50, 50), rng.randint(-50, 50), rng.randint(1, 50), 2) for _ in range(200)]
    vals += [Scalar(rng.randint(-50, 50), rng.randint(1, 50)) for _ in range(50)]
    ordered = sorted(vals)
    for a, b in zip(ordered, ordered[1:]):
        assert a <= b
        assert float(a) <= float(b) + 1e-12


def test_large_surd_float_is_accurate():
    # 1 - 4a^2 at the fixed point, raised to a power: huge coefficients cancel
    a = Scalar.surd(2, -1, 2, 2)
    x = (1 - 4 * a * a) ** 20
    assert float(x) == pytest.approx(float(mpmath.mpf(4 * mpmath.sqrt(2) - 5) ** 20), rel=1e-12)


@given(fractions, surds())
def test_field_arithmetic(p, x):
    q = Scalar(p)
    assert (x + q) - q == x
    if x:
        assert (x * q) / x == q
        assert x * x.inverse() == 1


@pytest.mark.parametrize(
    "t,expect",
    [
        (Scalar(3, 10), (Scalar(3, 10), 1, 0)),
        (Scalar(3, 4), (Scalar(1, 4), -1, 1)),
        (HALF, (HALF, 1, 0)),
    ],
)
def test_reduce_mod_G_examples(t, expect):
    g = reduce_mod_G(t)
    assert (g.reduced, g.orientation, g.integer_part) == expect
    assert g.reconstruct() == t


def _reduce_oracle(t: Fraction):
    """Brute force: the group element o*x + n with x in [0,1/2], ties to +1."""
    n = t.numerator // t.denominator
    for cand_n, o in ((n, 1), (n + 1, -1)):
        red = o * (t - cand_n)
        if 0 <= red <= Fraction(1, 2):
            return red, o, cand_n
    raise AssertionError


def test_reduce_mod_G_bulk():
    # 10^6 random rationals: range, reconstruction, and a brute force oracle
    rng = random.Random(7)
    half = Scalar(1, 2)
    for i in range(10**6):
        t = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 1000))
        g = reduce_mod_G(Scalar(t))
        assert 0 <= g.reduced <= half
        assert g.integer_part + g.orientation * g.reduced == t
        if i % 50 == 0:
            red, o, n = _reduce_oracle(t)
            assert (g.reduced, g.orientation, g.integer_part) == (Scalar(red), o, n)


@given(surds())
def test_reduce_mod_G_surds(t):
    g = reduce_mod_G(t)
    assert 0 <= g.reduced <= HALF
    assert g.orientation in (1, -1)
    assert g.reconstruct() == t
    if g.reduced == HALF:
        assert g.orientation == 1


@pytest.mark.parametrize("x,y,expect", [("0.5", "0.6", 0), ("0.7", "0.6", 1), ("0", "0.3", 0)])
def test_floor_quotient_examples(x, y, expect):
    assert floor_quotient(parse_scalar(x), parse_scalar(y)) == expect


def test_floor_quotient_errors():
    with pytest.raises(ValueError):
        floor_quotient(Scalar(1), Scalar(0))
    with pytest.raises(ValueError):
        floor_quotient(Scalar(1), Scalar(-1, 2))


@given(surds(), surds())
def test_floor_quotient_surd(x, y):
    if y <= 0:
        return
    q = floor_quotient(x, y)
    assert q * y <= x < (q + 1) * y
