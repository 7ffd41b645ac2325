import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rexmap.cocycle import decay_inequality_check
from rexmap.numerics import HALF, ZERO, Scalar
from rexmap.params import (
    FIXED_POINT,
    Branch,
    BoundaryReached,
    Itinerary,
    ParamPair,
    branch_interval,
    branch_inverse,
    decay_control_bound,
    decay_schedule,
    f_step,
    invariant_density,
    invariant_measure,
    itinerary_of,
    param_from_itinerary,
    plug_measure,
    pushforward_defect,
    pushforward_tail,
    rational_termination,
    rightward_block,
    special_box,
    understandable_itinerary,
    upward_block,
)


def test_f_step_examples():
    assert f_step(Scalar(1, 4)) == (HALF, Branch(0, 1))
    assert f_step(Scalar(1, 3)) == (ZERO, Branch(1, 1))
    assert f_step(FIXED_POINT) == (FIXED_POINT, Branch(1, -1))


def test_f_step_domain():
    with pytest.raises(BoundaryReached):
        f_step(HALF)
    with pytest.raises(ValueError):
        f_step(Scalar(-1, 5))


def test_fixed_point_is_root_of_quadratic():
    a = FIXED_POINT
    assert 2 * a * a - 4 * a + 1 == 0


def test_branch_validation():
    with pytest.raises(ValueError):
        Branch(0, -1)
    with pytest.raises(ValueError):
        Branch(1, 0)
    assert sorted([Branch(2, 1), Branch(1, -1), Branch(1, 1)])[0] == Branch(1, -1)


@pytest.mark.parametrize(
    "br,x,expect", [(Branch(0, 1), 0, Fraction(0)), (Branch(1, 1), HALF, Fraction(3, 8)), (Branch(1, -1), HALF, Fraction(1, 4))]
)
def test_branch_inverse_examples(br, x, expect):
    assert branch_inverse(br, x) == Scalar(expect)


@settings(max_examples=300)
@given(st.integers(0, 40), st.sampled_from([1, -1]), st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=10**5))
def test_branch_inverse_consistency(n, r, x):
    if n == 0 and r == -1:
        return
    br = Branch(n, r)
    y = branch_inverse(br, Scalar(x))
    lo, hi = branch_interval(br)
    assert Scalar(lo) <= y <= Scalar(hi)
    if 0 < x < Fraction(1, 2):
        assert f_step(y) == (Scalar(x), br)


def test_itinerary_examples():
    assert itinerary_of(ZERO, 4).branches == (Branch(0, 1),) * 4
    assert itinerary_of(FIXED_POINT, 3).branches == (Branch(1, -1),) * 3
    it = itinerary_of(Scalar(1, 3), 2)
    assert it.branches == (Branch(1, 1), Branch(0, 1)) and it.zero_tail
    it = itinerary_of(Scalar(1, 4), 5)
    assert it.boundary and len(it) == 1


def test_itinerary_text_and_json():
    it = itinerary_of(Scalar(7, 41), 6)
    assert Itinerary.from_text(it.to_text()).branches == it.branches
    assert Itinerary.from_json(it.to_json()).branches == it.branches


def test_enclosure_examples():
    (lo, hi), _ = param_from_itinerary(Itinerary((Branch(1, -1),) * 20))
    assert hi - lo < Fraction(1, 10**6)
    assert Scalar(lo) <= FIXED_POINT <= Scalar(hi)
    (lo, hi), mid = param_from_itinerary(Itinerary((Branch(0, 1),) * 12, zero_tail=True))
    assert lo == hi == mid == 0
    widths = [param_from_itinerary(Itinerary((Branch(0, 1),) * k))[0][1] for k in (5, 20, 80)]
    assert widths[0] > widths[1] > widths[2]
    ui = understandable_itinerary([2])
    (lo, hi), _ = param_from_itinerary(ui.alpha)
    assert Fraction(1, 7) <= lo and hi <= Fraction(3, 20)


@pytest.mark.parametrize("k", range(2, 11))
def test_special_itinerary_boxes(k):
    for upward in (True, False):
        blk = upward_block(k) if upward else rightward_block(k)
        a = Itinerary(tuple(Branch(m, r) for m, r, _, _ in blk))
        b = Itinerary(tuple(Branch(n, s) for _, _, n, s in blk))
        box_a, box_b = special_box(k, upward)
        for it, (lo_b, hi_b) in ((a, box_a), (b, box_b)):
            (lo, hi), _ = param_from_itinerary(it)
            assert lo_b <= lo and hi <= hi_b


def test_itinerary_codes_parameter():
    rng = random.Random(5)
    for _ in range(100):
        t = Scalar(rng.randrange(1, 2**30), 2**31)
        it = itinerary_of(t, 8)
        (lo, hi), _ = param_from_itinerary(it)
        assert Scalar(lo) <= t <= Scalar(hi)


def test_param_pair_validation():
    ParamPair(Scalar(1, 5), Scalar(1, 7), itinerary_of(Scalar(1, 5), 3))
    with pytest.raises(ValueError):
        ParamPair(Scalar(3, 5), Scalar(1, 7))
    with pytest.raises(ValueError):
        ParamPair(Scalar(1, 5), Scalar(1, 7), itinerary_of(Scalar(1, 7), 3))


@pytest.mark.parametrize("p,q,expect", [(1, 3, 1), (1, 4, 1), (0, 1, 0)])
def test_rational_termination_examples(p, q, expect):
    assert rational_termination(p, q) == expect


def test_complexity_drop():
    rng = random.Random(11)
    for _ in range(300):
        q = rng.randint(3, 10**6)
        p = rng.randint(1, (q - 1) // 2)
        if math.gcd(p, q) != 1 or 2 * p == q:
            continue
        x, _ = f_step(Scalar(p, q))
        assert x.denominator <= q - 2 * p
        assert rational_termination(p, q) <= q // 2


def test_upward_block_and_schedule_marks():
    assert upward_block(2) == [(0, 1, 1, 1), (0, 1, 0, 1), (1, 1, 0, 1)]
    assert rightward_block(2) == [(1, 1, 0, 1), (0, 1, 0, 1), (0, 1, 1, 1)]
    ui = understandable_itinerary([2, 3])
    assert ui.quads[:3] == tuple(upward_block(2))
    assert ui.marks == (0, 3, 7)
    with pytest.raises(ValueError):
        understandable_itinerary([])


def test_decay_control_bound():
    # the bound dominates 4ab on the k-upward box
    for k in range(1, 12):
        (alo, ahi), (blo, bhi) = special_box(k)
        assert 4 * ahi * bhi <= decay_control_bound(k)
    assert decay_control_bound(2) < Fraction(1, 4) < decay_control_bound(1)


def test_decay_schedule_half():
    sched = decay_schedule(Fraction(1, 2))
    assert sched.k_schedule[0] == 2
    assert sched.product > Fraction(1, 2)
    assert sched.limit_bound > Fraction(1, 2)
    for j in range(1, len(sched.k_schedule)):
        assert decay_inequality_check(sched.k_schedule[j - 1], sched.k_schedule[j], sched.epsilons[j]).holds
        assert not decay_inequality_check(sched.k_schedule[j - 1], sched.k_schedule[j] - 1, sched.epsilons[j]).holds
    assert len(sched.certificate) == len(sched.k_schedule)


def test_decay_schedule_weak_demand():
    sched = decay_schedule(Fraction(9, 10))
    assert sched.k_schedule[0] == 1
    assert sched.limit_bound > Fraction(1, 10)
    assert all(c.get("holds", True) for c in sched.certificate)


def test_decay_schedule_cap():
    with pytest.raises(RuntimeError):
        decay_schedule(Fraction(1, 2), k_cap=50)


def test_invariant_density_examples():
    assert invariant_density(HALF) == 4
    assert invariant_density(Scalar(1, 4)) == Scalar(16, 3)
    with pytest.raises(ValueError):
        invariant_density(ZERO)


def test_invariant_measure_matches_quadrature():
    a, b = Scalar(1, 7), Scalar(2, 5)
    with mpmath.workdps(50):
        quad = mpmath.quad(lambda x: 1 / x + 1 / (1 - x), [mpmath.mpf(1) / 7, mpmath.mpf(2) / 5])
        assert abs(invariant_measure(a, b) - quad) < mpmath.mpf(10) ** -30


def test_pushforward_defect_examples():
    a, b = Scalar(1, 4), Scalar(1, 3)
    d50 = pushforward_defect(a, b, 50)
    assert d50 < 1e-2
    with mpmath.workdps(50):
        assert abs(d50 - pushforward_tail(a, b, 50)) < mpmath.mpf(10) ** -30
    assert pushforward_defect(a, b, 400) < d50
    assert pushforward_defect(a, a, 10) == 0


def test_plug_measure():
    with mpmath.workdps(50):
        val = plug_measure(Scalar(1, 10))
        assert abs(val - 2 * mpmath.log(mpmath.mpf(9) / 7) * mpmath.log(9)) < mpmath.mpf(10) ** -40
    assert float(val) == pytest.approx(1.104, abs=1e-3)
    vals = [plug_measure(Scalar(1, 10**k)) for k in range(1, 8)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[-1] < 1e-5
    with pytest.raises(ValueError):
        plug_measure(Scalar(1, 4))
