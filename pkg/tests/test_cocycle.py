import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from rexmap.cocycle import (
    accumulate,
    branch_quad,
    cocycle_csv,
    collatz_wielandt_upper,
    decay_closed_forms,
    decay_inequality_check,
    det,
    g_factor,
    identity,
    k_matrix,
    m_matrix,
    mat_vec,
    measure_vectors,
    n_matrix,
    ns_limit,
    project6,
    scaling_check,
    section4,
    spectral_ratio,
    transpose,
)
from rexmap.numerics import Scalar, parse_scalar
from rexmap.params import FIXED_POINT, f_step, param_from_itinerary, understandable_itinerary, upward_block


def valid_quads(rng, count, top=20):
    out = []
    while len(out) < count:
        m, n = rng.randint(0, top), rng.randint(0, top)
        r, s = rng.choice((1, -1)), rng.choice((1, -1))
        if (m == 0 and r == -1) or (n == 0 and s == -1):
            continue
        out.append((m, r, n, s))
    return out


def test_branch_quad_examples():
    assert branch_quad(FIXED_POINT, FIXED_POINT).as_tuple() == (1, -1, 1, -1)
    assert branch_quad(Scalar(1, 5), Scalar(1, 5)).as_tuple()[:2] == (0, 1)
    ui = understandable_itinerary([3])
    _, a = param_from_itinerary(ui.alpha)
    _, b = param_from_itinerary(ui.beta)
    assert branch_quad(Scalar(a), Scalar(b)).as_tuple() == (0, 1, 1, 1)


def test_n_matrix_examples():
    assert n_matrix((1, 1, 0, 1)) == ((3, 1, 0, 3), (2, 1, 0, 2), (0, 1, 1, 1), (0, 0, 0, 1))
    assert n_matrix((0, 1, 1, 1)) == ((1, 1, 0, 1), (0, 1, 0, 0), (0, 3, 3, 1), (0, 2, 2, 1))


def test_determinants():
    for m in range(21):
        for n in range(21):
            for r in (1, -1):
                for s in (1, -1):
                    if (m == 0 and r == -1) or (n == 0 and s == -1):
                        continue
                    q = (m, r, n, s)
                    assert det(n_matrix(q)) == r * s
                    assert det(m_matrix(q)) == r * s


def test_m_matrix_example_and_compatibility():
    assert m_matrix((0, 1, 0, 1))[2] == (0, 0, 1, 0, 0, 0)
    rng = random.Random(1)
    for q in valid_quads(rng, 40):
        v = [Fraction(rng.randint(-20, 20), rng.randint(1, 20)) for _ in range(4)]
        assert project6(section4(v)) == tuple(v)
        Mt = mat_vec(transpose(m_matrix(q)), section4(v))
        Nt = mat_vec(transpose(n_matrix(q)), v)
        assert tuple(Mt) == section4(Nt)
        assert project6(Mt) == tuple(Nt)


def test_k_matrix_examples():
    assert k_matrix(0)[1] == (0, 1, 0, 0, 0, 0)
    assert k_matrix(0)[2] == (0, 0, 1, 0, 0, 0)
    assert k_matrix(1)[0] == (1, 0, 2, 0, 0, 2)
    for k in (1, 2, 3, 7):
        assert all(sum(row) == 4 * k + 1 for row in k_matrix(k))
    with pytest.raises(ValueError):
        k_matrix(-1)


def test_measure_vectors():
    mv = measure_vectors(Scalar(1, 4), Scalar(1, 4))
    assert mv.m6 == tuple(Scalar(x) for x in (Fraction(1, 8), Fraction(1, 8), Fraction(1, 4)) * 2)
    assert measure_vectors(Scalar(0), Scalar(1, 3)).m6[:2] == (0, 0)
    a, b = sp.symbols("a b")
    n4 = (a * (1 - 2 * b), (1 - 2 * a) / 2, b * (1 - 2 * a), (1 - 2 * b) / 2)
    assert sp.expand(sum(n4) - (1 - 4 * a * b)) == 0
    rng = random.Random(2)
    for _ in range(20):
        x, y = Scalar(rng.randint(1, 99), 200), Scalar(rng.randint(1, 99), 200)
        assert sum(measure_vectors(x, y).n4) == 1 - 4 * x * y


def test_accumulate_first_states():
    run = accumulate(FIXED_POINT, FIXED_POINT, 2)
    assert run[0].d_k == 1 and run[0].N_k == identity(4)
    assert run[0].nu == 1 - 4 * FIXED_POINT**2 == Scalar.surd(-5, 4, 1, 2)
    # independent oracle with sympy
    a = (2 - sp.sqrt(2)) / 2
    N = sp.Matrix([[1, 1, 0, 1], [2, 1, 0, 2], [0, 1, 1, 1], [0, 2, 2, 1]])
    n = sp.Matrix([[a * (1 - 2 * a), (1 - 2 * a) / 2, a * (1 - 2 * a), (1 - 2 * a) / 2]])
    d1 = (1 - 2 * a) ** 2
    nu2 = sp.nsimplify(sp.expand((d1 * n * N * sp.ones(4, 1))[0]))
    assert float(run[1].nu) == pytest.approx(float(nu2), rel=1e-14)
    assert sp.simplify(nu2 - sp.sympify(str(run[1].nu).replace("sqrt", "sp.sqrt").replace("sp.", ""))) == 0
    assert float(run[1].nu) == pytest.approx(0.4802, abs=1e-4)


def test_accumulate_boundary():
    run = accumulate(Scalar(1, 4), Scalar(1, 5), 5)
    assert run.boundary and len(run) == 2 and run[-1].alpha_k == Scalar(1, 2)
    with pytest.raises(ValueError):
        accumulate(Scalar(1, 2), Scalar(1, 5), 3)


def test_monotone_and_scaling_bound():
    rng = random.Random(3)
    for _ in range(30):
        a = Scalar(rng.randrange(1, 2**40), 2**41)
        b = Scalar(rng.randrange(1, 2**40), 2**41)
        run = accumulate(a, b, 12)
        for prev, cur in zip(run.states, run.states[1:]):
            assert cur.nu <= prev.nu
            assert cur.nu <= g_factor(cur.alpha_k, cur.beta_k) * prev.nu


def test_ns_limit_fixed_point():
    lim = ns_limit(FIXED_POINT, FIXED_POINT, 30)
    assert lim.converged and lim.certificate["contracts"]
    assert float(lim.estimate) < 1e-3
    assert all(x >= y for x, y in zip(lim.bracket, lim.bracket[1:]))
    N = n_matrix((1, -1, 1, -1))
    lam = max(abs(np.linalg.eigvals(np.array(N, dtype=float))))
    assert lam == pytest.approx(2 + 5**0.5, rel=1e-12)
    assert Scalar(collatz_wielandt_upper(N)) >= Scalar.surd(2, 1, 1, 5)
    assert spectral_ratio(N) == pytest.approx(lam, rel=1e-10)


def test_scaling_examples():
    assert scaling_check(Scalar(1, 3), Scalar(1, 3)).holds
    assert scaling_check(FIXED_POINT, FIXED_POINT).holds
    rng = random.Random(4)
    for _ in range(100):
        g = Scalar(rng.randint(5, 45), 100) + Scalar(1, 997)
        d = Scalar(rng.randint(5, 45), 100) + Scalar(1, 991)
        assert scaling_check(g, d).holds


def _sympy_decay(k):
    g, d = sp.symbols("g d")
    quads = upward_block(k)
    al, be = g, d
    alphas, betas = [al], [be]
    for m, r, n, s in reversed(quads):
        u = r * al + m
        al = u / (1 + 2 * u)
        u = s * be + n
        be = u / (1 + 2 * u)
        alphas.append(al)
        betas.append(be)
    alphas.reverse()
    betas.reverse()
    dd = sp.Integer(1)
    N = sp.eye(4)
    for i, (m, r, n, s) in enumerate(quads):
        dd *= (1 - 2 * alphas[i]) * (1 - 2 * betas[i])
        N = sp.Matrix(
            [[2 * m + r, 1, 0, 2 * m + r], [2 * m, 1, 0, 2 * m], [0, 2 * n + s, 2 * n + s, 1], [0, 2 * n, 2 * n, 1]]
        ) * N

    def nv(a, b):
        return sp.Matrix([a * (1 - 2 * b), (1 - 2 * a) / 2, b * (1 - 2 * a), (1 - 2 * b) / 2])

    v = [x / dd for x in nv(alphas[0], betas[0])]
    w = [sp.expand(x) for x in N.T * nv(g, d)]
    return g, d, v, w


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_decay_closed_forms_against_sympy(k):
    g, d, v, w = _sympy_decay(k)
    # both sides are polynomials of degree at most one in each variable, so
    # a 3x3 grid of points pins them down
    for gv in (Fraction(0), Fraction(1, 3), Fraction(2, 7)):
        for dv in (Fraction(0), Fraction(1, 9), Fraction(1, 20)):
            cv, cw = decay_closed_forms(k, gv, dv)
            sub = {g: sp.Rational(gv.numerator, gv.denominator), d: sp.Rational(dv.numerator, dv.denominator)}
            for x, y in zip(cv, v):
                assert sp.Rational(x.numerator, x.denominator) == y.subs(sub)
            for x, y in zip(cw, w):
                assert sp.Rational(x.numerator, x.denominator) == y.subs(sub)
    for y in w:
        assert sp.Poly(y, g, d).degree(g) <= 1 and sp.Poly(y, g, d).degree(d) <= 1


def test_decay_limits_agree_at_zero_delta():
    for k in (1, 4, 9):
        for gv in (Fraction(1, 3), Fraction(2, 5)):
            v, w = decay_closed_forms(k, gv, Fraction(0))
            assert v == w


def test_decay_inequality_examples():
    assert decay_inequality_check(1, 50, Fraction(1, 2)).holds
    assert not decay_inequality_check(1, 1, Fraction(1, 100)).holds
    fine = decay_inequality_check(2, 22, Fraction(1, 8), grid=6)
    assert fine.holds and fine.points_checked == 4 + 49
    with pytest.raises(ValueError):
        decay_inequality_check(0, 3, Fraction(1, 2))


def test_cocycle_csv_columns():
    text = cocycle_csv(accumulate(Scalar(1, 5), Scalar(1, 7), 0))
    head, row = text.strip().splitlines()
    assert head.split(",")[:5] == ["k", "alpha_k", "beta_k", "d_k", "nu_O_kplus1"]
    assert row.split(",")[4] == "31/35"
