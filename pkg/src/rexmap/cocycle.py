"""The return-time cocycle over the parameter map and the measures it computes.

Along the orbit ``(α_k, β_k) = (f^k α, f^k β)`` each step contributes a 4x4
integer matrix ``N(q)`` built from the branch quadruple ``q = (m, r, n, s)``
and a scalar ``(1-2α_k)(1-2β_k)``.  The measure of the set of points that
can be renormalized ``k`` times is

    ν(O_{k+1}) = d_k · n_{α_k, β_k} · N_k 1,

with ``N_k`` the ordered product and ``d_k`` the product of the scalars.
All arithmetic is exact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .numerics import HALF, ONE, ZERO, Scalar, ScalarLike, as_scalar, format_scalar
from .params import BoundaryReached, Branch, f_step, special_box

__all__ = [
    "BranchQuad",
    "Matrix",
    "branch_quad",
    "n_matrix",
    "m_matrix",
    "k_matrix",
    "MeasureVectors",
    "measure_vectors",
    "n_vector",
    "project6",
    "section4",
    "mat_mul",
    "mat_vec",
    "transpose",
    "det",
    "identity",
    "CocycleState",
    "accumulate",
    "cocycle_csv",
    "NSLimit",
    "ns_limit",
    "collatz_wielandt_upper",
    "spectral_ratio",
    "ScalingResult",
    "scaling_check",
    "g_factor",
    "DecayCheck",
    "decay_closed_forms",
    "decay_direct",
    "decay_inequality_check",
]

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class BranchQuad:
    m: int
    r: int
    n: int
    s: int

    def __post_init__(self):
        Branch(self.m, self.r)
        Branch(self.n, self.s)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.m, self.r, self.n, self.s)


def branch_quad(alpha: ScalarLike, beta: ScalarLike) -> BranchQuad:
    """Branches of f at α and β, so ``f(α) = r(α/(1-2α) - m)`` and likewise for β."""
    alpha = as_scalar(alpha)
    beta = as_scalar(beta)
    if not (ZERO < alpha < HALF and ZERO < beta < HALF):
        raise BoundaryReached("branch_quad needs α, β in (0, 1/2)")
    _, a = f_step(alpha)
    _, b = f_step(beta)
    return BranchQuad(a.n, a.r, b.n, b.r)


# ---- small exact linear algebra ---------------------------------------------


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return tuple(tuple(sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)) for i in range(n))


def mat_vec(A, x):
    return tuple(sum(A[i][j] * x[j] for j in range(len(x))) for i in range(len(A)))


def transpose(A):
    return tuple(zip(*A))


def det(A) -> Fraction:
    """Determinant by fraction-free Gaussian elimination (exact)."""
    M = [[Fraction(v) for v in row] for row in A]
    n = len(M)
    out = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            out = -out
        out *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            for j in range(c, n):
                M[r][j] -= f * M[c][j]
    return out


# ---- matrices -----------------------------------------------------------------


def n_matrix(q: BranchQuad | Sequence[int]) -> Matrix:
    m, r, n, s = q.as_tuple() if isinstance(q, BranchQuad) else q
    return (
        (2 * m + r, 1, 0, 2 * m + r),
        (2 * m, 1, 0, 2 * m),
        (0, 2 * n + s, 2 * n + s, 1),
        (0, 2 * n, 2 * n, 1),
    )


def m_matrix(q: BranchQuad | Sequence[int]) -> Matrix:
    """6x6 matrix of the rectangle case; its transpose commutes with the section."""
    m, r, n, s = q.as_tuple() if isinstance(q, BranchQuad) else q
    rp, rm = (r + 1) // 2, (r - 1) // 2
    sp, sm = (s + 1) // 2, (s - 1) // 2
    return (
        (m + rp, m + rm, 2, 0, 0, 2 * m + 1 + r),
        (m + rm, m + rp, 0, 0, 0, 2 * m - 1 + r),
        (m, m, 1, 0, 0, 2 * m),
        (0, 0, 2 * n + 1 + s, n + sp, n + sm, 2),
        (0, 0, 2 * n - 1 + s, n + sm, n + sp, 0),
        (0, 0, 2 * n, n, n, 1),
    )


def k_matrix(k: int) -> Matrix:
    """Step-class counts over a return orbit of length ``4k+1`` (row = class of ρ(x))."""
    if k < 0:
        raise ValueError("k must be non-negative")
    K = (
        (k, k - 1, 2, 0, 0, 2 * k),
        (k, k + 1, 0, 0, 0, 2 * k),
        (k, k, 1, 0, 0, 2 * k),
        (0, 0, 2 * k, k, k - 1, 2),
        (0, 0, 2 * k, k, k + 1, 0),
        (0, 0, 2 * k, k, k, 1),
    )
    if k == 0:
        K = tuple(K[i] if i in (0, 3) else identity(6)[i] for i in range(6))
    return K


# ---- measure vectors ------------------------------------------------------------


@dataclass(frozen=True)
class MeasureVectors:
    m6: tuple[Scalar, ...]
    q6: tuple[Scalar, ...]
    n4: tuple[Scalar, ...]


def project6(v: Sequence) -> tuple:
    a, b, c, d, e, f = v
    return (a + b, c, d + e, f)


def section4(v: Sequence) -> tuple:
    a, c, d, f = v
    return (a / 2, a / 2, c, d / 2, d / 2, f)


def n_vector(alpha: ScalarLike, beta: ScalarLike) -> tuple[Scalar, ...]:
    a = as_scalar(alpha)
    b = as_scalar(beta)
    return (a * (1 - 2 * b), (1 - 2 * a) / 2, b * (1 - 2 * a), (1 - 2 * b) / 2)


def measure_vectors(alpha: ScalarLike, beta: ScalarLike) -> MeasureVectors:
    a = as_scalar(alpha)
    b = as_scalar(beta)
    if not (ZERO <= a <= HALF and ZERO <= b <= HALF):
        raise ValueError("parameters must lie in [0, 1/2]")
    m6 = tuple(x / 2 for x in (a, a, 1 - 2 * a, b, b, 1 - 2 * b))
    q6 = tuple(
        x / 2 for x in (a * (1 - 2 * b), a * (1 - 2 * b), 1 - 2 * a, b * (1 - 2 * a), b * (1 - 2 * a), 1 - 2 * b)
    )
    return MeasureVectors(m6, q6, n_vector(a, b))


def _dot(u, v):
    acc = ZERO
    for x, y in zip(u, v):
        acc = acc + x * y
    return acc


def _row_sums(A) -> tuple[int, ...]:
    return tuple(sum(row) for row in A)


# ---- accumulation -----------------------------------------------------------------


@dataclass(frozen=True)
class CocycleState:
    k: int
    alpha_k: Scalar
    beta_k: Scalar
    N_k: Matrix
    d_k: Scalar
    nu: Scalar  # ν(O_{k+1})
    quad: BranchQuad | None = None  # branch quadruple at (alpha_k, beta_k)


@dataclass
class CocycleRun:
    states: list[CocycleState]
    boundary: bool = False

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def accumulate(alpha: ScalarLike, beta: ScalarLike, depth: int) -> CocycleRun:
    """States ``k = 0..depth`` along the renormalization orbit.

    When the orbit reaches 0 or 1/2 the run stops early with ``boundary`` set.
    """
    a = as_scalar(alpha)
    b = as_scalar(beta)
    if not (ZERO < a < HALF and ZERO < b < HALF):
        raise ValueError("parameters must lie in (0, 1/2)")
    N = identity(4)
    d = ONE
    out: list[CocycleState] = []
    for k in range(depth + 1):
        nu = d * _dot(n_vector(a, b), _row_sums(N))
        interior = ZERO < a < HALF and ZERO < b < HALF
        q = branch_quad(a, b) if interior else None
        out.append(CocycleState(k, a, b, N, d, nu, q))
        if k == depth:
            break
        if not interior:
            return CocycleRun(out, boundary=True)
        N = mat_mul(n_matrix(q), N)
        d = d * (1 - 2 * a) * (1 - 2 * b)
        a, _ = f_step(a)
        b, _ = f_step(b)
    return CocycleRun(out)


def _dec(x: Scalar) -> str:
    import mpmath

    with mpmath.workdps(30):
        return mpmath.nstr(x.to_mpf(30), 15, min_fixed=-4, max_fixed=4)


def cocycle_csv(run: CocycleRun | Sequence[CocycleState]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "alpha_k", "beta_k", "d_k", "nu_O_kplus1", "alpha_k_dec", "beta_k_dec", "d_k_dec", "nu_dec"])
    for st in run:
        w.writerow(
            [
                st.k,
                format_scalar(st.alpha_k),
                format_scalar(st.beta_k),
                format_scalar(st.d_k),
                format_scalar(st.nu),
                _dec(st.alpha_k),
                _dec(st.beta_k),
                _dec(st.d_k),
                _dec(st.nu),
            ]
        )
    return buf.getvalue()


# ---- limit and spectral certificates ------------------------------------------------


def collatz_wielandt_upper(A: Matrix, iterations: int = 30) -> Fraction:
    """Exact upper bound ``max_i (A x)_i / x_i`` for the Perron root, ``x = A^p 1``."""
    n = len(A)
    x = tuple(Fraction(1) for _ in range(n))
    best = None
    for _ in range(iterations):
        y = tuple(sum(A[i][j] * x[j] for j in range(n)) for i in range(n))
        if any(v == 0 for v in x):
            raise ValueError("iterate has a zero entry; matrix is not primitive enough")
        bound = max(y[i] / x[i] for i in range(n))
        best = bound if best is None else min(best, bound)
        s = sum(y)
        x = tuple(v / s for v in y)
    return best


def spectral_ratio(A: Matrix, iterations: int = 200) -> float:
    """Power-iteration estimate of the Perron root (float, for reporting/oracles)."""
    import numpy as np

    M = np.array(A, dtype=float)
    x = np.ones(len(A))
    lam = 0.0
    for _ in range(iterations):
        y = M @ x
        lam = float(np.max(y) / np.max(x))
        x = y / np.max(y)
    return lam


@dataclass
class NSLimit:
    estimate: Scalar
    bracket: list[Scalar]
    converged: bool
    certificate: dict = field(default_factory=dict)


def _detect_cycle(states: list[CocycleState]) -> tuple[int, int] | None:
    seen: dict[tuple, int] = {}
    for st in states:
        key = (st.alpha_k, st.beta_k)
        if key in seen:
            return seen[key], st.k - seen[key]
        seen[key] = st.k
    return None


def ns_limit(alpha: ScalarLike, beta: ScalarLike, depth: int, tol: float = 1e-6) -> NSLimit:
    """Value ``ν(O_{depth+1})`` with the monotone sequence of upper bounds.

    ``converged`` holds when the last two values differ by less than ``tol``
    or when the parameter orbit is eventually periodic and the cycle
    contracts: ``d_cycle · λ_up(N_cycle) < 1`` with an exact Collatz-Wielandt
    upper bound, in which case the limit is 0.
    """
    run = accumulate(alpha, beta, depth)
    vals = [st.nu for st in run]
    cert: dict = {}
    converged = len(vals) >= 2 and float(abs(vals[-1] - vals[-2])) < tol
    cyc = _detect_cycle(run.states)
    if cyc is not None:
        start, period = cyc
        N = identity(4)
        d = ONE
        for st in run.states[start : start + period]:
            N = mat_mul(n_matrix(st.quad), N)
            d = d * (1 - 2 * st.alpha_k) * (1 - 2 * st.beta_k)
        lam = collatz_wielandt_upper(N)
        contraction = d * Scalar(lam)
        cert = {
            "cycle_start": start,
            "cycle_length": period,
            "d_cycle": format_scalar(d),
            "perron_upper": str(lam),
            "contraction_upper": format_scalar(contraction),
            "contracts": bool(contraction < ONE),
        }
        if contraction < ONE:
            converged = True
    return NSLimit(vals[-1], vals, converged, cert)


# ---- scaling inequality ---------------------------------------------------------------


def g_factor(x: ScalarLike, y: ScalarLike) -> Scalar:
    """``g(x, y) = 1 - (4/3) x y``."""
    return 1 - Scalar(4, 3) * as_scalar(x) * as_scalar(y)


@dataclass(frozen=True)
class ScalingResult:
    holds: bool
    margin: Scalar  # min over entries of rhs - lhs
    lhs: tuple[Scalar, ...]
    rhs: tuple[Scalar, ...]


def scaling_check(gamma: ScalarLike, delta: ScalarLike) -> ScalingResult:
    """``(1-2γ)(1-2δ) N(γ,δ)^T n_{f γ, f δ} <= g(fγ, fδ) n_{γ,δ}`` entrywise."""
    g = as_scalar(gamma)
    d = as_scalar(delta)
    q = branch_quad(g, d)
    fg, _ = f_step(g)
    fd, _ = f_step(d)
    Nt = transpose(n_matrix(q))
    scale = (1 - 2 * g) * (1 - 2 * d)
    nf = n_vector(fg, fd)
    lhs = tuple(scale * _dot(row, nf) for row in Nt)
    gg = g_factor(fg, fd)
    rhs = tuple(gg * x for x in n_vector(g, d))
    slack = [r - l for l, r in zip(lhs, rhs)]
    margin = min(slack)
    return ScalingResult(margin >= 0, margin, lhs, rhs)


# ---- decay control inequality -----------------------------------------------------------


def decay_closed_forms(k: int, gamma: Fraction, delta: Fraction) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """``v = n_{α,β}/d`` and ``w = N^T n_{γ,δ}`` for a k-upward block ending at (γ, δ).

    Both are bilinear in (γ, δ).
    """
    g, d = Fraction(gamma), Fraction(delta)
    v = (
        (1 + g) * (1 + 2 * d * k),
        Fraction(1, 2) * (1 + 2 * (1 + g) * k) * (3 + d * (2 + 6 * k)),
        (1 + 2 * (1 + g) * k) * (1 + d * (1 + 2 * k)),
        Fraction(1, 2) * (1 + 2 * (1 + g) * (1 + k)) * (1 + 2 * d * k),
    )
    w = (
        1 + g - 6 * g * d,
        Fraction(1, 2) * (3 * (1 + 2 * (1 + g) * k) - 2 * d * (8 * g - 1) * (1 + 3 * k)),
        1 + 2 * (1 + g) * k + d * (2 * k + 1) - g * d * (16 * k + 6),
        Fraction(1, 2) * (1 + 2 * (1 + g) * (1 + k) - 2 * d * (8 * g * (k + 1) - k)),
    )
    return v, w


def decay_direct(k: int, gamma: Fraction, delta: Fraction) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Same vectors computed by running the inverse branches and multiplying matrices."""
    from .params import upward_block

    quads = upward_block(k)
    al, be = [None] * (k + 2), [None] * (k + 2)
    al[k + 1], be[k + 1] = Fraction(gamma), Fraction(delta)
    for i in range(k, -1, -1):
        m, r, n, s = quads[i]
        u = r * al[i + 1] + m
        al[i] = u / (1 + 2 * u)
        u = s * be[i + 1] + n
        be[i] = u / (1 + 2 * u)
    d = Fraction(1)
    N = identity(4)
    for i in range(k + 1):
        d *= (1 - 2 * al[i]) * (1 - 2 * be[i])
        N = mat_mul(n_matrix(quads[i]), N)

    def nv(a, b):
        return (a * (1 - 2 * b), (1 - 2 * a) / 2, b * (1 - 2 * a), (1 - 2 * b) / 2)

    v = tuple(x / d for x in nv(al[0], be[0]))
    nt = nv(al[k + 1], be[k + 1])
    w = tuple(sum(N[j][i] * nt[j] for j in range(4)) for i in range(4))
    return v, w


@dataclass(frozen=True)
class DecayCheck:
    holds: bool
    margin: Fraction  # min over checked points and entries of w_i/v_i - (1-eps)
    points_checked: int
    box: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]


def decay_inequality_check(k: int, k_prime: int, eps: ScalarLike, grid: int = 0) -> DecayCheck:
    """Certify ``d N^T n_{γ,δ} > (1-ε) n_{α,β}`` over the whole successor box.

    The pair (α, β) has a k-upward block and (γ, δ) = f^{k+1}(α, β) has a
    k'-rightward one, so (γ, δ) ranges over the box of the special
    itinerary bounds.  The inequality is equivalent to ``w > (1-ε) v`` with
    both sides bilinear in (γ, δ), so it holds on the box iff it holds at
    the four corners.  At each corner the closed forms are cross-checked
    against direct composition.  ``grid > 0`` adds a ``grid x grid``
    interior refinement as an extra check.  By symmetry the same result
    holds with upward and rightward exchanged.
    """
    if k < 1 or k_prime < 1:
        raise ValueError("k and k' must be at least 1")
    e = as_scalar(eps).as_fraction()
    if not (0 < e < 1):
        raise ValueError("eps must lie in (0, 1)")
    (g_lo, g_hi), (d_lo, d_hi) = special_box(k_prime, upward=False)
    pts = [(g, d) for g in (g_lo, g_hi) for d in (d_lo, d_hi)]
    if grid > 0:
        for i in range(grid + 1):
            for j in range(grid + 1):
                pts.append((g_lo + (g_hi - g_lo) * Fraction(i, grid), d_lo + (d_hi - d_lo) * Fraction(j, grid)))
    margin = None
    for idx, (g, d) in enumerate(pts):
        v, w = decay_closed_forms(k, g, d)
        if idx < 4:
            if (v, w) != decay_direct(k, g, d):
                raise AssertionError(f"closed forms disagree with direct composition at k={k}, ({g},{d})")
        for vi, wi in zip(v, w):
            m = wi / vi - (1 - e)
            margin = m if margin is None else min(margin, m)
    return DecayCheck(margin > 0, margin, len(pts), ((g_lo, g_hi), (d_lo, d_hi)))
