"""The parameter map f(t) = t/(1-2t) mod G, its branch coding, and itineraries.

Also holds the special block itineraries used to build parameters whose
renormalization orbit stays away from period-four behaviour, and the
invariant density of f together with the plug-set measure bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .numerics import HALF, ONE, ZERO, Scalar, ScalarLike, as_scalar, reduce_mod_G

__all__ = [
    "Branch",
    "Itinerary",
    "ParamPair",
    "BoundaryReached",
    "f_step",
    "f_value",
    "branch_inverse",
    "branch_interval",
    "itinerary_of",
    "param_from_itinerary",
    "rational_termination",
    "upward_block",
    "rightward_block",
    "UnderstandableItinerary",
    "understandable_itinerary",
    "special_box",
    "decay_control_bound",
    "DecaySchedule",
    "decay_schedule",
    "invariant_density",
    "invariant_measure",
    "pushforward_defect",
    "pushforward_tail",
    "plug_measure",
    "FIXED_POINT",
]


class BoundaryReached(ValueError):
    """The f-orbit reached 1/2, where f is undefined."""


@dataclass(frozen=True, order=True)
class Branch:
    """Branch label (n, r) of f.  Branch (n, r) covers the interval ``I_{n,r}``."""

    n: int
    r: int

    def __post_init__(self):
        if self.r not in (1, -1):
            raise ValueError("branch sign must be +1 or -1")
        if self.n < 0 or (self.n == 0 and self.r == -1):
            raise ValueError(f"({self.n},{self.r}) is not a branch label")

    def __str__(self) -> str:
        return f"({self.n},{self.r})"


@dataclass(frozen=True)
class Itinerary:
    """Finite prefix of the branch coding of a parameter.

    ``zero_tail`` marks the coding as eventually (0,1) forever (the orbit hit
    zero).  ``boundary`` marks an orbit that reached 1/2 after the prefix.
    """

    branches: tuple[Branch, ...]
    zero_tail: bool = False
    boundary: bool = False

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __getitem__(self, i):
        return self.branches[i]

    def to_text(self) -> str:
        return ",".join(str(b) for b in self.branches)

    @classmethod
    def from_text(cls, text: str) -> "Itinerary":
        parts = text.replace(" ", "").strip(",")
        out = []
        for chunk in parts.split("),"):
            chunk = chunk.strip("()")
            if not chunk:
                continue
            n, r = chunk.split(",")
            out.append(Branch(int(n), int(r)))
        if not out:
            raise ValueError("empty itinerary")
        return cls(tuple(out))

    def to_json(self) -> dict:
        return {"branches": [[b.n, b.r] for b in self.branches], "boundary": self.boundary}

    @classmethod
    def from_json(cls, data: dict | str) -> "Itinerary":
        if isinstance(data, str):
            data = json.loads(data)
        br = tuple(Branch(int(n), int(r)) for n, r in data["branches"])
        if not br:
            raise ValueError("empty itinerary")
        return cls(br, boundary=bool(data.get("boundary", False)))


@dataclass(frozen=True)
class ParamPair:
    alpha: Scalar
    beta: Scalar
    alpha_itinerary: Itinerary | None = None
    beta_itinerary: Itinerary | None = None

    def __post_init__(self):
        for t in (self.alpha, self.beta):
            if t < 0 or t > HALF:
                raise ValueError("parameters must lie in [0, 1/2]")
        for t, it in ((self.alpha, self.alpha_itinerary), (self.beta, self.beta_itinerary)):
            if it is not None:
                got = itinerary_of(t, len(it))
                if got.branches[: len(it)] != it.branches[: len(got)]:
                    raise ValueError(f"itinerary {it.to_text()} does not code {t}")


# α = β = (2 - sqrt 2)/2 is fixed by f with branch (1,-1).
FIXED_POINT = Scalar.surd(2, -1, 2, 2)


def f_step(t: ScalarLike) -> tuple[Scalar, Branch]:
    """One application of f with its branch label.

    >>> f_step(Scalar(1, 4))
    (Scalar('1/2'), Branch(n=0, r=1))
    """
    t = as_scalar(t)
    if t < 0 or t >= HALF:
        if t == HALF:
            raise BoundaryReached("f is undefined at 1/2")
        raise ValueError(f"f_step needs t in [0, 1/2), got {t}")
    g = reduce_mod_G(t / (ONE - 2 * t))
    return g.reduced, Branch(g.integer_part, g.orientation)


def f_value(t: ScalarLike) -> Scalar:
    return f_step(t)[0]


def branch_inverse(branch: Branch, x: ScalarLike) -> Scalar:
    """The inverse branch ``g_{n,r}(x) = (rx+n)/(1+2(rx+n))``."""
    x = as_scalar(x)
    u = branch.r * x + branch.n
    return u / (1 + 2 * u)


def branch_interval(branch: Branch) -> tuple[Fraction, Fraction]:
    """Closed interval ``I_{n,r}`` as exact fractions."""
    n = branch.n
    if branch.r == 1:
        return Fraction(n, 1 + 2 * n), Fraction(2 * n + 1, 4 * n + 4)
    return Fraction(2 * n - 1, 4 * n), Fraction(n, 1 + 2 * n)


def itinerary_of(t: ScalarLike, depth: int) -> Itinerary:
    """Branch coding of the first ``depth`` points of the f-orbit of ``t``.

    The orbit of a rational reaching 0 continues with (0,1) and sets
    ``zero_tail``.  Reaching 1/2 stops the prefix early with ``boundary``.
    """
    t = as_scalar(t)
    out: list[Branch] = []
    for _ in range(depth):
        if t == HALF:
            return Itinerary(tuple(out), boundary=True)
        t, b = f_step(t)
        out.append(b)
    return Itinerary(tuple(out), zero_tail=(t == ZERO))


def param_from_itinerary(it: Itinerary | Sequence[Branch]) -> tuple[tuple[Fraction, Fraction], Fraction]:
    """Rational enclosure of the parameter coded by a prefix.

    Returns ``((lo, hi), midpoint)``: the image of ``[0, 1/2]`` under the
    composition of inverse branches.  A ``zero_tail`` itinerary collapses to
    the exact point.
    """
    branches = tuple(it)
    if not branches:
        raise ValueError("empty itinerary")
    if isinstance(it, Itinerary) and it.zero_tail:
        a = b = Fraction(0)
    else:
        a, b = Fraction(0), Fraction(1, 2)
    for br in reversed(branches):
        ga = _g_frac(br, a)
        gb = _g_frac(br, b)
        a, b = (ga, gb) if ga <= gb else (gb, ga)
    return (a, b), (a + b) / 2


def _g_frac(br: Branch, x: Fraction) -> Fraction:
    u = br.r * x + br.n
    return u / (1 + 2 * u)


def rational_termination(p: int, q: int) -> int:
    """Number of f-steps for the orbit of ``p/q`` to reach 0 or 1/2."""
    t = Fraction(p, q)
    if not (0 <= t < Fraction(1, 2)):
        if t == Fraction(1, 2):
            return 0
        raise ValueError("p/q must lie in [0, 1/2]")
    steps = 0
    x = Scalar(t)
    while x != ZERO and x != HALF:
        x = f_value(x)
        steps += 1
    return steps


# ---------------------------------------------------------------------------
# Special itineraries of pairs


Quad = tuple[int, int, int, int]  # (m, r, n, s)


def upward_block(k: int) -> list[Quad]:
    """The k-upward itinerary block of length k+1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [(0, 1, 1, 1)] + [(0, 1, 0, 1)] * (k - 1) + [(1, 1, 0, 1)]


def rightward_block(k: int) -> list[Quad]:
    """The k-rightward block: the upward block with the coordinates swapped."""
    return [(n, s, m, r) for (m, r, n, s) in upward_block(k)]


@dataclass(frozen=True)
class UnderstandableItinerary:
    alpha: Itinerary
    beta: Itinerary
    quads: tuple[Quad, ...]
    marks: tuple[int, ...]
    k_schedule: tuple[int, ...]


def understandable_itinerary(k_schedule: Sequence[int]) -> UnderstandableItinerary:
    """Concatenate upward (even j) and rightward (odd j) blocks.

    ``marks`` are the shift times ``a_0 = 0``, ``a_{j+1} = a_j + k_j + 1``;
    the final mark is the total length.
    """
    ks = [int(k) for k in k_schedule]
    if not ks:
        raise ValueError("k schedule must be nonempty")
    quads: list[Quad] = []
    marks = [0]
    for j, k in enumerate(ks):
        quads.extend(upward_block(k) if j % 2 == 0 else rightward_block(k))
        marks.append(marks[-1] + k + 1)
    a = Itinerary(tuple(Branch(m, r) for m, r, _, _ in quads))
    b = Itinerary(tuple(Branch(n, s) for _, _, n, s in quads))
    return UnderstandableItinerary(a, b, tuple(quads), tuple(marks), tuple(ks))


def special_box(k: int, upward: bool = True) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Intervals containing (α, β) when the pair has a k-upward itinerary.

    For a rightward itinerary the roles of α and β are exchanged.
    """
    small = (Fraction(1, 3 + 2 * k), Fraction(3, 8 + 6 * k))
    big = (Fraction(1, 3), Fraction(3 + 2 * k, 8 + 6 * k))
    return (small, big) if upward else (big, small)


def decay_control_bound(k: int) -> Fraction:
    """Upper bound for 4αβ over the k-upward box: ``12(3+2k)/(8+6k)^2``.

    The first block of the construction loses at most this fraction of
    measure, since the measure of the first renormalization set is 1-4αβ.
    """
    return Fraction(12 * (3 + 2 * k), (8 + 6 * k) ** 2)


@dataclass
class DecaySchedule:
    eta: Fraction
    epsilons: list[Fraction]
    k_schedule: list[int]
    product: Fraction  # product of (1 - eps_j) over the certified stages
    limit_bound: Fraction  # lower bound for the product over the full schedule
    certificate: list[dict] = field(default_factory=list)


def _least_passing_k(k_prev: int, eps: Fraction, k_cap: int, grid: int):
    """Galloping search then bisection for the least k' passing the decay check.

    Bisection assumes the check is monotone in k' (larger k' pushes δ
    towards 0, where both sides agree); the caller records whether k'-1
    fails so the certificate shows minimality directly.
    """
    from .cocycle import decay_inequality_check

    lo, hi = 0, 1
    res = decay_inequality_check(k_prev, hi, eps, grid=grid)
    while not res.holds:
        lo, hi = hi, hi * 2
        if hi > k_cap:
            last = decay_inequality_check(k_prev, k_cap, eps, grid=grid)
            if last.holds:
                hi, res = k_cap, last
                break
            raise RuntimeError(
                f"k search exceeded cap {k_cap} (k_prev={k_prev}, eps={eps}); "
                f"margin at cap {float(last.margin):.3e}"
            )
        res = decay_inequality_check(k_prev, hi, eps, grid=grid)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        r = decay_inequality_check(k_prev, mid, eps, grid=grid)
        if r.holds:
            hi, res = mid, r
        else:
            lo = mid
    return hi, res


def decay_schedule(
    eta: ScalarLike,
    stages: int | None = None,
    k_cap: int = 1_000_000,
    grid: int = 0,
) -> DecaySchedule:
    """Choose ε_j = η 2^{-j-1} and the block lengths k_j of the construction.

    ``k_0`` is the least k with ``12(3+2k)/(8+6k)^2 < ε_0``.  Each later
    ``k_j`` is the least k passing
    :func:`rexmap.cocycle.decay_inequality_check` with predecessor
    ``k_{j-1}`` and tolerance ``ε_j``.  Since every ε_j is positive the
    product of ``1-ε_j`` over all j exceeds ``1-η``; the certificate stores
    each checked inequality.  ``stages`` defaults to four blocks.
    """
    from .cocycle import decay_inequality_check

    eta_s = as_scalar(eta)
    if not eta_s.is_rational:
        raise ValueError("eta must be rational")
    eta_f = eta_s.as_fraction()
    if not (0 < eta_f < 1):
        raise ValueError("eta must lie in (0, 1)")
    stages = 4 if stages is None else stages
    if stages < 1:
        raise ValueError("need at least one stage")
    eps = [eta_f / 2 ** (j + 1) for j in range(stages)]
    cert: list[dict] = []
    k0 = 1
    while decay_control_bound(k0) >= eps[0]:
        k0 += 1
        if k0 > k_cap:
            raise RuntimeError(f"k_0 search exceeded cap {k_cap} for eps {eps[0]}")
    cert.append(
        {
            "stage": 0,
            "k": k0,
            "epsilon": str(eps[0]),
            "bound": str(decay_control_bound(k0)),
            "check": "4*alpha*beta <= 12(3+2k)/(8+6k)^2 < eps_0",
            "passed": True,
        }
    )
    ks = [k0]
    for j in range(1, stages):
        kp, res = _least_passing_k(ks[-1], eps[j], k_cap, grid)
        cert.append(
            {
                "stage": j,
                "k": kp,
                "k_prev": ks[-1],
                "epsilon": str(eps[j]),
                "margin": str(res.margin),
                "points_checked": res.points_checked,
                "predecessor_fails": kp == 1 or not decay_inequality_check(ks[-1], kp - 1, eps[j], grid=grid).holds,
                "check": "d N^T n_(gamma,delta) > (1-eps) n_(alpha,beta) over the box",
                "passed": True,
            }
        )
        ks.append(kp)
    prod = Fraction(1)
    for e in eps:
        prod *= 1 - e
    # The remaining factors satisfy prod_{j>=J}(1-eps_j) >= 1 - sum_{j>=J} eps_j = 1 - eta/2^J.
    limit = prod * (1 - eta_f / 2**stages)
    return DecaySchedule(eta_f, eps, ks, prod, limit, cert)


# ---------------------------------------------------------------------------
# Invariant measure of f


def invariant_density(x: ScalarLike) -> Scalar:
    """Density ``1/x + 1/(1-x)`` of the infinite f-invariant measure."""
    x = as_scalar(x)
    if x <= 0 or x >= 1:
        raise ValueError("density is defined on (0, 1)")
    return 1 / x + 1 / (1 - x)


def invariant_measure(a: ScalarLike, b: ScalarLike, dps: int = 50):
    """``m([a,b])`` through the antiderivative ``log(x/(1-x))`` (mpmath value)."""
    import mpmath

    with mpmath.workdps(dps):
        x = as_scalar(a).to_mpf(dps)
        y = as_scalar(b).to_mpf(dps)
        return mpmath.log(y / (1 - y)) - mpmath.log(x / (1 - x))


def pushforward_tail(a: ScalarLike, b: ScalarLike, cutoff: int, dps: int = 50):
    """Closed form of the branch mass beyond ``cutoff``.

    The orientation preserving branches with n > N carry
    ``log((N+1+b)/(N+1+a))`` and the reversing ones
    ``log((N+1-a)/(N+1-b))``; both sums telescope.
    """
    import mpmath

    a = as_scalar(a).to_mpf(dps)
    b = as_scalar(b).to_mpf(dps)
    with mpmath.workdps(dps):
        N = mpmath.mpf(cutoff + 1)
        return mpmath.log((N + b) / (N + a)) + mpmath.log((N - a) / (N - b))


def pushforward_defect(a: ScalarLike, b: ScalarLike, branch_cutoff: int, dps: int = 50):
    """``|m([a,b]) - sum_branches m(g_{n,r}([a,b]))|`` over branches with n <= cutoff."""
    import mpmath

    a = as_scalar(a)
    b = as_scalar(b)
    if not (0 < a <= b < HALF):
        raise ValueError("need 0 < a <= b < 1/2")
    with mpmath.workdps(dps):
        total = invariant_measure(a, b, dps)
        acc = mpmath.mpf(0)
        for n in range(branch_cutoff + 1):
            for r in (1, -1):
                if n == 0 and r == -1:
                    continue
                br = Branch(n, r)
                lo, hi = branch_inverse(br, a), branch_inverse(br, b)
                if hi < lo:
                    lo, hi = hi, lo
                acc += invariant_measure(lo, hi, dps)
        return abs(total - acc)


def plug_measure(eps: ScalarLike, dps: int = 50):
    """Upper bound ``2 log((1-ε)/(1-3ε)) log((1-ε)/ε)`` for the plug set measure."""
    import mpmath

    e = as_scalar(eps)
    if e <= 0 or e >= Scalar(1, 4):
        raise ValueError("eps must lie in (0, 1/4)")
    with mpmath.workdps(dps):
        x = e.to_mpf(dps)
        return 2 * mpmath.log((1 - x) / (1 - 3 * x)) * mpmath.log((1 - x) / x)
