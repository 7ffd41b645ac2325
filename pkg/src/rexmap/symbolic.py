"""Shift-space dynamics on pairs of ±1 sequences with a direction.

The skew map ``Φ(ω, η, (a,b)) = (σ^{sb} ω, σ^{sa} η, s(b,a))`` with
``s = ω_0 η_0`` is the symbolic model of the lifted rectangle exchange: the
coding ``x -> (ς_α(x))`` turns ``Ψ̃`` into ``Φ``.  Collapsing both sequences
(the map ``ρ``) conjugates the first return of ``Φ`` to the set of pairs
that are collapsible at 0 back to ``Φ`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from .numerics import HALF, ONE, ZERO, Scalar, ScalarLike, as_scalar, floor_quotient
from .pet import DIRECTIONS, Direction, LiftState, psi_map
from .sequences import NotCollapsible, SeqWindow, WindowError, in_kept
from .tiling import Tiling, trace_curve

__all__ = [
    "SymbolicState",
    "StabilityReport",
    "code_rotation",
    "collapse",
    "is_zero_collapsible",
    "return_times",
    "rrt_closed_form",
    "rot_ret_closed_form",
    "in_cylinder",
    "phi_step",
    "phi_power",
    "lift_to_symbolic",
    "rho",
    "in_R1",
    "first_return_R1",
    "returns_formula",
    "step_class",
    "step_class_census",
    "stable_classification",
    "R1Error",
]


class R1Error(ValueError):
    """A state outside ``R_1 = C x C x N`` was given to the renormalization."""


@dataclass(frozen=True)
class SymbolicState:
    omega: SeqWindow
    eta: SeqWindow
    v: Direction

    def signature(self, radius: int) -> tuple:
        """Finite fingerprint used in tests: entries in ``[-radius, radius]``."""
        return (tuple(self.omega.values(-radius, radius)), tuple(self.eta.values(-radius, radius)), self.v)


@dataclass(frozen=True)
class StabilityReport:
    status: str  # "stable-periodic" | "periodic-not-stable" | "open-within-bound"
    period: int | None


# ---------------------------------------------------------------------------
# Sequences


def code_rotation(alpha: ScalarLike, x: ScalarLike) -> SeqWindow:
    """Coding of the rotation orbit: entry n is +1 iff ``x + nα`` mod 1 < 1/2."""
    return SeqWindow.rotation(alpha, x)


def is_zero_collapsible(s: SeqWindow) -> bool:
    return in_kept(s, 0)


def collapse(s: SeqWindow, lo: int, hi: int, search_limit: int = 100_000) -> SeqWindow:
    """Explicit window ``[lo, hi]`` of the collapsed sequence ``c(s)``.

    Raises :class:`NotCollapsible` when 0 is not kept or the kept indices
    cannot be found within the available window.
    """
    lazy = s.collapsed(search_limit)
    try:
        return SeqWindow.explicit(lazy.values(lo, hi), lo)
    except WindowError as exc:
        raise NotCollapsible("kept indices ran past the window") from exc


def return_times(s: SeqWindow, cap: int = 100_000) -> tuple[int, int]:
    """Forward and backward first return times of the shift to the collapsible set."""
    if not in_kept(s, 0):
        raise NotCollapsible("sequence is not zero-collapsible")
    out = []
    for step in (1, -1):
        for n in range(1, cap + 1):
            if in_kept(s, step * n):
                out.append(n)
                break
        else:
            raise NotCollapsible(f"no return within {cap}")
    return out[0], out[1]


def rrt_closed_form(alpha: ScalarLike, x: ScalarLike) -> tuple[int, int]:
    """``r_+ = 2⌊x/(1-2α)⌋ + 1`` and ``r_- = 2⌊(1-x)/(1-2α)⌋ + 1`` for x in ``[α, 1-α)``."""
    alpha = as_scalar(alpha)
    x = as_scalar(x)
    w = ONE - 2 * alpha
    return 2 * floor_quotient(x, w) + 1, 2 * floor_quotient(ONE - x, w) + 1


def in_cylinder(s: SeqWindow, pattern: str, zero_at: int) -> bool:
    """Does ``s`` read ``pattern`` with ``pattern[zero_at]`` at index 0?"""
    for i, ch in enumerate(pattern):
        if s[i - zero_at] != (1 if ch == "+" else -1):
            return False
    return True


def rot_ret_closed_form(s: SeqWindow, alpha: ScalarLike, search_limit: int = 100_000) -> tuple[int, int]:
    """Return times from the branch ``(n, r)`` of α and two cylinders of ``c(s)``.

    With ``r = +1`` the times are ``2n+3`` or ``2n+1``; with ``r = -1`` they are
    ``2n-1`` or ``2n+1``.  The longer time applies when the collapsed
    sequence lies in the corresponding cylinder around index 0.
    """
    from .params import f_step

    _, br = f_step(alpha)
    n, r = br.n, br.r
    c = s.collapsed(search_limit)
    if r == 1:
        rp = 2 * n + 3 if in_cylinder(c, "-+", 0) else 2 * n + 1
        rm = 2 * n + 3 if in_cylinder(c, "-+", 1) else 2 * n + 1
    else:
        rp = 2 * n - 1 if in_cylinder(c, "+-", 0) else 2 * n + 1
        rm = 2 * n - 1 if in_cylinder(c, "+-", 1) else 2 * n + 1
    return rp, rm


# ---------------------------------------------------------------------------
# The skew map Φ


def phi_step(st: SymbolicState) -> SymbolicState:
    a, b = st.v
    s = st.omega[0] * st.eta[0]
    return SymbolicState(st.omega.shift(s * b), st.eta.shift(s * a), (s * b, s * a))


def phi_power(st: SymbolicState, k: int) -> SymbolicState:
    for _ in range(k):
        st = phi_step(st)
    return st


def lift_to_symbolic(state: LiftState, alpha: ScalarLike, beta: ScalarLike) -> SymbolicState:
    """The factor map ``π(x, y, v) = (ς_α(x), ς_β(y), v)``."""
    return SymbolicState(code_rotation(alpha, state.x), code_rotation(beta, state.y), state.v)


def in_R1(st: SymbolicState) -> bool:
    return in_kept(st.omega, 0) and in_kept(st.eta, 0)


def rho(st: SymbolicState, search_limit: int = 100_000) -> SymbolicState:
    """``ρ(ω, η, v) = (c(ω), c(η), v)`` on ``R_1``."""
    bad = [name for name, s in (("omega", st.omega), ("eta", st.eta)) if not in_kept(s, 0)]
    if bad:
        raise R1Error(f"state not in R_1: {' and '.join(bad)} not zero-collapsible")
    return SymbolicState(st.omega.collapsed(search_limit), st.eta.collapsed(search_limit), st.v)


def returns_formula(st: SymbolicState) -> int:
    """Closed-form first return time to ``R_1``: ``2r - 1`` with r the shift return time."""
    a, b = st.v
    s = st.omega[0] * st.eta[0]
    w = (s * b, s * a)
    if w[1] == 0:
        rp, rm = return_times(st.omega)
        r = rp if w[0] == 1 else rm
    else:
        rp, rm = return_times(st.eta)
        r = rp if w[1] == 1 else rm
    return 2 * r - 1


def first_return_R1(st: SymbolicState, cap: int = 100_000, check: bool = True) -> tuple[SymbolicState, int]:
    """First return of Φ to ``R_1``; the time is checked against :func:`returns_formula`."""
    if not in_R1(st):
        raise R1Error("state not in R_1")
    cur = st
    for t in range(1, cap + 1):
        cur = phi_step(cur)
        if in_R1(cur):
            if check:
                expect = returns_formula(st)
                if expect != t:
                    raise AssertionError(f"return time {t} differs from formula {expect}")
            return cur, t
    raise RuntimeError(f"no return to R_1 within {cap} steps")


def step_class(st: SymbolicState) -> int:
    """Step class 1..6 from the direction ``w = (sb, sa)`` and the sign pair it crosses."""
    a, b = st.v
    s = st.omega[0] * st.eta[0]
    w = (s * b, s * a)
    if w == (1, 0):
        p, q, base = st.omega[0], st.omega[1], 0
    elif w == (-1, 0):
        p, q, base = st.omega[-1], st.omega[0], 0
    elif w == (0, 1):
        p, q, base = st.eta[0], st.eta[1], 3
    else:
        p, q, base = st.eta[-1], st.eta[0], 3
    if p == -1 and q == 1:
        return base + 1
    if p == 1 and q == -1:
        return base + 2
    return base + 3


def step_class_census(st: SymbolicState, steps: int) -> list[int]:
    """Counts of step classes over ``st, Φ(st), ..., Φ^{steps-1}(st)``."""
    counts = [0] * 6
    cur = st
    for _ in range(steps):
        counts[step_class(cur) - 1] += 1
        cur = phi_step(cur)
    return counts


def stable_classification(st: SymbolicState, period_cap: int = 10_000) -> StabilityReport:
    """Stable periodicity via the tiling curve through the origin normal ``v``.

    A closed curve means a stable periodic orbit whose period is the curve
    length.  Otherwise, when both sequences have periodic backends, the
    Φ-orbit is tracked through the finite set of (phase, phase, direction)
    states to detect a periodic orbit that is not stable.
    """
    t = Tiling(st.omega, st.eta)
    tr = trace_curve(t, (0, 0), st.v, period_cap)
    if tr.kind == "closed":
        return StabilityReport("stable-periodic", tr.length)
    if st.omega.kind == "periodic" and st.eta.kind == "periodic":
        p1 = len(st.omega.backend.pattern)
        p2 = len(st.eta.backend.pattern)
        key0 = (st.omega.offset % p1, st.eta.offset % p2, st.v)
        cur = st
        for k in range(1, period_cap + 1):
            cur = phi_step(cur)
            if (cur.omega.offset % p1, cur.eta.offset % p2, cur.v) == key0:
                return StabilityReport("periodic-not-stable", k)
    return StabilityReport("open-within-bound", None)
