"""The rectangle exchange maps and their lift to the torus.

A lift state is a point ``(x, y)`` of the torus ``R^2/Z^2`` together with a
direction ``v`` in ``N = {(1,0), (-1,0), (0,1), (0,-1)}``.  One step of the
lifted map moves exactly one coordinate by ``±α`` or ``±β`` and turns the
direction.  The quotient map acts on the fundamental domain
``[0,1/2) x [0,1)`` of the lattice generated by ``(1/2,1/2)`` and ``(-1/2,1/2)``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .numerics import HALF, ONE, ZERO, Scalar, ScalarLike, as_scalar, format_scalar, reduce_mod_G
from .params import f_value

__all__ = [
    "Direction",
    "DIRECTIONS",
    "LiftState",
    "PeriodReport",
    "ReturnCapExceeded",
    "sector",
    "psi_lift_step",
    "psi_lift_inverse",
    "psi_quotient_step",
    "project_to_Y",
    "quotient_sector",
    "in_Z",
    "first_return_to_Z",
    "psi_map",
    "conjugacy_phi",
    "RenormalizationReport",
    "verify_renormalization",
    "detect_period",
    "MCReport",
    "periodic_measure_mc",
    "orbit",
    "orbit_csv",
    "pieces",
    "PRNG_NAME",
]

Direction = tuple[int, int]
DIRECTIONS: tuple[Direction, ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
PRNG_NAME = "numpy.PCG64/SeedSequence v1"


class ReturnCapExceeded(RuntimeError):
    """No return within the step cap (the orbit is open within the bound)."""


@dataclass(frozen=True, slots=True)
class LiftState:
    x: Scalar
    y: Scalar
    v: Direction

    def __post_init__(self):
        if not (ZERO <= self.x < ONE and ZERO <= self.y < ONE):
            raise ValueError("coordinates must lie in [0, 1)")
        if self.v not in DIRECTIONS:
            raise ValueError(f"{self.v} is not a direction")

    @classmethod
    def make(cls, x: ScalarLike, y: ScalarLike, v: Direction) -> "LiftState":
        x = as_scalar(x)
        y = as_scalar(y)
        return cls(x - x.floor(), y - y.floor(), tuple(v))


def _new(x: Scalar, y: Scalar, v: Direction) -> LiftState:
    # Skips validation in hot loops; callers guarantee the invariants.
    st = object.__new__(LiftState)
    object.__setattr__(st, "x", x)
    object.__setattr__(st, "y", y)
    object.__setattr__(st, "v", v)
    return st


def sector(x: Scalar, y: Scalar) -> int:
    """+1 when ``x < 1/2`` and ``y < 1/2`` agree as booleans, else -1."""
    return 1 if (x < HALF) == (y < HALF) else -1


def _shift_mod1(x: Scalar, t: Scalar, sign: int) -> Scalar:
    # x in [0,1), t in [0,1/2]: a single wrap suffices.
    if sign > 0:
        z = x + t
        return z - 1 if z >= ONE else z
    z = x - t
    return z + 1 if z < ZERO else z


def psi_lift_step(state: LiftState, alpha: Scalar, beta: Scalar) -> LiftState:
    """One step ``((x,y),(a,b)) -> ((x+bsα, y+asβ) mod 1, (bs, as))``."""
    x, y = state.x, state.y
    a, b = state.v
    s = 1 if (x < HALF) == (y < HALF) else -1
    if b:
        x = _shift_mod1(x, alpha, b * s)
    else:
        y = _shift_mod1(y, beta, a * s)
    return _new(x, y, (b * s, a * s))


def psi_lift_inverse(state: LiftState, alpha: Scalar, beta: Scalar) -> LiftState:
    """Inverse of :func:`psi_lift_step`."""
    c, e = state.v  # c = b*s, e = a*s
    x, y = state.x, state.y
    if c:
        x = _shift_mod1(x, alpha, -c)
    else:
        y = _shift_mod1(y, beta, -e)
    s = sector(x, y)
    return _new(x, y, (s * e, s * c))


def project_to_Y(x: Scalar, y: Scalar) -> tuple[Scalar, Scalar]:
    """Reduce a torus point modulo the lattice into ``[0,1/2) x [0,1)``."""
    x = x - x.floor()
    y = y - y.floor()
    if x >= HALF:
        x = x - HALF
        y = y - HALF if y >= HALF else y + HALF
    return x, y


def quotient_sector(x: Scalar, y: Scalar) -> int:
    """On the fundamental domain: A_1 = [0,1/2)x[0,1/2), A_-1 = [0,1/2)x[1/2,1)."""
    return 1 if y < HALF else -1


def psi_quotient_step(
    state: tuple[Scalar, Scalar, Direction], alpha: Scalar, beta: Scalar
) -> tuple[Scalar, Scalar, Direction]:
    """The quotient map on ``Y x N`` with the point kept in the fundamental domain."""
    x, y, (a, b) = state
    if not (ZERO <= x < HALF and ZERO <= y < ONE):
        raise ValueError("point must lie in [0,1/2) x [0,1)")
    s = quotient_sector(x, y)
    nx, ny = project_to_Y(x + b * s * alpha, y + a * s * beta)
    return nx, ny, (b * s, a * s)


def in_Z(state: LiftState, alpha: Scalar, beta: Scalar) -> bool:
    """Membership in ``Z = [α,1-α) x [β,1-β)``."""
    return alpha <= state.x < ONE - alpha and beta <= state.y < ONE - beta


def first_return_to_Z(
    state: LiftState, alpha: Scalar, beta: Scalar, step_cap: int = 100_000
) -> tuple[LiftState, int]:
    """First return of the lifted map to ``Z x N``; returns ``(state', time)``."""
    if not in_Z(state, alpha, beta):
        raise ValueError("state must lie in Z x N")
    lo_x, hi_x = alpha, ONE - alpha
    lo_y, hi_y = beta, ONE - beta
    cur = state
    for t in range(1, step_cap + 1):
        cur = psi_lift_step(cur, alpha, beta)
        if lo_x <= cur.x < hi_x and lo_y <= cur.y < hi_y:
            return cur, t
    raise ReturnCapExceeded(f"no return to Z within {step_cap} steps")


def psi_map(t: Scalar, x: Scalar) -> Scalar:
    """Affine map from ``[t, 1-t)`` onto the circle conjugating the return map.

    Orientation preserving when ``t/(1-2t)`` reduces with positive sign
    (ties included), orientation reversing otherwise.
    """
    width = ONE - 2 * t
    if reduce_mod_G(t / width).orientation == 1:
        return (x - HALF) / width + HALF
    z = (HALF - x) / width
    return z - z.floor()


def conjugacy_phi(state: LiftState, alpha: Scalar, beta: Scalar) -> LiftState:
    """``φ(x, y, v) = (ψ_α(x), ψ_β(y), v)`` on ``Z x N``."""
    if not in_Z(state, alpha, beta):
        raise ValueError("conjugacy_phi is defined on Z x N only")
    return _new(psi_map(alpha, state.x), psi_map(beta, state.y), state.v)


def _uniform_rationals(rng: np.random.Generator, count: int, bits: int = 52) -> list[Scalar]:
    raw = rng.integers(0, 1 << bits, size=count, dtype=np.uint64)
    den = 1 << bits
    return [Scalar(int(k), den) for k in raw]


@dataclass
class RenormalizationReport:
    alpha: Scalar
    beta: Scalar
    alpha_next: Scalar
    beta_next: Scalar
    samples: int
    seed: int
    mismatches: list[dict] = field(default_factory=list)
    redrawn: int = 0
    max_return_time: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _touches_boundary(points, marks_x, marks_y) -> bool:
    for p in points:
        if p.x in marks_x or p.y in marks_y:
            return True
    return False


def verify_renormalization(
    alpha: ScalarLike, beta: ScalarLike, sample_count: int = 100, seed: int = 0, step_cap: int = 100_000
) -> RenormalizationReport:
    """Check ``φ ∘ Ψ̂ = Ψ̃_{f(α),f(β)} ∘ φ`` exactly on random states of ``Z x N``.

    Samples whose orbit segment or image touches a discontinuity line of
    either map are redrawn and counted in ``redrawn``.
    """
    alpha = as_scalar(alpha)
    beta = as_scalar(beta)
    if not (ZERO < alpha < HALF and ZERO < beta < HALF):
        raise ValueError("parameters must lie in (0, 1/2)")
    a2, b2 = f_value(alpha), f_value(beta)
    rng = np.random.Generator(np.random.PCG64(seed))
    marks_x = {ZERO, HALF, alpha, ONE - alpha}
    marks_y = {ZERO, HALF, beta, ONE - beta}
    marks2 = {ZERO, HALF}
    rep = RenormalizationReport(alpha, beta, a2, b2, 0, seed)
    wx, wy = ONE - 2 * alpha, ONE - 2 * beta
    while rep.samples < sample_count:
        u, w = _uniform_rationals(rng, 2)
        v = DIRECTIONS[int(rng.integers(0, 4))]
        st = _new(alpha + wx * u, beta + wy * w, v)
        ret, t = first_return_to_Z(st, alpha, beta, step_cap)
        img = conjugacy_phi(st, alpha, beta)
        lhs = conjugacy_phi(ret, alpha, beta)
        rhs = psi_lift_step(img, a2, b2)
        if lhs != rhs:
            orbit_pts = [st]
            cur = st
            for _ in range(t):
                cur = psi_lift_step(cur, alpha, beta)
                orbit_pts.append(cur)
            if _touches_boundary(orbit_pts, marks_x, marks_y) or _touches_boundary(
                (img, lhs, rhs), marks2, marks2
            ):
                rep.redrawn += 1
                continue
            rep.mismatches.append(
                {"state": _state_text(st), "lhs": _state_text(lhs), "rhs": _state_text(rhs), "return_time": t}
            )
        rep.samples += 1
        rep.max_return_time = max(rep.max_return_time, t)
    return rep


def _state_text(st: LiftState) -> str:
    return f"({format_scalar(st.x)}, {format_scalar(st.y)}, {st.v})"


@dataclass(frozen=True)
class PeriodReport:
    status: str  # "periodic" | "open-within-bound" | "boundary-hit"
    period: int | None
    steps_used: int


def detect_period(state: LiftState, alpha: ScalarLike, beta: ScalarLike, max_steps: int) -> PeriodReport:
    """Minimal ``n <= max_steps`` with ``Ψ̃^n(state) = state`` exactly.

    When no return happens and the orbit met a discontinuity line the status
    is ``boundary-hit`` rather than ``open-within-bound``.
    """
    alpha = as_scalar(alpha)
    beta = as_scalar(beta)
    cur = state
    hit = False
    for n in range(1, max_steps + 1):
        if cur.x == ZERO or cur.x == HALF or cur.y == ZERO or cur.y == HALF:
            hit = True
        cur = psi_lift_step(cur, alpha, beta)
        if cur == state:
            return PeriodReport("periodic", n, n)
    return PeriodReport("boundary-hit" if hit else "open-within-bound", None, max_steps)


@dataclass
class MCReport:
    alpha: str
    beta: str
    samples: int
    max_period: int
    seed: int
    prng: str
    count_periodic: int
    count_period4: int
    fraction_periodic: float
    fraction_period4: float
    stderr_periodic: float
    stderr_period4: float
    period_histogram: dict[int, int]

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["period_histogram"] = {str(k): v for k, v in sorted(self.period_histogram.items())}
        return d


_CHUNK = 2048


def _mc_chunk(args) -> tuple[int, dict[int, int]]:
    alpha_t, beta_t, n, max_period, seed_seq = args
    alpha = as_scalar(alpha_t)
    beta = as_scalar(beta_t)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    xs = _uniform_rationals(rng, n)
    ys = _uniform_rationals(rng, n)
    vs = rng.integers(0, 4, size=n)
    hist: dict[int, int] = {}
    for x, y, vi in zip(xs, ys, vs):
        st = _new(x, y, DIRECTIONS[int(vi)])
        cur = st
        for k in range(1, max_period + 1):
            cur = psi_lift_step(cur, alpha, beta)
            if cur == st:
                hist[k] = hist.get(k, 0) + 1
                break
    return n, hist


def periodic_measure_mc(
    alpha: ScalarLike,
    beta: ScalarLike,
    samples: int,
    max_period: int = 4,
    seed: int = 0,
    workers: int = 1,
) -> MCReport:
    """Monte Carlo census of periodic points of the lifted map.

    States are drawn uniformly from the torus times ``N`` using dyadic
    rationals with 52 random bits.  The sample stream is split into fixed
    chunks, each seeded by a spawned child of ``SeedSequence(seed)``, so the
    result does not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    alpha = as_scalar(alpha)
    beta = as_scalar(beta)
    nchunks = math.ceil(samples / _CHUNK)
    children = np.random.SeedSequence(seed).spawn(nchunks)
    jobs = []
    for i, child in enumerate(children):
        n = min(_CHUNK, samples - i * _CHUNK)
        jobs.append((format_scalar(alpha), format_scalar(beta), n, max_period, child))
    if workers > 1 and nchunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_mc_chunk, jobs))
    else:
        results = [_mc_chunk(j) for j in jobs]
    hist: dict[int, int] = {}
    for _, h in results:
        for k, c in h.items():
            hist[k] = hist.get(k, 0) + c
    cp = sum(hist.values())
    c4 = hist.get(4, 0)
    fp, f4 = cp / samples, c4 / samples
    return MCReport(
        alpha=format_scalar(alpha),
        beta=format_scalar(beta),
        samples=samples,
        max_period=max_period,
        seed=seed,
        prng=PRNG_NAME,
        count_periodic=cp,
        count_period4=c4,
        fraction_periodic=fp,
        fraction_period4=f4,
        stderr_periodic=math.sqrt(fp * (1 - fp) / samples),
        stderr_period4=math.sqrt(f4 * (1 - f4) / samples),
        period_histogram=hist,
    )


def orbit(state: LiftState, alpha: Scalar, beta: Scalar, steps: int) -> Iterator[LiftState]:
    cur = state
    yield cur
    for _ in range(steps):
        cur = psi_lift_step(cur, alpha, beta)
        yield cur


def orbit_csv(state: LiftState, alpha: ScalarLike, beta: ScalarLike, steps: int) -> str:
    """Orbit dump with columns ``step,x,y,vx,vy`` in exact text form."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "x", "y", "vx", "vy"])
    for i, st in enumerate(orbit(state, as_scalar(alpha), as_scalar(beta), steps)):
        w.writerow([i, format_scalar(st.x), format_scalar(st.y), st.v[0], st.v[1]])
    return buf.getvalue()


def pieces(alpha: Scalar, beta: Scalar) -> list[dict]:
    """The eight affine pieces of the lifted map.

    Each piece is a sector (a union of two squares of side 1/2) times a
    direction, with its translation vector and image direction.
    """
    out = []
    quads = {
        1: [(ZERO, ZERO), (HALF, HALF)],
        -1: [(ZERO, HALF), (HALF, ZERO)],
    }
    for s in (1, -1):
        for v in DIRECTIONS:
            a, b = v
            out.append(
                {
                    "sector": s,
                    "direction": v,
                    "squares": [(x0, y0, HALF) for x0, y0 in quads[s]],
                    "translation": (b * s * alpha, a * s * beta),
                    "image_direction": (b * s, a * s),
                }
            )
    return out
