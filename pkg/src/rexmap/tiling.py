"""Truchet tilings induced by pairs of ±1 sequences and the curves they carry.

The tile at ``(m, n)`` has type ``τ(m,n) = ω_m η_n``.  A curve state is a
site together with the inward normal ``v`` of the edge through which the
curve entered; the curve-following map sends ``((m,n),(a,b))`` to
``((m+sb, n+sa), s(b,a))`` with ``s = τ(m,n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .numerics import Scalar, ScalarLike, as_scalar
from .pet import DIRECTIONS, Direction
from .sequences import NotCollapsible, SeqWindow, WindowError, in_kept

__all__ = [
    "Tiling",
    "CurveTrace",
    "tau_at",
    "curve_follow",
    "curve_follow_inverse",
    "trace_curve",
    "kept_set",
    "in_kept_square",
    "kept_enumeration",
    "renormalize_tiling",
    "renormalize_lazy",
    "return_to_kept",
    "excision",
    "SiteClass",
    "classify_site",
    "loop4_pattern",
    "render_svg",
    "window_json",
    "tiling_from_json",
    "AssumptionViolation",
]

State = tuple[int, int, Direction]


class AssumptionViolation(ValueError):
    """The kept set is bounded (or missing) inside the working window."""


@dataclass(frozen=True)
class Tiling:
    omega: SeqWindow
    eta: SeqWindow

    @classmethod
    def rotation(cls, alpha: ScalarLike, x: ScalarLike, beta: ScalarLike, y: ScalarLike) -> "Tiling":
        return cls(SeqWindow.rotation(alpha, x), SeqWindow.rotation(beta, y))

    def tau(self, m: int, n: int) -> int:
        return self.omega[m] * self.eta[n]

    def materialize(self, m_lo: int, m_hi: int, n_lo: int, n_hi: int) -> "Tiling":
        return Tiling(self.omega.materialize(m_lo, m_hi), self.eta.materialize(n_lo, n_hi))


def tau_at(t: Tiling, m: int, n: int) -> int:
    return t.omega[m] * t.eta[n]


def curve_follow(t: Tiling, site: tuple[int, int], v: Direction) -> tuple[tuple[int, int], Direction]:
    m, n = site
    a, b = v
    s = t.omega[m] * t.eta[n]
    return (m + s * b, n + s * a), (s * b, s * a)


def curve_follow_inverse(t: Tiling, site: tuple[int, int], v: Direction) -> tuple[tuple[int, int], Direction]:
    """Undo one step: the previous site is ``site - v`` and ``v_prev = s(v_y, v_x)``."""
    c, e = v
    m, n = site[0] - c, site[1] - e
    s = t.omega[m] * t.eta[n]
    return (m, n), (s * e, s * c)


@dataclass
class CurveTrace:
    kind: str  # "closed" | "open-truncated"
    sites: list[State]
    length: int


def trace_curve(t: Tiling, site: tuple[int, int], v: Direction, max_steps: int = 10_000) -> CurveTrace:
    """Follow the curve until the initial state recurs or ``max_steps`` is hit."""
    start = (site[0], site[1], tuple(v))
    m, n = site
    a, b = v
    om, et = t.omega, t.eta
    sites: list[State] = [start]
    for k in range(1, max_steps + 1):
        s = om[m] * et[n]
        m, n, a, b = m + s * b, n + s * a, s * b, s * a
        if (m, n, (a, b)) == start:
            return CurveTrace("closed", sites, k)
        sites.append((m, n, (a, b)))
    return CurveTrace("open-truncated", sites, max_steps)


def kept_set(s: SeqWindow, lo: int, hi: int) -> list[int]:
    """Indices in ``[lo, hi]`` not inside a ``-+`` pair (needs ``lo-1`` .. ``hi+1``)."""
    vals = s.values(lo - 1, hi + 1)
    out = []
    for i in range(1, len(vals) - 1):
        prev, cur, nxt = vals[i - 1], vals[i], vals[i + 1]
        if not (cur == -1 and nxt == 1) and not (prev == -1 and cur == 1):
            out.append(lo + i - 1)
    return out


def in_kept_square(t: Tiling, m: int, n: int) -> bool:
    return in_kept(t.omega, m) and in_kept(t.eta, n)


def kept_enumeration(s: SeqWindow, i_lo: int, i_hi: int, search_limit: int = 100_000) -> dict[int, int]:
    """The order preserving map κ on ``[i_lo, i_hi]`` with κ(0) the least kept index >= 0."""
    start = 0
    steps = 0
    try:
        while not in_kept(s, start):
            start += 1
            steps += 1
            if steps > search_limit:
                raise AssumptionViolation("no nonnegative kept index in range")
    except WindowError as exc:
        raise AssumptionViolation("no nonnegative kept index inside the window") from exc
    kappa = {0: start}
    for direction, last in ((1, i_hi), (-1, i_lo)):
        k = start
        i = 0
        while (i < last) if direction > 0 else (i > last):
            k0 = k
            while True:
                k += direction
                if abs(k - k0) > search_limit:
                    raise AssumptionViolation("kept set bounded within the search limit")
                try:
                    if in_kept(s, k):
                        break
                except WindowError as exc:
                    raise AssumptionViolation(f"kept set bounded in the window (near index {k})") from exc
            i += direction
            kappa[i] = k
    return kappa


def renormalize_tiling(t: Tiling, window: tuple[int, int, int, int]) -> Tiling:
    """Explicit tiling ``τ' = τ ∘ κ`` on ``[i_lo,i_hi] x [j_lo,j_hi]``."""
    i_lo, i_hi, j_lo, j_hi = window
    k1 = kept_enumeration(t.omega, i_lo, i_hi)
    k2 = kept_enumeration(t.eta, j_lo, j_hi)
    om = SeqWindow.explicit([t.omega[k1[i]] for i in range(i_lo, i_hi + 1)], i_lo)
    et = SeqWindow.explicit([t.eta[k2[j]] for j in range(j_lo, j_hi + 1)], j_lo)
    return Tiling(om, et)


def renormalize_lazy(t: Tiling, search_limit: int = 100_000) -> Tiling:
    """Renormalized tiling as lazy collapsed views (same κ normalization).

    Unlike :func:`renormalize_tiling` no window is fixed in advance, so the
    result can be renormalized again when the backends can extend.
    """
    seqs = []
    for seq in (t.omega, t.eta):
        start = 0
        try:
            while not in_kept(seq, start):
                start += 1
                if start > search_limit:
                    raise AssumptionViolation("no nonnegative kept index within the search limit")
        except WindowError as exc:
            raise AssumptionViolation("no nonnegative kept index inside the window") from exc
        seqs.append(seq.shift(start).collapsed(search_limit))
    return Tiling(seqs[0], seqs[1])


def excision(t: Tiling, site: tuple[int, int], w: Direction, cap: int = 100_000) -> int:
    """``E = min{j > 0 : site + j w`` is a kept square``}``."""
    m, n = site
    for j in range(1, cap + 1):
        if in_kept_square(t, m + j * w[0], n + j * w[1]):
            return j
    raise AssumptionViolation("excision search exceeded the cap")


def return_to_kept(
    t: Tiling, site: tuple[int, int], v: Direction, cap: int = 100_000, check: bool = True
) -> tuple[tuple[int, int], Direction, int]:
    """First return of the curve to the kept squares, with ``R = 2E - 1`` asserted."""
    if not in_kept_square(t, *site):
        raise ValueError(f"{site} is not a kept square")
    s = t.tau(*site)
    w = (s * v[1], s * v[0])
    cur_site, cur_v = site, tuple(v)
    for r in range(1, cap + 1):
        cur_site, cur_v = curve_follow(t, cur_site, cur_v)
        if in_kept_square(t, *cur_site):
            if check:
                e = excision(t, site, w, cap)
                if r != 2 * e - 1:
                    raise AssertionError(f"return time {r} != 2*{e}-1 at {site},{v}")
            return cur_site, cur_v, r
    raise AssumptionViolation(f"no return to kept squares within {cap} steps")


@dataclass(frozen=True)
class SiteClass:
    kind: str  # "loop4" | "horizontal-box" | "vertical-box"
    length: int | None = None
    extent: tuple[int, int, int, int] | None = None  # (m_lo, m_hi, n_lo, n_hi)


def loop4_pattern(t: Tiling, site: tuple[int, int], v: Direction) -> bool:
    """Closed-form test for a state on a loop of length four.

    The loop occupies a 2x2 block ``{m', m'+1} x {n', n'+1}`` where both
    sequences switch sign and the lower-left tile has type -1; the state's
    direction must point away from the block centre.
    """
    m, n = site
    for i in (0, 1):
        for j in (0, 1):
            mp, np_ = m - i, n - j
            om, et = t.omega, t.eta
            if om[mp] == om[mp + 1] or et[np_] == et[np_ + 1]:
                continue
            if om[mp] * et[np_] != -1:
                continue
            sx = 1 if i == 0 else -1
            sy = 1 if j == 0 else -1
            if v in ((-sx, 0), (0, -sy)):
                return True
    return False


def classify_site(t: Tiling, site: tuple[int, int], v: Direction, cap: int = 100_000) -> SiteClass:
    """Sort a state on a non-kept square into loop4, horizontal box or vertical box.

    A box is recognized by following the curve both ways to the nearest kept
    squares; the exit direction tells horizontal from vertical.  The box found
    is then checked against its defining sign pattern.
    """
    if in_kept_square(t, *site):
        raise ValueError(f"{site} is a kept square")
    st = (site, tuple(v))
    four = st
    for _ in range(4):
        four = curve_follow(t, *four)
    by_iteration = four == st
    by_pattern = loop4_pattern(t, site, v)
    if by_iteration != by_pattern:
        raise AssertionError(f"loop4 detection disagrees at {site},{v}")
    if by_iteration:
        return SiteClass("loop4")
    visited = [site]
    cur = st
    for _ in range(cap):
        cur = curve_follow(t, *cur)
        if in_kept_square(t, *cur[0]):
            exit_v = cur[1]
            break
        visited.append(cur[0])
    else:
        raise AssumptionViolation("curve did not leave the box within the cap")
    cur = st
    for _ in range(cap):
        cur = curve_follow_inverse(t, *cur)
        if in_kept_square(t, *cur[0]):
            break
        visited.append(cur[0])
    else:
        raise AssumptionViolation("curve did not leave the box backwards within the cap")
    ms = [p[0] for p in visited]
    ns = [p[1] for p in visited]
    extent = (min(ms), max(ms), min(ns), max(ns))
    horizontal = exit_v[1] == 0
    if horizontal:
        width = extent[1] - extent[0] + 1
        ell = width // 2
        mb, nb = extent[0] - 1, extent[2]
        ok = (
            width == 2 * ell
            and extent[3] - extent[2] == 1
            and all(t.omega[mb + i] == (-1) ** i for i in range(1, 2 * ell + 1))
            and t.eta[nb] == t.eta[nb + 1]
        )
        kind = "horizontal-box"
    else:
        height = extent[3] - extent[2] + 1
        ell = height // 2
        mb, nb = extent[0], extent[2] - 1
        ok = (
            height == 2 * ell
            and extent[1] - extent[0] == 1
            and all(t.eta[nb + i] == (-1) ** i for i in range(1, 2 * ell + 1))
            and t.omega[mb] == t.omega[mb + 1]
        )
        kind = "vertical-box"
    if not ok or len(set(visited)) != 4 * ell:
        raise AssertionError(f"curve through {site},{v} does not span a {kind}")
    return SiteClass(kind, ell, extent)


# ---------------------------------------------------------------------------
# Output


def render_svg(
    t: Tiling,
    viewport: tuple[int, int, int, int],
    tile_px: int = 20,
    stroke: str = "#000000",
    stroke_width: float = 2.0,
    grid: bool = True,
) -> str:
    """SVG 1.1 picture of the tiles in ``[m_lo,m_hi] x [n_lo,n_hi]``.

    A tile of type +1 joins the midpoints of its left and top edges and of
    its right and bottom edges; type -1 is its mirror image.  Rows are drawn
    with ``n`` increasing upwards.  Output is byte-stable.
    """
    m_lo, m_hi, n_lo, n_hi = viewport
    W = (m_hi - m_lo + 1) * tile_px
    H = (n_hi - n_lo + 1) * tile_px
    h = tile_px / 2
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
    ]
    if grid:
        lines.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff" stroke="none"/>')
    lines.append(f'<g fill="none" stroke="{stroke}" stroke-width="{stroke_width:g}">')
    for n in range(n_hi, n_lo - 1, -1):
        for m in range(m_lo, m_hi + 1):
            x0 = (m - m_lo) * tile_px
            y0 = (n_hi - n) * tile_px
            x1, y1 = x0 + tile_px, y0 + tile_px
            if t.tau(m, n) == 1:
                # corners at top-left and bottom-right
                arcs = (
                    f"M{x0:g},{y0 + h:g} A{h:g},{h:g} 0 0 0 {x0 + h:g},{y0:g}",
                    f"M{x1:g},{y0 + h:g} A{h:g},{h:g} 0 0 0 {x0 + h:g},{y1:g}",
                )
            else:
                arcs = (
                    f"M{x0 + h:g},{y0:g} A{h:g},{h:g} 0 0 0 {x1:g},{y0 + h:g}",
                    f"M{x0 + h:g},{y1:g} A{h:g},{h:g} 0 0 0 {x0:g},{y0 + h:g}",
                )
            lines.append(f'<path class="tile" data-site="{m},{n}" d="{arcs[0]} {arcs[1]}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def window_json(t: Tiling, m_lo: int, m_hi: int, n_lo: int, n_hi: int) -> str:
    return json.dumps(
        {"omega": t.omega.values(m_lo, m_hi), "eta": t.eta.values(n_lo, n_hi), "base": [m_lo, n_lo]},
        separators=(",", ":"),
    )


def tiling_from_json(data: str | dict) -> Tiling:
    if isinstance(data, str):
        data = json.loads(data)
    lo_m, lo_n = data.get("base", [0, 0])
    return Tiling(SeqWindow.explicit(data["omega"], lo_m), SeqWindow.explicit(data["eta"], lo_n))
