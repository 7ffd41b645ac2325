"""Bi-infinite ±1 sequences inspected through finite windows.

Four backends share one interface:

* ``rotation``: entry ``m`` is +1 iff ``base + m*param`` mod 1 lies in ``[0,1/2)``.
  Entries are computed on demand, so the window grows as needed.
* ``explicit``: a stored list with a base index.  Reading outside raises
  :class:`WindowError`; it never extends silently.
* ``periodic``: a repeated pattern, the only backend that can certify
  shift-periodicity.
* ``collapsed``: the lazy image of another sequence under the collapsing map,
  which deletes every ``-+`` pair and re-indexes so the old index 0 stays 0.

Shifted views (``s.shift(k)[i] == s[i+k]``) share storage with the source.
"""

from __future__ import annotations

import bisect
import json
from typing import Sequence

from .numerics import HALF, Scalar, ScalarLike, as_scalar, format_scalar

__all__ = [
    "WindowError",
    "NotCollapsible",
    "SeqWindow",
    "in_kept",
]


class WindowError(IndexError):
    """A finite window was read outside its stored range."""


class NotCollapsible(ValueError):
    """Collapsing is undefined: 0 is not kept, or kept indices run out."""


class _Rotation:
    kind = "rotation"
    extendable = True

    def __init__(self, param: Scalar, base: Scalar):
        self.param = param
        self.base = base
        self.cache: dict[int, int] = {}

    def get(self, m: int) -> int:
        c = self.cache.get(m)
        if c is None:
            z = self.base + m * self.param
            c = 1 if z - z.floor() < HALF else -1
            self.cache[m] = c
        return c

    def describe(self) -> dict:
        return {"backend": "rotation", "param": format_scalar(self.param), "base": format_scalar(self.base)}


class _Explicit:
    kind = "explicit"
    extendable = False

    def __init__(self, values: Sequence[int], lo: int):
        vals = [int(v) for v in values]
        if any(v not in (1, -1) for v in vals):
            raise ValueError("sequence entries must be +1 or -1")
        self.values = vals
        self.lo = lo
        self.hi = lo + len(vals) - 1

    def get(self, m: int) -> int:
        if m < self.lo or m > self.hi:
            raise WindowError(f"index {m} outside explicit window [{self.lo}, {self.hi}]")
        return self.values[m - self.lo]

    def describe(self) -> dict:
        return {"backend": "explicit", "lo": self.lo, "values": list(self.values)}


class _Periodic:
    kind = "periodic"
    extendable = True

    def __init__(self, pattern: Sequence[int]):
        vals = [int(v) for v in pattern]
        if not vals or any(v not in (1, -1) for v in vals):
            raise ValueError("pattern must be a nonempty list of +1/-1")
        self.pattern = vals

    def get(self, m: int) -> int:
        return self.pattern[m % len(self.pattern)]

    def describe(self) -> dict:
        return {"backend": "periodic", "pattern": list(self.pattern)}


class _Collapsed:
    kind = "collapsed"

    def __init__(self, source: "SeqWindow", search_limit: int):
        if not in_kept(source, 0):
            raise NotCollapsible("0 is not a kept index (sequence is not zero-collapsible)")
        self.source = source
        self.search_limit = search_limit
        self.pos = [0]  # kept indices >= 0 in increasing order
        self.neg = [0]  # kept indices <= 0 in decreasing order
        self.extendable = source.extendable

    def _grow(self, lst: list[int], step: int, need: int):
        k = lst[-1]
        start = k
        while len(lst) <= need:
            k += step
            if abs(k - start) > self.search_limit:
                raise NotCollapsible(
                    f"no kept index within {self.search_limit} of {start} (possibly not unbounded-collapsible)"
                )
            try:
                kept = in_kept(self.source, k)
            except WindowError as exc:
                raise NotCollapsible(f"kept indices exhausted the window near {k}") from exc
            if kept:
                lst.append(k)
                start = k

    def kappa(self, i: int) -> int:
        if i >= 0:
            self._grow(self.pos, 1, i)
            return self.pos[i]
        self._grow(self.neg, -1, -i)
        return self.neg[-i]

    def get(self, i: int) -> int:
        return self.source[self.kappa(i)]

    def describe(self) -> dict:
        return {"backend": "collapsed", "source": self.source.describe()}


class SeqWindow:
    """A ±1 sequence with a backend and an index offset."""

    __slots__ = ("_b", "offset")

    def __init__(self, backend, offset: int = 0):
        self._b = backend
        self.offset = offset

    # ---- constructors --------------------------------------------------
    @classmethod
    def rotation(cls, param: ScalarLike, base: ScalarLike) -> "SeqWindow":
        return cls(_Rotation(as_scalar(param), as_scalar(base)))

    @classmethod
    def explicit(cls, values: Sequence[int], lo: int = 0) -> "SeqWindow":
        return cls(_Explicit(values, lo))

    @classmethod
    def periodic(cls, pattern: Sequence[int]) -> "SeqWindow":
        return cls(_Periodic(pattern))

    @classmethod
    def from_text(cls, text: str, lo: int = 0) -> "SeqWindow":
        """Parse ``"+-++"`` style text (spaces ignored)."""
        vals = [1 if ch == "+" else -1 for ch in text if ch in "+-"]
        return cls.explicit(vals, lo)

    # ---- access --------------------------------------------------------
    @property
    def kind(self) -> str:
        return self._b.kind

    @property
    def extendable(self) -> bool:
        return self._b.extendable

    @property
    def backend(self):
        return self._b

    def __getitem__(self, m: int) -> int:
        return self._b.get(m + self.offset)

    def values(self, lo: int, hi: int) -> list[int]:
        return [self._b.get(m + self.offset) for m in range(lo, hi + 1)]

    def bounds(self) -> tuple[float, float]:
        """Readable index range in this view's coordinates."""
        if isinstance(self._b, _Explicit):
            return self._b.lo - self.offset, self._b.hi - self.offset
        return float("-inf"), float("inf")

    def shift(self, k: int) -> "SeqWindow":
        """The shifted sequence ``σ^k``: ``shift(k)[i] == self[i+k]``."""
        if k == 0:
            return self
        return SeqWindow(self._b, self.offset + k)

    def materialize(self, lo: int, hi: int) -> "SeqWindow":
        return SeqWindow.explicit(self.values(lo, hi), lo)

    def collapsed(self, search_limit: int = 100_000) -> "SeqWindow":
        """Lazy collapsed sequence; raises :class:`NotCollapsible` if 0 is not kept."""
        return SeqWindow(_Collapsed(self, search_limit))

    def same_backend(self, other: "SeqWindow") -> bool:
        return self._b is other._b

    def describe(self) -> dict:
        d = self._b.describe()
        d["offset"] = self.offset
        return d

    def to_text(self, lo: int, hi: int) -> str:
        return "".join("+" if v > 0 else "-" for v in self.values(lo, hi))

    def __repr__(self) -> str:
        return f"SeqWindow({self._b.kind}, offset={self.offset})"


def in_kept(s: SeqWindow, k: int) -> bool:
    """``k`` is kept unless it sits inside a ``-+`` pair."""
    a = s[k]
    if a == -1:
        return s[k + 1] != 1
    return s[k - 1] != -1
