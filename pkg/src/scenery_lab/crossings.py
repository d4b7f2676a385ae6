"""Crossings of an interval by a nearest-neighbor path, and their words.

A crossing of the ordered pair (x1, x2) is a time pair (t1, t2) with values
x1 at t1 and x2 at t2 and the path strictly between the two levels at all
times strictly between. Labels follow the values: t1 always sits at x1, so a
crossing with t2 < t1 is a traversal in decreasing time order ("negative").
Consecutive crossings can share a boundary time but their interiors are
disjoint, so enumerating by min(t1, t2) is well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._kernels import crossing_word
from .walks import NNPath


class DecompositionError(RuntimeError):
    """A composite-path crossing failed to split into walk and scenery layers.

    This signals a bug (or mismatched inputs): for a genuine composite of
    nearest-neighbor paths the split always exists.
    """


@dataclass(frozen=True)
class Crossing:
    t1: int
    t2: int
    x1: int
    x2: int

    @property
    def positive(self) -> bool:
        return self.t1 < self.t2

    @property
    def straight(self) -> bool:
        return abs(self.t1 - self.t2) == abs(self.x1 - self.x2)

    @property
    def t_min(self) -> int:
        return min(self.t1, self.t2)

    @property
    def t_max(self) -> int:
        return max(self.t1, self.t2)

    def to_json(self) -> dict:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "x1": self.x1,
            "x2": self.x2,
            "straight": self.straight,
            "positive": self.positive,
        }

    @classmethod
    def from_json(cls, obj) -> "Crossing":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["t1"]), int(obj["t2"]), int(obj["x1"]), int(obj["x2"]))


def _find_crossings_arr(pos: np.ndarray, t0: int, x1: int, x2: int) -> list:
    hits = np.flatnonzero((pos == x1) | (pos == x2))
    if hits.size < 2:
        return []
    vals = pos[hits]
    out = []
    for i in np.flatnonzero(vals[1:] != vals[:-1]):
        ta = t0 + int(hits[i])
        tb = t0 + int(hits[i + 1])
        if vals[i] == x1:
            out.append(Crossing(ta, tb, x1, x2))
        else:
            out.append(Crossing(tb, ta, x1, x2))
    return out


def find_crossings(path: NNPath, x1: int, x2: int) -> list:
    """All crossings of (x1, x2), ordered by first appearance.

    A crossing corresponds exactly to two consecutive visits of the boundary
    set {x1, x2} at different levels: a nearest-neighbor path cannot leave
    the strip without touching a boundary, so between consecutive boundary
    visits it stays strictly inside.
    """
    if x1 == x2:
        raise ValueError("crossing levels must differ")
    return _find_crossings_arr(path.positions, path.t0, x1, x2)


def first_crossing_during(path: NNPath, outer: Crossing, y1: int, y2: int):
    """First crossing of (y1, y2) within the time span of an outer crossing.

    "First" is relative to the outer crossing's own orientation: scanning
    starts from the outer t1 end, so for a negative outer crossing this is
    the latest such crossing in wall-clock order. None if there is none.
    """
    lo, hi = outer.t_min, outer.t_max
    seg = path.positions[lo - path.t0 : hi - path.t0 + 1]
    inner = _find_crossings_arr(seg, lo, y1, y2)
    if not inner:
        return None
    return inner[0] if outer.positive else inner[-1]


def associated_word(path: NNPath, c: Crossing, n: int) -> np.ndarray:
    """Word of a crossing: one bit per length-3 slice of the crossed interval.

    The interval from c.x1 to c.x2 splits into n slices of width 3, counted
    from the x1 end. Bit m is 1 iff the first crossing of slice m during c
    (anchored at the t1 end) is straight, i.e. takes exactly 3 steps.
    """
    span = c.x2 - c.x1
    if span % 3 != 0:
        raise ValueError("crossed interval length must be a multiple of 3")
    if abs(span) != 3 * n:
        raise ValueError(f"crossing spans {abs(span)} levels, expected {3 * n}")
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    sgn = 1 if span > 0 else -1
    vals = path.positions[c.t_min - path.t0 : c.t_max - path.t0 + 1]
    if not c.positive:
        vals = vals[::-1]
    return crossing_word(np.ascontiguousarray(vals), c.x1, sgn, n)


def word_str(word) -> str:
    return "".join(str(int(b)) for b in word)


def word_from_str(s: str) -> np.ndarray:
    return np.array([int(ch) for ch in s], dtype=np.uint8)


def decompose(walk: NNPath, rep: NNPath, c: Crossing) -> Crossing:
    """Split a crossing of the composite rep(walk(t)) into its two layers.

    Returns the crossing of (c.x1, c.x2) by rep whose 'times' are the sites
    k1 = walk(c.t1), k2 = walk(c.t2); on the way it verifies that (t1, t2)
    is a crossing of (k1, k2) by the walk. Raises DecompositionError if
    either check fails, which for genuine composite crossings cannot happen.
    """
    k1 = walk.at(c.t1)
    k2 = walk.at(c.t2)
    lo, hi = c.t_min, c.t_max
    seg = walk.positions[lo - walk.t0 + 1 : hi - walk.t0]
    k_lo, k_hi = min(k1, k2), max(k1, k2)
    if seg.size and not ((seg > k_lo) & (seg < k_hi)).all():
        raise DecompositionError(
            f"walk is not strictly inside ({k1}, {k2}) during ({c.t1}, {c.t2})"
        )
    if rep.at(k1) != c.x1 or rep.at(k2) != c.x2:
        raise DecompositionError("scenery layer does not take the boundary values")
    rseg = rep.positions[k_lo - rep.t0 + 1 : k_hi - rep.t0]
    x_lo, x_hi = min(c.x1, c.x2), max(c.x1, c.x2)
    if rseg.size and not ((rseg > x_lo) & (rseg < x_hi)).all():
        raise DecompositionError(
            f"scenery layer is not strictly inside ({c.x1}, {c.x2}) "
            f"during sites ({k1}, {k2})"
        )
    return Crossing(k1, k2, c.x1, c.x2)


def index_crossings(rep: NNPath, n: int) -> dict:
    """Crossings of (0, 3n) by the two sides of a representation path.

    Positive indices count crossings of the nonnegative-time side in order
    of appearance; negative indices count crossings of the time-reflected
    nonpositive side the same way, mapped back to original times (labels
    keep t1 at level 0 and t2 at level 3n). Only crossings completed inside
    the available window appear.
    """
    if not rep.t_lo <= 0 <= rep.t_hi:
        raise ValueError("representation window must contain time 0")
    if n < 1:
        raise ValueError("n must be positive")
    i0 = -rep.t0
    out = {}
    for z, c in enumerate(_find_crossings_arr(rep.positions[i0:], 0, 0, 3 * n), 1):
        out[z] = c
    left = rep.positions[i0::-1]
    for z, c in enumerate(_find_crossings_arr(left, 0, 0, 3 * n), 1):
        out[-z] = Crossing(-c.t1, -c.t2, c.x1, c.x2)
    return out
