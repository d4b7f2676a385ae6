"""Sceneries, nearest-neighbor paths, and the representation walk.

A scenery colors an integer window with two colors. Observing a walk on a
scenery yields the color sequence along the walk. The key device is a
4-periodic reference coloring in which every site has one neighbor of each
color, so a color sequence forces a unique nearest-neighbor path: this turns
an unobservable walk on a random scenery into an observable walk on the
periodic one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from ._kernels import trace_steps

_BLOCK = 4096


class WalkExitsWindow(ValueError):
    """A walk left the scenery window; carries the first offending time."""

    def __init__(self, t: int, position: int, lo: int, hi: int):
        super().__init__(
            f"walk exits window [{lo}, {hi}] at time {t} (position {position})"
        )
        self.t = t
        self.position = position


class ColorMismatch(ValueError):
    """Observation at the origin disagrees with the reference coloring."""


def _as_bits(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return arr


@dataclass(frozen=True)
class Scenery:
    """Two-color scenery on the window [offset, offset + len(bits) - 1]."""

    offset: int
    bits: np.ndarray

    def __post_init__(self):
        arr = _as_bits(self.bits)
        if arr.size == 0:
            raise ValueError("empty scenery window")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def lo(self) -> int:
        return self.offset

    @property
    def hi(self) -> int:
        return self.offset + len(self.bits) - 1

    def at(self, site: int) -> int:
        if not self.lo <= site <= self.hi:
            raise IndexError(f"site {site} outside window [{self.lo}, {self.hi}]")
        return int(self.bits[site - self.offset])

    def __eq__(self, other):
        if not isinstance(other, Scenery):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.bits, other.bits)

    def to_text(self) -> str:
        lines = [f"offset {self.offset}"]
        lines.extend(str(int(b)) for b in self.bits)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Scenery":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("offset "):
            raise ValueError("scenery text must start with an 'offset' header")
        offset = int(lines[0].split()[1])
        return cls(offset, [int(ln) for ln in lines[1:]])

    def to_json(self) -> dict:
        return {"offset": self.offset, "bits": "".join(map(str, self.bits.tolist()))}

    @classmethod
    def from_json(cls, obj) -> "Scenery":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["offset"]), [int(ch) for ch in obj["bits"]])


@dataclass(frozen=True)
class NNPath:
    """Nearest-neighbor path indexed from time t0."""

    t0: int
    positions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.positions, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("positions must be a non-empty 1-d sequence")
        if arr.size > 1 and (np.abs(np.diff(arr)) != 1).any():
            raise ValueError("consecutive positions must differ by exactly 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)

    @property
    def t_lo(self) -> int:
        return self.t0

    @property
    def t_hi(self) -> int:
        return self.t0 + len(self.positions) - 1

    def at(self, t: int) -> int:
        if not self.t_lo <= t <= self.t_hi:
            raise IndexError(f"time {t} outside [{self.t_lo}, {self.t_hi}]")
        return int(self.positions[t - self.t0])

    def __eq__(self, other):
        if not isinstance(other, NNPath):
            return NotImplemented
        return self.t0 == other.t0 and np.array_equal(self.positions, other.positions)

    def to_text(self) -> str:
        lines = [f"t0 {self.t0}"]
        lines.extend(str(int(p)) for p in self.positions)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NNPath":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("t0 "):
            raise ValueError("path text must start with a 't0' header")
        return cls(int(lines[0].split()[1]), [int(ln) for ln in lines[1:]])

    def to_json(self) -> dict:
        return {"t0": self.t0, "positions": [int(p) for p in self.positions]}

    @classmethod
    def from_json(cls, obj) -> "NNPath":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["t0"]), obj["positions"])


@dataclass(frozen=True)
class PeriodicScenery:
    """4-periodic reference coloring with base pattern (c,c,1-c,1-c).

    Each site has exactly one neighbor of each color, which is what makes
    color sequences on it traceable.
    """

    base: tuple = field(default=(0, 0, 1, 1))

    def __post_init__(self):
        b = tuple(int(x) for x in self.base)
        if len(b) != 4 or sorted(b) != [0, 0, 1, 1] or b[0] != b[1]:
            raise ValueError("base must be (c, c, 1-c, 1-c)")
        object.__setattr__(self, "base", b)

    @classmethod
    def for_origin_color(cls, color: int) -> "PeriodicScenery":
        c = int(color)
        return cls((c, c, 1 - c, 1 - c))

    def color(self, site: int) -> int:
        return self.base[site % 4]

    def up_color_table(self) -> np.ndarray:
        """up_color_table()[x mod 4] is the color of site x + 1."""
        return np.array([self.base[(j + 1) % 4] for j in range(4)], dtype=np.uint8)


def gen_scenery(seed: int, lo: int, hi: int) -> Scenery:
    """Fair-coin scenery on [lo, hi].

    Bits are drawn in fixed blocks of absolute sites, so the color of a site
    depends only on the seed: enlarging the window extends the scenery
    instead of reshuffling it.
    """
    if lo > hi:
        raise ValueError("empty scenery window")
    b_lo = lo // _BLOCK
    b_hi = hi // _BLOCK
    chunks = []
    for b in range(b_lo, b_hi + 1):
        g = rng.spawn(seed, "scenery-block", b)
        chunks.append(g.integers(0, 2, size=_BLOCK, dtype=np.uint8))
    bits = np.concatenate(chunks)
    start = lo - b_lo * _BLOCK
    return Scenery(lo, bits[start : start + (hi - lo + 1)])


def gen_walk(seed: int, steps: int) -> NNPath:
    """Simple random walk from 0 with the given number of steps."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    g = rng.spawn(seed, "walk")
    incr = g.integers(0, 2, size=steps, dtype=np.int64) * 2 - 1
    pos = np.empty(steps + 1, dtype=np.int64)
    pos[0] = 0
    np.cumsum(incr, out=pos[1:])
    return NNPath(0, pos)


def observe(scenery: Scenery, walk: NNPath) -> np.ndarray:
    """Colors seen along the walk; errors if the walk leaves the window."""
    pos = walk.positions
    bad = (pos < scenery.lo) | (pos > scenery.hi)
    if bad.any():
        i = int(np.argmax(bad))
        raise WalkExitsWindow(walk.t0 + i, int(pos[i]), scenery.lo, scenery.hi)
    return scenery.bits[pos - scenery.offset]


def reference_for(scenery: Scenery) -> PeriodicScenery:
    """Reference coloring matching the scenery's color at the origin."""
    return PeriodicScenery.for_origin_color(scenery.at(0))


def represent(scenery: Scenery) -> NNPath:
    """Representation path R of a scenery.

    R(0) = 0 and the reference color of R(k) reproduces the scenery color at
    site k, each step forced by the neighbor-color rule. The two sides of
    the origin are traced independently: the right side from the colors at
    1, 2, ..., the left side from the colors at -1, -2, ...
    """
    if not scenery.lo <= 0 <= scenery.hi:
        raise ValueError("scenery window must contain the origin")
    phi = reference_for(scenery)
    up = phi.up_color_table()
    i0 = -scenery.offset
    right = trace_steps(scenery.bits[i0 + 1 :], up, 0)
    left = trace_steps(scenery.bits[i0 - 1 :: -1] if i0 else scenery.bits[:0], up, 0)
    positions = np.concatenate([left[:0:-1], right])
    return NNPath(scenery.lo, positions)


def lift(observations, phi: PeriodicScenery) -> NNPath:
    """Path on the reference coloring forced by an observation sequence.

    This is the observable composite of the representation path with the
    walk: it starts at 0 and each step is determined by the next color.
    """
    obs = _as_bits(observations)
    if obs.size == 0:
        raise ValueError("empty observation sequence")
    if int(obs[0]) != phi.color(0):
        raise ColorMismatch(
            f"first observation {int(obs[0])} does not match the reference "
            f"color {phi.color(0)} at the origin"
        )
    return NNPath(0, trace_steps(obs[1:], phi.up_color_table(), 0))


def compose(outer: NNPath, inner: NNPath) -> NNPath:
    """Pointwise composition t -> outer(inner(t))."""
    pos = inner.positions
    if pos.min() < outer.t_lo or pos.max() > outer.t_hi:
        raise ValueError("inner path leaves the domain of the outer path")
    return NNPath(inner.t0, outer.positions[pos - outer.t0])
