"""Reconstructing scenery pieces from observations, and gluing them.

A level-n piece is cut between the stopping-time windows: the candidate
pair is a backward crossing whose word dominates the opposite-side estimate
followed by a forward crossing whose word dominates the first-crossing
word, both inside a window after some accepted stopping time. Pieces from
consecutive levels are glued by unique containment, orientation included.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .crossings import associated_word, find_crossings, word_str
from .localization import NoFirstCrossing, estimate_opposite, tau_times
from .walks import NNPath


@dataclass(frozen=True)
class LevelParams:
    """Knobs for one reconstruction level.

    n is the target level, n_loc the level whose crossings provide the
    stopping times; at most max_windows stopping times are used, each
    opening a window of length window; horizon caps the usable time range
    (None: all of it). visit_threshold only affects diagnostic event
    evaluation (None: same as horizon).
    """

    n: int
    n_loc: int
    max_windows: int
    window: int
    horizon: int | None = None
    visit_threshold: int | None = None


def asymptotic_parameters(n: int) -> dict:
    """Parameter scales the correctness analysis calls for, as documentation.

    The stopping level grows like n^11, the window like n^220 and the
    window count like exp(n^10.89); these are far beyond simulation, which
    is why desk runs pick small LevelParams explicitly.
    """
    return {
        "n_loc": n**11,
        "window": n**220,
        "log_max_windows": float(n) ** 10.89,
    }


@dataclass(frozen=True)
class Piece:
    """Result of one level: either a word with its cut times or a reason."""

    level: int
    word: np.ndarray | None = None
    s: int | None = None
    r: int | None = None
    reason: str | None = None

    @property
    def found(self) -> bool:
        return self.reason is None

    def to_json(self) -> dict:
        if not self.found:
            return {"level": self.level, "reason": self.reason}
        return {
            "level": self.level,
            "word": word_str(self.word),
            "s": self.s,
            "r": self.r,
        }


def reconstruct_level(T: NNPath, observations, params: LevelParams) -> Piece:
    """Cut one observation segment that should reproduce a level-n piece.

    Follows the window search: take stopping times at level n_loc, then
    minimize (r - s, s) lexicographically over pairs s < r such that some
    stopping time tau has tau <= s < r <= tau + window, s is the t2 time of
    a backward level-n crossing whose word dominates the opposite-side
    estimate, and r is the t2 time of a forward level-n crossing whose word
    dominates the first-crossing word. Dominance is bitwise >=. On failure
    the piece carries one of the reasons: horizon-exhausted (no level-n
    crossing in range), no-first-crossing (no stopping-level crossing),
    no-tc-estimate, no-candidate-pair.
    """
    obs = np.asarray(observations, dtype=np.uint8)
    cap = T.t_hi if params.horizon is None else min(T.t_hi, params.horizon)
    Tc = NNPath(T.t0, T.positions[: cap - T.t0 + 1]) if cap < T.t_hi else T
    cs = find_crossings(Tc, 0, 3 * params.n)
    if not cs:
        return Piece(level=params.n, reason="horizon-exhausted")
    try:
        taus = tau_times(Tc, params.n_loc, params.max_windows)
    except NoFirstCrossing:
        return Piece(level=params.n, reason="no-first-crossing")
    est = estimate_opposite(Tc, params.n)
    if not est.found:
        return Piece(level=params.n, reason="no-tc-estimate")
    words = [associated_word(Tc, c, params.n) for c in cs]
    w_first = words[0]
    w_opp = est.word
    s_cands = [
        c.t2 for c, w in zip(cs, words) if not c.positive and (w >= w_opp).all()
    ]
    r_cands = [c.t2 for c, w in zip(cs, words) if c.positive and (w >= w_first).all()]
    tau_list = list(taus.times)
    best = None
    for s in s_cands:
        p = bisect_right(tau_list, s) - 1
        if p < 0:
            continue
        r_cap = tau_list[p] + params.window
        q = bisect_right(r_cands, s)
        if q >= len(r_cands):
            continue
        r = r_cands[q]
        if r > r_cap:
            continue
        key = (r - s, s)
        if best is None or key < best:
            best = key
    if best is None:
        return Piece(level=params.n, reason="no-candidate-pair")
    span, s = best
    r = s + span
    return Piece(level=params.n, word=obs[s : r + 1].copy(), s=s, r=r)


# ---------------------------------------------------------------------------
# Containment and assembly


def _word_bytes(w) -> bytes:
    if isinstance(w, str):
        return bytes(int(ch) for ch in w)
    return bytes(bytearray(int(b) for b in w))


def transpose(word):
    """The word read back to front."""
    if isinstance(word, str):
        return word[::-1]
    return np.asarray(word, dtype=np.uint8)[::-1].copy()


def contains(v, w) -> list:
    """All ordered index pairs (j1, j2) such that w read j1 -> j2 equals v.

    Reading direction follows the sign of j2 - j1, so forward and reversed
    occurrences both count and a length-1 v yields pairs (j, j) once.
    Pairs are sorted lexicographically.
    """
    vb = _word_bytes(v)
    wb = _word_bytes(w)
    lv, lw = len(vb), len(wb)
    if lv == 0 or lv > lw:
        return []
    if lv == 1:
        return [(j, j) for j in range(lw) if wb[j] == vb[0]]
    out = []
    j = wb.find(vb)
    while j != -1:
        out.append((j, j + lv - 1))
        j = wb.find(vb, j + 1)
    rb = wb[::-1]
    j = rb.find(vb)
    while j != -1:
        j1 = lw - 1 - j
        out.append((j1, j1 - lv + 1))
        j = rb.find(vb, j + 1)
    out.sort()
    return out


def uniquely_contains(v, w) -> bool:
    """True iff exactly one ordered pair realizes v inside w."""
    return len(contains(v, w)) == 1


def equivalent(small, big) -> bool:
    """True iff small occurs in big, in either reading direction."""
    return len(contains(small, big)) > 0


class AssemblyError(RuntimeError):
    """Gluing failed at a level; carries the level and the pair count."""

    def __init__(self, level: int, count: int):
        super().__init__(
            f"level {level} piece contains the assembled word "
            f"{count} times, need exactly 1"
        )
        self.level = level
        self.count = count


@dataclass(frozen=True)
class Assembled:
    """Glued pieces on a common coordinate axis anchored at the first piece."""

    n0: int
    placements: dict = field(compare=False)  # level -> (d1, d2)
    window: tuple = ()
    bits: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "n0": self.n0,
            "placements": {str(k): list(v) for k, v in self.placements.items()},
            "window": list(self.window),
            "bits": word_str(self.bits),
        }


def assemble(pieces) -> Assembled:
    """Glue pieces of consecutive levels by unique containment.

    The first piece sits at coordinates [0, len-1]. Each next piece must
    contain the current assembled word exactly once (orientation counted);
    the unique pair fixes the next piece's placement and orientation. A
    pair count other than one raises AssemblyError naming the level.
    """
    if not pieces:
        raise ValueError("nothing to assemble")
    for prev, nxt in zip(pieces, pieces[1:]):
        if nxt.level != prev.level + 1:
            raise ValueError("pieces must come from consecutive levels")
    cur = np.asarray(pieces[0].word, dtype=np.uint8).copy()
    d1 = 0
    placements = {pieces[0].level: (0, len(cur) - 1)}
    for pc in pieces[1:]:
        nxt = np.asarray(pc.word, dtype=np.uint8)
        pairs = contains(cur, nxt)
        if len(pairs) != 1:
            raise AssemblyError(pc.level, len(pairs))
        j1, j2 = pairs[0]
        top = len(nxt) - 1
        if j1 <= j2:
            d1 = d1 - j1
            cur = nxt.copy()
        else:
            d1 = d1 - (top - j1)
            cur = nxt[::-1].copy()
        placements[pc.level] = (d1, d1 + top)
    return Assembled(
        n0=pieces[0].level,
        placements=placements,
        window=placements[pieces[-1].level],
        bits=cur,
    )
