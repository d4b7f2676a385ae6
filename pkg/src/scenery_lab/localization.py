"""Localization: deciding whether two crossings stop at the same endpoint.

The crossed interval (0, 3n) has two preimage crossings in the scenery
representation, one on each side of the origin. Words of composite-path
crossings factor into a scenery layer and a walk layer; sharing the scenery
layer pushes the expected bit product up from (3/4)^4 per position to
(3/4)^3. The decision rule thresholds the word dot product at c * n with
c = 189/512, the midpoint of the two rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.stats

from . import rng
from ._kernels import crossing_word, sample_interior, straightness_episodes
from .crossings import (
    Crossing,
    associated_word,
    decompose,
    find_crossings,
    index_crossings,
)
from .walks import NNPath, compose, gen_scenery, gen_walk, represent

ACCEPT_NUM = 189
ACCEPT_DEN = 512
ACCEPT_THRESHOLD = Fraction(ACCEPT_NUM, ACCEPT_DEN)

RATE_SAME = Fraction(3, 4) ** 3
RATE_DIFFERENT = Fraction(3, 4) ** 4


class NoFirstCrossing(ValueError):
    """The path never crosses the interval, so no stopping time exists."""


class InsufficientTrials(RuntimeError):
    """Too few Monte Carlo trials completed within their budget."""


def word_dot(wa, wb) -> int:
    wa = np.asarray(wa, dtype=np.uint8)
    wb = np.asarray(wb, dtype=np.uint8)
    if wa.shape != wb.shape:
        raise ValueError(f"word lengths differ: {wa.size} vs {wb.size}")
    return int((wa & wb).sum())


def decide(wa, wb) -> bool:
    """True iff the two words are accepted as stopping at the same endpoint.

    Exact integer comparison dot > (189/512) * n; no floats involved.
    """
    n = np.asarray(wa).size
    return ACCEPT_DEN * word_dot(wa, wb) > ACCEPT_NUM * n


@dataclass(frozen=True)
class StoppingTimes:
    """Accepted stopping times tau(i), paired with the crossing that fired.

    Times are non-decreasing; consecutive crossings can share a boundary
    time, so duplicates are possible.
    """

    n: int
    times: tuple
    crossing_index: tuple  # 1-based index of the generating crossing

    def __post_init__(self):
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("stopping times must be non-decreasing")
        if len(self.times) != len(self.crossing_index):
            raise ValueError("times and crossing_index must align")


def tau_times(T: NNPath, n: int, max_count: int) -> StoppingTimes:
    """Observable stopping times from the crossings of (0, 3n).

    Each crossing whose word is accepted against the first crossing's word
    emits its t2 time (the time at level 3n). The first crossing is the
    reference and participates by rule, not by test: its word can be too
    light to accept itself at small n. At most max_count times are emitted.
    Raises NoFirstCrossing if the path never crosses the interval.
    """
    cs = find_crossings(T, 0, 3 * n)
    if not cs:
        raise NoFirstCrossing(f"path never crosses (0, {3 * n})")
    w1 = associated_word(T, cs[0], n)
    times = []
    idx = []
    for j, c in enumerate(cs, 1):
        if j == 1 or decide(associated_word(T, c, n), w1):
            times.append(c.t2)
            idx.append(j)
            if len(times) >= max_count:
                break
    return StoppingTimes(n=n, times=tuple(times), crossing_index=tuple(idx))


@dataclass(frozen=True)
class OppositeEstimate:
    """Result of the search for a crossing of the opposite-side preimage."""

    found: bool
    crossing: Crossing | None = None
    word: np.ndarray | None = None
    index: int | None = None  # 1-based crossing index


def estimate_opposite(T: NNPath, n: int, horizon: int | None = None) -> OppositeEstimate:
    """First crossing that looks like the opposite-side preimage.

    Scans crossings of (0, 3n) for the first index i >= 2 such that the
    word of crossing i is rejected against the first word, crossing i-1 is
    negative, and the word of crossing i-1 is accepted. The pattern: a
    rejected crossing right after an accepted return leg is the signature
    of the walk having wandered to the other preimage.
    """
    cs = find_crossings(T, 0, 3 * n)
    if horizon is not None:
        cs = [c for c in cs if c.t_max <= horizon]
    if len(cs) < 2:
        return OppositeEstimate(found=False)
    words = [associated_word(T, c, n) for c in cs]
    w1 = words[0]
    for i in range(2, len(cs) + 1):
        prev, cur = cs[i - 2], cs[i - 1]
        if decide(words[i - 1], w1):
            continue
        if prev.positive:
            continue
        if not decide(words[i - 2], w1):
            continue
        return OppositeEstimate(found=True, crossing=cur, word=words[i - 1], index=i)
    return OppositeEstimate(found=False)


def sample_structural_words(gen: np.random.Generator, n: int, same: bool):
    """Word pair with the two-layer product structure, at rate 3/4 per layer.

    Under the same-endpoint hypothesis the scenery layer is shared; under
    the different-endpoint hypothesis all layers are independent. This
    mirrors the factorization of crossing words without simulating paths;
    it is the scale model used where direct simulation is out of reach.
    """
    if same:
        wr = (gen.random(n) < 0.75)
        wa = wr & (gen.random(n) < 0.75)
        wb = wr & (gen.random(n) < 0.75)
    else:
        wa = (gen.random(n) < 0.75) & (gen.random(n) < 0.75)
        wb = (gen.random(n) < 0.75) & (gen.random(n) < 0.75)
    return wa.astype(np.uint8), wb.astype(np.uint8)


# ---------------------------------------------------------------------------
# Monte Carlo samplers


def straightness_experiment(seed: int, count: int, nbins: int = 40) -> dict:
    """Fraction of straight crossings of (0, 3) over independent episodes.

    Episodes start at 0; ones stepping down first cannot cross and are
    skipped, upward ones run to absorption at 0 or 3 and count when they
    reach 3. Collecting completed crossings this way draws from exactly the
    law of successive crossings of one long walk. Returns the straight
    fraction with a 99% normal interval and the duration histogram
    (durations 3 + 2k) next to the exact geometric law (3/4) (1/4)^k.
    """
    if count < 1:
        raise ValueError("count must be positive")
    # Derived seeds span the full 64-bit range; hand the kernel an
    # explicit uint64 so dispatch does not depend on earlier call sites.
    straight, hist = straightness_episodes(
        np.uint64(rng.derive_seed(seed, "straightness")), count, nbins
    )
    frac = straight / count
    half = 2.5758 * float(np.sqrt(frac * (1.0 - frac) / count))
    expected = [0.75 * 0.25**k for k in range(nbins)]
    expected.append(1.0 - sum(expected))
    return {
        "count": count,
        "straight": int(straight),
        "fraction": frac,
        "ci99": [frac - half, frac + half],
        "durations": [int(h) for h in hist],
        "expected": expected,
    }


def _representation_with_crossings(rseed, n, z_targets, site_cap):
    """Representation path with the targeted indexed crossings materialized.

    Grows the scenery window (per side, geometrically) until every target
    index exists or the side hits site_cap. Scenery bits are stable per
    site, so growth extends the path instead of resampling it. Returns
    (rep, crossing dict) or (None, None) if a target stayed out of reach.
    """
    need_pos = max((z for z in z_targets if z > 0), default=0)
    need_neg = max((-z for z in z_targets if z < 0), default=0)
    base = 9 * n * n
    hi = 16 * base if need_pos else 3 * n + 2
    lo = -16 * base if need_neg else -(3 * n + 2)
    while True:
        sc = gen_scenery(rseed, lo, hi)
        rep = represent(sc)
        idx = index_crossings(rep, n)
        pos_have = max((z for z in idx if z > 0), default=0)
        neg_have = max((-z for z in idx if z < 0), default=0)
        grown = False
        if pos_have < need_pos:
            if hi >= site_cap:
                return None, None
            hi *= 2
            grown = True
        if neg_have < need_neg:
            if -lo >= site_cap:
                return None, None
            lo *= 2
            grown = True
        if not grown:
            return rep, idx


def _sampled_crossing_word(rep, cross, order, state, buf, budget, n):
    """Word of the order-th walk crossing of one indexed interval.

    The walk approaches the interval from the origin side, so boundary
    visits start at the near end and crossing directions alternate; the
    interior of the order-th crossing is an independent conditioned
    crossing of the interval, sampled directly. Returns (word, steps_used),
    word None on budget exhaustion.
    """
    k_lo, k_hi = cross.t_min, cross.t_max
    near, far = (k_lo, k_hi) if k_lo >= 0 else (k_hi, k_lo)
    start, end = (near, far) if order % 2 == 1 else (far, near)
    entries, used = sample_interior(state, k_hi - k_lo, buf, budget)
    if entries < 0:
        return None, used
    step = 1 if end > start else -1
    sites = start + buf[:entries] * step
    tvals = rep.positions[sites - rep.t0]
    if tvals[0] != 0:
        tvals = tvals[::-1]
    return crossing_word(np.ascontiguousarray(tvals), 0, 1, n), used


def mc_statistic(
    rseed: int,
    sseed: int,
    n: int,
    ia: int,
    za: int,
    ib: int,
    zb: int,
    horizon: int = 4_000_000,
) -> int | None:
    """Word dot product of two indexed composite-path crossings, sampled fast.

    The scenery representation is simulated in full; of the walk, only the
    crossing interiors that the statistic depends on are simulated, as
    genuine conditioned crossings. Interiors of distinct crossings are
    independent and crossing directions alternate per interval, so this
    samples from the exact law of the walked construction. The horizon maps
    to a per-trial step budget; None reports an incomplete trial (budget or
    representation window exhausted), never a biased value.
    """
    if ia < 1 or ib < 1 or za == 0 or zb == 0 or n < 1:
        raise ValueError("crossing indices must be positive, interval index nonzero")
    site_cap = max(1 << 21, 128 * (3 * n) ** 2)
    rep, idx = _representation_with_crossings(rseed, n, {za, zb}, site_cap)
    if rep is None:
        return None
    targets = sorted({(ia, za), (ib, zb)})
    budget = horizon // len(targets)
    buf = np.empty(min(budget + 2, horizon + 2), dtype=np.int64)
    words = {}
    for slot, (order, z) in enumerate(targets):
        state = np.array([rng.derive_seed(sseed, "interior", slot)], dtype=np.uint64)
        word, _ = _sampled_crossing_word(rep, idx[z], order, state, buf, budget, n)
        if word is None:
            return None
        words[(order, z)] = word
    return word_dot(words[(ia, za)], words[(ib, zb)])


def mc_statistic_walked(
    rseed: int,
    sseed: int,
    n: int,
    ia: int,
    za: int,
    ib: int,
    zb: int,
    horizon: int,
) -> int | None:
    """Reference implementation: simulate both layers step by step.

    Runs the walk for horizon steps on a scenery covering its range, lists
    the crossings of (0, 3n) by the composite, attributes each to its
    indexed representation crossing by decomposition, and returns the word
    dot product of the (ia, za)-th and (ib, zb)-th ones. None if either
    does not occur within the horizon. Exact but slow; kept as the
    validation oracle for mc_statistic.
    """
    if ia < 1 or ib < 1 or za == 0 or zb == 0 or n < 1:
        raise ValueError("crossing indices must be positive, interval index nonzero")
    walk = gen_walk(sseed, horizon)
    lo = min(int(walk.positions.min()), -1)
    hi = max(int(walk.positions.max()), 1)
    rep = represent(gen_scenery(rseed, lo, hi))
    T = compose(rep, walk)
    by_sites = {(c.t1, c.t2): z for z, c in index_crossings(rep, n).items()}
    counts = {}
    found = {}
    want = {(ia, za), (ib, zb)}
    for c in find_crossings(T, 0, 3 * n):
        d = decompose(walk, rep, c)
        z = by_sites[(d.t1, d.t2)]
        counts[z] = counts.get(z, 0) + 1
        key = (counts[z], z)
        if key in want:
            found[key] = c
            if len(found) == len(want):
                break
    if len(found) < len(want):
        return None
    wa = associated_word(T, found[(ia, za)], n)
    wb = associated_word(T, found[(ib, zb)], n)
    return word_dot(wa, wb)


def _chi2_pvalue(counts: np.ndarray, probs: np.ndarray) -> float:
    """Chi-square goodness of fit, pooling bins with expected count < 5."""
    total = counts.sum()
    order = np.argsort(probs)
    pooled_c = []
    pooled_p = []
    acc_c = 0
    acc_p = 0.0
    for j in order[::-1]:
        acc_c += counts[j]
        acc_p += probs[j]
        if acc_p * total >= 5:
            pooled_c.append(acc_c)
            pooled_p.append(acc_p)
            acc_c = 0
            acc_p = 0.0
    if acc_c or acc_p:
        if pooled_c:
            pooled_c[-1] += acc_c
            pooled_p[-1] += acc_p
        else:
            return 1.0
    if len(pooled_c) < 2:
        return 1.0
    f_obs = np.array(pooled_c, dtype=float)
    f_exp = np.array(pooled_p, dtype=float) * total / sum(pooled_p)
    stat, p = scipy.stats.chisquare(f_obs, f_exp)
    return float(p)


@dataclass(frozen=True)
class Lemma8Result:
    n: int
    same_endpoints: bool
    trials: int
    statistics: tuple  # int or None per trial
    summary: dict = field(compare=False)


def mc_lemma8(
    seed: int,
    n: int,
    trials: int,
    same_endpoints: bool = True,
    horizon: int = 4_000_000,
    min_completion: float = 0.9,
) -> Lemma8Result:
    """Monte Carlo distribution of the word statistic under the two setups.

    Same endpoints: the first and second crossings of the right-side
    preimage interval. Different endpoints: the first crossings of the
    right- and left-side preimages. Indices are fixed, not data dependent.
    Incomplete trials are excluded and counted; finishing below the
    completion floor raises InsufficientTrials rather than reporting a
    biased summary.
    """
    ia, za = 1, 1
    ib, zb = (2, 1) if same_endpoints else (1, -1)
    stats = []
    for t in range(trials):
        stats.append(
            mc_statistic(
                rng.derive_seed(seed, "rep-seed", t),
                rng.derive_seed(seed, "walk-seed", t),
                n,
                ia,
                za,
                ib,
                zb,
                horizon,
            )
        )
    done = np.array([s for s in stats if s is not None], dtype=np.int64)
    if done.size < min_completion * trials:
        raise InsufficientTrials(
            f"only {done.size}/{trials} trials completed "
            f"(needed {min_completion:.0%})"
        )
    rate = RATE_SAME if same_endpoints else RATE_DIFFERENT
    hist = np.bincount(done, minlength=n + 1)
    probs = np.array(
        [float(scipy.stats.binom.pmf(k, n, float(rate))) for k in range(n + 1)]
    )
    summary = {
        "n": n,
        "hypothesis": "same" if same_endpoints else "different",
        "indices": {"ia": ia, "za": za, "ib": ib, "zb": zb},
        "trials": trials,
        "completed": int(done.size),
        "mean": float(done.mean()),
        "mean_over_n": float(done.mean() / n),
        "variance": float(done.var(ddof=1)),
        "expected_rate": float(rate),
        "histogram": [int(h) for h in hist],
        "chi2_p": _chi2_pvalue(hist, probs),
    }
    return Lemma8Result(
        n=n,
        same_endpoints=same_endpoints,
        trials=trials,
        statistics=tuple(stats),
        summary=summary,
    )
