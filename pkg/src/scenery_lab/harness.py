"""End-to-end trials with ground-truth oracles and diagnostic events.

Everything here may look at the hidden scenery and walk; the reconstruction
side only ever sees the observation sequence. Reports are plain dicts ready
for JSON lines output, deterministic given the config.
"""

from __future__ import annotations

import math
import os
import time
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .crossings import Crossing, associated_word, decompose, find_crossings, word_str
from .localization import NoFirstCrossing, estimate_opposite, tau_times
from .reconstruct import (
    AssemblyError,
    LevelParams,
    Piece,
    assemble,
    equivalent,
    reconstruct_level,
    uniquely_contains,
)
from .walks import (
    NNPath,
    Scenery,
    WalkExitsWindow,
    compose,
    gen_scenery,
    gen_walk,
    lift,
    observe,
    reference_for,
    represent,
)


class NoMarkerPair(ValueError):
    """The observation sequence never shows both marker colors."""


def marker_demo(values) -> dict:
    """Read a word between the closest pair of distinct markers.

    Toy four-color setting: colors 2 and 3 are rare markers dropped into a
    two-color background. The closest 2-3 pair (ties broken by earliest
    occurrence) brackets a stretch of background whose colors are read off
    in the direction from the 2 to the 3.
    """
    vals = np.asarray(values, dtype=np.int64)
    t2s = np.flatnonzero(vals == 2)
    t3s = np.flatnonzero(vals == 3)
    if t2s.size == 0 or t3s.size == 0:
        raise NoMarkerPair("need at least one occurrence of each marker color")
    best = None
    for ti in t2s:
        for tj in t3s:
            key = (abs(int(tj) - int(ti)), min(int(ti), int(tj)), int(ti))
            if best is None or key < best[0]:
                best = (key, int(ti), int(tj))
    _, ti, tj = best
    u = 1 if tj > ti else -1
    word = vals[ti + u : tj : u]
    return {
        "marker2": ti,
        "marker3": tj,
        "word": "".join(str(int(b)) for b in word),
    }


# ---------------------------------------------------------------------------
# Ground-truth keypoints


@dataclass(frozen=True)
class Keypoints:
    """Oracle data for one level: the two preimage crossings and the piece.

    a is the preimage interval the walk happens to cross first, c the
    other; the target piece is the scenery read from the far end of c to
    the far end of a.
    """

    n: int
    plus: Crossing
    minus: Crossing
    a_is_plus: bool
    first_crossing: Crossing
    word: np.ndarray
    direction: int

    @property
    def a(self) -> Crossing:
        return self.plus if self.a_is_plus else self.minus

    @property
    def c(self) -> Crossing:
        return self.minus if self.a_is_plus else self.plus

    @property
    def k2a(self) -> int:
        return self.a.t2

    @property
    def k2c(self) -> int:
        return self.c.t2


def _keypoints(scenery: Scenery, rep: NNPath, walk: NNPath, T: NNPath, n: int):
    idx_pos = None
    idx_neg = None
    from .crossings import index_crossings

    idx = index_crossings(rep, n)
    idx_pos = idx.get(1)
    idx_neg = idx.get(-1)
    if idx_pos is None or idx_neg is None:
        return None
    cs = find_crossings(T, 0, 3 * n)
    if not cs:
        return None
    d = decompose(walk, rep, cs[0])
    if (d.t1, d.t2) == (idx_pos.t1, idx_pos.t2):
        a_is_plus = True
    elif (d.t1, d.t2) == (idx_neg.t1, idx_neg.t2):
        a_is_plus = False
    else:
        raise RuntimeError("first crossing decomposes to neither first preimage")
    a = idx_pos if a_is_plus else idx_neg
    c = idx_neg if a_is_plus else idx_pos
    u = 1 if a.t2 > c.t2 else -1
    sites = np.arange(c.t2, a.t2 + u, u)
    word = scenery.bits[sites - scenery.offset].copy()
    return Keypoints(
        n=n,
        plus=idx_pos,
        minus=idx_neg,
        a_is_plus=a_is_plus,
        first_crossing=cs[0],
        word=word,
        direction=u,
    )


def oracle_keypoints(scenery: Scenery, walk: NNPath, n: int):
    """Keypoints for a level, or None when the window or walk is too short.

    None cases: the representation does not complete both first preimage
    crossings inside the window, or the composite path never crosses
    (0, 3n) so the a/c assignment is undetermined.
    """
    rep = represent(scenery)
    T = compose(rep, walk)
    return _keypoints(scenery, rep, walk, T, n)


# ---------------------------------------------------------------------------
# Diagnostic events


def _cap_path(T: NNPath, horizon):
    if horizon is None or horizon >= T.t_hi:
        return T
    return NNPath(T.t0, T.positions[: horizon - T.t0 + 1])


def _and3(*flags):
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def evaluate_events(
    scenery: Scenery,
    rep: NNPath,
    walk: NNPath,
    T: NNPath,
    lp: LevelParams,
    kp: Keypoints | None,
    kp_loc: Keypoints | None,
) -> dict:
    """Three-valued diagnostics behind the correctness argument.

    Each flag is True (held), False (violated) or None (not evaluable on
    this data). stopping: observable stopping times equal the true
    crossing-end times of the stopping-level a-interval. visit: the walk
    completes its first crossing of the c-interval before the threshold.
    straight: some stopping window contains a straight forward walk
    crossing from the c far end to the a far end. no_other: within site
    radius window of the stopping-level a far end, only the a / c crossing
    dominates the observed first word / the true opposite word. t_c: the
    opposite-side estimate finds exactly the true first c-interval
    crossing. unique is filled by the caller (needs the next level).
    """
    ev = {
        "stopping": None,
        "visit": None,
        "straight": None,
        "no_other": None,
        "t_c": None,
        "unique": None,
    }
    Tc = _cap_path(T, lp.horizon)
    cap_end = Tc.t_hi
    if kp_loc is not None:
        true_a = find_crossings(walk, kp_loc.a.t1, kp_loc.a.t2)[: lp.max_windows]
        true_t2 = [c.t2 for c in true_a]
        try:
            taus = list(tau_times(Tc, lp.n_loc, lp.max_windows).times)
        except NoFirstCrossing:
            taus = []
        ev["stopping"] = taus == true_t2
    if kp is not None:
        sc = find_crossings(walk, kp.c.t1, kp.c.t2)
        thr = lp.visit_threshold
        if thr is None:
            thr = cap_end
        ev["visit"] = bool(sc) and sc[0].t2 < thr
        if kp_loc is not None:
            anchors = true_t2
            hit = False
            for c in find_crossings(walk, kp.k2c, kp.k2a):
                if not (c.positive and c.straight):
                    continue
                p = bisect_right(anchors, c.t1) - 1
                if p >= 0 and c.t2 <= anchors[p] + lp.window:
                    hit = True
                    break
            ev["straight"] = hit
        est = estimate_opposite(Tc, lp.n)
        if sc:
            ev["t_c"] = est.found and (est.crossing.t1, est.crossing.t2) == (
                sc[0].t1,
                sc[0].t2,
            )
        elif est.found:
            ev["t_c"] = False
        if kp_loc is not None:
            K = kp_loc.k2a
            W = lp.window
            if rep.t_lo <= K - W and K + W <= rep.t_hi:
                from .crossings import index_crossings

                in_radius = [
                    c
                    for c in index_crossings(rep, lp.n).values()
                    if abs(c.t1 - K) <= W and abs(c.t2 - K) <= W
                ]
                rep_words = {
                    (c.t1, c.t2): associated_word(rep, c, lp.n) for c in in_radius
                }
                cs_obs = find_crossings(Tc, 0, 3 * lp.n)
                no_a = None
                if cs_obs:
                    w_a = associated_word(Tc, cs_obs[0], lp.n)
                    doms = [
                        key
                        for key, w in rep_words.items()
                        if (w >= w_a).all()
                    ]
                    no_a = doms == [(kp.a.t1, kp.a.t2)]
                no_c = None
                if sc:
                    true_c_T = Crossing(sc[0].t1, sc[0].t2, 0, 3 * lp.n)
                    if true_c_T.t_max <= cap_end:
                        w_c = associated_word(Tc, true_c_T, lp.n)
                        doms = [
                            key
                            for key, w in rep_words.items()
                            if (w >= w_c).all()
                        ]
                        no_c = doms == [(kp.c.t1, kp.c.t2)]
                ev["no_other"] = _and3(no_a, no_c)
    return ev


# ---------------------------------------------------------------------------
# Trials


@dataclass(frozen=True)
class TrialConfig:
    master_seed: int
    window: tuple
    steps: int
    levels: tuple
    trials: int = 1
    out: str | None = None

    def to_json(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "window": list(self.window),
            "steps": self.steps,
            "levels": [
                {
                    "n": lp.n,
                    "n_loc": lp.n_loc,
                    "I_max": lp.max_windows,
                    "W": lp.window,
                    "horizon": lp.horizon,
                }
                for lp in self.levels
            ],
            "trials": self.trials,
            "out": self.out,
        }

    @classmethod
    def from_json(cls, obj) -> "TrialConfig":
        levels = tuple(
            LevelParams(
                n=int(d["n"]),
                n_loc=int(d["n_loc"]),
                max_windows=int(d["I_max"]),
                window=int(d["W"]),
                horizon=None if d.get("horizon") is None else int(d["horizon"]),
                visit_threshold=(
                    None
                    if d.get("visit_threshold") is None
                    else int(d["visit_threshold"])
                ),
            )
            for d in obj["levels"]
        )
        return cls(
            master_seed=int(obj["master_seed"]),
            window=(int(obj["window"][0]), int(obj["window"][1])),
            steps=int(obj["steps"]),
            levels=levels,
            trials=int(obj.get("trials", 1)),
            out=obj.get("out"),
        )


def run_trial(config: TrialConfig, index: int, include_timings: bool = False) -> dict:
    """One seeded trial: reconstruct every configured level, audit, assemble."""
    t_start = time.perf_counter()
    scn_seed = rng.derive_seed(config.master_seed, "scenery", index)
    walk_seed = rng.derive_seed(config.master_seed, "walk", index)
    report = {
        "trial": index,
        "ok": True,
        "failure": None,
        "levels": [],
        "assembly": None,
    }
    lo, hi = config.window
    scenery = gen_scenery(scn_seed, lo, hi)
    walk = gen_walk(walk_seed, config.steps)
    try:
        obs = observe(scenery, walk)
    except WalkExitsWindow as e:
        report["ok"] = False
        report["failure"] = f"walk-exits-window at {e.t}"
        return report
    T = lift(obs, reference_for(scenery))
    rep = represent(scenery)
    kps = {}
    pieces = []
    for lp in config.levels:
        piece = reconstruct_level(T, obs, lp)
        pieces.append(piece)
        for lvl in (lp.n, lp.n_loc, lp.n + 1):
            if lvl not in kps:
                kps[lvl] = _keypoints(scenery, rep, walk, T, lvl)
        kp = kps[lp.n]
        events = evaluate_events(scenery, rep, walk, T, lp, kp, kps[lp.n_loc])
        kp_next = kps[lp.n + 1]
        if kp is not None and kp_next is not None:
            events["unique"] = uniquely_contains(kp.word, kp_next.word)
        correct = None
        transposed = None
        if kp is not None:
            correct = piece.found and np.array_equal(piece.word, kp.word)
            transposed = (
                piece.found
                and not correct
                and np.array_equal(piece.word, kp.word[::-1])
            )
        rec = {
            "level": lp.n,
            "piece": piece.to_json(),
            "correct": correct,
            "transposed": transposed,
            "events": events,
        }
        report["levels"].append(rec)
    if pieces and all(p.found for p in pieces):
        try:
            asm = assemble(pieces)
            report["assembly"] = {
                "ok": True,
                "failed_level": None,
                "result": asm.to_json(),
                "matches_truth": equivalent(
                    asm.bits, scenery.bits
                ),
            }
        except AssemblyError as e:
            report["assembly"] = {
                "ok": False,
                "failed_level": e.level,
                "pairs": e.count,
            }
    if include_timings:
        report["timings"] = {"seconds": time.perf_counter() - t_start}
    return report


def thread_count(explicit: int | None = None) -> int:
    """Worker count: explicit argument, else SCENERY_LAB_THREADS, else cpus."""
    if explicit is not None and explicit > 0:
        return explicit
    env = os.environ.get("SCENERY_LAB_THREADS", "").strip()
    if env:
        v = int(env)
        if v > 0:
            return v
    return os.cpu_count() or 1


def run_sweep(
    config: TrialConfig, threads: int | None = None, include_timings: bool = False
) -> list:
    """All configured trials, optionally in a thread pool.

    Results are keyed by trial index and returned in index order, so the
    worker count never changes the output.
    """
    nt = min(thread_count(threads), max(config.trials, 1))
    if nt <= 1:
        return [run_trial(config, i, include_timings) for i in range(config.trials)]
    out = [None] * config.trials
    with ThreadPoolExecutor(max_workers=nt) as ex:
        futures = {
            ex.submit(run_trial, config, i, include_timings): i
            for i in range(config.trials)
        }
        for fut, i in futures.items():
            out[i] = fut.result()
    return out


# ---------------------------------------------------------------------------
# Lemma verification


def _lemma_checks(scenery, walk, n: int, details: list) -> int:
    """All structural checks for one instance; returns the violation count."""
    bad = 0

    def note(msg):
        nonlocal bad
        bad += 1
        if len(details) < 10:
            details.append(msg)

    rep = represent(scenery)
    obs = observe(scenery, walk)
    T = lift(obs, reference_for(scenery))
    if T != compose(rep, walk):
        note("lifted path differs from composite")
    from .crossings import DecompositionError, first_crossing_during, index_crossings

    idx = index_crossings(rep, n)
    tcs = find_crossings(T, 0, 3 * n)
    by_times = {}
    for z, rc in idx.items():
        for c in find_crossings(walk, rc.t1, rc.t2):
            by_times[(c.t1, c.t2)] = rc
    seen = set()
    for c in tcs:
        try:
            d = decompose(walk, rep, c)
        except DecompositionError as e:
            note(f"decomposition failed for {c}: {e}")
            continue
        rc = by_times.get((c.t1, c.t2))
        if rc is None or (rc.t1, rc.t2) != (d.t1, d.t2):
            note(f"crossing {c} does not match any indexed preimage crossing")
            continue
        seen.add((c.t1, c.t2))
        walk_layer = Crossing(c.t1, c.t2, d.t1, d.t2)
        if c.straight != (walk_layer.straight and d.straight):
            note(f"straightness factorization fails for {c}")
        word = associated_word(T, c, n)
        for m in range(n):
            y1, y2 = 3 * m, 3 * m + 3
            ct = first_crossing_during(T, c, y1, y2)
            ck = first_crossing_during(rep, d, y1, y2)
            if (ct is None) or (ck is None):
                if ct is not None or ck is not None:
                    note(f"sub-crossing existence mismatch at slice {m} of {c}")
                continue
            cw = first_crossing_during(walk, walk_layer, ck.t1, ck.t2)
            if cw is None or (cw.t1, cw.t2) != (ct.t1, ct.t2):
                note(f"sub-crossing times mismatch at slice {m} of {c}")
                continue
            if bool(word[m]) != (ck.straight and cw.straight):
                note(f"word bit {m} of {c} fails the two-layer product")
    if seen != set(by_times):
        note("some preimage-interval crossing has no matching composite crossing")
    return bad


def verify_lemmas(
    seed: int,
    instances: int,
    ns: tuple = (1, 2, 3),
    steps_choices: tuple = (20_000, 50_000, 100_000),
) -> dict:
    """Structural invariants of crossings over many random instances.

    Checks, per instance: the lifted observation path equals the composite;
    every composite crossing decomposes into a walk crossing of an indexed
    preimage crossing and the correspondence is a bijection; straightness
    factors across the two layers; and each word bit matches the first
    sub-crossing through both layers. Instances whose walk would leave the
    scenery window are resampled (the checks are sure statements per
    instance, so resampling is harmless) and counted.
    """
    details = []
    violations = 0
    resampled = 0
    for i in range(instances):
        n = ns[i % len(ns)]
        steps = steps_choices[i % len(steps_choices)]
        w = 4 * int(math.isqrt(steps)) + 3 * n + 16
        attempt = 0
        while True:
            s_seed = rng.derive_seed(seed, "lemma-scenery", i * 1000 + attempt)
            w_seed = rng.derive_seed(seed, "lemma-walk", i * 1000 + attempt)
            scenery = gen_scenery(s_seed, -w, w)
            walk = gen_walk(w_seed, steps)
            if abs(walk.positions).max() < w:
                break
            attempt += 1
            resampled += 1
            if attempt > 50:
                raise RuntimeError("window resampling did not terminate")
        violations += _lemma_checks(scenery, walk, n, details)
    return {
        "instances": instances,
        "violations": violations,
        "resampled": resampled,
        "details": details,
    }
