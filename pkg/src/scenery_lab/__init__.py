"""Two-color scenery reconstruction from the trace of a simple random walk.

The package splits into layers: walks (sceneries, paths, the representation
and lifting machinery), crossings (interval crossings, their words and the
two-layer decomposition), localization (the word test, stopping times and
Monte Carlo backends), reconstruct (piece cutting and assembly) and harness
(oracle-audited end-to-end trials).
"""

from .crossings import (
    Crossing,
    DecompositionError,
    associated_word,
    decompose,
    find_crossings,
    first_crossing_during,
    index_crossings,
    word_from_str,
    word_str,
)
from .harness import (
    Keypoints,
    NoMarkerPair,
    TrialConfig,
    evaluate_events,
    marker_demo,
    oracle_keypoints,
    run_sweep,
    run_trial,
    verify_lemmas,
)
from .localization import (
    ACCEPT_THRESHOLD,
    InsufficientTrials,
    Lemma8Result,
    NoFirstCrossing,
    OppositeEstimate,
    StoppingTimes,
    decide,
    estimate_opposite,
    mc_lemma8,
    mc_statistic,
    mc_statistic_walked,
    sample_structural_words,
    straightness_experiment,
    tau_times,
    word_dot,
)
from .reconstruct import (
    Assembled,
    AssemblyError,
    LevelParams,
    Piece,
    assemble,
    asymptotic_parameters,
    contains,
    equivalent,
    reconstruct_level,
    transpose,
    uniquely_contains,
)
from .rng import derive_seed, make_generator, spawn
from .walks import (
    ColorMismatch,
    NNPath,
    PeriodicScenery,
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

__version__ = "0.1.0"
