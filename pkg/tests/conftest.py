import numpy as np
import pytest

from scenery_lab.walks import NNPath, PeriodicScenery, Scenery

# Representation-style path used across the crossing tests: positions indexed
# by site, one ascent to 9, a descent back to 0 with a long oscillation, and
# a second ascent. Its crossings of (0, 9) and of the thirds are known.
R_FIG = [
    0, 1, 2, 3, 2, 3, 4, 5, 6, 7, 6, 7, 8, 9,
    8, 7, 6, 5, 4, 3, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 0,
    1, 2, 1, 2, 3, 4, 5, 6, 5, 4, 5, 4, 3, 4, 5, 6, 7, 8, 9,
]


@pytest.fixture
def r_fig() -> NNPath:
    return NNPath(0, np.array(R_FIG, dtype=np.int64))


@pytest.fixture
def walk_a() -> NNPath:
    # Crosses sites 0 -> 13 with two back-steps; composite word is 101.
    return NNPath(
        0, [0, 1, 2, 3, 4, 5, 6, 7, 6, 7, 8, 9, 10, 11, 10, 11, 12, 13]
    )


@pytest.fixture
def walk_b() -> NNPath:
    # Crosses sites 32 -> 51 (the second ascent); composite word is 010.
    return NNPath(
        0,
        [32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 40, 41,
         42, 43, 44, 45, 46, 47, 48, 49, 50, 49, 50, 51],
    )


def scenery_from_path(path: NNPath, origin_color: int = 0) -> Scenery:
    """Scenery whose representation is exactly the given path.

    Reads the reference color along the path; works when the path passes
    through 0 at site 0.
    """
    phi = PeriodicScenery.for_origin_color(origin_color)
    base = np.array(phi.base, dtype=np.uint8)
    return Scenery(path.t0, base[path.positions % 4])
