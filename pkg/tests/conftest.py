import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zrpdirac.core import CenterConfig
from zrpdirac.solver import find_bound_states

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# states this close to a threshold (in 1 -+ E) or to a fold (|slope|) sit in
# regions where the double-precision identities lose digits for reasons
# unrelated to the code under test; random draws landing there are redrawn
THRESHOLD_MARGIN = 1e-5
FOLD_MARGIN = 1e-3


def random_centers(rng: np.random.Generator, n: int, min_sep: float = 0.6) -> list[CenterConfig]:
    positions: list[np.ndarray] = []
    while len(positions) < n:
        p = rng.uniform(-1.5, 1.5, 3)
        if all(np.linalg.norm(p - q) >= min_sep for q in positions):
            positions.append(p)
    centers = []
    for p in positions:
        kv = rng.normal(size=3)
        kv *= rng.uniform(0.0, 0.9) / np.linalg.norm(kv)
        centers.append(CenterConfig(p, rng.uniform(0.3, 2.5), kv))
    return centers


def well_separated(states) -> bool:
    for s in states:
        if 1.0 - s.energy < THRESHOLD_MARGIN or 1.0 + s.energy < THRESHOLD_MARGIN:
            return False
        if abs(s.slope) < FOLD_MARGIN:
            return False
    return True


def seeded_configs(count: int, seed: int = 20240611, sizes=(1, 2, 3)):
    """``count`` reproducible (centers, states) pairs cycling through ``sizes``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = sizes[len(out) % len(sizes)]
        centers = random_centers(rng, n)
        states = find_bound_states(centers)
        if states and well_separated(states):
            out.append((centers, states))
    return out


@pytest.fixture(scope="session")
def random_configs():
    return seeded_configs(20)


def dirac_residual(field, r, E, h=1e-4):
    """``(-i alpha.grad + beta - E) field`` at ``r`` by central differences.

    ``field`` maps a point to a bispinor ``(4,)`` or a 4x4 matrix whose
    columns are bispinors.
    """
    from zrpdirac.core import DIRAC

    r = np.asarray(r, dtype=float)
    out = (DIRAC.beta - E * np.eye(4)) @ field(r)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        d = (field(r + e) - field(r - e)) / (2 * h)
        out = out - 1j * DIRAC.alpha[i] @ d
    return out


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


__all__ = ["close", "dirac_residual", "random_centers", "seeded_configs", "well_separated", "math"]
