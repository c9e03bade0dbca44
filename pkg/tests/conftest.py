import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from courtmetrics import court, synth

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model():
    return court.itf_standard()


@functools.lru_cache(maxsize=None)
def rendered(seed: int, **kwargs):
    """Script, header, frames and truth for a seeded random rally (cached)."""
    script = synth.random_rally(seed, **kwargs)
    header, frames, truth = synth.generate_rally(script)
    return script, header, frames, truth


def random_homography(rng: np.random.Generator) -> court.Homography:
    """An image-to-court camera that keeps the whole court in front of it."""
    return synth.random_camera(rng)


def match_frames(detected, truth, tol=2):
    """Greedy one-to-one matching within ``tol`` frames: (tp, fp, fn)."""
    used = set()
    tp = 0
    for d in detected:
        hit = next((k for k, g in enumerate(truth) if k not in used and abs(g - d) <= tol), None)
        if hit is None:
            continue
        used.add(hit)
        tp += 1
    return tp, len(detected) - tp, len(truth) - tp


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(name: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
