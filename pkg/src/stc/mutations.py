"""Named fault switches for exercising the equivalence harness.

Each mutation plants one specific bug inside the parallel executors (and
only there, never in the sequential reference evaluators). The check
command must detect every one of them as a divergence, which is the
sensitivity bar for the whole test harness.
"""

from __future__ import annotations

from contextlib import contextmanager

MUTATIONS = (
    "state-update-dropped",
    "stage-order-swapped",
    "flags-ignored-in-join",
    "state-not-forwarded",
    "segment-barrier-removed",
)

_active: set = set()


def enabled(name: str) -> bool:
    return name in _active


def activate(name: str) -> None:
    if name not in MUTATIONS:
        raise ValueError(f"unknown mutation {name!r}; choose from {MUTATIONS}")
    _active.add(name)


def clear() -> None:
    _active.clear()


@contextmanager
def enable(name: str):
    activate(name)
    try:
        yield
    finally:
        _active.discard(name)
