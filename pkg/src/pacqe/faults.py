"""Deliberate single-site faults for mutation-sanity runs.

Each name below switches one line of the elimination pipeline to a wrong
variant.  Faults are process-global and meant for tests and ``pacqe check``.
"""
from __future__ import annotations

from contextlib import contextmanager

FLIP_STEP_V = "flip-step-v"  # m*x <= S becomes m*x < S
DROP_Y_MOD_K = "drop-y-mod-k"  # omit the y = 0 (mod k) conjunct
U_HI_OFF_BY_ONE = "u-hi-off-by-one"  # smallest >= instead of smallest >
EQ_INFINITE_TRUE = "eq-infinite-true"  # infinite count satisfies an exact count
DROP_E_SHORTCUT = "drop-e-shortcut"  # no special case for e <= 0

ALL = (FLIP_STEP_V, DROP_Y_MOD_K, U_HI_OFF_BY_ONE, EQ_INFINITE_TRUE, DROP_E_SHORTCUT)

_active: set[str] = set()


def active(name: str) -> bool:
    return name in _active


@contextmanager
def inject(*names: str):
    for n in names:
        if n not in ALL:
            raise ValueError(f"unknown fault {n!r}; choose from {', '.join(ALL)}")
    saved = set(_active)
    _active.update(names)
    try:
        yield
    finally:
        _active.clear()
        _active.update(saved)
