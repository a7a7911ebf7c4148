"""Process-wide numerical tolerances.

Held in a context variable so ``with tolerances(feas=...)`` scopes an override
to the current thread / task without leaking into concurrent callers.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8      # LP/QP residual floor, membership
    active: float = 1e-6    # activity identification
    slack: float = 1e-6     # strict-slack for stratum admissibility


_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "essint_tolerances", default=Tolerances())


def get() -> Tolerances:
    return _current.get()


@contextlib.contextmanager
def tolerances(**overrides):
    token = _current.set(replace(_current.get(), **overrides))
    try:
        yield _current.get()
    finally:
        _current.reset(token)
