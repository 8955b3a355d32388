"""Global comparison tolerances.

Every routine accepts an explicit ``tol`` argument; when omitted it falls
back to the process-wide :data:`TOLERANCES`, which can be overridden with
the ``MARTCURTAIN_TOL`` environment variable or temporarily with
:func:`using`.
"""

from __future__ import annotations

import contextlib
import dataclasses
import os


@dataclasses.dataclass(frozen=True)
class Tolerances:
    tol: float = 1e-9
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    pivot_tol: float = 1e-10

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _from_env() -> Tolerances:
    raw = os.environ.get("MARTCURTAIN_TOL")
    if not raw:
        return Tolerances()
    return Tolerances(tol=float(raw))


TOLERANCES = _from_env()


def current() -> Tolerances:
    return TOLERANCES


def resolve(tol: float | None) -> float:
    return TOLERANCES.tol if tol is None else float(tol)


def configure(**kwargs) -> Tolerances:
    """Replace the process-wide tolerances; unspecified fields keep their value."""
    global TOLERANCES
    TOLERANCES = dataclasses.replace(TOLERANCES, **{k: float(v) for k, v in kwargs.items() if v is not None})
    return TOLERANCES


@contextlib.contextmanager
def using(**kwargs):
    global TOLERANCES
    saved = TOLERANCES
    try:
        configure(**kwargs)
        yield TOLERANCES
    finally:
        TOLERANCES = saved
