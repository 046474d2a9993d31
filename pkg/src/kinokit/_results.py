"""Shared result record for every verifier-style check.

Lives in its own module so the Holder-estimation checks can produce the
same record type the ellipticity verifier reports, without a cycle.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .numerics import FitResult


@dataclass
class CheckResult:
    """Outcome of one named check over a sweep grid.

    measured holds named scalar constants; series holds one record per
    grid coordinate (dicts of plain floats, sorted by the runner);
    witnesses records extremal sample points behind the measured values.
    """

    check_id: str
    passed: bool
    measured: dict[str, float] = field(default_factory=dict)
    series: list[dict[str, Any]] = field(default_factory=list)
    fitted: FitResult | None = None
    tolerance: dict[str, float] = field(default_factory=dict)
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    coords: dict[str, Any] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    notes: str = ""

    def to_jsonable(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        if self.fitted is not None:
            out["fitted"] = dataclasses.asdict(self.fitted)
        return out
