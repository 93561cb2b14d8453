"""Check reports shared by the Steiner algebra and the verifier."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

COLUMNS = (
    "check",
    "fixture",
    "dim",
    "p",
    "xi",
    "t",
    "worst_violation",
    "tolerance",
    "passed",
    "status",
    "settings",
    "extra",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_fmt(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, separators=(",", ":"), default=_json_default)
    return str(value)


def _json_default(obj):
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


@dataclass
class VerificationReport:
    """Outcome of one numerical check.

    ``worst_violation`` is signed: positive values mean the checked
    inequality is violated by that amount.  ``passed`` is
    ``worst_violation <= tolerance`` unless the check was not applicable.
    """

    check: str
    fixture: str
    dim: int
    p: float | None
    xi: tuple | None
    t: object
    worst_violation: float
    tolerance: float
    status: str = "checked"
    settings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.status == "not-applicable":
            return True
        return bool(self.worst_violation <= self.tolerance) and self.status == "checked"

    def row(self) -> list[str]:
        data = asdict(self)
        data["passed"] = self.passed
        return [_fmt(data[c]) if data[c] is not None else "" for c in COLUMNS]
