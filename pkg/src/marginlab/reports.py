"""Check records and deterministic JSON output."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any


@dataclass
class CheckReport:
    """Outcome of one numerical inequality check.

    ``relation`` is ``"le"`` when the check asserts ``value <= bound`` and
    ``"ge"`` for ``value >= bound``. Slack is added on the permissive side.
    ``status`` is ``"pass"``, ``"fail"`` or ``"inconclusive"``.
    """

    name: str
    value: float
    bound: float
    error: float = 0.0
    slack: float = 0.0
    relation: str = "le"
    budget: int | None = None
    seed: int | None = None
    status: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self._holds() else "fail"

    def _holds(self) -> bool:
        if not (math.isfinite(self.value) and math.isfinite(self.bound)):
            return False
        if self.relation == "le":
            return self.value <= self.bound + self.slack
        return self.value >= self.bound - self.slack

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars, fractions and dataclasses into plain JSON types."""
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def parse_number(value: Any) -> Fraction | float | int:
    """Inverse of :func:`jsonable` for numbers stored as ``"p/q"`` strings."""
    if isinstance(value, str) and "/" in value:
        num, den = value.split("/")
        return Fraction(int(num), int(den))
    return value
