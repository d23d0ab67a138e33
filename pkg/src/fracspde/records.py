"""Verdict records shared by the admissibility and bound-checking code."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional


@dataclass
class BoundCheck:
    """Outcome of checking one inequality.

    ``verdict`` is True/False, or None when the check could not be decided
    numerically (never silently treated as a pass).
    """

    quantity: str
    value: Optional[float]
    bound: Optional[float] = None
    margin: Optional[float] = None
    verdict: Optional[bool] = None
    route: str = "closed-form"
    regime: str = ""
    detail: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        # numpy comparisons yield np.bool_, which is not the True singleton
        if self.verdict is not None:
            self.verdict = bool(self.verdict)

    @property
    def passed(self) -> bool:
        return self.verdict is True

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return str(obj)
        return obj
    if hasattr(obj, "item"):  # numpy scalars
        return _jsonable(obj.item())
    return obj
