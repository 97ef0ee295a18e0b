"""Verdict record shared by the structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


@dataclass
class StructureVerdict:
    """Outcome of a structural check.

    ``verdict`` is one of ``pass``, ``fail`` or ``inconclusive``; ``margin`` is
    the quantity compared against ``tolerance``; ``witness`` holds the evidence.
    """

    kind: str
    verdict: str
    margin: float
    witness: dict[str, Any] = field(default_factory=dict)
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "margin": float(self.margin),
            "tolerance": float(self.tolerance),
            "witness": _jsonable(self.witness),
        }
