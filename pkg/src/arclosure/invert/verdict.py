from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class Status(enum.Enum):
    LEFT_INVERTIBLE = "LeftInvertible"
    NOT_LEFT_INVERTIBLE = "NotLeftInvertible"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass
class Verdict:
    """Decision plus the evidence needed to re-check it.

    ``evidence["kind"]`` is one of ``symbol-infimum``, ``vanishing-witness``,
    ``bessel-table``, ``combined`` or ``reason``.
    """

    status: Status
    evidence: dict[str, Any] = field(default_factory=dict)
    subverdicts: dict[str, "Verdict"] = field(default_factory=dict)

    @property
    def left_invertible(self) -> bool:
        return self.status is Status.LEFT_INVERTIBLE

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "evidence": _plain(self.evidence)}
        if self.subverdicts:
            out["subverdicts"] = {k: v.to_dict() for k, v in sorted(self.subverdicts.items())}
        return out

    def __str__(self):
        ev = self.evidence
        if ev.get("kind") == "symbol-infimum":
            return f"{self.status} (inf |p|^2 = {ev['infimum']} at {ev['minimizer']})"
        if ev.get("kind") == "vanishing-witness":
            return f"{self.status} (symbol vanishes at {ev['witness']})"
        if "reason" in ev:
            return f"{self.status} ({ev['reason']})"
        return str(self.status)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    if isinstance(v, Verdict):
        return v.to_dict()
    return str(v)
