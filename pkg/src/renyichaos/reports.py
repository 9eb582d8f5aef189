from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

SLACK_RTOL = 1e-9


def digest(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class VerificationReport:
    """One inequality check ``lhs <= rhs``.

    ``passed`` uses the relative slack rule ``rhs - lhs >= -tol * max(1, |rhs|)``.
    """

    lemma: str
    lhs: float
    rhs: float
    inputs: dict = field(default_factory=dict)
    tol: float = SLACK_RTOL
    details: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if math.isnan(self.lhs) or math.isnan(self.rhs):
            return False
        scale = max(1.0, abs(self.rhs)) if math.isfinite(self.rhs) else 1.0
        return self.slack >= -self.tol * scale

    @property
    def inputs_digest(self) -> str:
        return digest(self.inputs)

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.lemma}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} slack={self.slack:.3g}"
