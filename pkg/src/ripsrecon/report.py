from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return _clean(x.item())
    return x


@dataclass
class CheckReport:
    """Outcome of one inequality or hypothesis check."""

    quantity: str
    value: float
    bound: float | None = None
    witness_pair: tuple | None = None
    tolerance: float = 0.0
    passed: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "quantity": self.quantity,
            "value": self.value,
            "bound": self.bound,
            "witness_pair": list(self.witness_pair) if self.witness_pair is not None else None,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }
        if self.details:
            out["details"] = self.details
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __bool__(self):
        return bool(self.passed)


def dump_json(obj, path=None, **kw) -> str:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, **kw)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
