"""Small result records used across modules."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping


@dataclass(frozen=True)
class SeriesValue:
    """A truncated-series or quadrature value with an absolute error bound."""

    value: float
    tail_bound: float
    terms: int = 0

    def __float__(self) -> float:
        return float(self.value)


def config_digest(config: Mapping[str, Any]) -> str:
    """Stable short hash of a flat configuration mapping."""
    payload = json.dumps(dict(config), sort_keys=True, default=repr, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ConstantEstimate:
    """An empirically estimated constant together with where it came from.

    The constants appearing in the asymptotic statements this library tests
    are existence results; these records hold the numerical stand-ins.
    """

    name: str
    value: float
    config: Mapping[str, Any] = field(default_factory=dict)
    scale_range: tuple[float, float] = (math.nan, math.nan)

    def __post_init__(self):
        if not self.name:
            raise ValueError("ConstantEstimate needs a name")
        if not math.isfinite(self.value):
            raise ValueError(f"estimate {self.name!r} is not finite: {self.value}")
        if not self.config:
            raise ValueError(f"estimate {self.name!r} has no configuration record")

    @property
    def digest(self) -> str:
        return config_digest(self.config)
