"""Analysis policies: horizons and thresholds shared across the analytic modules."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

ENV_HORIZON = "BDPERIOD_DEFAULT_HORIZON"

DEFAULT_HORIZON = 100_000
DEFAULT_DIV_THRESHOLD = 1e8
DEFAULT_QBAR_THRESHOLD = 1e12
DEFAULT_QBAR_HORIZON = 200


def default_horizon() -> int:
    raw = os.environ.get(ENV_HORIZON)
    if raw is None:
        return DEFAULT_HORIZON
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_HORIZON} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{ENV_HORIZON} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class ProbePolicy:
    """Controls how far partial sums are carried and when verdicts are declared.

    Numeric verdicts are asymmetric on purpose: a partial sum crossing
    ``div_threshold`` is declared divergent, but a bounded partial sum is never
    declared convergent, only undecided.  Convergence claims come exclusively
    from the analytic tail rules, which ``use_analytic`` can disable.
    """

    horizon: int = field(default_factory=default_horizon)
    div_threshold: float = DEFAULT_DIV_THRESHOLD
    qbar_threshold: float = DEFAULT_QBAR_THRESHOLD
    qbar_horizon: int = DEFAULT_QBAR_HORIZON
    use_analytic: bool = True

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.div_threshold <= 0 or self.qbar_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.qbar_horizon < 1:
            raise ValueError("qbar_horizon must be >= 1")

    def as_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "div_threshold": self.div_threshold,
            "qbar_threshold": self.qbar_threshold,
            "qbar_horizon": self.qbar_horizon,
            "use_analytic": self.use_analytic,
        }
