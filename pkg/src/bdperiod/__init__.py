"""Asymptotic-period and recurrence analysis of discrete-time birth-death chains."""

__version__ = "0.1.0"

from .chain import ChainSpec, build_chain  # noqa: E402,F401
from .errors import (  # noqa: F401
    AllZeroSelf,
    BadFamilyParams,
    ChainError,
    ContradictionDetected,
    InvalidDocument,
    NonPositiveRate,
    RowSumError,
    Saturated,
)
from .policy import ProbePolicy  # noqa: F401
