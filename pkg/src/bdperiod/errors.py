"""Exception hierarchy for chain construction and analysis."""


class ChainError(ValueError):
    """Base class for invalid chain-spec documents."""


class InvalidDocument(ChainError):
    """Document structure is wrong (missing or unknown fields, bad types)."""


class RowSumError(ChainError):
    """A transition row deviates from total mass 1 by more than the tolerance."""


class NonPositiveRate(ChainError):
    """A birth probability p_i, or a death probability q_i with i >= 1, is not positive."""


class AllZeroSelf(ChainError):
    """Every self-transition probability is zero; the chain would be periodic."""


class BadFamilyParams(ChainError):
    """Tail family parameters do not yield valid rows for every tail state."""


class Saturated(RuntimeError):
    """A polynomial value exceeded the saturation cap where exact values were required."""


class ContradictionDetected(RuntimeError):
    """Two criteria that must agree disagreed.  Always an implementation bug."""
