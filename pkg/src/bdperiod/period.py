"""Asymptotic-period verdicts for birth-death chains.

The asymptotic period of a birth-death chain is 1, 2, or infinity:

* infinity exactly when the product of the birth probabilities is positive
  (the chain eventually only ever steps right);
* 1 exactly when the aperiodicity double series diverges;
* 2 in every remaining case.

Recurrent chains always have period 1.  Three cheap sufficient conditions
for period 1 are checked independently of the main criteria: recurrence, a
uniform positive lower bound on tail self-transitions, and divergence of
the self-to-birth ratio series.  Any disagreement between criteria that
must agree raises :class:`~bdperiod.errors.ContradictionDetected` - that is
an implementation bug, never a valid analysis state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .chain import ChainSpec, Constant
from .errors import ContradictionDetected
from .policy import ProbePolicy
from . import qpoly
from .series import (
    Classification,
    SeriesProbe,
    Verdict,
    classification_from_verdicts,
    probe,
)

PERIOD_ONE = 1
PERIOD_TWO = 2
PERIOD_INFINITE = "infinite"
PERIOD_UNDECIDED = "undecided"

CONDITION_RECURRENT = "recurrent"
CONDITION_DIAGONAL = "diagonal_bound"
CONDITION_SELF_RATIO = "self_ratio_series"

PeriodValue = Union[int, str]

__all__ = [
    "PeriodReport",
    "CrossChecks",
    "DivisorCheck",
    "asymptotic_period",
    "sufficient_checks",
    "divisor_check",
    "period_divides",
]


@dataclass(frozen=True)
class CrossChecks:
    """Internal consistency flags; False never survives to a report."""

    series_vs_growth: bool
    qbar_routes: bool
    qbar_max_rel_diff: float

    def as_dict(self) -> dict:
        return {
            "series_vs_growth": self.series_vs_growth,
            "qbar_routes": self.qbar_routes,
            "qbar_max_rel_diff": self.qbar_max_rel_diff,
        }


@dataclass(frozen=True)
class PeriodReport:
    classification: Classification
    birth_product_verdict: Verdict
    aperiodicity_verdict: Verdict
    period: PeriodValue
    fired_sufficient_conditions: tuple[str, ...]
    cross_checks: CrossChecks

    @property
    def decided(self) -> bool:
        return self.period != PERIOD_UNDECIDED

    def as_dict(self) -> dict:
        return {
            "classification": self.classification.as_dict(),
            "birth_product": self.birth_product_verdict.as_dict(),
            "aperiodicity": self.aperiodicity_verdict.as_dict(),
            "period": self.period,
            "fired_sufficient_conditions": list(self.fired_sufficient_conditions),
            "cross_checks": self.cross_checks.as_dict(),
        }


def _period_from_verdicts(birth_product: Verdict, aperiodicity: Verdict) -> PeriodValue:
    if birth_product.converges and aperiodicity.diverges:
        raise ContradictionDetected(
            "positive birth product and divergent aperiodicity series cannot co-occur"
        )
    if birth_product.converges:
        return PERIOD_INFINITE
    if aperiodicity.diverges:
        return PERIOD_ONE
    if birth_product.diverges and aperiodicity.converges:
        return PERIOD_TWO
    return PERIOD_UNDECIDED


def sufficient_checks(
    chain: ChainSpec,
    policy: Optional[ProbePolicy] = None,
    series_probe: Optional[SeriesProbe] = None,
) -> tuple[str, ...]:
    """Evaluate the three sufficient conditions for period 1 independently.

    ``diagonal_bound`` asks for a uniform delta > 0 with r_i >= delta at all
    but finitely many states, which among the supported tails only a
    constant family with r > 0 provides.
    """
    policy = policy or ProbePolicy()
    if series_probe is None:
        series_probe = probe(chain, policy)
    fired = []
    classification = classification_from_verdicts(
        series_probe.verdicts["mass"], series_probe.verdicts["scale"]
    )
    if classification.recurrent:
        fired.append(CONDITION_RECURRENT)
    tail = chain.tail
    if policy.use_analytic and isinstance(tail, Constant) and tail.tail_self_infimum > 0.0:
        fired.append(CONDITION_DIAGONAL)
    if series_probe.verdicts["self_ratio"].diverges:
        fired.append(CONDITION_SELF_RATIO)
    return tuple(fired)


def asymptotic_period(
    chain: ChainSpec,
    policy: Optional[ProbePolicy] = None,
    series_probe: Optional[SeriesProbe] = None,
) -> PeriodReport:
    """Full period verdict with provenance and internal cross-checks.

    Criteria are evaluated cheapest first (birth product, then the
    aperiodicity series); an undecided verdict that the decision depends on
    propagates to an undecided period, never to a guess.
    """
    policy = policy or ProbePolicy()
    if series_probe is None:
        series_probe = probe(chain, policy)
    verdicts = series_probe.verdicts
    classification = classification_from_verdicts(verdicts["mass"], verdicts["scale"])
    period = _period_from_verdicts(verdicts["birth_product"], verdicts["aperiodicity"])
    fired = sufficient_checks(chain, policy, series_probe)

    if classification.recurrent and period != PERIOD_UNDECIDED and period != PERIOD_ONE:
        raise ContradictionDetected(
            f"recurrent chain judged period {period}; recurrence forces period 1"
        )
    if fired and period != PERIOD_UNDECIDED and period != PERIOD_ONE:
        raise ContradictionDetected(
            f"sufficient conditions {fired} fired but period judged {period}"
        )

    agreement = qpoly.route_agreement(chain, policy.qbar_horizon)
    qseq = qpoly.qbar_minus_one(chain, policy.qbar_horizon, "direct")
    growth = qpoly.growth_verdict(chain, policy.qbar_horizon, policy, qseq=qseq)
    aper = verdicts["aperiodicity"]
    series_vs_growth = True
    if growth.decided and aper.decided and growth.decision != aper.decision:
        raise ContradictionDetected(
            "qbar growth verdict disagrees with the aperiodicity series verdict"
        )
    if not agreement.agree:
        raise ContradictionDetected(
            f"qbar evaluation routes disagree beyond tolerance "
            f"(max relative difference {agreement.max_rel_diff:.3e})"
        )
    checks = CrossChecks(
        series_vs_growth=series_vs_growth,
        qbar_routes=agreement.agree,
        qbar_max_rel_diff=agreement.max_rel_diff,
    )
    return PeriodReport(
        classification=classification,
        birth_product_verdict=verdicts["birth_product"],
        aperiodicity_verdict=verdicts["aperiodicity"],
        period=period,
        fired_sufficient_conditions=fired,
        cross_checks=checks,
    )


def period_divides(period: PeriodValue, n: int) -> Optional[bool]:
    """Whether the period divides n; None when the period is undecided."""
    if period == PERIOD_UNDECIDED:
        return None
    if period == PERIOD_INFINITE:
        return False
    return n % int(period) == 0


@dataclass(frozen=True)
class DivisorCheck:
    period: PeriodValue
    n: int
    delta_holds: bool
    divides: Optional[bool]
    consistent: bool

    def as_dict(self) -> dict:
        return {
            "period": self.period,
            "n": self.n,
            "delta_holds": self.delta_holds,
            "divides": self.divides,
            "consistent": self.consistent,
        }


def divisor_check(report: PeriodReport, n: int, delta_holds: bool) -> DivisorCheck:
    """Consistency of the period against an n-step uniform-diagonal condition.

    The caller asserts via ``delta_holds`` that the n-step transition matrix
    has diagonal entries bounded below at all but finitely many states; in
    that case the asymptotic period must divide n, and a non-dividing
    decided period raises :class:`ContradictionDetected`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    divides = period_divides(report.period, n)
    consistent = (not delta_holds) or divides is None or divides
    if not consistent:
        raise ContradictionDetected(
            f"period {report.period} does not divide n = {n} although the "
            f"n-step diagonal bound holds"
        )
    return DivisorCheck(
        period=report.period,
        n=n,
        delta_holds=delta_holds,
        divides=divides,
        consistent=consistent,
    )
