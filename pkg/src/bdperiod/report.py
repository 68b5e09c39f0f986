"""Consolidated analysis bundles and cross-validation.

An AnalysisBundle joins the analytic verdicts (period report, series
summary, polynomial growth summary) with optional simulation evidence into
one self-contained JSON document: every verdict carries its evidence, the
policy is echoed, and re-running with the echoed chain and policy
reproduces the bundle byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import __version__
from . import qpoly
from .chain import ChainSpec
from .errors import ContradictionDetected
from .period import (
    PERIOD_INFINITE,
    PERIOD_ONE,
    PERIOD_TWO,
    PERIOD_UNDECIDED,
    PeriodReport,
    asymptotic_period,
)
from .policy import ProbePolicy
from .series import SeriesProbe, probe

TOOL_NAME = "bdperiod"

__all__ = ["AnalysisBundle", "SimPlan", "analyze", "cross_validate"]


@dataclass(frozen=True)
class SimPlan:
    """Simulation options attached to an analyze run."""

    master_seed: int = 1
    fleet: int = 1
    steps: int = 1_000_000
    burn_in: Optional[int] = None
    ms: tuple = (2,)
    x0: int = 0
    window: int = 1024

    def as_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "fleet": self.fleet,
            "steps": self.steps,
            "burn_in": self.burn_in,
            "ms": list(self.ms),
            "x0": self.x0,
            "window": self.window,
        }


@dataclass(frozen=True)
class AnalysisBundle:
    chain_document: dict
    row0_adjusted: bool
    policy: ProbePolicy
    period_report: PeriodReport
    series_probe: SeriesProbe
    qbar_summary: dict
    empirical: Optional[list]  # list of EmpiricalReport dicts
    empirical_agreement: Optional[dict]

    def as_dict(self) -> dict:
        return {
            "tool": {"name": TOOL_NAME, "version": __version__},
            "chain": self.chain_document,
            "row0_adjusted": self.row0_adjusted,
            "policy": self.policy.as_dict(),
            "period_report": self.period_report.as_dict(),
            "series": self.series_probe.summary(),
            "qbar": self.qbar_summary,
            "empirical": self.empirical,
            "empirical_agreement": self.empirical_agreement,
        }


def _estimate_matches_period(estimate, period) -> Optional[bool]:
    from .sim import ESTIMATE_INCONCLUSIVE, ESTIMATE_INFINITE

    if period == PERIOD_UNDECIDED or estimate == ESTIMATE_INCONCLUSIVE:
        return None
    if period == PERIOD_INFINITE:
        return estimate == ESTIMATE_INFINITE
    return estimate == period


def analyze(
    chain: ChainSpec,
    policy: Optional[ProbePolicy] = None,
    sim_plan: Optional[SimPlan] = None,
) -> AnalysisBundle:
    """Run the full analytic pipeline, optionally with simulation evidence."""
    policy = policy or ProbePolicy()
    series_probe = probe(chain, policy)
    period_report = asymptotic_period(chain, policy, series_probe)
    qseq = qpoly.qbar_minus_one(chain, policy.qbar_horizon, "direct")
    growth = qpoly.growth_verdict(chain, policy.qbar_horizon, policy, qseq=qseq)
    qbar_summary = qpoly.QSequence(
        x=-1.0,
        values=qseq.values,
        is_qbar=True,
        saturated_at=qseq.saturated_at,
        route="direct",
        growth=growth,
    ).summary()

    empirical = None
    agreement = None
    if sim_plan is not None:
        from .sim import run_fleet

        fleet = run_fleet(
            chain,
            sim_plan.master_seed,
            sim_plan.fleet,
            steps=sim_plan.steps,
            burn_in=sim_plan.burn_in,
            ms=sim_plan.ms,
            x0=sim_plan.x0,
            window=sim_plan.window,
        )
        empirical = [r.as_dict() for r in fleet.reports]
        majority = fleet.majority_estimate()
        matches = _estimate_matches_period(majority, period_report.period)
        agreement = {
            "majority_estimate": majority,
            "analytic_period": period_report.period,
            "matches": matches,
            "estimate_counts": fleet.estimate_counts(),
        }
        if matches is False:
            raise ContradictionDetected(
                f"empirical majority estimate {majority!r} disagrees with "
                f"analytic period {period_report.period!r}"
            )
    return AnalysisBundle(
        chain_document=chain.document(),
        row0_adjusted=chain.row0_adjusted,
        policy=policy,
        period_report=period_report,
        series_probe=series_probe,
        qbar_summary=qbar_summary,
        empirical=empirical,
        empirical_agreement=agreement,
    )


def cross_validate(
    chain: ChainSpec,
    policy: Optional[ProbePolicy] = None,
    sim_plan: Optional[SimPlan] = None,
    _override_aperiodicity: Optional[str] = None,
) -> dict:
    """Consistency checks across the three analysis routes.

    Asserts that the polynomial growth verdict matches the aperiodicity
    series verdict, that the three qbar evaluation routes agree numerically,
    and (when simulation is requested) that the empirical majority estimate
    matches the analytic period.  Any disagreement between decided verdicts
    raises :class:`ContradictionDetected`.

    ``_override_aperiodicity`` exists for fault-injection tests only: it
    replaces the series verdict decision before the comparison.
    """
    policy = policy or ProbePolicy()
    series_probe = probe(chain, policy)
    aper = series_probe.verdicts["aperiodicity"]
    if _override_aperiodicity is not None:
        from .series import Verdict

        aper = Verdict(
            _override_aperiodicity,
            aper.method,
            aper.horizon_used,
            aper.partial_value,
            note="injected fault",
        )

    qseq = qpoly.qbar_minus_one(chain, policy.qbar_horizon, "direct")
    growth = qpoly.growth_verdict(chain, policy.qbar_horizon, policy, qseq=qseq)
    if growth.decided and aper.decided and growth.decision != aper.decision:
        raise ContradictionDetected(
            "qbar growth verdict disagrees with the aperiodicity series verdict"
        )
    agreement = qpoly.route_agreement(chain, policy.qbar_horizon)
    if not agreement.agree:
        raise ContradictionDetected(
            f"qbar routes disagree (max relative difference {agreement.max_rel_diff:.3e})"
        )

    checks = {
        "series_vs_growth": True,
        "qbar_routes": True,
        "qbar_max_rel_diff": agreement.max_rel_diff,
        "empirical_vs_analytic": None,
    }
    if sim_plan is not None:
        bundle = analyze(chain, policy, sim_plan)
        checks["empirical_vs_analytic"] = bundle.empirical_agreement["matches"]
    return checks
