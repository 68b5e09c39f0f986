"""Series criteria for birth-death chains.

Everything downstream rests on the potential coefficients

    pi_0 = 1,    pi_n = (p_0 p_1 ... p_{n-1}) / (q_1 q_2 ... q_n),

computed in log domain, and on five derived series, each carrying a
three-valued verdict (diverges / converges / undecided):

``mass``
    sum of pi_n.  Converges iff the chain is positive recurrent.
``scale``
    sum of 1 / (p_n pi_n).  Converges iff the chain is transient.
``aperiodicity``
    the double series sum_j (1/(p_j pi_j)) * sum_{k<=j} r_k pi_k.  Diverges
    iff the asymptotic period is 1.
``birth_product``
    sum of log p_i.  "Converges" means the infinite product of the p_i is
    positive (asymptotic period infinity); "diverges" means the product is 0.
``self_ratio``
    sum of r_j / p_j.  Divergence is a sufficient condition for asymptotic
    aperiodicity, via termwise domination by the aperiodicity series.

The mass and scale series cannot both converge, which yields the recurrence
classification trichotomy.

Verdicts are decided analytically from the tail family whenever a rule
exists (it does for every supported family); the numeric fallback only ever
declares divergence past a threshold, never convergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import (
    ChainSpec,
    Constant,
    GeometricSelf,
    PowerSelf,
    ProductPositive,
    TailFamily,
    ZeroSelfTail,
)
from .errors import ContradictionDetected
from .policy import ProbePolicy

SATURATION = 1e300

SERIES_KINDS = ("mass", "scale", "aperiodicity", "birth_product", "self_ratio")

DIVERGES = "diverges"
CONVERGES = "converges"
UNDECIDED = "undecided"

__all__ = [
    "Verdict",
    "Classification",
    "SeriesProbe",
    "potential_coefficients",
    "probe",
    "classify",
    "aperiodicity_series",
    "log_product_p",
    "decide_series",
    "SERIES_KINDS",
    "DIVERGES",
    "CONVERGES",
    "UNDECIDED",
]


@dataclass(frozen=True)
class Verdict:
    """Three-valued convergence decision with evidence of how it was reached."""

    decision: str  # diverges | converges | undecided
    method: str  # analytic | numeric_threshold
    horizon_used: int
    partial_value: float
    note: str = ""

    def __post_init__(self) -> None:
        if self.decision not in (DIVERGES, CONVERGES, UNDECIDED):
            raise ValueError(f"bad decision {self.decision!r}")
        if self.method not in ("analytic", "numeric_threshold"):
            raise ValueError(f"bad method {self.method!r}")
        if self.method == "analytic" and self.decision == UNDECIDED:
            raise ValueError("analytic verdicts are never undecided")

    @property
    def decided(self) -> bool:
        return self.decision != UNDECIDED

    @property
    def diverges(self) -> bool:
        return self.decision == DIVERGES

    @property
    def converges(self) -> bool:
        return self.decision == CONVERGES

    def as_dict(self) -> dict:
        return {
            "decision": self.decision,
            "method": self.method,
            "horizon_used": self.horizon_used,
            "partial_value": self.partial_value,
            "note": self.note,
        }


@dataclass(frozen=True)
class Classification:
    """Recurrence classification with the (mass, scale) verdict pair as evidence."""

    kind: str  # positive_recurrent | null_recurrent | transient | undecided
    mass: Verdict
    scale: Verdict

    @property
    def decided(self) -> bool:
        return self.kind != UNDECIDED

    @property
    def recurrent(self) -> bool:
        return self.kind in ("positive_recurrent", "null_recurrent")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "mass": self.mass.as_dict(), "scale": self.scale.as_dict()}


@dataclass(frozen=True)
class SeriesProbe:
    """Partial sums of every series criterion up to a horizon, plus verdicts.

    Arrays have length horizon + 1; entry n is the partial sum over terms
    0..n.  ``mass_partial`` and ``aperiodicity_partial`` saturate at 1e300
    instead of overflowing.
    """

    horizon: int
    log_pi: np.ndarray
    mass_partial: np.ndarray
    scale_partial: np.ndarray
    aperiodicity_partial: np.ndarray
    log_birth_product_partial: np.ndarray
    self_ratio_partial: np.ndarray
    verdicts: dict[str, Verdict]

    def partials(self, kind: str) -> np.ndarray:
        return {
            "mass": self.mass_partial,
            "scale": self.scale_partial,
            "aperiodicity": self.aperiodicity_partial,
            "birth_product": self.log_birth_product_partial,
            "self_ratio": self.self_ratio_partial,
        }[kind]

    def summary(self) -> dict:
        return {
            "horizon": self.horizon,
            "verdicts": {k: self.verdicts[k].as_dict() for k in SERIES_KINDS},
            "final_partials": {
                "mass": float(self.mass_partial[-1]),
                "scale": float(self.scale_partial[-1]),
                "aperiodicity": float(self.aperiodicity_partial[-1]),
                "log_birth_product": float(self.log_birth_product_partial[-1]),
                "self_ratio": float(self.self_ratio_partial[-1]),
            },
        }


def _chain_logs(chain: ChainSpec, n: int):
    """Rows 0..n and their logs; log_q[0] is -inf and must not be consumed.

    Logs come from the closed-form log-domain interface so they stay finite
    (where mathematically finite) even when the linear row values underflow.
    """
    q, r, p = chain.rows_range(0, n + 1)
    log_q, log_r, log_p = chain.log_rows_range(0, n + 1)
    return q, r, p, log_q, log_r, log_p


def potential_coefficients(chain: ChainSpec, n: int) -> np.ndarray:
    """log pi_0 .. log pi_n by cumulative summation; exact 0.0 at n = 0."""
    if n < 0:
        raise ValueError("horizon must be >= 0")
    _, _, _, log_q, _, log_p = _chain_logs(chain, max(n, 1))
    out = np.zeros(n + 1)
    if n >= 1:
        np.cumsum(log_p[:n] - log_q[1 : n + 1], out=out[1:])
    return out


def _saturating_cumsum(terms: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        partial = np.cumsum(np.minimum(terms, SATURATION))
    return np.minimum(partial, SATURATION)


def aperiodicity_series(chain: ChainSpec, n: int) -> np.ndarray:
    """Partial sums S_N = sum_{j<=N} (1/(p_j pi_j)) sum_{k<=j} r_k pi_k.

    The inner sums are carried in log domain (cumulative log-add), so they
    survive the pi_k overflow that transient chains hit quickly.
    """
    if n < 0:
        raise ValueError("horizon must be >= 0")
    _, _, _, log_q, log_r, log_p = _chain_logs(chain, max(n, 1))
    log_pi = np.zeros(n + 1)
    if n >= 1:
        np.cumsum(log_p[:n] - log_q[1 : n + 1], out=log_pi[1:])
    log_inner = np.logaddexp.accumulate(log_r[: n + 1] + log_pi)
    with np.errstate(over="ignore"):
        terms = np.exp(log_inner - log_p[: n + 1] - log_pi)
    return _saturating_cumsum(terms)


def log_product_p(chain: ChainSpec, n: int, policy: Optional[ProbePolicy] = None):
    """Partial sums of log p_i and the verdict on whether the full product is positive."""
    policy = policy or ProbePolicy()
    _, _, log_p = chain.log_rows_range(0, n + 1)
    partial = np.cumsum(log_p)
    verdict = decide_series(chain.tail, "birth_product", partial, policy)
    return partial, verdict


def probe(chain: ChainSpec, policy: Optional[ProbePolicy] = None) -> SeriesProbe:
    """Compute every series criterion up to the policy horizon and decide verdicts."""
    policy = policy or ProbePolicy()
    n = policy.horizon
    _, r, p, log_q, log_r, log_p = _chain_logs(chain, n)
    log_pi = np.zeros(n + 1)
    np.cumsum(log_p[:n] - log_q[1 : n + 1], out=log_pi[1:])

    with np.errstate(over="ignore"):
        mass_terms = np.exp(log_pi)
        scale_terms = np.exp(-(log_p[: n + 1] + log_pi))
    mass = _saturating_cumsum(mass_terms)
    scale = _saturating_cumsum(scale_terms)

    log_inner = np.logaddexp.accumulate(log_r[: n + 1] + log_pi)
    with np.errstate(over="ignore"):
        aper_terms = np.exp(log_inner - log_p[: n + 1] - log_pi)
    aperiodicity = _saturating_cumsum(aper_terms)

    log_birth = np.cumsum(log_p[: n + 1])
    self_ratio = np.cumsum(r[: n + 1] / p[: n + 1])

    partials = {
        "mass": mass,
        "scale": scale,
        "aperiodicity": aperiodicity,
        "birth_product": log_birth,
        "self_ratio": self_ratio,
    }
    verdicts = {
        kind: decide_series(chain.tail, kind, partials[kind], policy)
        for kind in SERIES_KINDS
    }
    if verdicts["mass"].converges and verdicts["scale"].converges:
        raise ContradictionDetected(
            "mass and scale series cannot both converge (their sum is infinite)"
        )
    return SeriesProbe(
        horizon=n,
        log_pi=log_pi,
        mass_partial=mass,
        scale_partial=scale,
        aperiodicity_partial=aperiodicity,
        log_birth_product_partial=log_birth,
        self_ratio_partial=self_ratio,
        verdicts=verdicts,
    )


def _analytic_decision(tail: TailFamily, kind: str) -> Optional[str]:
    """Exact verdict from the tail family, or None if no rule covers it.

    The finite prefix shifts every partial sum by a constant and so never
    affects convergence; only the tail matters.  For the ratio-normalized
    families (geometric_self, power_self) the potential coefficients
    telescope to pi_n = C * (p/q)**n / (1 - r_n), so the mass and scale
    series behave exactly like the constant-row case.
    """
    if isinstance(tail, Constant):
        if kind == "mass":
            return CONVERGES if tail.p < tail.q else DIVERGES
        if kind == "scale":
            return CONVERGES if tail.q < tail.p else DIVERGES
        if kind == "birth_product":
            return DIVERGES  # p < 1 at every tail state, so the product is 0
        if kind == "self_ratio":
            return DIVERGES if tail.r > 0.0 else CONVERGES
        if kind == "aperiodicity":
            if tail.r > 0.0:
                return DIVERGES  # dominated below by the divergent self_ratio series
            # zero tail self-transitions: inner sums freeze at a positive
            # constant, so the series behaves like the scale series
            return CONVERGES if tail.q < tail.p else DIVERGES
    if isinstance(tail, (GeometricSelf, PowerSelf)):
        # p, q stored normalized to p + q = 1
        if kind == "mass":
            return CONVERGES if tail.p < tail.q else DIVERGES
        if kind == "scale":
            return CONVERGES if tail.q < tail.p else DIVERGES
        if kind == "birth_product":
            return DIVERGES  # 1 - p_i >= q * (1 - sup r) > 0... summed, diverges
        if isinstance(tail, GeometricSelf):
            if kind == "self_ratio":
                return CONVERGES  # r_j/p_j = O(rho**j)
            if kind == "aperiodicity":
                # transient: inner sums grow at most like max(rho*p/q, 1)**j
                # against (q/p)**j outer weights, leaving O(j * max(rho, q/p)**j)
                # terms; recurrent: scale series diverges against positive
                # inner sums.
                return CONVERGES if tail.p > tail.q else DIVERGES
        else:
            if kind == "self_ratio":
                return DIVERGES if (tail.c > 0.0 and tail.alpha <= 1.0) else CONVERGES
            if kind == "aperiodicity":
                if tail.p <= tail.q:
                    return DIVERGES  # recurrent
                if tail.c > 0.0 and tail.alpha <= 1.0:
                    return DIVERGES  # dominated below by divergent self_ratio
                return CONVERGES  # terms O((j+1)**-alpha), alpha > 1
    if isinstance(tail, ProductPositive):
        return {
            "mass": DIVERGES,  # pi_n grows superexponentially
            "scale": CONVERGES,
            "birth_product": CONVERGES,  # sum of deficits c*rho**i is finite
            "self_ratio": CONVERGES,
            "aperiodicity": CONVERGES,  # terms O(r_j/p_j) = O(rho**j)
        }[kind]
    if isinstance(tail, ZeroSelfTail):
        if kind == "mass":
            return CONVERGES if tail.p < tail.q else DIVERGES
        if kind == "scale":
            return CONVERGES if tail.q < tail.p else DIVERGES
        if kind == "birth_product":
            return DIVERGES
        if kind == "self_ratio":
            return CONVERGES  # finitely many nonzero terms
        if kind == "aperiodicity":
            # inner sums freeze at the prefix constant; verdict follows scale
            return CONVERGES if tail.q < tail.p else DIVERGES
    return None


def decide_series(
    tail: TailFamily,
    kind: str,
    partials: np.ndarray,
    policy: ProbePolicy,
) -> Verdict:
    """Verdict for one series: analytic rule if enabled and known, else numeric.

    The numeric route declares divergence once the partial sum exceeds the
    policy threshold (for ``birth_product``, once the log-sum drops below its
    negation) and is otherwise undecided; it never declares convergence.
    """
    if kind not in SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    horizon = len(partials) - 1
    last = float(partials[-1])
    if policy.use_analytic:
        decision = _analytic_decision(tail, kind)
        if decision is not None:
            return Verdict(decision, "analytic", horizon, last, note=tail.family)
    if kind == "birth_product":
        if last < -policy.div_threshold:
            return Verdict(DIVERGES, "numeric_threshold", horizon, last)
    elif last > policy.div_threshold:
        return Verdict(DIVERGES, "numeric_threshold", horizon, last)
    return Verdict(UNDECIDED, "numeric_threshold", horizon, last)


def classify(chain: ChainSpec, policy: Optional[ProbePolicy] = None) -> Classification:
    """Recurrence trichotomy from the (mass, scale) verdict pair."""
    policy = policy or ProbePolicy()
    pr = probe(chain, policy)
    return classification_from_verdicts(pr.verdicts["mass"], pr.verdicts["scale"])


def classification_from_verdicts(mass: Verdict, scale: Verdict) -> Classification:
    if not mass.decided or not scale.decided:
        kind = UNDECIDED
    elif mass.converges and scale.diverges:
        kind = "positive_recurrent"
    elif mass.diverges and scale.diverges:
        kind = "null_recurrent"
    elif mass.diverges and scale.converges:
        kind = "transient"
    else:
        raise ContradictionDetected("mass and scale series both judged convergent")
    return Classification(kind=kind, mass=mass, scale=scale)


def mass_total(probe_result: SeriesProbe) -> float:
    """Value of the convergent mass series (the normalizing constant for the
    stationary occupation law).  Meaningful only when the mass verdict is
    convergent; the partial sum at the horizon is then exact to double
    precision for every supported family."""
    if not probe_result.verdicts["mass"].converges:
        raise ValueError("mass series does not converge for this chain")
    return float(probe_result.mass_partial[-1])


def stationary_occupation(chain: ChainSpec, probe_result: SeriesProbe, n: int) -> np.ndarray:
    """pi_j / mass_total for j = 0..n, for positive recurrent chains."""
    total = mass_total(probe_result)
    log_pi = probe_result.log_pi
    if n + 1 > len(log_pi):
        log_pi = potential_coefficients(chain, n)
    return np.exp(log_pi[: n + 1]) / total


def aperiodicity_terms(chain: ChainSpec, n: int) -> np.ndarray:
    """Individual terms (1/(p_j pi_j)) sum_{k<=j} r_k pi_k for j = 0..n.

    Twice these terms are the growth factors in the product upper bound on
    the signed polynomial values at -1.
    """
    if n < 0:
        raise ValueError("horizon must be >= 0")
    _, _, _, log_q, log_r, log_p = _chain_logs(chain, max(n, 1))
    log_pi = np.zeros(n + 1)
    if n >= 1:
        np.cumsum(log_p[:n] - log_q[1 : n + 1], out=log_pi[1:])
    log_inner = np.logaddexp.accumulate(log_r[: n + 1] + log_pi)
    with np.errstate(over="ignore"):
        return np.exp(log_inner - log_p[: n + 1] - log_pi)
