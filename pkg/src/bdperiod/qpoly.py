"""Birth-death polynomials and the truncated eigen/harmonic checks.

The polynomials Q_n satisfy the three-term recurrence

    x Q_n(x) = q_n Q_{n-1}(x) + r_n Q_n(x) + p_n Q_{n+1}(x),
    Q_0(x) = 1,    p_0 Q_1(x) = x - r_0,

equivalently P Q(x) = x Q(x) for the tridiagonal transition matrix P.  The
recurrence is evaluated in the algebraically identical "summed" form

    Q_{n+1} = Q_n + ((x - 1) Q_n + q_n (Q_n - Q_{n-1})) / p_n,

which keeps Q_n(1) = 1 exact in floats (the x - 1 factor vanishes exactly),
so the truncated eigen residual at x = 1 is exactly zero.

At x = -1 the signed values

    qbar_n = (-1)**n Q_n(-1)

are positive, nondecreasing, and satisfy two summation identities used as
independent evaluation routes:

    sum1:  qbar_{n+1} = 1 + 2 sum_{j<=n} (1/(p_j pi_j)) sum_{k<=j} r_k pi_k qbar_k
    sum2:  qbar_{n+1} = qbar_n + (2/(p_n pi_n)) sum_{k<=n} r_k pi_k qbar_k

qbar_n tends to infinity exactly when the aperiodicity series diverges, so
the growth verdict and the series verdict cross-check each other.

Values saturate at 1e300: computation stops there with a sticky flag, and a
saturated sequence is reported divergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import ChainSpec
from .errors import ContradictionDetected, Saturated
from .policy import ProbePolicy
from .series import (
    CONVERGES,
    DIVERGES,
    UNDECIDED,
    SATURATION,
    Verdict,
    decide_series,
    aperiodicity_series,
    potential_coefficients,
)

ROUTES = ("direct", "sum1", "sum2")

__all__ = [
    "QSequence",
    "RouteAgreement",
    "HarmonicBasis",
    "q_eval",
    "qbar_minus_one",
    "growth_verdict",
    "eigen_residual",
    "harmonic_basis_p2",
    "route_agreement",
    "ROUTES",
]


@dataclass(frozen=True)
class QSequence:
    """Polynomial values along one chain.

    ``values[n]`` is Q_n(x), or the signed positive value qbar_n when
    ``is_qbar`` is set.  If saturation was hit, ``values`` stops at the first
    saturated entry (capped at +-1e300) and ``saturated_at`` records its index.
    """

    x: float
    values: np.ndarray
    is_qbar: bool = False
    saturated_at: Optional[int] = None
    route: str = "direct"
    growth: Optional[Verdict] = None

    @property
    def saturated(self) -> bool:
        return self.saturated_at is not None

    def summary(self) -> dict:
        return {
            "x": self.x,
            "n": len(self.values) - 1,
            "route": self.route,
            "last_value": float(self.values[-1]),
            "saturated_at": self.saturated_at,
            "growth": self.growth.as_dict() if self.growth is not None else None,
        }


def q_eval(chain: ChainSpec, x: float, n: int) -> QSequence:
    """Q_0(x)..Q_n(x) by the forward recurrence.

    Stops early (with the saturation flag) once |Q| exceeds 1e300.
    """
    if n < 0:
        raise ValueError("horizon must be >= 0")
    q, r, p = chain.rows_range(0, n + 1)
    values = np.empty(n + 1)
    values[0] = 1.0
    saturated_at = None
    if n >= 1:
        v1 = 1.0 + (x - 1.0) / p[0]
        values[1] = v1
        if not math.isfinite(v1) or abs(v1) > SATURATION:
            values[1] = math.copysign(SATURATION, v1)
            saturated_at = 1
    if saturated_at is None:
        prev, cur = (values[0], values[1]) if n >= 1 else (values[0], values[0])
        for i in range(1, n):
            nxt = cur + ((x - 1.0) * cur + q[i] * (cur - prev)) / p[i]
            if not math.isfinite(nxt) or abs(nxt) > SATURATION:
                values[i + 1] = math.copysign(SATURATION, nxt)
                saturated_at = i + 1
                break
            values[i + 1] = nxt
            prev, cur = cur, nxt
    if saturated_at is not None:
        values = values[: saturated_at + 1]
    return QSequence(x=x, values=values, saturated_at=saturated_at)


def _qbar_direct(chain: ChainSpec, n: int) -> QSequence:
    base = q_eval(chain, -1.0, n)
    return QSequence(
        x=-1.0,
        values=np.abs(base.values),
        is_qbar=True,
        saturated_at=base.saturated_at,
        route="direct",
    )


def _qbar_summed(chain: ChainSpec, n: int, route: str) -> QSequence:
    log_pi = potential_coefficients(chain, n)
    _, log_r, log_p = chain.log_rows_range(0, n + 1)

    values = np.empty(n + 1)
    values[0] = 1.0
    log_inner = -math.inf  # log sum_{k<=j} r_k pi_k qbar_k
    outer = 0.0  # sum_{j<=n} inner_j / (p_j pi_j), for sum1
    saturated_at = None
    for j in range(n):
        log_inner = np.logaddexp(log_inner, log_r[j] + log_pi[j] + math.log(values[j]))
        log_term = log_inner - log_p[j] - log_pi[j]
        if route == "sum1":
            outer += math.exp(log_term)
            nxt = 1.0 + 2.0 * outer
        else:
            nxt = values[j] + 2.0 * math.exp(log_term)
        if not math.isfinite(nxt) or nxt > SATURATION:
            values[j + 1] = SATURATION
            saturated_at = j + 1
            break
        values[j + 1] = nxt
    if saturated_at is not None:
        values = values[: saturated_at + 1]
    return QSequence(x=-1.0, values=values, is_qbar=True, saturated_at=saturated_at, route=route)


def qbar_minus_one(chain: ChainSpec, n: int, route: str = "direct") -> QSequence:
    """Signed values qbar_0..qbar_n at x = -1 via one of three routes.

    ``direct`` runs the recurrence and strips signs; ``sum1`` and ``sum2``
    evaluate the two summation identities with log-domain inner sums.  All
    routes agree to within accumulated rounding.
    """
    if route not in ROUTES:
        raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")
    if n < 0:
        raise ValueError("horizon must be >= 0")
    if route == "direct":
        return _qbar_direct(chain, n)
    return _qbar_summed(chain, n, route)


@dataclass(frozen=True)
class RouteAgreement:
    max_rel_diff: float
    common_n: int
    agree: bool

    def as_dict(self) -> dict:
        return {
            "max_rel_diff": self.max_rel_diff,
            "common_n": self.common_n,
            "agree": self.agree,
        }


def route_agreement(chain: ChainSpec, n: int, tol: float = 1e-10) -> RouteAgreement:
    """Maximum relative disagreement of the three qbar routes up to n.

    Comparison stops at the first saturation point of any route.
    """
    seqs = [qbar_minus_one(chain, n, route) for route in ROUTES]
    common = min(len(s.values) for s in seqs)
    for s in seqs:
        if s.saturated_at is not None and s.saturated_at < common:
            common = s.saturated_at  # exclude the capped entry itself
    if common < 1:
        return RouteAgreement(max_rel_diff=0.0, common_n=0, agree=True)
    stacked = np.vstack([s.values[:common] for s in seqs])
    spread = stacked.max(axis=0) - stacked.min(axis=0)
    rel = float((spread / stacked.min(axis=0)).max())
    return RouteAgreement(max_rel_diff=rel, common_n=common - 1, agree=rel <= tol)


def growth_verdict(
    chain: ChainSpec,
    n: int,
    policy: Optional[ProbePolicy] = None,
    qseq: Optional[QSequence] = None,
) -> Verdict:
    """Verdict on whether qbar_n grows without bound.

    The analytic route delegates to the aperiodicity-series verdict (the two
    diverge together); the numeric route declares divergence once qbar
    crosses the policy threshold or saturates, and is otherwise undecided.
    The two routes must not contradict each other.
    """
    policy = policy or ProbePolicy()
    if qseq is None:
        qseq = qbar_minus_one(chain, n, "direct")
    last = float(qseq.values[-1])
    if qseq.saturated or last > policy.qbar_threshold:
        numeric = Verdict(DIVERGES, "numeric_threshold", len(qseq.values) - 1, last)
    else:
        numeric = Verdict(UNDECIDED, "numeric_threshold", len(qseq.values) - 1, last)

    if not policy.use_analytic:
        return numeric

    partial = aperiodicity_series(chain, min(policy.horizon, max(n, 1)))
    series_verdict = decide_series(chain.tail, "aperiodicity", partial, policy)
    if not series_verdict.decided:
        return numeric
    if series_verdict.converges and numeric.diverges:
        raise ContradictionDetected(
            "aperiodicity series converges but qbar crossed the growth threshold"
        )
    return Verdict(
        series_verdict.decision,
        "analytic",
        series_verdict.horizon_used,
        last,
        note="via aperiodicity series equivalence",
    )


def eigen_residual(chain: ChainSpec, x: float, n: int) -> float:
    """Max residual of the truncated eigen relation P Q(x) = x Q(x).

    Uses rows 0..n-2 (the last computed value Q_{n-1} only ever appears as a
    neighbor; the truncation boundary row is excluded).  Raises
    :class:`Saturated` if the values saturate inside the window.
    """
    if n < 3:
        raise ValueError("need n >= 3 rows for a meaningful residual")
    seq = q_eval(chain, x, n - 1)
    if seq.saturated:
        raise Saturated(f"polynomial values saturate at index {seq.saturated_at} < {n - 1}")
    y = seq.values
    q, r, p = chain.rows_range(0, n - 1)
    res0 = abs((r[0] * y[0] + p[0] * y[1]) - x * y[0])
    qm = q[1 : n - 2 + 1]
    rm = r[1 : n - 2 + 1]
    pm = p[1 : n - 2 + 1]
    interior = np.abs((qm * y[0 : n - 3 + 1] + rm * y[1 : n - 2 + 1]) + pm * y[2 : n - 1 + 1]
                      - x * y[1 : n - 2 + 1])
    return float(max(res0, interior.max() if interior.size else 0.0))


def _apply_p(chain_rows, y: np.ndarray) -> np.ndarray:
    """(P y)_i for i = 0..len(y)-2; the last row needs a neighbor we lack."""
    q, r, p = chain_rows
    m = len(y) - 1
    out = np.empty(m)
    out[0] = (r[0] * y[0]) + p[0] * y[1]
    if m > 1:
        out[1:] = (q[1:m] * y[0 : m - 1] + r[1:m] * y[1:m]) + p[1:m] * y[2 : m + 1]
    return out


@dataclass(frozen=True)
class HarmonicBasis:
    """The two bounded-solution candidates of the two-step harmonic system.

    ``q_plus`` is the all-ones vector Q(1); ``q_minus`` is Q(-1).  The
    residuals are the worst interior-row defects of P^2 y = y.  The
    dimension check verifies constructively that solutions of the interior
    equations satisfying the two starting rows span exactly these two
    vectors, and that a seed outside that span violates the starting rows.
    """

    q_plus: np.ndarray
    q_minus: np.ndarray
    residual_plus: float
    residual_minus: float
    scale_minus: float
    fit_residual: float
    constraint_violation: float
    two_dim_confirmed: bool
    n_fit: int

    def as_dict(self) -> dict:
        return {
            "n": len(self.q_plus),
            "residual_plus": self.residual_plus,
            "residual_minus": self.residual_minus,
            "scale_minus": self.scale_minus,
            "fit_residual": self.fit_residual,
            "constraint_violation": self.constraint_violation,
            "two_dim_confirmed": self.two_dim_confirmed,
        }


def _p2_row_functionals(chain: ChainSpec) -> np.ndarray:
    """Rows 0 and 1 of (P^2 - I) restricted to y_0..y_3, as a 2x4 matrix."""
    rows = chain.rows_range(0, 3)
    m = np.zeros((2, 4))
    for s in range(4):
        e = np.zeros(4)
        e[s] = 1.0
        z = _apply_p(rows, e)  # z_0..z_2
        w = _apply_p((rows[0][:2], rows[1][:2], rows[2][:2]), z)  # w_0..w_1
        m[0, s] = w[0] - e[0]
        m[1, s] = w[1] - e[1]
    return m


def _p2_forward(chain: ChainSpec, seed: np.ndarray, n: int) -> np.ndarray:
    """Solve the interior rows of P^2 y = y forward from y_0..y_3.

    Row i (for 2 <= i <= n-3) is pentadiagonal and determines y_{i+2}.
    """
    q, r, p = chain.rows_range(0, n)
    y = np.empty(n)
    y[:4] = seed
    for i in range(2, n - 2):
        c_mm = q[i] * q[i - 1]
        c_m = q[i] * (r[i - 1] + r[i])
        c_0 = q[i] * p[i - 1] + r[i] * r[i] + p[i] * q[i + 1]
        c_p = p[i] * (r[i] + r[i + 1])
        c_pp = p[i] * p[i + 1]
        y[i + 2] = (y[i] - (c_mm * y[i - 2] + c_m * y[i - 1] + c_0 * y[i] + c_p * y[i + 1])) / c_pp
        if not math.isfinite(y[i + 2]):
            y[i + 2 :] = np.nan
            break
    return y


def harmonic_basis_p2(chain: ChainSpec, n: int) -> HarmonicBasis:
    """Q(1) and Q(-1) prefixes with interior residuals of P^2 y = y,
    plus the constructive two-dimensionality check.

    Raises :class:`Saturated` when Q(-1) saturates before index n-1.
    """
    if n < 6:
        raise ValueError("need n >= 6 for interior rows")
    plus = q_eval(chain, 1.0, n - 1)
    minus = q_eval(chain, -1.0, n - 1)
    if minus.saturated:
        raise Saturated(f"Q(-1) saturates at index {minus.saturated_at} < {n - 1}")
    rows = chain.rows_range(0, n)

    def interior_residual(y: np.ndarray) -> float:
        z = _apply_p(rows, y)  # length n-1
        w = _apply_p((rows[0][: n - 1], rows[1][: n - 1], rows[2][: n - 1]), z)  # length n-2
        return float(np.abs(w[2:] - y[2 : n - 2]).max())

    res_plus = interior_residual(plus.values)
    res_minus = interior_residual(minus.values)
    scale_minus = float(np.abs(minus.values).max())

    m = _p2_row_functionals(chain)
    _, sing, vt = np.linalg.svd(m)
    null_seeds = vt[2:]  # 2x4: kernel of the two starting-row functionals
    off_seed = vt[0]
    constraint_violation = float(np.linalg.norm(m @ off_seed) / max(sing[0], 1e-300))

    basis = np.column_stack([plus.values, minus.values])
    fit_residual = 0.0
    cutoff = n
    sols = []
    for seed in null_seeds:
        y = _p2_forward(chain, seed, n)
        sols.append(y)
        finite = np.isfinite(y) & (np.abs(y) < 1e100)
        if not finite.all():
            cutoff = min(cutoff, int(np.argmin(finite)))
    cutoff = min(cutoff, n)
    for y in sols:
        yw = y[:cutoff]
        bw = basis[:cutoff]
        norm = np.linalg.norm(yw)
        if norm == 0.0:
            continue
        coef, *_ = np.linalg.lstsq(bw, yw, rcond=None)
        fit_residual = max(
            fit_residual, float(np.linalg.norm(bw @ coef - yw) / norm)
        )
    two_dim = bool(
        fit_residual < 1e-8
        and constraint_violation > 1e-6
        and sing[1] / max(sing[0], 1e-300) > 1e-8
    )
    return HarmonicBasis(
        q_plus=plus.values,
        q_minus=minus.values,
        residual_plus=res_plus,
        residual_minus=res_minus,
        scale_minus=scale_minus,
        fit_residual=fit_residual,
        constraint_violation=constraint_violation,
        two_dim_confirmed=two_dim,
        n_fit=cutoff,
    )
