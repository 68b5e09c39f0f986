"""Seeded Monte Carlo simulation and structural detectors.

A trajectory is a walk on the nonnegative integers whose increments are
-1, 0, or +1, drawn per step from the chain's transition row at the current
state.  Paths are streamed, never stored: detectors fold over the walk in a
single pass (a compiled chunk loop), keeping memory proportional to the
window size plus the number of visited states.  An optional ring buffer
retains the last ``window`` states.

Detectors verify the structural predictions of the period analysis:

* eventual right-only motion (period infinity signature),
* eventual parity locking of X(n) + n with surviving left moves (period 2),
* both parities of X(n) occurring at even times (period 1),
* residue-class structure of the m-step chain (cycle class estimation),
* return statistics consistent with the recurrence classification.

Everything is a pure function of (chain, seed, x0, steps, policy knobs);
identical inputs produce identical reports, byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chain import ChainSpec
from .rng import MASK64, SplitMix64, derive_seeds
from .series import SeriesProbe, stationary_occupation

DEFAULT_WINDOW = 1024
DEFAULT_MIN_VISITS = 20
DEFAULT_CONCENTRATION = 0.95
DEFAULT_MIN_STATES = 100
NULL_OCCUPANCY_THRESHOLD = 0.05

ESTIMATE_INFINITE = "infinite_signature"
ESTIMATE_INCONCLUSIVE = "inconclusive"

_CHUNK = 1 << 18

__all__ = [
    "Trajectory",
    "ResidueClassReport",
    "EmpiricalReport",
    "FleetResult",
    "ReturnStatistics",
    "default_burn_in",
    "simulate",
    "detect_period",
    "residue_classes",
    "empirical_report",
    "run_fleet",
    "return_statistics",
]


def default_burn_in(steps: int) -> int:
    return max(10_000, steps // 100)


@dataclass(frozen=True)
class Trajectory:
    """Fold results of one simulated walk (the path itself is not stored)."""

    seed: int
    x0: int
    steps: int
    burn_in: int
    m: int
    window: int
    final_state: int
    max_state: int
    last_nonright_step: Optional[int]
    last_self_step: Optional[int]
    last_left_step: Optional[int]
    returns_count: int
    last_return_index: Optional[int]
    moves: dict
    moves_post: dict
    parity_even_seen: bool
    parity_odd_seen: bool
    occupation: np.ndarray
    residue_counts: np.ndarray
    tail_states: tuple

    @property
    def parity_lock_step(self) -> int:
        """First index after which the parity of X(n) + n stays constant."""
        return 0 if self.last_self_step is None else self.last_self_step + 1


def _scalars_init(x0: int) -> np.ndarray:
    from . import _kernel as k

    scal = np.zeros(k.N_SCALARS, dtype=np.int64)
    scal[k.S_LAST_NONRIGHT] = -1
    scal[k.S_LAST_SELF] = -1
    scal[k.S_LAST_LEFT] = -1
    scal[k.S_LAST_RETURN] = -1
    scal[k.S_MAX_STATE] = x0
    return scal


def _grow_thresholds(chain, thr_q, thr_qr, filled, need):
    if need <= filled:
        return thr_q, thr_qr, filled
    new_len = max(need, 2 * filled)
    q, r, _ = chain.rows_range(filled, new_len)
    nq = np.empty(new_len)
    nq[:filled] = thr_q[:filled]
    nq[filled:] = q
    nqr = np.empty(new_len)
    nqr[:filled] = thr_qr[:filled]
    nqr[filled:] = q + r
    return nq, nqr, new_len


def _grow_counts(arr: np.ndarray, need: int) -> np.ndarray:
    if arr.shape[0] >= need:
        return arr
    new_len = max(need, 2 * arr.shape[0])
    if arr.ndim == 1:
        out = np.zeros(new_len, dtype=arr.dtype)
    else:
        out = np.zeros((new_len, arr.shape[1]), dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


def _fold_kernel(chain, seed, x0, steps, burn_in, m, window):
    from . import _kernel as k

    scal = _scalars_init(x0)
    filled = max(4096, x0 + 2)
    q, r, _ = chain.rows_range(0, filled)
    thr_q = q.astype(np.float64, copy=True)
    thr_qr = thr_q + r
    occ = np.zeros(filled, dtype=np.int64)
    res = np.zeros((filled, m), dtype=np.int64)
    ring = np.full(window, -1, dtype=np.int64)

    pos = x0
    ring[0] = x0
    if burn_in <= 0:
        occ[x0] += 1
        res[x0, 0] += 1
        if x0 % 2 == 0:
            scal[k.S_PAR_EVEN] = 1
        else:
            scal[k.S_PAR_ODD] = 1

    state = np.uint64(seed & MASK64)
    t = 0
    remaining = steps
    while remaining > 0:
        n = min(_CHUNK, remaining)
        need = pos + n + 2
        thr_q, thr_qr, filled = _grow_thresholds(chain, thr_q, thr_qr, filled, need)
        occ = _grow_counts(occ, need)
        res = _grow_counts(res, need)
        pos, state, t = k.run_chunk(
            int(pos), np.uint64(state), int(t), n, burn_in, x0,
            thr_q, thr_qr, occ, res, m, ring, scal,
        )
        remaining -= n
    return pos, scal, occ, res, ring, t


def _fold_reference(chain, seed, x0, steps, burn_in, m, window):
    """Pure-Python walk with per-step invariant assertions; for verification."""
    from . import _kernel as k

    scal = _scalars_init(x0)
    occ: dict[int, int] = {}
    res: dict[tuple[int, int], int] = {}
    ring = np.full(window, -1, dtype=np.int64)
    rows: dict[int, tuple[float, float]] = {}

    def thresholds(i: int) -> tuple[float, float]:
        got = rows.get(i)
        if got is None:
            q, r, _ = chain.row(i)
            got = (q, q + r)
            rows[i] = got
        return got

    pos = x0
    ring[0] = x0
    if burn_in <= 0:
        occ[x0] = 1
        res[(x0, 0)] = 1
        scal[k.S_PAR_EVEN if x0 % 2 == 0 else k.S_PAR_ODD] = 1

    stream = SplitMix64(seed)
    for t in range(steps):
        u = stream.next_float()
        tq, tqr = thresholds(pos)
        prev = pos
        if u < tq:
            pos -= 1
            kind = 0
        elif u < tqr:
            kind = 1
        else:
            pos += 1
            kind = 2
        assert abs(pos - prev) <= 1, "jump larger than 1"
        assert pos >= 0, "walked below state 0"
        n = t + 1
        if kind == 0:
            scal[k.S_LAST_NONRIGHT] = t
            scal[k.S_LAST_LEFT] = t
            scal[k.S_LEFT] += 1
            if t >= burn_in:
                scal[k.S_LEFT_POST] += 1
        elif kind == 1:
            scal[k.S_LAST_NONRIGHT] = t
            scal[k.S_LAST_SELF] = t
            scal[k.S_SELF] += 1
            if t >= burn_in:
                scal[k.S_SELF_POST] += 1
        else:
            scal[k.S_RIGHT] += 1
            if t >= burn_in:
                scal[k.S_RIGHT_POST] += 1
        if n >= burn_in:
            occ[pos] = occ.get(pos, 0) + 1
            res[(pos, n % m)] = res.get((pos, n % m), 0) + 1
            if n % 2 == 0:
                scal[k.S_PAR_EVEN if pos % 2 == 0 else k.S_PAR_ODD] = 1
        if pos == x0:
            scal[k.S_RETURNS] += 1
            scal[k.S_LAST_RETURN] = n
        if pos > scal[k.S_MAX_STATE]:
            scal[k.S_MAX_STATE] = pos
        ring[n % window] = pos

    size = int(scal[k.S_MAX_STATE]) + 1
    occ_arr = np.zeros(size, dtype=np.int64)
    for s, c in occ.items():
        occ_arr[s] = c
    res_arr = np.zeros((size, m), dtype=np.int64)
    for (s, j), c in res.items():
        res_arr[s, j] = c
    return pos, scal, occ_arr, res_arr, ring, steps


def _tail_from_ring(ring: np.ndarray, t_final: int, window: int) -> tuple:
    count = min(window, t_final + 1)
    idx = np.arange(t_final - count + 1, t_final + 1) % window
    return tuple(int(v) for v in ring[idx])


def simulate(
    chain: ChainSpec,
    seed: int,
    x0: int = 0,
    steps: int = 1_000_000,
    burn_in: Optional[int] = None,
    m: int = 2,
    window: int = DEFAULT_WINDOW,
    reference: bool = False,
) -> Trajectory:
    """Simulate one seeded walk and fold every detector over it.

    Deterministic: identical arguments yield an identical Trajectory.  Set
    ``reference=True`` to use the slow pure-Python walker (same algorithm,
    with per-step invariant assertions).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if x0 < 0:
        raise ValueError("x0 must be >= 0")
    if m < 1:
        raise ValueError("m must be >= 1")
    if window < 1:
        raise ValueError("window must be >= 1")
    if burn_in is None:
        burn_in = default_burn_in(steps)
    if burn_in >= steps:
        raise ValueError("steps must exceed burn_in")

    fold = _fold_reference if reference else _fold_kernel
    pos, scal, occ, res, ring, t_final = fold(chain, seed, x0, steps, burn_in, m, window)

    from . import _kernel as k

    max_state = int(scal[k.S_MAX_STATE])
    occ = occ[: max_state + 1].copy()
    res = res[: max_state + 1].copy()

    def opt(v: int) -> Optional[int]:
        return None if v < 0 else int(v)

    return Trajectory(
        seed=seed,
        x0=x0,
        steps=steps,
        burn_in=burn_in,
        m=m,
        window=window,
        final_state=int(pos),
        max_state=max_state,
        last_nonright_step=opt(scal[k.S_LAST_NONRIGHT]),
        last_self_step=opt(scal[k.S_LAST_SELF]),
        last_left_step=opt(scal[k.S_LAST_LEFT]),
        returns_count=int(scal[k.S_RETURNS]),
        last_return_index=opt(scal[k.S_LAST_RETURN]),
        moves={
            "left": int(scal[k.S_LEFT]),
            "self": int(scal[k.S_SELF]),
            "right": int(scal[k.S_RIGHT]),
        },
        moves_post={
            "left": int(scal[k.S_LEFT_POST]),
            "self": int(scal[k.S_SELF_POST]),
            "right": int(scal[k.S_RIGHT_POST]),
        },
        parity_even_seen=bool(scal[k.S_PAR_EVEN]),
        parity_odd_seen=bool(scal[k.S_PAR_ODD]),
        occupation=occ,
        residue_counts=res,
        tail_states=_tail_from_ring(ring, t_final, window),
    )


def detect_period(traj: Trajectory):
    """Empirical period estimate from one trajectory.

    Right-only motion after burn-in signals an infinite period; a locked
    parity of X(n) + n with surviving non-right moves signals period 2;
    both parities of X(n) at even times signal period 1.
    """
    nonright_post = traj.moves_post["left"] + traj.moves_post["self"]
    if nonright_post == 0:
        return ESTIMATE_INFINITE
    if traj.moves_post["self"] == 0:
        return 2
    if traj.parity_even_seen and traj.parity_odd_seen:
        return 1
    return ESTIMATE_INCONCLUSIVE


def _divisors_desc(m: int) -> list[int]:
    return [b for b in range(m, 0, -1) if m % b == 0]


@dataclass(frozen=True)
class ResidueClassReport:
    """Estimated number of cyclically visited classes of the m-step chain."""

    m: int
    estimate: Optional[int]  # None when inconclusive
    n_states: int
    n_voters: int
    diagnostics: dict

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "estimate": self.estimate if self.estimate is not None else ESTIMATE_INCONCLUSIVE,
            "n_states": self.n_states,
            "n_voters": self.n_voters,
            "diagnostics": self.diagnostics,
        }


def residue_classes(
    traj: Trajectory,
    min_visits: int = DEFAULT_MIN_VISITS,
    concentration: float = DEFAULT_CONCENTRATION,
    min_states: int = DEFAULT_MIN_STATES,
) -> ResidueClassReport:
    """Estimate the cycle-class count of the m-step chain from visit residues.

    For each divisor b of m (largest first), the estimate is b when every
    well-visited state concentrates at least ``concentration`` of its
    post-burn-in visits on one residue mod b and all b dominant residues
    occur among the visited states.  States need ``min_visits`` visits
    before they may veto a divisor; sparse data (no voters and fewer than
    ``min_states`` visited states) is inconclusive.  Because b = 1 always
    concentrates trivially, any conclusive estimate divides m.
    """
    m = traj.m
    res = traj.residue_counts
    totals = res.sum(axis=1)
    visited = totals > 0
    n_states = int(visited.sum())
    if n_states == 0:
        return ResidueClassReport(m, None, 0, 0, {"reason": "no post-burn-in visits"})
    voters = totals >= min_visits
    n_voters = int(voters.sum())
    if n_voters == 0 and n_states < min_states:
        return ResidueClassReport(
            m, None, n_states, 0, {"reason": "too few visits to judge concentration"}
        )

    res_v = res[visited]
    totals_v = totals[visited]
    voters_v = voters[visited]
    diagnostics: dict[str, dict] = {}
    estimate = None
    for b in _divisors_desc(m):
        folded = res_v.reshape(res_v.shape[0], m // b, b).sum(axis=1)
        dominant_counts = folded.max(axis=1)
        dominants = folded.argmax(axis=1)
        if n_voters > 0:
            conc = dominant_counts[voters_v] / totals_v[voters_v]
            concentration_ok = bool((conc >= concentration).all())
        else:
            concentration_ok = True
        occupancy_ok = len(np.unique(dominants)) == b
        diagnostics[str(b)] = {
            "concentration_ok": concentration_ok,
            "occupancy_ok": occupancy_ok,
        }
        if estimate is None and concentration_ok and occupancy_ok:
            estimate = b
    return ResidueClassReport(m, estimate, n_states, n_voters, diagnostics)


@dataclass(frozen=True)
class EmpiricalReport:
    """Everything the detectors extracted from one seed's walk."""

    seed: int
    x0: int
    steps: int
    burn_in: int
    period_estimate: object  # 1 | 2 | "infinite_signature" | "inconclusive"
    last_nonright_step: Optional[int]
    parity_lock_step: int
    returns_to_origin: dict
    residue: dict  # str(m) -> ResidueClassReport dict, keys sorted
    moves: dict
    moves_post: dict
    final_state: int
    max_state: int

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "x0": self.x0,
            "steps": self.steps,
            "burn_in": self.burn_in,
            "period_estimate": self.period_estimate,
            "last_nonright_step": self.last_nonright_step,
            "parity_lock_step": self.parity_lock_step,
            "returns_to_origin": self.returns_to_origin,
            "residue": self.residue,
            "moves": self.moves,
            "moves_post": self.moves_post,
            "final_state": self.final_state,
            "max_state": self.max_state,
        }


def empirical_report(
    chain: ChainSpec,
    seed: int,
    x0: int = 0,
    steps: int = 1_000_000,
    burn_in: Optional[int] = None,
    ms: Sequence[int] = (2,),
    window: int = DEFAULT_WINDOW,
) -> tuple[EmpiricalReport, Trajectory]:
    """Run the detectors for one seed, with residue analysis per requested m.

    Each m re-runs the same seeded walk (paths are identical), so reports
    stay a pure function of the inputs.
    """
    ms = sorted(set(int(v) for v in ms))
    if not ms:
        ms = [2]
    first: Optional[Trajectory] = None
    residue: dict[str, dict] = {}
    for m in ms:
        traj = simulate(chain, seed, x0=x0, steps=steps, burn_in=burn_in, m=m, window=window)
        if first is None:
            first = traj
        residue[str(m)] = residue_classes(traj).as_dict()
    assert first is not None
    report = EmpiricalReport(
        seed=seed,
        x0=x0,
        steps=steps,
        burn_in=first.burn_in,
        period_estimate=detect_period(first),
        last_nonright_step=first.last_nonright_step,
        parity_lock_step=first.parity_lock_step,
        returns_to_origin={
            "count": first.returns_count,
            "last_index": first.last_return_index,
        },
        residue=residue,
        moves=first.moves,
        moves_post=first.moves_post,
        final_state=first.final_state,
        max_state=first.max_state,
    )
    return report, first


@dataclass(frozen=True)
class FleetResult:
    master_seed: int
    seeds: tuple
    reports: tuple  # EmpiricalReport, in seed order
    trajectories: tuple  # Trajectory, in seed order

    def estimate_counts(self) -> dict:
        counts: dict[str, int] = {}
        for rep in self.reports:
            key = str(rep.period_estimate)
            counts[key] = counts.get(key, 0) + 1
        return dict(sorted(counts.items()))

    def majority_estimate(self):
        counts = self.estimate_counts()
        best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
        return _parse_estimate(best[0])

    def as_dict(self) -> dict:
        counts = self.estimate_counts()
        return {
            "master_seed": self.master_seed,
            "fleet": len(self.reports),
            "reports": [r.as_dict() for r in self.reports],
            "estimate_counts": counts,
            "majority_estimate": self.majority_estimate(),
        }


def _parse_estimate(text: str):
    return int(text) if text.isdigit() else text


def run_fleet(
    chain: ChainSpec,
    master_seed: int,
    fleet: int,
    steps: int = 1_000_000,
    burn_in: Optional[int] = None,
    ms: Sequence[int] = (2,),
    x0: int = 0,
    window: int = DEFAULT_WINDOW,
) -> FleetResult:
    """Independent streams for each fleet member, aggregated in seed order."""
    seeds = derive_seeds(master_seed, fleet)
    reports = []
    trajectories = []
    for seed in seeds:
        rep, traj = empirical_report(
            chain, seed, x0=x0, steps=steps, burn_in=burn_in, ms=ms, window=window
        )
        reports.append(rep)
        trajectories.append(traj)
    return FleetResult(
        master_seed=master_seed,
        seeds=tuple(seeds),
        reports=tuple(reports),
        trajectories=tuple(trajectories),
    )


@dataclass(frozen=True)
class ReturnStatistics:
    """Fleet-level return and occupation evidence for the classification."""

    fleet: int
    runs_returning: int
    return_fraction: float
    x0_occupancy: float
    occupation_tv: Optional[float]
    positive_recurrent_consistent: Optional[bool]
    null_recurrent_consistent: bool
    transient_consistent: bool

    def as_dict(self) -> dict:
        return {
            "fleet": self.fleet,
            "runs_returning": self.runs_returning,
            "return_fraction": self.return_fraction,
            "x0_occupancy": self.x0_occupancy,
            "occupation_tv": self.occupation_tv,
            "positive_recurrent_consistent": self.positive_recurrent_consistent,
            "null_recurrent_consistent": self.null_recurrent_consistent,
            "transient_consistent": self.transient_consistent,
        }


def return_statistics(
    chain: ChainSpec,
    trajectories: Sequence[Trajectory],
    series_probe: Optional[SeriesProbe] = None,
) -> ReturnStatistics:
    """Compare fleet return behaviour and occupation against the series analysis.

    The total-variation distance to the stationary occupation law is
    reported when the mass series converges (positive recurrent case).
    A chain is flagged null-recurrent-consistent when every run returns yet
    the walk spends almost no time at the origin (occupancy below 5%).
    """
    if not trajectories:
        raise ValueError("need at least one trajectory")
    runs_returning = sum(1 for t in trajectories if t.returns_count > 0)
    fleet = len(trajectories)
    size = max(t.occupation.shape[0] for t in trajectories)
    total = np.zeros(size, dtype=np.float64)
    for t in trajectories:
        total[: t.occupation.shape[0]] += t.occupation
    visits = total.sum()
    x0 = trajectories[0].x0
    x0_occupancy = float(total[x0] / visits) if visits > 0 else 0.0

    tv = None
    pr_consistent = None
    if series_probe is not None and series_probe.verdicts["mass"].converges:
        target = stationary_occupation(chain, series_probe, size - 1)
        empirical = total / visits if visits > 0 else total
        tv = float(0.5 * np.abs(empirical - target).sum() + 0.5 * max(0.0, 1.0 - target.sum()))
        pr_consistent = bool(runs_returning == fleet and tv <= 0.05)

    null_consistent = bool(
        runs_returning == fleet and x0_occupancy <= NULL_OCCUPANCY_THRESHOLD
    )
    transient_consistent = runs_returning < fleet
    return ReturnStatistics(
        fleet=fleet,
        runs_returning=runs_returning,
        return_fraction=runs_returning / fleet,
        x0_occupancy=x0_occupancy,
        occupation_tv=tv,
        positive_recurrent_consistent=pr_consistent,
        null_recurrent_consistent=null_consistent,
        transient_consistent=transient_consistent,
    )
