"""Birth-death chain specifications.

A chain lives on the nonnegative integers and is described by one transition
triple per state: the probability ``q_i`` of stepping down, ``r_i`` of staying
put, and ``p_i`` of stepping up.  A :class:`ChainSpec` stores finitely many
explicit prefix rows plus a tail family that generates every row past the
prefix, so criteria that quantify over all states remain decidable in closed
form.

Conventions enforced here:

* ``q_0 = 0``.  Any downward mass assigned to state 0 (by a tail family or an
  explicit row) is folded into ``r_0`` so row 0 keeps total mass 1.
* Every row sums to 1 exactly in float arithmetic: ``q`` and ``r`` are fixed
  first and ``p`` is defined as ``1 - (q + r)``.  Rows whose raw sum deviates
  from 1 by more than 1e-12 are rejected rather than rescaled.
* ``p_i > 0`` for all i, ``q_i > 0`` for all i >= 1, ``r_i >= 0``, and
  ``r_i > 0`` for at least one state (otherwise the chain is periodic and is
  rejected as :class:`~bdperiod.errors.AllZeroSelf`).

ChainSpec instances are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import (
    AllZeroSelf,
    BadFamilyParams,
    InvalidDocument,
    NonPositiveRate,
    RowSumError,
)

ROW_SUM_TOL = 1e-12

__all__ = [
    "Constant",
    "GeometricSelf",
    "PowerSelf",
    "ProductPositive",
    "ZeroSelfTail",
    "TailFamily",
    "ChainSpec",
    "build_chain",
    "build_tail",
    "chain_from_parts",
]


def _close_row(q: float, r: float) -> tuple[float, float, float]:
    """Return (q, r, p) with p defined as 1 - (q + r).

    Fixing p this way makes ``(q + r) + p`` round to exactly 1.0, which the
    eigen-residual checks rely on.
    """
    p = 1.0 - (q + r)
    return q, r, p


def _normalize_scaled(q: float, r: float, p: float, where: str) -> tuple[float, float, float]:
    """Rescale (q, r, p) by their sum; rejects sums off by more than 1e-12."""
    for name, v in (("q", q), ("r", r), ("p", p)):
        if not np.isfinite(v):
            raise InvalidDocument(f"{where}: {name} is not finite")
    s = (q + r) + p
    if abs(s - 1.0) > ROW_SUM_TOL:
        raise RowSumError(f"{where}: q + r + p = {s!r} deviates from 1 beyond {ROW_SUM_TOL}")
    q, r, p = q / s, r / s, p / s
    if r < 0.0:
        raise NonPositiveRate(f"{where}: r = {r!r} is negative")
    if q < 0.0:
        raise NonPositiveRate(f"{where}: q = {q!r} is negative")
    return q, r, p


def _normalize_triple(q: float, r: float, p: float, where: str) -> tuple[float, float, float]:
    q, r, _ = _normalize_scaled(q, r, p, where)
    return _close_row(q, r)


@dataclass(frozen=True)
class Constant:
    """Tail with the same (q, r, p) row at every tail state.

    Stored parameters are the user's values rescaled to unit sum; they drive
    the analytic verdict rules, so an exact p == q stays exact.  Row values
    re-derive p as 1 - (q + r), which may differ from the stored p by one
    ulp but makes each row sum to 1 exactly.
    """

    p: float
    q: float
    r: float

    family = "constant"

    def validated(self, n0: int) -> "Constant":
        q, r, p = _normalize_scaled(self.q, self.r, self.p, "constant tail")
        if q <= 0.0:
            raise NonPositiveRate(f"constant tail: q = {q!r} must be > 0")
        if 1.0 - (q + r) <= 0.0:
            raise NonPositiveRate(f"constant tail: p = {p!r} must be > 0")
        return Constant(p=p, q=q, r=r)

    def rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = i1 - i0
        p_row = 1.0 - (self.q + self.r)
        return (np.full(n, self.q), np.full(n, self.r), np.full(n, p_row))

    def log_rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # logs of the stored parameters: an exact p == q cancels exactly in
        # log pi, matching the mathematical telescoping
        n = i1 - i0
        with np.errstate(divide="ignore"):
            lr = np.log(self.r)
        return (
            np.full(n, np.log(self.q)),
            np.full(n, lr),
            np.full(n, np.log(self.p)),
        )

    @property
    def has_self_transitions(self) -> bool:
        return self.r > 0.0

    @property
    def tail_self_infimum(self) -> float:
        return self.r

    def params(self) -> dict:
        return {"p": self.p, "q": self.q, "r": self.r}


@dataclass(frozen=True)
class GeometricSelf:
    """Geometrically decaying self transitions: r_i = c * rho**i.

    The leftover mass 1 - r_i is split between birth and death in the fixed
    ratio p : q, so p_i = (1 - r_i) * p/(p+q) and q_i = (1 - r_i) * q/(p+q).
    Stored p and q are already normalized to p + q = 1.
    """

    p: float
    q: float
    c: float
    rho: float

    family = "geometric_self"

    def validated(self, n0: int) -> "GeometricSelf":
        if not all(np.isfinite(v) for v in (self.p, self.q, self.c, self.rho)):
            raise BadFamilyParams("geometric_self: parameters must be finite")
        if self.p <= 0.0 or self.q <= 0.0:
            raise NonPositiveRate("geometric_self: p and q must be > 0")
        if self.c < 0.0:
            raise BadFamilyParams(f"geometric_self: c = {self.c!r} must be >= 0")
        if not (0.0 < self.rho < 1.0):
            raise BadFamilyParams(f"geometric_self: rho = {self.rho!r} must lie in (0, 1)")
        # r_i decreases in i, so validity for all i >= n0 reduces to i = n0.
        if self.c * self.rho**n0 >= 1.0:
            raise BadFamilyParams(
                f"geometric_self: c * rho**n0 = {self.c * self.rho ** n0!r} must be < 1"
            )
        total = self.p + self.q
        return GeometricSelf(p=self.p / total, q=self.q / total, c=self.c, rho=self.rho)

    def rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i = np.arange(i0, i1, dtype=np.float64)
        r = self.c * self.rho**i
        q = self.q * (1.0 - r)
        p = 1.0 - (q + r)
        return q, r, p

    def log_rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # closed forms keep the logs finite where the linear values underflow,
        # and an exact p == q split cancels exactly in log pi
        i = np.arange(i0, i1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            log_r = np.log(self.c) + i * np.log(self.rho)
        r = self.c * self.rho**i
        shrink = np.log1p(-r)
        return np.log(self.q) + shrink, log_r, np.log(self.p) + shrink

    @property
    def has_self_transitions(self) -> bool:
        return self.c > 0.0

    @property
    def tail_self_infimum(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {"p": self.p, "q": self.q, "c": self.c, "rho": self.rho}


@dataclass(frozen=True)
class PowerSelf:
    """Polynomially decaying self transitions: r_i = c / (i + 1)**alpha.

    Birth/death split as in :class:`GeometricSelf`.
    """

    p: float
    q: float
    c: float
    alpha: float

    family = "power_self"

    def validated(self, n0: int) -> "PowerSelf":
        if not all(np.isfinite(v) for v in (self.p, self.q, self.c, self.alpha)):
            raise BadFamilyParams("power_self: parameters must be finite")
        if self.p <= 0.0 or self.q <= 0.0:
            raise NonPositiveRate("power_self: p and q must be > 0")
        if self.c < 0.0:
            raise BadFamilyParams(f"power_self: c = {self.c!r} must be >= 0")
        if self.alpha <= 0.0:
            raise BadFamilyParams(f"power_self: alpha = {self.alpha!r} must be > 0")
        if self.c / (n0 + 1.0) ** self.alpha >= 1.0:
            raise BadFamilyParams("power_self: c / (n0+1)**alpha must be < 1")
        total = self.p + self.q
        return PowerSelf(p=self.p / total, q=self.q / total, c=self.c, alpha=self.alpha)

    def rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i = np.arange(i0, i1, dtype=np.float64)
        r = self.c / (i + 1.0) ** self.alpha
        q = self.q * (1.0 - r)
        p = 1.0 - (q + r)
        return q, r, p

    def log_rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i = np.arange(i0, i1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            log_r = np.log(self.c) - self.alpha * np.log1p(i)
        r = self.c / (i + 1.0) ** self.alpha
        shrink = np.log1p(-r)
        return np.log(self.q) + shrink, log_r, np.log(self.p) + shrink

    @property
    def has_self_transitions(self) -> bool:
        return self.c > 0.0

    @property
    def tail_self_infimum(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {"p": self.p, "q": self.q, "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class ProductPositive:
    """Birth probabilities approaching 1 fast enough that their product is positive.

    p_i = 1 - c * rho**i with the deficit split evenly: q_i = r_i = c * rho**i / 2.
    State 0 gets its downward share folded into r_0, yielding row (0, c, 1 - c).
    """

    c: float
    rho: float

    family = "product_positive"

    def validated(self, n0: int) -> "ProductPositive":
        if not all(np.isfinite(v) for v in (self.c, self.rho)):
            raise BadFamilyParams("product_positive: parameters must be finite")
        if self.c <= 0.0:
            raise BadFamilyParams(f"product_positive: c = {self.c!r} must be > 0")
        if not (0.0 < self.rho < 1.0):
            raise BadFamilyParams(f"product_positive: rho = {self.rho!r} must lie in (0, 1)")
        if self.c * self.rho**n0 >= 1.0:
            raise BadFamilyParams("product_positive: c * rho**n0 must be < 1")
        return self

    def rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i = np.arange(i0, i1, dtype=np.float64)
        deficit = self.c * self.rho**i
        q = 0.5 * deficit
        r = q.copy()
        p = 1.0 - (q + r)
        return q, r, p

    def log_rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        i = np.arange(i0, i1, dtype=np.float64)
        log_half_deficit = np.log(0.5 * self.c) + i * np.log(self.rho)
        log_p = np.log1p(-self.c * self.rho**i)
        return log_half_deficit, log_half_deficit.copy(), log_p

    @property
    def has_self_transitions(self) -> bool:
        return True

    @property
    def tail_self_infimum(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {"c": self.c, "rho": self.rho}


@dataclass(frozen=True)
class ZeroSelfTail:
    """No self transitions past the prefix: rows (q, 0, p) with p + q = 1.

    Valid only when some prefix row (or the folded row 0) has r > 0.
    """

    p: float
    q: float

    family = "zero_self_tail"

    def validated(self, n0: int) -> "ZeroSelfTail":
        q, _, p = _normalize_scaled(self.q, 0.0, self.p, "zero_self_tail")
        if q <= 0.0:
            raise NonPositiveRate(f"zero_self_tail: q = {q!r} must be > 0")
        if 1.0 - q <= 0.0:
            raise NonPositiveRate(f"zero_self_tail: p = {p!r} must be > 0")
        return ZeroSelfTail(p=p, q=q)

    def rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = i1 - i0
        return (np.full(n, self.q), np.zeros(n), np.full(n, 1.0 - self.q))

    def log_rows(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = i1 - i0
        return (
            np.full(n, np.log(self.q)),
            np.full(n, -np.inf),
            np.full(n, np.log(self.p)),
        )

    @property
    def has_self_transitions(self) -> bool:
        return False

    @property
    def tail_self_infimum(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {"p": self.p, "q": self.q}


TailFamily = Union[Constant, GeometricSelf, PowerSelf, ProductPositive, ZeroSelfTail]

_FAMILIES: dict[str, type] = {
    "constant": Constant,
    "geometric_self": GeometricSelf,
    "power_self": PowerSelf,
    "product_positive": ProductPositive,
    "zero_self_tail": ZeroSelfTail,
}


class ChainSpec:
    """A validated birth-death chain: explicit prefix rows plus a tail family.

    The single source of truth for transition probabilities.  ``row(i)`` and
    ``rows_range(i0, i1)`` are pure: repeated calls return identical values.
    """

    __slots__ = ("prefix", "tail", "row0_adjusted", "_prefix_arrays")

    def __init__(
        self,
        prefix: tuple[tuple[float, float, float], ...],
        tail: TailFamily,
        row0_adjusted: bool,
    ):
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "row0_adjusted", row0_adjusted)
        if prefix:
            arr = np.asarray(prefix, dtype=np.float64)
            arrays = (arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())
        else:
            arrays = (np.empty(0), np.empty(0), np.empty(0))
        for a in arrays:
            a.setflags(write=False)
        object.__setattr__(self, "_prefix_arrays", arrays)

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("ChainSpec is immutable")

    @property
    def n0(self) -> int:
        return len(self.prefix)

    def rows_range(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Transition triples (q, r, p) for states i0 <= i < i1, as arrays."""
        if i0 < 0 or i1 < i0:
            raise ValueError("state range must satisfy 0 <= i0 <= i1")
        n0 = self.n0
        pieces = []
        if i0 < n0:
            hi = min(i1, n0)
            pq, pr, pp = self._prefix_arrays
            pieces.append((pq[i0:hi], pr[i0:hi], pp[i0:hi]))
        if i1 > n0:
            lo = max(i0, n0)
            tq, tr, tp = self.tail.rows(lo, i1)
            if lo == 0 and tq[0] > 0.0:
                # q_0 := 0; fold downward mass at 0 into r_0.  The sum q_0 + r_0
                # is unchanged, so p_0 = 1 - (q_0 + r_0) stays valid as is.
                tr[0] = tq[0] + tr[0]
                tq[0] = 0.0
            pieces.append((tq, tr, tp))
        if len(pieces) == 1:
            return pieces[0]
        return tuple(np.concatenate([p[k] for p in pieces]) for k in range(3))

    def log_rows_range(self, i0: int, i1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(log q_i, log r_i, log p_i) for i0 <= i < i1.

        Tail logs come from the family's closed forms, so they stay finite
        where the linear values underflow.  log q_0 is -inf by convention
        and must never be consumed; log r_i is -inf where r_i = 0.
        """
        if i0 < 0 or i1 < i0:
            raise ValueError("state range must satisfy 0 <= i0 <= i1")
        n0 = self.n0
        pieces = []
        if i0 < n0:
            hi = min(i1, n0)
            pq, pr, pp = self._prefix_arrays
            with np.errstate(divide="ignore"):
                pieces.append((np.log(pq[i0:hi]), np.log(pr[i0:hi]), np.log(pp[i0:hi])))
        if i1 > n0:
            lo = max(i0, n0)
            tq, tr, tp = self.tail.log_rows(lo, i1)
            if lo == 0:
                q0, r0, _ = self.tail.rows(0, 1)
                if q0[0] > 0.0:
                    with np.errstate(divide="ignore"):
                        tr[0] = np.log(q0[0] + r0[0])
                tq[0] = -np.inf
            pieces.append((tq, tr, tp))
        if len(pieces) == 1:
            return pieces[0]
        return tuple(np.concatenate([p[k] for p in pieces]) for k in range(3))

    def row(self, i: int) -> tuple[float, float, float]:
        """The exact transition triple (q_i, r_i, p_i) for state i."""
        q, r, p = self.rows_range(i, i + 1)
        return float(q[0]), float(r[0]), float(p[0])

    def document(self) -> dict:
        """Normalized chain-spec document; rebuilding from it reproduces this chain."""
        return {
            "prefix": [[q, r, p] for q, r, p in self.prefix],
            "tail": {"family": self.tail.family, **self.tail.params()},
            "n0": self.n0,
        }

    def __repr__(self) -> str:
        return f"ChainSpec(n0={self.n0}, tail={self.tail!r})"


def build_tail(spec: Mapping, n0: int) -> TailFamily:
    """Construct and validate a tail family from its document form."""
    if not isinstance(spec, Mapping):
        raise InvalidDocument("tail must be an object")
    data = dict(spec)
    family = data.pop("family", None)
    if family is None:
        raise InvalidDocument("tail.family is required")
    cls = _FAMILIES.get(family)
    if cls is None:
        raise BadFamilyParams(
            f"unknown tail family {family!r}; expected one of {sorted(_FAMILIES)}"
        )
    fields = set(cls.__dataclass_fields__)
    unknown = set(data) - fields
    if unknown:
        raise BadFamilyParams(f"{family}: unknown parameters {sorted(unknown)}")
    missing = fields - set(data)
    if missing:
        raise BadFamilyParams(f"{family}: missing parameters {sorted(missing)}")
    try:
        raw = cls(**{k: float(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise BadFamilyParams(f"{family}: {exc}") from exc
    return raw.validated(n0)


def chain_from_parts(
    prefix_rows: list[tuple[float, float, float]] | list[list[float]],
    tail: TailFamily,
) -> ChainSpec:
    """Validate prefix rows against an already-validated tail and assemble the chain.

    Prefix rows are given as (q, r, p).
    """
    n0 = len(prefix_rows)
    tail = tail.validated(n0)
    normalized: list[tuple[float, float, float]] = []
    row0_adjusted = False
    for i, row in enumerate(prefix_rows):
        if len(row) != 3:
            raise InvalidDocument(f"prefix row {i} must have exactly 3 entries (q, r, p)")
        q, r, p = (float(v) for v in row)
        q, r, p = _normalize_triple(q, r, p, f"prefix row {i}")
        if i == 0 and q > 0.0:
            q, r, p = _close_row(0.0, q + r)
            row0_adjusted = True
        if p <= 0.0:
            raise NonPositiveRate(f"prefix row {i}: p = {p!r} must be > 0")
        if i >= 1 and q <= 0.0:
            raise NonPositiveRate(f"prefix row {i}: q = {q!r} must be > 0")
        normalized.append((q, r, p))

    if n0 == 0:
        row0_adjusted = bool(tail.rows(0, 1)[0][0] > 0.0)

    chain = ChainSpec(tuple(normalized), tail, row0_adjusted)
    has_self = tail.has_self_transitions or any(r > 0.0 for _, r, _ in normalized)
    if n0 == 0:
        has_self = has_self or chain.row(0)[1] > 0.0
    if not has_self:
        raise AllZeroSelf("r_i = 0 for every state; chain would be periodic")
    return chain


def build_chain(doc: Mapping) -> ChainSpec:
    """Build a validated ChainSpec from a chain-spec document.

    Document schema::

        {"prefix": [[q, r, p], ...],
         "tail": {"family": <name>, ...params},
         "n0": <optional int, must equal len(prefix)>}

    Unknown fields are rejected.
    """
    if not isinstance(doc, Mapping):
        raise InvalidDocument("chain-spec document must be an object")
    unknown = set(doc) - {"prefix", "tail", "n0"}
    if unknown:
        raise InvalidDocument(f"unknown document fields {sorted(unknown)}")
    if "tail" not in doc:
        raise InvalidDocument("tail is required")
    prefix = doc.get("prefix", [])
    if not isinstance(prefix, (list, tuple)):
        raise InvalidDocument("prefix must be an array of [q, r, p] rows")
    n0 = doc.get("n0")
    if n0 is not None and int(n0) != len(prefix):
        raise InvalidDocument(f"n0 = {n0} does not match prefix length {len(prefix)}")
    tail = build_tail(doc["tail"], len(prefix))
    return chain_from_parts(list(prefix), tail)
