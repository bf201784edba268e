"""Data assignment, replication parameters, feasibility and optimal rates.

Indices are 0-based throughout the Python API: cluster ``u`` in
``range(U)``, user ``v`` in ``range(V[u])``, dataset ``k`` in ``range(K)``.
Gradient piece ``(k, j)`` sits at coordinate ``j*K + k`` of the stacked
gradient vector, i.e. ``W = [W_{1,1}..W_{K,1}, W_{1,2}, .., W_{K,m}]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    EmptyUserAssignment,
    NonIntegralKeyCount,
    OrphanDataset,
    ParameterError,
    ReplicationTooHigh,
    TooManyColluders,
    TooManyStragglers,
)


@dataclass(frozen=True)
class Assignment:
    """Which datasets each user ``(u, v)`` holds."""

    K: int
    holds: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self):
        holds = tuple(tuple(frozenset(d) for d in cluster) for cluster in self.holds)
        object.__setattr__(self, "holds", holds)
        if self.K < 1 or not holds:
            raise ParameterError("need at least one dataset and one cluster")
        seen: set[int] = set()
        for u, cluster in enumerate(holds):
            if not cluster:
                raise ParameterError(f"cluster {u + 1} has no users")
            for v, d in enumerate(cluster):
                if not d:
                    raise EmptyUserAssignment(f"user ({u + 1},{v + 1}) holds no dataset")
                bad = [k for k in d if not 0 <= k < self.K]
                if bad:
                    raise ParameterError(f"user ({u + 1},{v + 1}) holds unknown datasets {bad}")
                seen |= d
        orphans = sorted(set(range(self.K)) - seen)
        if orphans:
            raise OrphanDataset(f"datasets {[k + 1 for k in orphans]} are held by nobody")

    @classmethod
    def from_lists(cls, K: int, holds: Sequence[Sequence[Sequence[int]]], one_based: bool = True):
        off = 1 if one_based else 0
        return cls(K, tuple(tuple(frozenset(k - off for k in d) for d in c) for c in holds))

    @property
    def U(self) -> int:
        return len(self.holds)

    @property
    def V(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.holds)

    def cluster_datasets(self, u: int) -> frozenset[int]:
        return frozenset().union(*self.holds[u])

    def users(self):
        for u, cluster in enumerate(self.holds):
            for v in range(len(cluster)):
                yield u, v


@dataclass(frozen=True)
class DerivedParams:
    K: int
    U: int
    V: tuple[int, ...]
    r1k: tuple[int, ...]
    r2k: tuple[tuple[int, ...], ...]  # r2k[u][k]; 0 when cluster u lacks dataset k
    r1: int
    r2: tuple[int, ...]
    s2: tuple[int, ...]
    T: tuple[int, ...]
    m1: int
    m2: tuple[int, ...]
    m: int  # 0 when some m2[u] < 1 (caught by check_feasibility)

    def column_index(self, k: int, j: int) -> int:
        """Coordinate of piece ``j`` of dataset ``k`` (both 0-based)."""
        return j * self.K + k

    @property
    def n_pieces(self) -> int:
        return self.K * self.m

    @property
    def relay_rows(self) -> int:
        """Rows each relay sends, ``m/m1``."""
        return self.m // self.m1

    @property
    def n1(self) -> int:
        """Total relay-to-server rows, ``U*m/m1``."""
        return self.U * self.relay_rows

    def user_rows(self, u: int) -> int:
        """Rows each user of cluster ``u`` sends, ``m/(m1*m2[u])``."""
        return self.m // (self.m1 * self.m2[u])

    def cluster_rows(self, u: int) -> int:
        """Dimension a relay recovers from its survivors, ``(V_u - s2_u) * user_rows``."""
        return (self.V[u] - self.s2[u]) * self.user_rows(u)


@dataclass(frozen=True)
class RateReport:
    R1: Fraction
    R2: tuple[Fraction, ...]
    RZ: Fraction
    key_count: int
    R1_bound: Fraction
    R2_bound: tuple[Fraction, ...]

    @property
    def on_boundary(self) -> bool:
        return self.R1 == self.R1_bound and self.R2 == self.R2_bound


def derive_params(a: Assignment, s2: Sequence[int] | None = None, T: Sequence[int] | None = None) -> DerivedParams:
    U, K = a.U, a.K
    s2 = tuple(s2) if s2 is not None else (0,) * U
    T = tuple(T) if T is not None else (0,) * U
    if len(s2) != U or len(T) != U:
        raise ParameterError(f"s2 and T need one entry per cluster ({U})")
    if any(x < 0 for x in s2 + T):
        raise ParameterError("s2 and T must be non-negative")
    r2k = tuple(
        tuple(sum(k in d for d in a.holds[u]) for k in range(K)) for u in range(U)
    )
    r1k = tuple(sum(r2k[u][k] > 0 for u in range(U)) for k in range(K))
    r1 = min(r1k)
    r2 = tuple(min(c for c in r2k[u] if c > 0) for u in range(U))
    m1 = r1
    m2 = tuple(r2[u] - s2[u] for u in range(U))
    # every user must send a whole number m/(m1*m2[u]) of pieces, so m is the
    # lcm of the products m1*m2[u] (equal to lcm(m1, m2...) whenever m1 = 1)
    m = m1 * math.lcm(*m2) if min(m2) >= 1 else 0
    return DerivedParams(K, U, a.V, r1k, r2k, r1, r2, s2, T, m1, m2, m)


def check_feasibility(p: DerivedParams) -> None:
    for u in range(p.U):
        if p.s2[u] >= p.r2[u]:
            raise TooManyStragglers(
                u, f"cluster {u + 1}: s2={p.s2[u]} must be < r2={p.r2[u]}"
            )
        if p.T[u] > p.V[u] - p.r2[u]:
            raise TooManyColluders(
                u, f"cluster {u + 1}: T={p.T[u]} must be <= V - r2 = {p.V[u] - p.r2[u]}"
            )
    if p.r1 > p.U - 1:
        raise ReplicationTooHigh(f"r1={p.r1} must be <= U-1={p.U - 1}")


def rates(p: DerivedParams) -> RateReport:
    """Optimal link rates and the source-key rate, as exact fractions."""
    U = p.U
    if p.m < 1:
        raise TooManyStragglers(next(u for u in range(U) if p.m2[u] < 1))
    # achieved: rows sent per link, each row carrying L/m symbols
    R1 = Fraction(p.relay_rows, p.m)
    R2 = tuple(Fraction(p.user_rows(u), p.m) for u in range(U))
    R1_bound = Fraction(1, p.m1)
    R2_bound = tuple(Fraction(1, p.m1 * p.m2[u]) for u in range(U))
    live = [(p.V[i] - p.s2[i]) * R2[i] for i in range(U)]
    leak = [p.T[i] * R2[i] for i in range(U)]
    relay_term = max(live[i] + sum(leak) - leak[i] for i in range(U))
    server_term = min(U * R1 + sum(leak) - 1, sum(live) - 1)
    RZ = max(relay_term, server_term)
    keys = p.m * RZ
    if keys.denominator != 1:
        raise NonIntegralKeyCount(f"m*RZ = {keys} is not an integer")
    return RateReport(R1, R2, RZ, int(keys), R1_bound, R2_bound)


def random_instance(
    rng, max_U: int = 3, max_V: int = 4, max_K: int = 6, max_tries: int = 1000
) -> tuple[Assignment, tuple[int, ...], tuple[int, ...]]:
    """A random feasible ``(assignment, s2, T)``.

    Users hold uniform nonempty dataset subsets; draws that orphan a dataset or
    give ``r1 = U`` are rejected.  ``s2`` and ``T`` are uniform within their
    feasible ranges.
    """
    for _ in range(max_tries):
        U = rng.randint(2, max_U)
        K = rng.randint(1, max_K)
        V = [rng.randint(1, max_V) for _ in range(U)]
        holds = [
            [frozenset(k for k in range(K) if rng.random() < 0.5) for _ in range(V[u])] for u in range(U)
        ]
        try:
            a = Assignment(K, tuple(tuple(c) for c in holds))
        except ParameterError:
            continue
        p = derive_params(a)
        if p.r1 > U - 1:
            continue
        s2 = tuple(rng.randint(0, p.r2[u] - 1) for u in range(U))
        T = tuple(rng.randint(0, V[u] - p.r2[u]) for u in range(U))
        return a, s2, T
    raise ParameterError(f"no feasible instance in {max_tries} draws")
