"""Construction of the two-layer linear code.

Relay-to-server layer
    ``F = [A; V]`` where ``A`` demands the per-piece sum and the virtual rows
    ``V`` are solved column by column so that every relay's rows of
    ``F1 = S1 @ F`` vanish on pieces of datasets the cluster does not hold.
    ``B1 = Q @ G`` with ``Q`` a null-space basis of the first ``m`` rows of
    ``S1^{-1}``, so keys cancel in the server's decoder.

Intra-cluster layer
    Relay ``u``'s rows of ``[F1 | B1]`` become the first rows of
    ``[F2 | B2]``; the remaining rows of ``F2`` are solved for per-user
    encodability and the remaining rows of ``B2`` are uniform.  Each user sends
    its block of ``S2`` times ``[F2 | B2]`` applied to ``W' = [W; N]``.

Every random object is drawn from one :class:`random.Random` stream, so a
seed fixes the scheme bit for bit.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AttemptsExhausted,
    ConstructionFailed,
    Inconsistent,
    InfeasibleColumn,
    SecurityConstraintViolated,
)
from .ff import DEFAULT_Q, Field, make_rng
from .matrix import DEFAULT_ATTEMPTS, Matrix, hstack, inverse, null_space_basis, random_full_rank, rank, solve_particular, vstack
from .scenarios import Caps, survivor_sets
from .topology import Assignment, DerivedParams, RateReport, check_feasibility, derive_params, rates

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RelayCode:
    S1: Matrix
    A: Matrix
    V: Matrix
    F: Matrix
    F1: Matrix
    Q: Matrix
    B1: Matrix
    G: Matrix

    def relay_rows(self, p: DerivedParams, u: int) -> range:
        return range(u * p.relay_rows, (u + 1) * p.relay_rows)


@dataclass(frozen=True)
class ClusterCode:
    u: int
    S2: Matrix
    F2: Matrix
    B2: Matrix
    user_rows: int

    def block(self, v: int) -> Matrix:
        """Transmission matrix of user ``v`` (its rows of ``S2``)."""
        n = self.user_rows
        return self.S2.row_block(v * n, (v + 1) * n)

    def stack(self, users: Sequence[int]) -> Matrix:
        n = self.user_rows
        return self.S2.submatrix([v * n + i for v in users for i in range(n)])


@dataclass(frozen=True)
class Scheme:
    field: Field
    assignment: Assignment
    params: DerivedParams
    rates: RateReport
    relay: RelayCode
    clusters: tuple[ClusterCode, ...]
    seed: int | None

    @property
    def key_count(self) -> int:
        return self.rates.key_count

    @property
    def n_coords(self) -> int:
        """Length of ``W' = [W; N]``."""
        return self.params.n_pieces + self.key_count

    def relay_coefficients(self, u: int | None = None) -> Matrix:
        """Rows of ``[F1 | B1]`` (all relays, or relay ``u`` only)."""
        full = hstack(self.relay.F1, self.relay.B1)
        if u is None:
            return full
        return full.submatrix(self.relay.relay_rows(self.params, u))

    def user_coefficients(self, u: int, v: int) -> Matrix:
        """Map from ``W'`` to the message of user ``(u, v)``."""
        c = self.clusters[u]
        return c.block(v) @ hstack(c.F2, c.B2)

    def held_columns(self, u: int, v: int) -> list[int]:
        p = self.params
        return sorted(p.column_index(k, j) for k in self.assignment.holds[u][v] for j in range(p.m))


def build_aggregation_matrix(field: Field, p: DerivedParams) -> Matrix:
    """``m x K*m`` demand for the per-piece sum of all datasets."""
    a = np.zeros((p.m, p.n_pieces), dtype=np.int64)
    for j in range(p.m):
        for k in range(p.K):
            a[j, p.column_index(k, j)] = 1
    return Matrix(field, a)


def _piece_columns(p: DerivedParams, k: int) -> list[int]:
    return [p.column_index(k, j) for j in range(p.m)]


def _solve_relay_virtual(a: Assignment, p: DerivedParams, S1: Matrix, A: Matrix) -> Matrix:
    """Virtual demand rows making every relay's rows of ``S1 @ F`` encodable."""
    field = S1.field
    m, n1, rr = p.m, p.n1, p.relay_rows
    S_task = S1.submatrix(None, range(m))
    S_virt = S1.submatrix(None, range(m, n1))
    V = np.zeros((n1 - m, p.n_pieces), dtype=S1.a.dtype)
    for k in range(p.K):
        missing = [u for u in range(p.U) if k not in a.cluster_datasets(u)]
        if not missing:
            continue
        rows = [r for u in missing for r in range(u * rr, (u + 1) * rr)]
        if len(rows) > n1 - m:
            raise InfeasibleColumn(f"dataset {k + 1}: {len(rows)} constraints on {n1 - m} unknowns")
        cols = _piece_columns(p, k)
        rhs = -(S_task.submatrix(rows) @ A.submatrix(None, cols))
        x = solve_particular(S_virt.submatrix(rows), rhs)
        V[:, cols] = x.a
    return Matrix(field, V)


def relay_encodability_errors(a: Assignment, p: DerivedParams, F1: Matrix) -> list[str]:
    errs = []
    for u in range(p.U):
        held = a.cluster_datasets(u)
        rows = F1.submatrix(range(u * p.relay_rows, (u + 1) * p.relay_rows))
        for k in range(p.K):
            if k not in held and not rows.submatrix(None, _piece_columns(p, k)).is_zero():
                errs.append(f"relay {u + 1} touches dataset {k + 1}")
    return errs


def build_relay_layer(
    a: Assignment,
    p: DerivedParams,
    key_count: int,
    rng: random.Random,
    *,
    field: Field,
    S1: Matrix | None = None,
    B1: Matrix | None = None,
    max_attempts: int = DEFAULT_ATTEMPTS,
) -> RelayCode:
    """Sample ``S1``, solve ``V``, and derive ``F1``, ``Q`` and ``B1``.

    ``S1``/``B1`` may be pinned (e.g. to reproduce published matrices); a
    pinned matrix that fails the invariants raises instead of retrying.
    """
    m, n1 = p.m, p.n1
    A = build_aggregation_matrix(field, p)
    pinned = S1 is not None
    if pinned and (S1.shape != (n1, n1) or rank(S1) != n1):
        raise ConstructionFailed(f"pinned S1 must be an invertible {n1}x{n1} matrix")
    for attempt in range(1 if pinned else max_attempts):
        try:
            S = S1 if pinned else random_full_rank(field, n1, n1, rng, max_attempts)
            V = _solve_relay_virtual(a, p, S, A)
        except Inconsistent as e:
            if pinned:
                raise InfeasibleColumn(str(e)) from e
            continue
        except AttemptsExhausted as e:
            raise ConstructionFailed(str(e)) from e
        F = vstack(A, V)
        F1 = S @ F
        top = inverse(S).row_block(0, m)
        Q = null_space_basis(top)
        if B1 is None:
            try:
                G = random_full_rank(field, n1 - m, key_count, rng, max_attempts)
            except AttemptsExhausted as e:
                raise ConstructionFailed(str(e)) from e
            B = Q @ G
        else:
            B = B1
            G = solve_particular(Q, B1)
        code = RelayCode(S, A, V, F, F1, Q, B, G)
        errs = relay_errors(code, a, p)
        if not errs:
            return code
        if pinned:
            raise ConstructionFailed("; ".join(errs))
        log.debug("relay layer attempt %d rejected: %s", attempt, errs)
    raise ConstructionFailed(f"relay layer not constructed in {max_attempts} attempts")


def relay_errors(rc: RelayCode, a: Assignment, p: DerivedParams) -> list[str]:
    errs = []
    if rank(rc.S1) != p.n1:
        return ["S1 is singular"]
    if rc.F1 != rc.S1 @ rc.F:
        errs.append("F1 != S1 F")
    top = inverse(rc.S1).row_block(0, p.m)
    if top @ rc.F1 != rc.A:
        errs.append("S1^-1([m],.) F1 != A")
    if not (top @ rc.B1).is_zero():
        errs.append("S1^-1([m],.) B1 != 0")
    if rank(rc.B1) != p.n1 - p.m:
        errs.append(f"rank(B1) = {rank(rc.B1)} != {p.n1 - p.m}")
    errs += relay_encodability_errors(a, p, rc.F1)
    return errs


def _survivors_invertible(S2: Matrix, p: DerivedParams, u: int, caps: Caps, rng: random.Random) -> bool:
    n = p.user_rows(u)
    keep = p.V[u] - p.s2[u]
    total = math.comb(p.V[u], keep)
    if total <= caps.exhaustive:
        sets = survivor_sets(p.V[u], keep)
    else:
        sets = (tuple(sorted(rng.sample(range(p.V[u]), keep))) for _ in range(caps.sample))
    for users in sets:
        rows = [v * n + i for v in users for i in range(n)]
        if rank(S2.submatrix(rows)) < len(rows):
            return False
    return True


def user_encodability_errors(cc: ClusterCode, a: Assignment, p: DerivedParams) -> list[str]:
    errs = []
    for v, held in enumerate(a.holds[cc.u]):
        coeff = cc.block(v) @ cc.F2
        for k in range(p.K):
            if k not in held and not coeff.submatrix(None, _piece_columns(p, k)).is_zero():
                errs.append(f"user ({cc.u + 1},{v + 1}) touches dataset {k + 1}")
    return errs


def build_cluster_layer(
    u: int,
    rc: RelayCode,
    a: Assignment,
    p: DerivedParams,
    rng: random.Random,
    *,
    S2: Matrix | None = None,
    B2_extra: Matrix | None = None,
    caps: Caps = Caps(),
    max_attempts: int = DEFAULT_ATTEMPTS,
) -> ClusterCode:
    """Sample ``S2``, solve the virtual rows of ``F2`` and complete ``B2``."""
    field = rc.S1.field
    n2 = p.user_rows(u)
    rows = p.cluster_rows(u)
    rr = p.relay_rows
    key_count = rc.B1.cols
    task_rows = list(rc.relay_rows(p, u))
    task_F = rc.F1.submatrix(task_rows)
    task_B = rc.B1.submatrix(task_rows)
    pinned = S2 is not None
    for attempt in range(1 if pinned else max_attempts):
        S = S2 if pinned else Matrix.random(field, p.V[u] * n2, rows, rng)
        if not _survivors_invertible(S, p, u, caps, rng):
            if pinned:
                raise ConstructionFailed(f"cluster {u + 1}: pinned S2 has a singular survivor stack")
            continue
        S_task = S.submatrix(None, range(rr))
        S_virt = S.submatrix(None, range(rr, rows))
        virt = np.zeros((rows - rr, p.n_pieces), dtype=S.a.dtype)
        try:
            for k in range(p.K):
                missing = [v for v, held in enumerate(a.holds[u]) if k not in held]
                if not missing:
                    continue
                srows = [v * n2 + i for v in missing for i in range(n2)]
                cols = _piece_columns(p, k)
                rhs = -(S_task.submatrix(srows) @ task_F.submatrix(None, cols))
                virt[:, cols] = solve_particular(S_virt.submatrix(srows), rhs).a
        except Inconsistent as e:
            if pinned:
                raise InfeasibleColumn(f"cluster {u + 1}: {e}") from e
            continue
        F2 = vstack(task_F, Matrix(field, virt))
        extra = B2_extra if B2_extra is not None else Matrix.random(field, rows - rr, key_count, rng)
        B2 = vstack(task_B, extra)
        cc = ClusterCode(u, S, F2, B2, n2)
        errs = user_encodability_errors(cc, a, p)
        if not errs:
            return cc
        if pinned:
            raise ConstructionFailed("; ".join(errs))
        log.debug("cluster %d attempt %d rejected: %s", u, attempt, errs)
    raise ConstructionFailed(f"cluster {u + 1} not constructed in {max_attempts} attempts")


def user_key_coefficients(s: Scheme, u: int, v: int) -> Matrix:
    """Map from ``N`` to the key ``Z_{u,v}`` stored by user ``(u, v)``."""
    c = s.clusters[u]
    return c.block(v) @ c.B2


def build_scheme(
    a: Assignment,
    s2: Sequence[int] | None = None,
    T: Sequence[int] | None = None,
    q: int = DEFAULT_Q,
    seed: int | None = 0,
    *,
    caps: Caps = Caps(),
    max_attempts: int = DEFAULT_ATTEMPTS,
) -> Scheme:
    """Derive parameters, construct both layers and verify Constraints 1-3.

    A construction whose security ranks fail at some collusion tuple is
    discarded and rebuilt from the continuing random stream.
    """
    from . import audit

    field = Field(q)
    p = derive_params(a, s2, T)
    check_feasibility(p)
    rr = rates(p)
    rng = make_rng(seed)
    failure = None
    for attempt in range(max_attempts):
        relay = build_relay_layer(a, p, rr.key_count, rng, field=field, max_attempts=max_attempts)
        clusters = tuple(
            build_cluster_layer(u, relay, a, p, rng, caps=caps, max_attempts=max_attempts) for u in range(p.U)
        )
        scheme = Scheme(field, a, p, rr, relay, clusters, seed)
        failure = audit.first_constraint_failure(scheme, caps)
        if failure is None:
            return scheme
        log.debug("scheme attempt %d failed %s", attempt, failure.name)
    raise SecurityConstraintViolated(failure.name, failure.scenario, failure.detail)
