"""The published two-cluster worked example, embedded as exact rationals.

``U=2`` relays, ``V=(2,4)`` users, ``K=6`` datasets, ``s2=(0,1)``,
``T=(1,1)``.  All matrices below are copied from the published example; the
only exception is ``S2`` of cluster 2, which is not printed there and is
replaced by a 4x3 Vandermonde matrix (every 3 rows invertible over any field
with more than 4 elements).  ``F2`` of cluster 2 is regenerated by the
builder with that ``S2`` pinned.

Some entries have denominators 2 and 3, so the embedding fails for q in
{2, 3} with :class:`DenominatorVanishes`.
"""

from __future__ import annotations

from fractions import Fraction as Fr

from .audit import CheckResult, audit_full, check_constraint1, constraint2_stack, constraint3_stack
from .builder import (
    ClusterCode,
    RelayCode,
    Scheme,
    build_aggregation_matrix,
    build_cluster_layer,
    build_relay_layer,
    relay_encodability_errors,
    user_encodability_errors,
)
from .errors import HSecAggError
from .ff import Field, make_rng
from .matrix import Matrix, inverse, null_space_basis, rank, solve_particular
from .topology import Assignment, derive_params, rates

FIXTURE_Q = 101

HOLDS = [
    [[1, 3, 4, 6], [1, 2, 6]],
    [[2, 3, 5], [2, 3, 4, 5], [2, 3, 4], [3, 4, 5]],
]
S2_STRAGGLERS = (0, 1)
COLLUDERS = (1, 1)

S1 = [
    [1, 3, 2, 1],
    [5, 1, 1, 2],
    [2, 4, 3, 1],
    [1, 1, 3, 2],
]

F = [
    [1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
    [-1, 1, 3, 2, 1, -1, Fr(-7, 3), 2, 3, 2, Fr(-5, 3), Fr(-7, 3)],
    [1, 3, 1, 1, -3, 1, 3, 3, 2, 1, Fr(1, 3), 3],
]

F1 = [
    [0, 6, 8, 6, 0, 0, Fr(4, 3), 10, 11, 8, 0, Fr(4, 3)],
    [6, 12, 10, 9, 0, 6, Fr(14, 3), 9, 8, 5, 0, Fr(14, 3)],
    [0, 8, 12, 9, 2, 0, 0, 13, 15, 11, Fr(-2, 3), 0],
    [0, 10, 12, 9, -2, 0, 0, 13, 14, 9, Fr(-10, 3), 0],
]

B1 = [
    [1, 1, 2, 3, 3],
    [-1, 2, 1, 3, 0],
    [2, 1, 3, 4, 5],
    [1, 2, 3, 5, 4],
]

S2_1 = [
    [2, 3, 1, 1],
    [1, 2, 2, 1],
    [1, 1, 2, 3],
    [3, 1, 2, 2],
]

F2_1 = F1[:2] + [
    [2, 18, -33, Fr(-51, 2), 0, 4, 5, 19, Fr(-85, 2), Fr(-61, 2), 0, 1],
    [1, -66, 16, 12, 0, 3, 2, -66, 22, 16, 0, 3],
]

B2_1 = B1[:2] + [
    [1, 3, 4, 3, 1],
    [4, 1, 3, 2, 1],
]

B2_2 = B1[2:] + [
    [3, 5, 1, 3, 2],
]

# substitute for the unpublished S2 of cluster 2
S2_2 = [[1, x, x * x] for x in (1, 2, 3, 4)]


def assignment() -> Assignment:
    return Assignment.from_lists(6, HOLDS)


def params():
    return derive_params(assignment(), S2_STRAGGLERS, COLLUDERS)


def _m(field: Field, rows) -> Matrix:
    return Matrix(field, rows)


def example_scheme(q: int = FIXTURE_Q) -> Scheme:
    """Scheme built from the published matrices (cluster 2 completed as documented)."""
    field = Field(q)
    a, p = assignment(), params()
    rr = rates(p)
    S = _m(field, S1)
    Fm = _m(field, F)
    B = _m(field, B1)
    Q = null_space_basis(inverse(S).row_block(0, p.m))
    relay = RelayCode(S, build_aggregation_matrix(field, p), Fm.row_block(2, 4), Fm, _m(field, F1), Q, B, solve_particular(Q, B))
    c1 = ClusterCode(0, _m(field, S2_1), _m(field, F2_1), _m(field, B2_1), p.user_rows(0))
    c2 = build_cluster_layer(1, relay, a, p, make_rng(0), S2=_m(field, S2_2), B2_extra=_m(field, B2_2[2:]))
    return Scheme(field, a, p, rr, relay, (c1, c2), None)


def _check(name: str, ok: bool, measured: str, expected: str, detail: str = "") -> CheckResult:
    return CheckResult(name, "fixture", measured, expected, ok, detail)


def _eq(name: str, got: Matrix, want: Matrix) -> CheckResult:
    diff = [(i + 1, j + 1) for i, (x, y) in enumerate(zip(got.tolist(), want.tolist())) for j in range(len(x)) if x[j] != y[j]]
    return _check(name, not diff and got.shape == want.shape, f"mismatches={len(diff)}", "mismatches=0",
                  f"first at {diff[0]}" if diff else "")


def verify_fixtures(q: int = FIXTURE_Q) -> list[CheckResult]:
    """Every verification the published example states, over F_q."""
    try:
        field = Field(q)
        mats = {name: _m(field, rows) for name, rows in (
            ("S1", S1), ("F", F), ("F1", F1), ("B1", B1), ("S2_1", S2_1), ("F2_1", F2_1), ("B2_1", B2_1), ("B2_2", B2_2),
        )}
    except HSecAggError as e:
        return [_check("embed", False, type(e).__name__, "embedded", str(e))]
    a, p = assignment(), params()
    S, Fm, F1m, B = mats["S1"], mats["F"], mats["F1"], mats["B1"]
    out = [_check("embed", True, "embedded", "embedded")]
    out.append(_eq("F1=S1*F", S @ Fm, F1m))
    out.append(_eq("A-rows", Fm.row_block(0, p.m), build_aggregation_matrix(field, p)))
    errs = relay_encodability_errors(a, p, F1m)
    out.append(_check("relay-encodability", not errs, f"errors={len(errs)}", "errors=0", "; ".join(errs)))
    col1 = S.row_block(2, 4) @ Fm.submatrix(None, [0])
    out.append(_check("S1(2)*F(.,1)=0", col1.is_zero(), str(col1.tolist()), "[[0], [0]]"))
    top = inverse(S).row_block(0, p.m)
    out.append(_eq("decode-rows", top @ F1m, build_aggregation_matrix(field, p)))

    try:
        s = example_scheme(q)
    except HSecAggError as e:
        out.append(_check("assemble", False, type(e).__name__, "scheme", str(e)))
        return out
    c1 = s.clusters[0]
    r = check_constraint1(s)
    out.append(_check("constraint1", r.passed, r.measured, r.expected, r.detail))

    f2 = mats["F2_1"]
    zero_cols = f2.submatrix(None, [4, 10])
    out.append(_check("F2(1)-cols-5,11", zero_cols.is_zero(), "zero" if zero_cols.is_zero() else "nonzero", "zero"))
    out.append(_eq("F2(1)-task-rows", f2.row_block(0, 2), F1m.row_block(0, 2)))
    out.append(_eq("B2(1)-task-rows", mats["B2_1"].row_block(0, 2), B.row_block(0, 2)))
    out.append(_eq("B2(2)-task-rows", mats["B2_2"].row_block(0, 2), B.row_block(2, 4)))
    errs = user_encodability_errors(c1, a, p) + user_encodability_errors(s.clusters[1], a, p)
    out.append(_check("user-encodability", not errs, f"errors={len(errs)}", "errors=0", "; ".join(errs)))

    # relay u with one colluder of the other cluster: 5x5, full rank
    for u, other in ((0, 1), (1, 0)):
        for v in range(p.V[other]):
            t = [frozenset(), frozenset()]
            t[other] = frozenset([v])
            M = constraint2_stack(s, u, tuple(t))
            out.append(_check(f"relay{u + 1}+user({other + 1},{v + 1})", M.shape == (5, 5) and rank(M) == 5,
                              f"{M.rows}x{M.cols} rank={rank(M)}", "5x5 rank=5"))
    # server with one colluder per cluster: 7x5, rank 5
    for v1 in range(p.V[0]):
        for v2 in range(p.V[1]):
            M = constraint3_stack(s, (frozenset([v1]), frozenset([v2])))
            out.append(_check(f"server+users(1,{v1 + 1}),(2,{v2 + 1})", M.shape == (7, 5) and rank(M) == 5,
                              f"{M.rows}x{M.cols} rank={rank(M)}", "7x5 rank=5"))

    for name, M in (("S1", S), ("S2(1)", c1.S2)):
        out.append(_check(f"{name}-invertible", rank(M) == M.rows, f"rank={rank(M)}", f"rank={M.rows}"))

    # canonical solves agree with the published values wherever the system is square
    try:
        rc = build_relay_layer(a, p, s.key_count, make_rng(0), field=field, S1=S, B1=B)
        det = [p.column_index(k, j) for k in (0, 4, 5) for j in range(p.m)]
        out.append(_eq("canonical-V", rc.F.submatrix(None, det), Fm.submatrix(None, det)))
        cc = build_cluster_layer(0, s.relay, a, p, make_rng(0), S2=c1.S2, B2_extra=c1.B2.row_block(2, 4))
        det = [p.column_index(k, j) for k in (1, 2, 3, 4) for j in range(p.m)]
        out.append(_eq("canonical-F2(1)", cc.F2.submatrix(None, det), f2.submatrix(None, det)))
    except HSecAggError as e:
        out.append(_check("canonical-solve", False, type(e).__name__, "solved", str(e)))
    return out


def fixture_audit(q: int = FIXTURE_Q):
    return audit_full(example_scheme(q))
