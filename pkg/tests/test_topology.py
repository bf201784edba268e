import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsecagg.errors import (
    EmptyUserAssignment,
    OrphanDataset,
    ParameterError,
    ReplicationTooHigh,
    TooManyColluders,
    TooManyStragglers,
)
from hsecagg.topology import Assignment, check_feasibility, derive_params, random_instance, rates


def test_example_params(example_assignment):
    p = derive_params(example_assignment, (0, 1), (1, 1))
    assert (p.r1, p.r2) == (1, (1, 3))
    assert (p.m1, p.m2, p.m) == (1, (1, 2), 2)
    assert p.n1 == 4 and p.relay_rows == 2
    assert [p.user_rows(u) for u in range(2)] == [2, 1]
    assert p.column_index(0, 1) == 6


def test_example_r_without_stragglers(example_assignment):
    p = derive_params(example_assignment)
    assert (p.r1, p.r2) == (1, (1, 3))


def test_full_replication_across_clusters():
    a = Assignment.from_lists(1, [[[1]], [[1]], [[1]]])
    p = derive_params(a)
    # lcm(m1, m2...) = lcm(3, 1, 1, 1) = 3
    assert (p.r1, p.r2, p.m) == (3, (1, 1, 1), 3)
    with pytest.raises(ReplicationTooHigh):
        check_feasibility(p)


def test_example_feasible_and_rates(example_assignment):
    p = derive_params(example_assignment, (0, 1), (1, 1))
    check_feasibility(p)
    r = rates(p)
    assert r.R1 == 1 and r.R2 == (1, Fraction(1, 2))
    assert r.RZ == Fraction(5, 2) and r.key_count == 5
    assert r.on_boundary


def test_infeasible_examples(example_assignment):
    with pytest.raises(TooManyStragglers) as e:
        check_feasibility(derive_params(example_assignment, (0, 3), (1, 1)))
    assert e.value.cluster == 1
    with pytest.raises(TooManyColluders):
        check_feasibility(derive_params(example_assignment, (0, 1), (1, 2)))
    both = Assignment.from_lists(2, [[[1, 2]], [[1, 2]]])
    with pytest.raises(ReplicationTooHigh):
        check_feasibility(derive_params(both))


def test_symmetric_toy_rates():
    a = Assignment.from_lists(2, [[[1]], [[2]]])
    p = derive_params(a)
    check_feasibility(p)
    r = rates(p)
    assert (r.R1, r.R2, r.RZ, r.key_count) == (1, (1, 1), 1, 1)


def test_server_term_dominates_without_collusion():
    # V - s2 = 1 everywhere, T = 0: relay term 1, server term sum (V - s2) R2 - 1 = 2
    a = Assignment.from_lists(3, [[[1]], [[2]], [[3]]])
    p = derive_params(a)
    r = rates(p)
    live = sum((p.V[i] - p.s2[i]) * r.R2[i] for i in range(p.U))
    assert max((p.V[i] - p.s2[i]) * r.R2[i] for i in range(p.U)) == 1
    assert r.RZ == live - 1 == 2 and r.key_count == 2


def test_lcm_with_m1_above_one():
    # m1 = 2, m2 = (2, 1): users of cluster 1 must send m/(m1*m2) whole pieces
    holds = [[[1, 2], [1, 2]], [[1], [2]], [[1]]]
    a = Assignment.from_lists(2, holds)
    p = derive_params(a, (0, 0, 0))
    assert p.m1 == 2 and p.m2 == (2, 1, 1)
    assert p.m == 4  # lcm(2, 2, 1, 1) = 2 would give cluster 1 half a piece per user
    assert all(p.m % (p.m1 * p.m2[u]) == 0 for u in range(p.U))


def test_assignment_validation():
    with pytest.raises(EmptyUserAssignment):
        Assignment.from_lists(2, [[[1], []], [[2]]])
    with pytest.raises(OrphanDataset):
        Assignment.from_lists(3, [[[1]], [[2]]])
    with pytest.raises(ParameterError):
        Assignment.from_lists(2, [[[1, 5]], [[2]]])
    with pytest.raises(ParameterError):
        derive_params(Assignment.from_lists(2, [[[1]], [[2]]]), (0,), (0, 0))


def test_assignment_accessors(example_assignment):
    a = example_assignment
    assert a.U == 2 and a.V == (2, 4)
    assert a.cluster_datasets(0) == frozenset({0, 1, 2, 3, 5})
    assert len(list(a.users())) == 6


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_random_instance_invariants(seed):
    a, s2, T = random_instance(random.Random(seed))
    p = derive_params(a, s2, T)
    check_feasibility(p)
    for k in range(p.K):
        assert p.r1k[k] >= p.r1
        for u in range(p.U):
            if k in a.cluster_datasets(u):
                assert p.r2k[u][k] >= p.r2[u]
    r = rates(p)
    assert r.on_boundary
    assert r.R1 == Fraction(1, p.m1)
    assert all(r.R2[u] == Fraction(1, p.m1 * p.m2[u]) for u in range(p.U))
    assert r.key_count == p.m * r.RZ
    assert derive_params(a, s2, T) == p
