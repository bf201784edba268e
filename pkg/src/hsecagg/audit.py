"""Security and decodability audit.

Every observation in the protocol is a linear image of the uniform vector
``W' = [W; N]`` over F_q, so entropies are ranks (in units of ``log q``):

    I(A W'; B W' | C W') = rk[A;C] + rk[B;C] - rk[A;B;C] - rk[C]

:func:`linear_mi` evaluates that formula.  :func:`exhaustive_mi` is an
independent oracle: it enumerates every ``W'`` in a tiny field, tabulates the
joint distribution by counting, and sums ``p log_q`` ratios exactly, failing
loudly if any ratio is not an integral power of ``q``.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .builder import Scheme, _survivors_invertible, relay_errors, user_encodability_errors, user_key_coefficients
from .errors import BudgetExceeded, DimensionMismatch, HSecAggError
from .ff import make_rng
from .matrix import Matrix, _matmul, hstack, inverse, rank, vstack
from .runtime import sample_inputs, simulate
from .scenarios import (
    Caps,
    Pattern,
    collusion_options,
    collusion_tuples,
    dropout_options,
    dropout_patterns,
    format_pattern,
    is_exhaustive,
)


DEFAULT_BUDGET = 2**22
READINGS = ("pieces", "partial_sum")


@dataclass(frozen=True)
class AdversaryScenario:
    party: int | None  # relay index; None for the server
    colluders: Pattern

    def describe(self) -> str:
        who = "server" if self.party is None else f"relay={self.party + 1}"
        return f"{who} T={format_pattern(self.colluders)}"


@dataclass(frozen=True)
class LinearView:
    coeff: Matrix
    label: str = ""


@dataclass
class CheckResult:
    name: str
    scenario: str
    measured: str
    expected: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        s = f"{'PASS' if self.passed else 'FAIL'} {self.name} [{self.scenario}] measured={self.measured} expected={self.expected}"
        return s + (f" ({self.detail})" if self.detail else "")


@dataclass
class AuditReport:
    results: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def add(self, r: CheckResult) -> CheckResult:
        self.results.append(r)
        return r

    def text(self) -> str:
        lines = [f"# {n}" for n in self.notes]
        lines += [r.line() for r in self.results]
        lines.append(f"SUMMARY {'PASS' if self.passed else 'FAIL'} checks={len(self.results)} failures={len(self.failures)}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"passed": self.passed, "notes": self.notes, "results": [asdict(r) for r in self.results]}


def _coeff(x: LinearView | Matrix) -> Matrix:
    return x.coeff if isinstance(x, LinearView) else x


# -- views -------------------------------------------------------------------


def _empty(s: Scheme) -> Matrix:
    return Matrix.zeros(s.field, 0, s.n_coords)


def gradient_view(s: Scheme) -> Matrix:
    """Selector of every gradient piece ``W_{k,j}``."""
    p = s.params
    return hstack(Matrix.identity(s.field, p.n_pieces), Matrix.zeros(s.field, p.n_pieces, s.key_count))


def sum_view(s: Scheme) -> Matrix:
    return hstack(s.relay.A, Matrix.zeros(s.field, s.params.m, s.key_count))


def server_view(s: Scheme) -> Matrix:
    return s.relay_coefficients()


def relay_view(s: Scheme, u: int, users: Sequence[int] | None = None) -> Matrix:
    users = range(s.params.V[u]) if users is None else users
    return vstack(_empty(s), *(s.user_coefficients(u, v) for v in users))


def colluder_view(s: Scheme, colluders: Pattern, reading: str = "pieces") -> Matrix:
    """Rows of ``{W_T, Z_T}``: colluders' inputs and stored keys."""
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    p = s.params
    blocks = [_empty(s)]
    for u, users in enumerate(colluders):
        for v in sorted(users):
            if reading == "pieces":
                cols = s.held_columns(u, v)
                w = np.zeros((len(cols), s.n_coords), dtype=np.int64)
                w[np.arange(len(cols)), cols] = 1
            else:
                w = np.zeros((p.m, s.n_coords), dtype=np.int64)
                for j in range(p.m):
                    for k in s.assignment.holds[u][v]:
                        w[j, p.column_index(k, j)] = 1
            blocks.append(Matrix(s.field, w))
            z = user_key_coefficients(s, u, v)
            blocks.append(hstack(Matrix.zeros(s.field, z.rows, p.n_pieces), z))
    return vstack(*blocks)


# -- rank constraints ----------------------------------------------------------


def _colluder_keys(s: Scheme, u: int, users) -> list[Matrix]:
    return [user_key_coefficients(s, u, v) for v in sorted(users)]


def check_constraint1(s: Scheme) -> CheckResult:
    p = s.params
    target = p.n1 - p.m
    prod_zero = (inverse(s.relay.S1).row_block(0, p.m) @ s.relay.B1).is_zero()
    r = rank(s.relay.B1)
    ok = prod_zero and r == target
    detail = "" if prod_zero else "S1^-1([m],.) B1 != 0"
    return CheckResult("constraint1", "B1", f"rank={r}", f"rank={target}", ok, detail)


def constraint2_stack(s: Scheme, u: int, colluders: Pattern) -> Matrix:
    blocks = [s.clusters[u].B2]
    for i, users in enumerate(colluders):
        if i != u:
            blocks += _colluder_keys(s, i, users)
    return vstack(*blocks)


def check_constraint2(s: Scheme, u: int, colluders: Pattern) -> CheckResult:
    M = constraint2_stack(s, u, colluders)
    r = rank(M)
    scen = AdversaryScenario(u, tuple(frozenset() if i == u else c for i, c in enumerate(colluders))).describe()
    return CheckResult("constraint2", scen, f"rank={r}", f"rank={M.rows}", r == M.rows, f"{M.rows}x{M.cols}")


def constraint3_target(s: Scheme, colluders: Pattern) -> int:
    p = s.params
    return p.n1 - p.m + sum(len(c) * p.user_rows(u) for u, c in enumerate(colluders))


def constraint3_stack(s: Scheme, colluders: Pattern) -> Matrix:
    blocks = [s.relay.B1]
    for u, users in enumerate(colluders):
        blocks += _colluder_keys(s, u, users)
    return vstack(*blocks)


def check_constraint3(s: Scheme, colluders: Pattern) -> CheckResult:
    M = constraint3_stack(s, colluders)
    r, target = rank(M), constraint3_target(s, colluders)
    scen = AdversaryScenario(None, tuple(colluders)).describe()
    return CheckResult("constraint3", scen, f"rank={r}", f"rank={target}", r == target, f"{M.rows}x{M.cols}")


def first_constraint_failure(s: Scheme, caps: Caps = Caps()) -> CheckResult | None:
    """Constraints 1-3 at the declared collusion sizes; first failure or None."""
    r = check_constraint1(s)
    if not r.passed:
        return r
    for u in range(s.params.U):
        for t in collusion_tuples(s.params, caps, exclude=u):
            r = check_constraint2(s, u, t)
            if not r.passed:
                return r
    for t in collusion_tuples(s.params, caps):
        r = check_constraint3(s, t)
        if not r.passed:
            return r
    return None


# -- mutual information ----------------------------------------------------------


def linear_mi(view, target, cond) -> Fraction:
    """``I(view; target | cond)`` for linear images of a uniform vector, in log-q units."""
    A, B, C = _coeff(view), _coeff(target), _coeff(cond)
    if not A.cols == B.cols == C.cols:
        raise DimensionMismatch(f"column counts {A.cols}, {B.cols}, {C.cols}")
    return Fraction(rank(vstack(A, C)) + rank(vstack(B, C)) - rank(vstack(A, B, C)) - rank(C))


def server_security_mi(s: Scheme, colluders: Pattern, reading: str = "pieces") -> Fraction:
    cond = vstack(sum_view(s), colluder_view(s, colluders, reading))
    return linear_mi(server_view(s), gradient_view(s), cond)


def relay_security_mi(
    s: Scheme, u: int, colluders: Pattern, users: Sequence[int] | None = None, reading: str = "pieces"
) -> Fraction:
    """Leakage to relay ``u``; ``users`` restricts the view (default: the whole cluster)."""
    return linear_mi(relay_view(s, u, users), gradient_view(s), colluder_view(s, colluders, reading))


def server_mi_triple(s: Scheme, colluders: Pattern, reading: str = "pieces") -> tuple[Matrix, Matrix, Matrix]:
    return server_view(s), gradient_view(s), vstack(sum_view(s), colluder_view(s, colluders, reading))


def relay_mi_triple(s: Scheme, u: int, colluders: Pattern, users=None, reading: str = "pieces"):
    return relay_view(s, u, users), gradient_view(s), colluder_view(s, colluders, reading)


# -- counting oracle -----------------------------------------------------------------


def _relabel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense labels of the pair ``(a, b)``."""
    return np.unique(a * (int(b.max()) + 1) + b, return_inverse=True)[1].astype(np.int64).ravel()


def _image_labels(M: Matrix, q: int, n: int, total: int, block: int = 1 << 16) -> np.ndarray:
    """Label each ``x`` in ``F_q^n`` (mixed-radix order) by its image ``M x``."""
    if M.rows == 0:
        return np.zeros(total, dtype=np.int64)
    per = max(1, int(62 // math.log2(q)))
    chunks = [list(range(i, min(i + per, M.rows))) for i in range(0, M.rows, per)]
    weights = [np.array([q**t for t in range(len(c))], dtype=np.int64) for c in chunks]
    keys = [np.empty(total, dtype=np.int64) for _ in chunks]
    a = np.asarray(M.a, dtype=np.int64)
    radix = np.array([q**i for i in range(n)], dtype=np.int64)
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        digits = (idx[None, :] // radix[:, None]) % q
        img = _matmul(a, digits, q)
        for key, rows, w in zip(keys, chunks, weights):
            key[start:start + idx.size] = w @ img[rows]
    labels = np.unique(keys[0], return_inverse=True)[1].astype(np.int64).ravel()
    for key in keys[1:]:
        labels = _relabel(labels, key)
    return labels


def _log_q(ratio: Fraction, q: int) -> int:
    num, den, e = ratio.numerator, ratio.denominator, 0
    while num % q == 0 and num > 1:
        num //= q
        e += 1
    while den % q == 0 and den > 1:
        den //= q
        e -= 1
    if num != 1 or den != 1:
        raise HSecAggError(f"probability ratio {ratio} is not a power of {q}")
    return e


def exhaustive_mi(view, target, cond, budget: int = DEFAULT_BUDGET) -> Fraction:
    """``I(view; target | cond)`` by enumerating the whole input space."""
    A, B, C = _coeff(view), _coeff(target), _coeff(cond)
    if not A.cols == B.cols == C.cols:
        raise DimensionMismatch(f"column counts {A.cols}, {B.cols}, {C.cols}")
    q, n = A.field.q, A.cols
    if q**n > budget:
        raise BudgetExceeded(f"q^n = {q}^{n} exceeds enumeration budget {budget}")
    total = q**n
    a, b, c = (_image_labels(M, q, n, total) for M in (A, B, C))
    ac, bc = _relabel(a, c), _relabel(b, c)
    abc = _relabel(ac, b)
    cnt = {name: np.bincount(lab)[lab] for name, lab in (("abc", abc), ("c", c), ("ac", ac), ("bc", bc))}
    num = cnt["abc"] * cnt["c"]
    den = cnt["ac"] * cnt["bc"]
    pairs, mult = np.unique(np.stack([num, den]), axis=1, return_counts=True)
    acc = Fraction(0)
    for (nu, de), k in zip(pairs.T, mult):
        acc += Fraction(int(k), total) * _log_q(Fraction(int(nu), int(de)), q)
    return acc


def mi_battery(
    s: Scheme, rng: random.Random, n_random: int = 8, caps: Caps = Caps()
) -> list[tuple[str, Matrix, Matrix, Matrix]]:
    """Labelled ``(view, target, cond)`` triples for cross-checking the two MI calculators.

    Covers the server and relay leakage configurations at every collusion
    tuple (both colluder readings, with and without the colluders), single
    user messages, the key-free views, and random low-rank triples.
    """
    p = s.params
    out = []
    tuples = collusion_tuples(p, caps)
    none = tuple(frozenset() for _ in range(p.U))
    for t in [none] + tuples:
        for reading in READINGS:
            tag = f"{format_pattern(t)} {reading}"
            out.append((f"server {tag}", *server_mi_triple(s, t, reading)))
            for u in range(p.U):
                out.append((f"relay={u + 1} all {tag}", *relay_mi_triple(s, u, t, None, reading)))
                survivors = list(range(p.V[u] - p.s2[u]))
                out.append((f"relay={u + 1} survivors {tag}", *relay_mi_triple(s, u, t, survivors, reading)))
    for u, v in s.assignment.users():
        out.append((f"user=({u + 1},{v + 1})", s.user_coefficients(u, v), gradient_view(s), _empty(s)))
    keyfree = hstack(s.relay.F1, Matrix.zeros(s.field, s.relay.F1.rows, s.key_count))
    out.append(("server keys-zeroed", keyfree, gradient_view(s), sum_view(s)))
    for u in range(p.U):
        c = s.clusters[u]
        bare = vstack(*(c.block(v) @ hstack(c.F2, Matrix.zeros(s.field, c.F2.rows, s.key_count)) for v in range(p.V[u])))
        out.append((f"relay={u + 1} keys-zeroed", bare, gradient_view(s), _empty(s)))
    n = s.n_coords
    for i in range(n_random):
        a, b, c = (Matrix.random(s.field, rng.randint(0, 3), n, rng) for _ in range(3))
        out.append((f"random#{i + 1}", a, b, c))
    return out


# -- full audit ------------------------------------------------------------------------


def _structure_checks(s: Scheme, caps: Caps, report: AuditReport) -> None:
    a, p = s.assignment, s.params
    errs = relay_errors(s.relay, a, p)
    report.add(CheckResult("relay-structure", "S1,F,F1,B1", f"errors={len(errs)}", "errors=0", not errs, "; ".join(errs)))
    for cc in s.clusters:
        u = cc.u
        rows = list(s.relay.relay_rows(p, u))
        errs = []
        if cc.F2.submatrix(range(len(rows))) != s.relay.F1.submatrix(rows):
            errs.append("F2 task rows differ from F1")
        if cc.B2.submatrix(range(len(rows))) != s.relay.B1.submatrix(rows):
            errs.append("B2 task rows differ from B1")
        errs += user_encodability_errors(cc, a, p)
        if not _survivors_invertible(cc.S2, p, u, caps, random.Random(u)):
            errs.append("singular survivor stack")
        report.add(CheckResult("cluster-structure", f"cluster={u + 1}", f"errors={len(errs)}", "errors=0", not errs, "; ".join(errs)))


def audit_full(
    s: Scheme,
    caps: Caps = Caps(),
    *,
    oracle: bool = False,
    reading: str = "pieces",
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> AuditReport:
    """Structure, Constraints 1-3, zero leakage and decodability over all scenarios."""
    p = s.params
    rep = AuditReport()
    copts, dopts = collusion_options(p), dropout_options(p)
    rep.notes.append(
        f"collusion tuples: {'exhaustive' if is_exhaustive(copts, caps) else f'sampled {caps.sample}'};"
        f" dropout patterns: {'exhaustive' if is_exhaustive(dopts, caps) else f'sampled {caps.sample}'};"
        f" colluder inputs read as {reading}"
    )
    _structure_checks(s, caps, rep)
    rep.add(check_constraint1(s))
    for u in range(p.U):
        for t in collusion_tuples(p, caps, exclude=u):
            rep.add(check_constraint2(s, u, t))
    zero = Fraction(0)
    use_oracle = oracle and s.field.q ** s.n_coords <= budget
    if oracle and not use_oracle:
        rep.notes.append(f"oracle skipped: q^n = {s.field.q}^{s.n_coords} exceeds budget {budget}")
    for t in collusion_tuples(p, caps):
        rep.add(check_constraint3(s, t))
        scen = AdversaryScenario(None, t).describe()
        mi = server_security_mi(s, t, reading)
        rep.add(CheckResult("server-mi", scen, str(mi), "0", mi == zero))
        if use_oracle:
            ex = exhaustive_mi(*server_mi_triple(s, t, reading), budget=budget)
            rep.add(CheckResult("server-mi-oracle", scen, f"count={ex} rank={mi}", "equal", ex == mi))
        for u in range(p.U):
            scen = AdversaryScenario(u, t).describe()
            survivors = list(range(p.V[u] - p.s2[u]))
            for label, users in (("all", None), ("survivors", survivors)):
                mi = relay_security_mi(s, u, t, users, reading)
                rep.add(CheckResult(f"relay-mi-{label}", scen, str(mi), "0", mi == zero))
                if use_oracle:
                    ex = exhaustive_mi(*relay_mi_triple(s, u, t, users, reading), budget=budget)
                    rep.add(CheckResult(f"relay-mi-{label}-oracle", scen, f"count={ex} rank={mi}", "equal", ex == mi))
    rng = make_rng(seed)
    W, N = sample_inputs(s, 1, rng)
    base = None
    for pattern in dropout_patterns(p, caps):
        scen = f"dropouts={format_pattern(pattern)}"
        try:
            tr = simulate(s, W, N, pattern)
        except HSecAggError as e:
            rep.add(CheckResult("decode", scen, type(e).__name__, "sum", False, str(e)))
            continue
        rep.add(CheckResult("decode", scen, "ok" if tr.ok else "mismatch", "ok", tr.ok))
        ys = [y.tolist() for y in tr.Y]
        base = ys if base is None else base
        rep.add(CheckResult("dropout-invariance", scen, "same" if ys == base else "differs", "same", ys == base))
    return rep
