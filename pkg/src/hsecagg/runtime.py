"""One protocol round: inputs, user messages, relay aggregation, decoding.

Symbol vectors are the columns of a :class:`Matrix`: gradient pieces form a
``K*m x L'`` matrix in column-index order, keys a ``key_count x L'`` matrix,
and every message is a ``rows x L'`` matrix.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .builder import Scheme
from .errors import (
    EncodabilityViolation,
    MissingRelayMessage,
    NoInvertibleSubset,
    PreconditionError,
    Singular,
    TooFewSurvivors,
)
from .matrix import Matrix, inverse, vstack


@dataclass(frozen=True)
class GradientSet:
    pieces: Matrix  # row j*K + k holds W_{k,j}
    K: int
    m: int

    @property
    def lprime(self) -> int:
        return self.pieces.cols

    def piece(self, k: int, j: int) -> list[int]:
        return [int(x) for x in self.pieces.a[j * self.K + k]]

    def direct_sum(self) -> list[list[int]]:
        """Per-piece sum over datasets, by plain integer accumulation."""
        q = self.pieces.field.q
        out = []
        for j in range(self.m):
            acc = [0] * self.lprime
            for k in range(self.K):
                acc = [(x + y) % q for x, y in zip(acc, self.piece(k, j))]
            out.append(acc)
        return out


@dataclass(frozen=True)
class KeyMaterial:
    keys: Matrix  # key_count x L'


@dataclass
class Transcript:
    X: dict[tuple[int, int], Matrix]
    survivors: list[frozenset[int]]
    used: list[tuple[int, ...]]
    Y: list[Matrix]
    decoded: Matrix
    expected: list[list[int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.decoded.tolist() == self.expected

    def user_link_symbols(self) -> dict[tuple[int, int], int]:
        return {uv: x.rows * x.cols for uv, x in self.X.items()}

    def relay_link_symbols(self) -> list[int]:
        return [y.rows * y.cols for y in self.Y]


def sample_inputs(s: Scheme, lprime: int, rng: random.Random) -> tuple[GradientSet, KeyMaterial]:
    """Uniform gradient pieces, then uniform keys, from consecutive stream positions."""
    if lprime < 1:
        raise PreconditionError("L' must be at least 1")
    p = s.params
    W = Matrix.random(s.field, p.n_pieces, lprime, rng)
    N = Matrix.random(s.field, s.key_count, lprime, rng)
    return GradientSet(W, p.K, p.m), KeyMaterial(N)


def _wprime(W: GradientSet, N: KeyMaterial) -> Matrix:
    return vstack(W.pieces, N.keys)


def compute_user_message(s: Scheme, u: int, v: int, W: GradientSet, N: KeyMaterial) -> Matrix:
    coeff = s.user_coefficients(u, v)
    held = set(s.held_columns(u, v))
    foreign = [c for c in range(s.params.n_pieces) if c not in held]
    if not coeff.submatrix(None, foreign).is_zero():
        raise EncodabilityViolation(f"user ({u + 1},{v + 1}) has a coefficient on an unheld piece")
    return coeff @ _wprime(W, N)


def select_subset(s: Scheme, u: int, survivors: Sequence[int]) -> tuple[int, ...]:
    """Lexicographically smallest survivor subset with an invertible stack."""
    need = s.params.V[u] - s.params.s2[u]
    pool = sorted(survivors)
    if len(pool) < need:
        raise TooFewSurvivors(f"cluster {u + 1}: {len(pool)} survivors, need {need}")
    cc = s.clusters[u]
    for users in itertools.combinations(pool, need):
        if cc.stack(users).rank() == cc.stack(users).rows:
            return users
    raise NoInvertibleSubset(f"cluster {u + 1}: no invertible survivor stack among {pool}")


def relay_aggregate(s: Scheme, u: int, received: Mapping[int, Matrix], survivors: Sequence[int] | None = None) -> Matrix:
    """Recover ``[F2 | B2] W'`` from survivors and forward its task rows."""
    survivors = sorted(received if survivors is None else survivors)
    missing = [v for v in survivors if v not in received]
    if missing:
        raise PreconditionError(f"cluster {u + 1}: no message from survivors {[v + 1 for v in missing]}")
    users = select_subset(s, u, survivors)
    cc = s.clusters[u]
    try:
        t = inverse(cc.stack(users)) @ vstack(*(received[v] for v in users))
    except Singular as e:
        raise NoInvertibleSubset(str(e)) from e
    return t.row_block(0, s.params.relay_rows)


def server_decode(s: Scheme, Y: Sequence[Matrix] | Mapping[int, Matrix]) -> Matrix:
    """Apply the first ``m`` rows of ``S1^{-1}`` to the stacked relay messages."""
    p = s.params
    if isinstance(Y, Mapping):
        absent = [u for u in range(p.U) if u not in Y]
        if absent:
            raise MissingRelayMessage(f"relays {[u + 1 for u in absent]} sent nothing")
        Y = [Y[u] for u in range(p.U)]
    if len(Y) != p.U:
        raise MissingRelayMessage(f"expected {p.U} relay messages, got {len(Y)}")
    return inverse(s.relay.S1).row_block(0, p.m) @ vstack(*Y)


def simulate(
    s: Scheme, W: GradientSet, N: KeyMaterial, dropouts: Sequence[frozenset[int] | set[int]] | None = None
) -> Transcript:
    p = s.params
    dropouts = [frozenset(d) for d in (dropouts or [()] * p.U)]
    if len(dropouts) != p.U:
        raise PreconditionError(f"need one dropout set per cluster ({p.U})")
    for u, d in enumerate(dropouts):
        if any(not 0 <= v < p.V[u] for v in d):
            raise PreconditionError(f"cluster {u + 1}: unknown user in dropout set")
        if len(d) > p.s2[u]:
            raise TooFewSurvivors(
                f"cluster {u + 1}: {len(d)} dropouts exceed s2={p.s2[u]}"
                f" ({p.V[u] - len(d)} survivors < {p.V[u] - p.s2[u]})"
            )
    X, survivors, used, Y = {}, [], [], []
    for u in range(p.U):
        alive = frozenset(range(p.V[u])) - dropouts[u]
        received = {}
        for v in sorted(alive):
            X[(u, v)] = received[v] = compute_user_message(s, u, v, W, N)
        survivors.append(alive)
        used.append(select_subset(s, u, alive))
        Y.append(relay_aggregate(s, u, received, alive))
    decoded = server_decode(s, Y)
    return Transcript(X, survivors, used, Y, decoded, W.direct_sum())


def transcript_text(t: Transcript) -> str:
    """Line-oriented dump: one line per message, symbols space-separated."""
    lines = []
    for (u, v), x in sorted(t.X.items()):
        for i, row in enumerate(x.tolist()):
            lines.append(f"X {u + 1} {v + 1} {i + 1} : " + " ".join(map(str, row)))
    for u, (alive, sub) in enumerate(zip(t.survivors, t.used)):
        lines.append(
            f"survivors {u + 1} : " + " ".join(str(v + 1) for v in sorted(alive))
            + " ; used : " + " ".join(str(v + 1) for v in sub)
        )
    for u, y in enumerate(t.Y):
        for i, row in enumerate(y.tolist()):
            lines.append(f"Y {u + 1} {i + 1} : " + " ".join(map(str, row)))
    for j, row in enumerate(t.decoded.tolist()):
        lines.append(f"decoded {j + 1} : " + " ".join(map(str, row)))
    return "\n".join(lines) + "\n"


def transcript_dict(t: Transcript) -> dict:
    return {
        "X": [{"user": [u + 1, v + 1], "rows": x.tolist()} for (u, v), x in sorted(t.X.items())],
        "survivors": [sorted(v + 1 for v in a) for a in t.survivors],
        "used": [[v + 1 for v in sub] for sub in t.used],
        "Y": [y.tolist() for y in t.Y],
        "decoded": t.decoded.tolist(),
        "expected": t.expected,
        "ok": t.ok,
    }
