"""Enumeration of dropout patterns, survivor sets and collusion tuples.

A *tuple* holds one frozenset of 0-based user indices per cluster.  When the
full cartesian product is larger than ``Caps.exhaustive`` a uniform sample of
``Caps.sample`` distinct tuples is drawn instead.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .topology import DerivedParams

Pattern = tuple[frozenset[int], ...]


@dataclass(frozen=True)
class Caps:
    exhaustive: int = 10_000
    sample: int = 1_000


def subsets(n: int, sizes: Iterable[int]) -> list[frozenset[int]]:
    return [frozenset(c) for k in sizes for c in itertools.combinations(range(n), k)]


def product_count(options: Sequence[Sequence]) -> int:
    return math.prod(len(o) for o in options)


def bounded_product(options: Sequence[Sequence], caps: Caps, rng: random.Random | None = None) -> list[tuple]:
    """All combinations (one pick per slot) or a uniform sample of them."""
    total = product_count(options)
    if total <= caps.exhaustive:
        return list(itertools.product(*options))
    rng = rng or random.Random(0)
    picks = sorted(rng.sample(range(total), min(caps.sample, total)))
    out = []
    for idx in picks:
        combo = []
        for opt in reversed(options):
            idx, r = divmod(idx, len(opt))
            combo.append(opt[r])
        out.append(tuple(reversed(combo)))
    return out


def is_exhaustive(options: Sequence[Sequence], caps: Caps) -> bool:
    return product_count(options) <= caps.exhaustive


def collusion_options(p: DerivedParams, exclude: int | None = None, exact: bool = True) -> list[list[frozenset[int]]]:
    """Per-cluster colluder sets: of size exactly ``T[u]`` (or up to it)."""
    opts = []
    for u in range(p.U):
        if u == exclude:
            opts.append([frozenset()])
        else:
            sizes = [p.T[u]] if exact else range(p.T[u] + 1)
            opts.append(subsets(p.V[u], sizes))
    return opts


def collusion_tuples(p: DerivedParams, caps: Caps = Caps(), rng=None, exclude: int | None = None) -> list[Pattern]:
    return bounded_product(collusion_options(p, exclude), caps, rng)


def dropout_options(p: DerivedParams) -> list[list[frozenset[int]]]:
    return [subsets(p.V[u], range(p.s2[u] + 1)) for u in range(p.U)]


def dropout_patterns(p: DerivedParams, caps: Caps = Caps(), rng=None) -> list[Pattern]:
    """Admissible dropout patterns: at most ``s2[u]`` users missing per cluster."""
    return bounded_product(dropout_options(p), caps, rng)


def survivor_sets(n_users: int, n_keep: int) -> Iterable[tuple[int, ...]]:
    return itertools.combinations(range(n_users), n_keep)


def format_pattern(pattern: Pattern) -> str:
    """1-based rendering, e.g. ``{}|{2,4}``."""
    return "|".join("{" + ",".join(str(v + 1) for v in sorted(s)) + "}" for s in pattern)
