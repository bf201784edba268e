"""Prime-field arithmetic.

Field elements are plain Python ints kept in ``[0, q)``; a :class:`Field`
carries the modulus and performs the reductions.  Randomness comes from
:class:`random.Random` (Mersenne Twister), whose ``randrange`` output for a
given seed has been stable across CPython releases since 3.2, so schemes built
from a seed are reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DenominatorVanishes, DivisionByZero, NonPrimeModulus

DEFAULT_Q = 2**31 - 1

# Deterministic Miller-Rabin witnesses: correct for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def make_rng(seed: int | None) -> random.Random:
    return random.Random(seed)


@dataclass(frozen=True)
class Field:
    """The prime field F_q."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 2 or not is_prime(self.q):
            raise NonPrimeModulus(f"q={self.q!r} is not prime")

    def __repr__(self):
        return f"GF({self.q})"

    def __call__(self, x: int) -> int:
        return x % self.q

    # int64 numpy arithmetic is exact while (q-1)^2 fits below 2^62
    @property
    def small(self) -> bool:
        return self.q < 2**31

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise DivisionByZero(f"0 has no inverse in GF({self.q})")
        return pow(a, -1, self.q)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.q

    def arith(self, a: int, b: int, op: str) -> int:
        try:
            fn = {"add": self.add, "sub": self.sub, "mul": self.mul, "div": self.div}[op]
        except KeyError:
            raise ValueError(f"unknown operation {op!r}") from None
        return fn(a, b)

    def from_rational(self, num: int | Fraction, den: int = 1) -> int:
        """Embed ``num/den`` into the field."""
        if isinstance(num, Fraction):
            num, den = num.numerator, num.denominator * den
        if den % self.q == 0:
            raise DenominatorVanishes(f"denominator {den} vanishes mod {self.q}")
        return num % self.q * pow(den % self.q, -1, self.q) % self.q

    def sample(self, rng: random.Random) -> int:
        return rng.randrange(self.q)


def field_new(q: int) -> Field:
    return Field(q)


def from_rational(num: int, den: int, field: Field) -> int:
    return field.from_rational(num, den)


def sample_uniform(field: Field, rng: random.Random) -> int:
    return field.sample(rng)
