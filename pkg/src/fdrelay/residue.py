"""Finite residue fields F_q and the Euler-criterion non-square witness.

F_{p^f} is realized as F_p[t]/(m(t)) for a monic irreducible ``m``.  For
F_{11^3} the modulus is fixed to t^3 - t - 4; other extension fields use the
lexicographically first monic irreducible of the required degree.
"""

from __future__ import annotations

import functools
import itertools
from typing import Sequence

__all__ = [
    "ResidueField",
    "prime_power",
    "is_irreducible",
    "residue_field",
    "residue_nonsquare_witness",
    "F11_CUBED_MODULUS",
]

# t^3 - t - 4 over F_11, coefficients from the constant term upward
F11_CUBED_MODULUS = (7, 10, 0, 1)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


def prime_power(q: int) -> tuple[int, int]:
    """Return ``(p, f)`` with ``q == p**f``; raises ``ValueError`` otherwise."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    for p in range(2, q + 1):
        if q % p == 0:
            break
    f, r = 0, q
    while r % p == 0:
        r //= p
        f += 1
    if r != 1 or not _is_prime(p):
        raise ValueError(f"{q} is not a prime power")
    return p, f


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _polymod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    inv_lead = pow(m[-1], -1, p)
    while len(a) >= len(m):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(m)
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _trim(a)
    return a


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Brute-force irreducibility over F_p: no monic factor of degree <= deg/2."""
    deg = len(poly) - 1
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _polymod(poly, list(low) + [1], p):
                return False
    return True


def _first_irreducible(p: int, f: int) -> tuple[int, ...]:
    for low in itertools.product(range(p), repeat=f):
        cand = tuple(low) + (1,)
        if cand[0] and is_irreducible(cand, p):
            return cand
    raise ArithmeticError(f"no irreducible polynomial of degree {f} over F_{p}")


class ResidueField:
    """The field with ``p**f`` elements; elements are coefficient tuples of length ``f``."""

    def __init__(self, p: int, f: int, modulus: Sequence[int] | None = None):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p, self.f, self.q = p, f, p**f
        if f == 1:
            self.modulus = (0, 1)
        else:
            self.modulus = tuple(modulus) if modulus is not None else _first_irreducible(p, f)
            if len(self.modulus) != f + 1 or self.modulus[-1] % p != 1:
                raise ValueError("modulus must be monic of degree f")
            if not is_irreducible(self.modulus, p):
                raise ValueError(f"modulus {self.modulus} is reducible over F_{p}")

    def element(self, coeffs: Sequence[int]) -> tuple[int, ...]:
        red = _polymod(list(coeffs), self.modulus, self.p) if self.f > 1 else [coeffs[0] % self.p]
        return tuple(red + [0] * (self.f - len(red)))

    def from_int(self, n: int) -> tuple[int, ...]:
        return self.element([n])

    @property
    def one(self) -> tuple[int, ...]:
        return self.from_int(1)

    @property
    def zero(self) -> tuple[int, ...]:
        return self.from_int(0)

    def mul(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        prod = [0] * (2 * self.f - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return self.element(prod)

    def pow(self, a: Sequence[int], n: int) -> tuple[int, ...]:
        result, base = self.one, tuple(a)
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def elements(self):
        return (tuple(c) for c in itertools.product(range(self.p), repeat=self.f))


@functools.lru_cache(maxsize=None)
def residue_field(q: int) -> ResidueField:
    p, f = prime_power(q)
    if (p, f) == (11, 3):
        return ResidueField(11, 3, F11_CUBED_MODULUS)
    return ResidueField(p, f)


def residue_nonsquare_witness(q: int, gamma: int) -> bool:
    """True iff the integer residue ``gamma`` is a non-square in F_q (Euler criterion)."""
    p, _ = prime_power(q)
    if p == 2:
        raise ValueError("q must be a power of an odd prime")
    if gamma % p == 0:
        raise ValueError("gamma must be a nonzero residue")
    field = residue_field(q)
    return field.pow(field.from_int(gamma), (q - 1) // 2) != field.one


if not is_irreducible(F11_CUBED_MODULUS, 11):  # pragma: no cover - startup guard
    raise ImportError("t^3 - t - 4 is not irreducible over F_11")
