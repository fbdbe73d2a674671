"""Exact arithmetic in the small abelian number fields used by the relay codes.

Every supported field is a compositum of linearly disjoint pieces, each
generated by a root of unity or a square root.  An element is stored as a
vector of rational coordinates over the product basis of generator powers
(integer numerators plus one shared positive denominator), so products and
automorphisms stay exact.  Numeric values come from complex embeddings in
double precision.
"""

from __future__ import annotations

import cmath
import enum
import functools
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldId",
    "Generator",
    "Automorphism",
    "NumberFieldSpec",
    "FieldElement",
    "make_field",
    "embed",
    "apply_auto",
    "algebraic_norm",
    "automorphism_order",
    "residue_nonsquare_witness",
]


class FieldId(str, enum.Enum):
    Q_I = "Q(i)"
    Q_ZETA7 = "Q(zeta7)"
    Q_I_ZETA7 = "Q(i,zeta7)"
    Q_ZETA8 = "Q(zeta8)"
    Q_ZETA8_SQRT5 = "Q(zeta8,sqrt5)"
    Q_I_SQRT31_SQRT5 = "Q(i,sqrt31,sqrt5)"


@dataclass(frozen=True)
class Generator:
    """A field generator: either a primitive ``n``-th root of unity or ``sqrt(m)``."""

    name: str
    kind: str  # "root" or "sqrt"
    param: int

    @property
    def minpoly(self) -> tuple[int, ...]:
        """Monic minimal polynomial, coefficients from constant term upward."""
        if self.kind == "sqrt":
            return (-self.param, 0, 1)
        return tuple(int(c) for c in _cyclotomic(self.param))

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    @property
    def value(self) -> complex:
        if self.kind == "sqrt":
            return complex(math.sqrt(self.param))
        return cmath.exp(2j * math.pi / self.param)

    def conjugates(self) -> list[int]:
        """Admissible images: exponents ``k`` (root) or signs (sqrt)."""
        if self.kind == "sqrt":
            return [1, -1]
        return [k for k in range(1, self.param) if math.gcd(k, self.param) == 1]


def _polydiv_exact(a: list[int], b: Sequence[int]) -> list[int]:
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        for j, y in enumerate(b):
            a[i + j] -= c * y
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return q


@functools.lru_cache(maxsize=None)
def _cyclotomic(n: int) -> tuple[int, ...]:
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly = _polydiv_exact(poly, _cyclotomic(d))
    return tuple(poly)


def _power_table(gen: Generator, top: int) -> list[list[int]]:
    """Coordinates of ``gen**p`` over ``1, gen, ..., gen**(deg-1)`` for ``p <= top``."""
    mp = gen.minpoly
    deg = gen.degree
    rows = []
    cur = [1] + [0] * (deg - 1)
    for _ in range(top + 1):
        rows.append(cur)
        # multiply by x and reduce with the monic minimal polynomial
        lead = cur[-1]
        nxt = [0] + cur[:-1]
        if lead:
            nxt = [c - lead * m for c, m in zip(nxt, mp[:-1])]
        cur = nxt
    return rows


@dataclass(frozen=True)
class Automorphism:
    name: str
    images: tuple[int, ...]  # exponent or sign, one per generator
    matrix: np.ndarray  # integer (object) matrix acting on coordinate columns

    def __hash__(self) -> int:
        return hash((self.name, self.images))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Automorphism) and self.images == other.images


_NAMED_IMAGES: dict[FieldId, dict[str, dict[str, int]]] = {
    FieldId.Q_I: {"conj": {"i": 3}, "sigma": {"i": 3}},
    FieldId.Q_ZETA7: {"tau": {"zeta7": 2}, "conj": {"zeta7": 6}},
    FieldId.Q_I_ZETA7: {
        "tau": {"zeta7": 2},
        "sigma": {"i": 3},
        "conj": {"i": 3, "zeta7": 6},
    },
    FieldId.Q_ZETA8: {
        "tau": {"zeta8": 5},
        "conj": {"zeta8": 7},
        "tau_conj": {"zeta8": 3},
    },
    FieldId.Q_ZETA8_SQRT5: {
        "tau": {"zeta8": 5},
        "r": {"sqrt5": -1},
        "tau_r": {"zeta8": 5, "sqrt5": -1},
        "conj": {"zeta8": 7},
    },
    FieldId.Q_I_SQRT31_SQRT5: {
        "sigma": {"sqrt5": -1},
        "tau": {"sqrt31": -1},
        "conj": {"i": 3},
    },
}

_GENERATORS: dict[FieldId, tuple[Generator, ...]] = {
    FieldId.Q_I: (Generator("i", "root", 4),),
    FieldId.Q_ZETA7: (Generator("zeta7", "root", 7),),
    FieldId.Q_I_ZETA7: (Generator("zeta7", "root", 7), Generator("i", "root", 4)),
    FieldId.Q_ZETA8: (Generator("zeta8", "root", 8),),
    FieldId.Q_ZETA8_SQRT5: (Generator("zeta8", "root", 8), Generator("sqrt5", "sqrt", 5)),
    FieldId.Q_I_SQRT31_SQRT5: (
        Generator("i", "root", 4),
        Generator("sqrt31", "sqrt", 31),
        Generator("sqrt5", "sqrt", 5),
    ),
}


class NumberFieldSpec:
    """One of the six supported fields, with structure constants and Galois group.

    The basis is the set of monomials ``prod(gen_j ** e_j)`` with
    ``0 <= e_j < deg(gen_j)``; the first generator varies slowest.
    """

    def __init__(self, field_id: FieldId):
        self.id = FieldId(field_id)
        self.generators = _GENERATORS[self.id]
        self._degs = [g.degree for g in self.generators]
        self.degree = int(np.prod(self._degs))
        self._exponents = list(itertools.product(*(range(d) for d in self._degs)))
        self.basis = tuple(self._monomial_name(e) for e in self._exponents)
        self._mult = self._structure_constants()
        self._basis_values = np.array(
            [
                np.prod([g.value ** e for g, e in zip(self.generators, exps)])
                for exps in self._exponents
            ],
            dtype=complex,
        )
        self.galois_group = tuple(self._build_group())
        self.automorphisms = {"id": self._identity()}
        for name, imgs in _NAMED_IMAGES[self.id].items():
            key = tuple(imgs.get(g.name, 1) for g in self.generators)
            self.automorphisms[name] = next(
                Automorphism(name, a.images, a.matrix) for a in self.galois_group if a.images == key
            )
        self._check_closure()

    def __repr__(self) -> str:
        return f"NumberFieldSpec({self.id.value}, degree={self.degree})"

    # -- construction helpers -------------------------------------------------

    def _monomial_name(self, exps: Sequence[int]) -> str:
        parts = []
        for g, e in zip(self.generators, exps):
            if e == 1:
                parts.append(g.name)
            elif e > 1:
                parts.append(f"{g.name}^{e}")
        return "*".join(parts) or "1"

    def _index(self, exps: Sequence[int]) -> int:
        idx = 0
        for e, d in zip(exps, self._degs):
            idx = idx * d + e
        return idx

    def _monomial_product(self, powers: Sequence[int]) -> np.ndarray:
        """Coordinates of ``prod(gen_j ** p_j)`` for arbitrary nonnegative powers."""
        tables = [_power_table(g, p) for g, p in zip(self.generators, powers)]
        out = np.zeros(self.degree, dtype=object)
        out[:] = 0
        per_gen = [t[p] for t, p in zip(tables, powers)]
        for exps in itertools.product(*(range(d) for d in self._degs)):
            c = 1
            for row, e in zip(per_gen, exps):
                c *= row[e]
                if not c:
                    break
            if c:
                out[self._index(exps)] += c
        return out

    def _structure_constants(self) -> np.ndarray:
        d = self.degree
        table = np.zeros((d, d, d), dtype=object)
        table[...] = 0
        for i, ei in enumerate(self._exponents):
            for j, ej in enumerate(self._exponents):
                table[i, j] = self._monomial_product([a + b for a, b in zip(ei, ej)])
        return table.reshape(d * d, d)

    def _image_matrix(self, images: Sequence[int]) -> np.ndarray:
        d = self.degree
        # image of each generator as a coordinate vector
        gen_imgs = []
        for pos, (g, img) in enumerate(zip(self.generators, images)):
            powers = [0] * len(self.generators)
            if g.kind == "sqrt":
                powers[pos] = 1
                vec = self._monomial_product(powers) * img
            else:
                powers[pos] = img
                vec = self._monomial_product(powers)
            gen_imgs.append(vec)
        mat = np.zeros((d, d), dtype=object)
        mat[...] = 0
        for col, exps in enumerate(self._exponents):
            vec = self._unit(0)
            for gi, e in zip(gen_imgs, exps):
                for _ in range(e):
                    vec = self._mul_raw(vec, gi)
            mat[:, col] = vec
        return mat

    def _unit(self, idx: int) -> np.ndarray:
        v = np.zeros(self.degree, dtype=object)
        v[:] = 0
        v[idx] = 1
        return v

    def _mul_raw(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        outer = np.multiply.outer(a, b).reshape(-1)
        return outer.dot(self._mult)

    def _identity(self) -> Automorphism:
        return next(a for a in self.galois_group if all(x == 1 for x in a.images))

    def _build_group(self) -> Iterable[Automorphism]:
        for images in itertools.product(*(g.conjugates() for g in self.generators)):
            name = ",".join(
                f"{g.name}->{'-' if img == -1 else ''}{g.name}"
                if g.kind == "sqrt"
                else f"{g.name}->{g.name}^{img}"
                for g, img in zip(self.generators, images)
            )
            if all(x == 1 for x in images):
                name = "id"
            yield Automorphism(name, images, self._image_matrix(images))

    def _check_closure(self) -> None:
        for auto in self.galois_group:
            if not all(isinstance(v, int) for v in auto.matrix.flat):
                raise ArithmeticError(f"{auto.name} does not map the basis integrally")
        # homomorphism on generators' basis products
        for auto in self.automorphisms.values():
            for i in range(self.degree):
                for j in range(i, self.degree):
                    lhs = auto.matrix.dot(self._mul_raw(self._unit(i), self._unit(j)))
                    rhs = self._mul_raw(auto.matrix[:, i], auto.matrix[:, j])
                    if any(x != y for x, y in zip(lhs, rhs)):
                        raise ArithmeticError(f"{auto.name} is not multiplicative on {self.id.value}")

    # -- public helpers ------------------------------------------------------

    def element(self, coords: Sequence) -> "FieldElement":
        return FieldElement(self, coords)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(self, [0] * self.degree)

    @property
    def one(self) -> "FieldElement":
        return self.from_rational(1)

    def from_rational(self, q) -> "FieldElement":
        coords = [0] * self.degree
        coords[0] = q
        return FieldElement(self, coords)

    def gen(self, name: str) -> "FieldElement":
        """The named generator, e.g. ``"zeta7"`` or ``"sqrt5"``."""
        for pos, g in enumerate(self.generators):
            if g.name == name:
                exps = [0] * len(self.generators)
                exps[pos] = 1
                return FieldElement(self, self._unit(self._index(exps)))
        raise KeyError(f"{self.id.value} has no generator {name!r}")

    def embedding_names(self) -> list[str]:
        return ["principal"] + [a.name for a in self.galois_group if a.name != "id"] + list(
            n for n in self.automorphisms if n != "id"
        )

    def automorphism(self, name: str) -> Automorphism:
        if name in self.automorphisms:
            return self.automorphisms[name]
        for a in self.galois_group:
            if a.name == name:
                return a
        raise KeyError(f"unknown automorphism {name!r} for {self.id.value}")

    def to_json(self) -> str:
        return json.dumps({"id": self.id.value, "degree": self.degree, "basis": list(self.basis)})


@functools.lru_cache(maxsize=None)
def make_field(field_id: FieldId | str) -> NumberFieldSpec:
    """Build (and cache) a supported field; raises ``ValueError`` otherwise."""
    try:
        fid = FieldId(field_id)
    except ValueError:
        raise ValueError(f"unsupported field {field_id!r}") from None
    return NumberFieldSpec(fid)


class FieldElement:
    """Immutable exact element of a supported field."""

    __slots__ = ("field", "_num", "_den")

    def __init__(self, field: NumberFieldSpec, coords: Sequence, _den: int | None = None):
        self.field = field
        if _den is not None:
            num, den = list(coords), _den
        else:
            fr = [Fraction(c) for c in coords]
            if len(fr) != field.degree:
                raise ValueError(f"expected {field.degree} coordinates, got {len(fr)}")
            den = math.lcm(*(f.denominator for f in fr)) if fr else 1
            num = [f.numerator * (den // f.denominator) for f in fr]
        g = math.gcd(den, *num)
        if g > 1:
            num = [n // g for n in num]
            den //= g
        arr = np.empty(field.degree, dtype=object)
        arr[:] = [int(n) for n in num]
        self._num = arr
        self._den = int(den)

    @classmethod
    def _raw(cls, field: NumberFieldSpec, num: np.ndarray, den: int) -> "FieldElement":
        return cls(field, num, _den=den)

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(int(n), self._den) for n in self._num)

    @property
    def is_integral_coords(self) -> bool:
        return self._den == 1

    def is_zero(self) -> bool:
        return not any(self._num)

    def is_rational(self) -> bool:
        return not any(self._num[1:])

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is not rational")
        return Fraction(int(self._num[0]), self._den)

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise TypeError(f"field mismatch: {self.field.id.value} vs {other.field.id.value}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        den = self._den * o._den // math.gcd(self._den, o._den)
        num = self._num * (den // self._den) + o._num * (den // o._den)
        return FieldElement._raw(self.field, num, den)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement._raw(self.field, -self._num, self._den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            return FieldElement._raw(self.field, self._num * q.numerator, self._den * q.denominator)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        num = self.field._mul_raw(self._num, o._num)
        return FieldElement._raw(self.field, num, self._den * o._den)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        result, base = self.field.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.field.from_rational(other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        return (
            self.field is other.field
            and self._den == other._den
            and all(a == b for a, b in zip(self._num, other._num))
        )

    def __hash__(self) -> int:
        return hash((self.field.id, self._den, tuple(self._num)))

    def __repr__(self) -> str:
        terms = []
        for c, b in zip(self.coords, self.field.basis):
            if c:
                terms.append(f"{c}" if b == "1" else f"{c}*{b}")
        return f"FieldElement({self.field.id.value}: {' + '.join(terms) or '0'})"

    def __complex__(self) -> complex:
        return embed(self)


def embed(x: FieldElement, emb: str = "principal") -> complex:
    """Numeric value of ``x`` under a complex embedding.

    ``"principal"`` sends roots of unity to ``exp(2*pi*i/n)`` and square
    roots to the positive real root; any automorphism name gives the
    principal embedding composed with that automorphism.
    """
    field = x.field
    if emb != "principal":
        try:
            x = apply_auto(x, emb)
        except KeyError:
            raise ValueError(f"embedding {emb!r} is not defined for {field.id.value}") from None
    vals = np.array([float(Fraction(int(n), x._den)) for n in x._num])
    return complex(vals.dot(field._basis_values))


def apply_auto(x: FieldElement, auto: str) -> FieldElement:
    """Exact image of ``x`` under a named automorphism of its field."""
    a = x.field.automorphism(auto)
    return FieldElement._raw(x.field, a.matrix.dot(x._num), x._den)


def algebraic_norm(x: FieldElement) -> Fraction:
    """Absolute norm down to Q: the product of all Galois conjugates."""
    field = x.field
    prod = field.one
    for a in field.galois_group:
        prod = prod * FieldElement._raw(field, a.matrix.dot(x._num), x._den)
    return prod.to_rational()


def automorphism_order(field: NumberFieldSpec, auto: str) -> int:
    a = field.automorphism(auto)
    d = field.degree
    ident = np.eye(d, dtype=int).astype(object)
    power = a.matrix
    n = 1
    while not np.array_equal(power, ident):
        power = power.dot(a.matrix)
        n += 1
    return n


from .residue import residue_nonsquare_witness  # noqa: E402  re-exported
