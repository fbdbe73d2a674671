"""The four explicit relay code constructions and determinant checks.

Codes are lists of complex generator matrices ``B_1..B_k`` (``n_t x T``);
a codeword is ``sum(g_i * B_i)`` for an integer symbol vector ``g``.  Each
built-in code also carries exact generators (field elements times a fixed
real radical per matrix position) so determinants can be checked exactly.

Generator orderings are part of the contract: the fast-decoding structure
depends on them.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .numfield import FieldElement, FieldId, apply_auto, embed, make_field
from .partition import GroupPartition, PartitionError
from .residue import residue_nonsquare_witness

__all__ = [
    "CodeDefinition",
    "ExactMatrix",
    "MinDetReport",
    "CodeFormatError",
    "SearchGuardError",
    "UnsupportedCodeError",
    "CODE_NAMES",
    "build_c1",
    "build_c2",
    "build_c3",
    "build_c4",
    "get_code",
    "encode",
    "exact_codeword",
    "exact_block_det",
    "c3_element",
    "c4_element",
    "det_gram",
    "min_det_search",
    "nvd_residue_certificate",
    "pam_alphabet",
    "code_to_dict",
    "code_from_dict",
    "load_code",
]

CODE_NAMES = ("C1", "C2", "C3", "C4")
SEARCH_GUARD = 10**7


class CodeFormatError(ValueError):
    pass


class SearchGuardError(ValueError):
    pass


class UnsupportedCodeError(ValueError):
    pass


def pam_alphabet(s: int) -> tuple[int, ...]:
    """Symmetric odd-integer PAM set ``{±1, ±3, ..., ±(s-1)}``."""
    if s < 2 or s % 2:
        raise ValueError(f"PAM size must be a positive even integer, got {s}")
    return tuple(range(-(s - 1), s, 2))


@dataclass(frozen=True)
class ExactMatrix:
    """Matrix whose ``(r, c)`` entry is ``entries[r][c] * sqrt(radicals[r][c])``."""

    entries: tuple[tuple[FieldElement, ...], ...]
    radicals: tuple[tuple[int, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    def to_complex(self, emb: str = "principal") -> np.ndarray:
        out = np.empty(self.shape, dtype=complex)
        for r, row in enumerate(self.entries):
            for c, x in enumerate(row):
                out[r, c] = embed(x, emb) * math.sqrt(self.radicals[r][c])
        return out

    def map(self, fn) -> "ExactMatrix":
        return ExactMatrix(tuple(tuple(fn(x) for x in row) for row in self.entries), self.radicals)

    def apply_auto(self, name: str) -> "ExactMatrix":
        return self.map(lambda x: apply_auto(x, name))

    def scale(self, c) -> "ExactMatrix":
        return self.map(lambda x: x * c)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.radicals != other.radicals:
            raise ValueError("radical patterns differ")
        rows = tuple(
            tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)
        )
        return ExactMatrix(rows, self.radicals)


def _exact(rows, radicals) -> ExactMatrix:
    return ExactMatrix(tuple(tuple(r) for r in rows), tuple(tuple(r) for r in radicals))


def _block_diag(blocks: Sequence[ExactMatrix]) -> ExactMatrix:
    zero = blocks[0].entries[0][0].field.zero
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    rows = [[zero] * m for _ in range(n)]
    rads = [[1] * m for _ in range(n)]
    r0 = c0 = 0
    for b in blocks:
        h, w = b.shape
        for r in range(h):
            for c in range(w):
                rows[r0 + r][c0 + c] = b.entries[r][c]
                rads[r0 + r][c0 + c] = b.radicals[r][c]
        r0, c0 = r0 + h, c0 + w
    return _exact(rows, rads)


@dataclass(frozen=True)
class CodeDefinition:
    name: str
    n_t: int
    T: int
    generators: tuple[np.ndarray, ...]
    declared_partition: GroupPartition | None = None
    exact_generators: tuple[ExactMatrix, ...] | None = None
    field_id: FieldId | None = None
    n_r: int = 1
    delta_size: int | None = None
    claimed_exponent: int | None = None
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        gens = []
        for g in self.generators:
            a = np.array(g, dtype=complex)
            if a.shape != (self.n_t, self.T):
                raise CodeFormatError(f"generator of shape {a.shape}, expected {(self.n_t, self.T)}")
            a.setflags(write=False)
            gens.append(a)
        object.__setattr__(self, "generators", tuple(gens))
        if self.declared_partition is not None:
            self.declared_partition.validate(len(gens))

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.T)

    @property
    def stack(self) -> np.ndarray:
        return np.stack(self.generators)

    def permuted(self, order: Sequence[int]) -> "CodeDefinition":
        """Same code with generators reordered; declared structure is dropped."""
        order = list(order)
        if sorted(order) != list(range(self.k)):
            raise ValueError("ordering is not a permutation")
        return CodeDefinition(
            name=self.name,
            n_t=self.n_t,
            T=self.T,
            generators=tuple(self.generators[i] for i in order),
            n_r=self.n_r,
        )


# -- C1: 6x6 over Q(i, zeta7), three Galois blocks ----------------------------


def _c1_exact() -> list[ExactMatrix]:
    L = make_field(FieldId.Q_I_ZETA7)
    one, zero = L.one, L.zero
    i, z = L.gen("i"), L.gen("zeta7")
    real_basis = [one, z + z**6, z**2 + z**5]
    sqrt_m7 = 1 + 2 * (z + z**2 + z**4)
    rad = [[1, 11], [11, 1]]
    quats = [
        _exact([[one, zero], [zero, one]], rad),
        _exact([[i, zero], [zero, -i]], rad),
        _exact([[zero, i], [i, zero]], rad),
        _exact([[zero, -one], [one, zero]], rad),
    ]
    out = []
    for scale in (one, sqrt_m7):
        for q in quats:
            for r in real_basis:
                x = q.scale(r * scale)
                out.append(_block_diag([x, x.apply_auto("tau"), x.apply_auto("tau").apply_auto("tau")]))
    return out


@functools.lru_cache(maxsize=None)
def build_c1() -> CodeDefinition:
    """Rank-24 6x6 code; generators ordered Γ_{1,1}, Γ_{1,2}, ..., Γ_{8,3}."""
    exact = _c1_exact()
    groups = [tuple(range(3 * i, 3 * i + 3)) for i in range(4)]
    return CodeDefinition(
        name="C1",
        n_t=6,
        T=6,
        generators=tuple(e.to_complex() for e in exact),
        declared_partition=GroupPartition.make(groups, range(12, 24)),
        exact_generators=tuple(exact),
        field_id=FieldId.Q_I_ZETA7,
        n_r=2,
        claimed_exponent=15,
        labels=tuple(f"G{i},{j}" for i in range(1, 9) for j in range(1, 4)),
    )


# -- C2: 4x4 over Q(i, sqrt31, sqrt5), two Galois blocks ----------------------


def _c2_exact() -> list[ExactMatrix]:
    F = make_field(FieldId.Q_I_SQRT31_SQRT5)
    one, zero = F.one, F.zero
    i, s31, s5 = F.gen("i"), F.gen("sqrt31"), F.gen("sqrt5")
    rad = [[1, 2], [2, 1]]
    # anti-Hermitian pure quaternions: c = i*sqrt5, d = i*sqrt5, d = 1
    quats = [
        _exact([[one, zero], [zero, one]], rad),
        _exact([[i * s5, zero], [zero, -i * s5]], rad),
        _exact([[zero, i * s5], [i * s5, zero]], rad),
        _exact([[zero, -one], [one, zero]], rad),
    ]
    out = []
    for scale in (one, i):
        for q in quats:
            for r in (one, s31):
                x = q.scale(r * scale)
                out.append(_block_diag([x, x.apply_auto("tau")]))
    return out


@functools.lru_cache(maxsize=None)
def build_c2() -> CodeDefinition:
    """Rank-16 4x4 code; Γ_{1,1}, Γ_{1,2}, ..., Γ_{4,2} then their i-multiples."""
    exact = _c2_exact()
    groups = [(2 * i, 2 * i + 1) for i in range(4)]
    return CodeDefinition(
        name="C2",
        n_t=4,
        T=4,
        generators=tuple(e.to_complex() for e in exact),
        declared_partition=GroupPartition.make(groups, range(8, 16)),
        exact_generators=tuple(exact),
        field_id=FieldId.Q_I_SQRT31_SQRT5,
        n_r=2,
        claimed_exponent=10,
        labels=tuple(
            f"{p}G{i},{j}" for p in ("", "i") for i in range(1, 5) for j in (1, 2)
        ),
    )


# -- C3 / C4: 4x2 less-than-minimum-delay codes -------------------------------


def _lmd_matrix(top: FieldElement, second: FieldElement, third: FieldElement, fourth: FieldElement):
    zero = top.field.zero
    return _exact(
        [[top, zero], [second, zero], [zero, third], [zero, fourth]],
        [[1, 1]] * 4,
    )


def c3_element(g: Sequence[int]) -> FieldElement:
    """``x = a_1 + a_2 zeta8`` for the C3 symbol vector ``g = (Re a_1, Im a_1, Re a_2, Im a_2)``."""
    F = make_field(FieldId.Q_ZETA8)
    z = F.gen("zeta8")
    basis = [F.one, z**2, z, z**3]
    out = F.zero
    for gi, b in zip(g, basis):
        out = out + b * int(gi)
    return out


@functools.lru_cache(maxsize=None)
def build_c3() -> CodeDefinition:
    """Rate-2 rank-4 code over Q(zeta8), ordered X(1,0), X(i,0), X(0,1), X(0,i)."""
    exact = []
    for j in range(4):
        x = c3_element([int(j == m) for m in range(4)])
        tx = apply_auto(x, "tau")
        exact.append(_lmd_matrix(x, apply_auto(x, "conj"), tx, apply_auto(tx, "conj")))
    return CodeDefinition(
        name="C3",
        n_t=4,
        T=2,
        generators=tuple(e.to_complex() for e in exact),
        exact_generators=tuple(exact),
        field_id=FieldId.Q_ZETA8,
        n_r=1,
        delta_size=2,
        claimed_exponent=3,
        labels=("X(1,0)", "X(i,0)", "X(0,1)", "X(0,i)"),
    )


def c4_element(g: Sequence[int]) -> FieldElement:
    """``nu * x`` with ``x = a_1 + a_2 zeta8 + a_3 theta + a_4 zeta8 theta``; ``g`` interleaves Re/Im."""
    F = make_field(FieldId.Q_ZETA8_SQRT5)
    z, s5 = F.gen("zeta8"), F.gen("sqrt5")
    i = z**2
    theta = (1 + s5) * Fraction(1, 2)
    nu = 1 + i - i * theta
    out = F.zero
    for m, b in enumerate([F.one, z, theta, z * theta]):
        out = out + b * int(g[2 * m]) + i * b * int(g[2 * m + 1])
    return nu * out


@functools.lru_cache(maxsize=None)
def build_c4() -> CodeDefinition:
    """Rate-4 rank-8 code over Q(zeta8, sqrt5), ordered X(1,0,0,0), X(i,0,0,0), ..."""
    exact = []
    for j in range(8):
        y = c4_element([int(j == m) for m in range(8)])
        exact.append(
            _lmd_matrix(y, apply_auto(y, "r"), apply_auto(y, "tau"), apply_auto(y, "tau_r"))
        )
    names = ["1", "zeta8", "theta", "zeta8*theta"]
    return CodeDefinition(
        name="C4",
        n_t=4,
        T=2,
        generators=tuple(e.to_complex() for e in exact),
        exact_generators=tuple(exact),
        field_id=FieldId.Q_ZETA8_SQRT5,
        n_r=2,
        delta_size=2,
        claimed_exponent=7,
        labels=tuple(f"X({p}{n})" for n in names for p in ("", "i*")),
    )


_BUILDERS = {"C1": build_c1, "C2": build_c2, "C3": build_c3, "C4": build_c4}
CODE_ALIASES = {"C1_6X6": "C1", "C2_4X4": "C2", "C3_4X2": "C3", "C4_4X2": "C4"}


def get_code(name: str) -> CodeDefinition:
    key = name.upper()
    try:
        return _BUILDERS[CODE_ALIASES.get(key, key)]()
    except KeyError:
        raise CodeFormatError(f"unknown code {name!r}; expected one of {', '.join(CODE_NAMES)}") from None


# -- encoding and determinants ----------------------------------------------


def _check_symbols(code: CodeDefinition, g) -> np.ndarray:
    g = np.asarray(g)
    if g.shape[-1] != code.k:
        raise ValueError(f"{code.name} expects {code.k} symbols, got {g.shape[-1]}")
    return g


def encode(code: CodeDefinition, g: Sequence[int]) -> np.ndarray:
    g = _check_symbols(code, g)
    return np.tensordot(g.astype(float), code.stack, axes=(-1, 0))


def exact_codeword(code: CodeDefinition, g: Sequence[int]) -> ExactMatrix:
    if code.exact_generators is None:
        raise UnsupportedCodeError(f"{code.name} has no exact generators")
    g = _check_symbols(code, g)
    out = code.exact_generators[0].scale(int(g[0]))
    for gi, e in zip(g[1:], code.exact_generators[1:]):
        if gi:
            out = out + e.scale(int(gi))
    return out


def exact_block_det(code: CodeDefinition, g: Sequence[int]) -> FieldElement:
    """Exact ``det X`` for the block-diagonal square codes (product of 2x2 block determinants)."""
    if code.n_t != code.T:
        raise UnsupportedCodeError(f"{code.name} is not square")
    X = exact_codeword(code, g)
    det = X.entries[0][0].field.one
    for b in range(0, code.n_t, 2):
        (a, b_), (c, d) = (X.entries[b][b : b + 2], X.entries[b + 1][b : b + 2])
        (ra, rb), (rc, rd) = (X.radicals[b][b : b + 2], X.radicals[b + 1][b : b + 2])
        main, off = math.isqrt(ra * rd), math.isqrt(rb * rc)
        if main * main != ra * rd or off * off != rb * rc:
            raise UnsupportedCodeError("radical pattern does not give a field-valued determinant")
        det = det * (a * d * main - b_ * c * off)
    return det


def _det_gram_batch(stack: np.ndarray, G: np.ndarray) -> np.ndarray:
    X = np.tensordot(G.astype(float), stack, axes=(1, 0))
    gram = np.conj(np.swapaxes(X, -1, -2)) @ X
    return np.maximum(np.linalg.det(gram).real, 0.0)


def det_gram(code: CodeDefinition, g: Sequence[int]) -> float:
    """``det(X^H X)`` of the codeword for ``g``."""
    g = _check_symbols(code, g)
    return float(_det_gram_batch(code.stack, np.asarray(g)[None, :])[0])


@dataclass
class MinDetReport:
    min_value: float
    argmin: tuple[int, ...]
    count: int
    mode: str
    values: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "min_value": self.min_value,
            "argmin": list(self.argmin),
            "count": self.count,
        }


def _exhaustive_vectors(k: int, bound: int, chunk: int):
    side = 2 * bound + 1
    total = side**k
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, k), dtype=np.int64)
        for pos in range(k - 1, -1, -1):
            digits[:, pos] = idx % side
            idx //= side
        V = digits - bound
        yield V[np.any(V != 0, axis=1)]


def _sparse_vectors(k: int, bound: int, weight: int):
    values = [v for v in range(-bound, bound + 1) if v]
    rows = []
    for support in itertools.combinations(range(k), weight):
        for vals in itertools.product(values, repeat=weight):
            row = [0] * k
            for s, v in zip(support, vals):
                row[s] = v
            rows.append(row)
    yield np.array(rows, dtype=np.int64).reshape(-1, k)


def _sampled_vectors(k: int, bound: int, n: int, seed: int | None):
    space = (2 * bound + 1) ** k - 1
    if n > space:
        raise SearchGuardError(f"cannot draw {n} distinct vectors from a space of {space}")
    rng = np.random.default_rng(seed)
    seen: dict[tuple, None] = {}
    while len(seen) < n:
        draw = rng.integers(-bound, bound + 1, size=(max(64, 2 * (n - len(seen))), k))
        for row in map(tuple, draw):
            if any(row) and row not in seen:
                seen[row] = None
                if len(seen) == n:
                    break
    yield np.array(list(seen), dtype=np.int64)


def min_det_search(
    code: CodeDefinition,
    coeff_bound: int,
    mode: str = "exhaustive",
    *,
    n: int | None = None,
    seed: int | None = None,
    weight: int | None = None,
    keep_values: bool = False,
    chunk: int = 50_000,
) -> MinDetReport:
    """Minimum of ``det(X^H X)`` over nonzero coefficient vectors in ``[-b, b]^k``.

    ``mode`` is ``"exhaustive"``, ``"sampled"`` (``n`` distinct vectors, ``seed``)
    or ``"sparse"`` (every vector with exactly ``weight`` nonzero entries).
    """
    k = code.k
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be >= 1")
    if mode == "exhaustive":
        if (2 * coeff_bound + 1) ** k > SEARCH_GUARD:
            raise SearchGuardError(
                f"exhaustive search over {(2 * coeff_bound + 1)}^{k} vectors exceeds {SEARCH_GUARD}"
            )
        batches = _exhaustive_vectors(k, coeff_bound, chunk)
    elif mode == "sampled":
        if n is None:
            raise ValueError("sampled mode needs n")
        batches = _sampled_vectors(k, coeff_bound, n, seed)
    elif mode == "sparse":
        if weight is None or not 1 <= weight <= k:
            raise ValueError("sparse mode needs 1 <= weight <= k")
        if math.comb(k, weight) * (2 * coeff_bound) ** weight > SEARCH_GUARD:
            raise SearchGuardError("sparse search space exceeds the guard")
        batches = _sparse_vectors(k, coeff_bound, weight)
    else:
        raise ValueError(f"unknown search mode {mode!r}")

    stack = code.stack
    best_val, best_vec, count = math.inf, None, 0
    kept = []
    for V in batches:
        if not len(V):
            continue
        for start in range(0, len(V), chunk):
            part = V[start : start + chunk]
            vals = _det_gram_batch(stack, part)
            count += len(part)
            if keep_values:
                kept.append(vals)
            lo = vals.min()
            tol = 1e-9 * max(1.0, abs(min(lo, best_val)))
            if lo < best_val - tol:
                best_val, best_vec = lo, None
            if lo <= best_val + tol:
                best_val = min(best_val, lo)
                for row in part[vals <= best_val + tol]:
                    row = tuple(int(x) for x in row)
                    if best_vec is None or row < best_vec:
                        best_vec = row
    return MinDetReport(
        min_value=float(best_val),
        argmin=best_vec or (),
        count=count,
        mode=mode,
        values=np.concatenate(kept) if keep_values and kept else None,
    )


_RESIDUE_WITNESS = {"C1": (11**3, -1), "C2": (5, -2)}


def nvd_residue_certificate(code: CodeDefinition | str) -> bool:
    """Non-square witness in the residue field behind the division-algebra claim."""
    name = code if isinstance(code, str) else code.name
    if name not in _RESIDUE_WITNESS:
        raise UnsupportedCodeError(f"no residue-field certificate for {name}")
    q, gamma = _RESIDUE_WITNESS[name]
    return residue_nonsquare_witness(q, gamma)


# -- JSON interchange ----------------------------------------------------------


def code_to_dict(code: CodeDefinition) -> dict:
    return {
        "name": code.name,
        "n_t": code.n_t,
        "T": code.T,
        "k": code.k,
        "generators": [
            [[[float(v.real), float(v.imag)] for v in row] for row in g] for g in code.generators
        ],
        "partition": code.declared_partition.to_dict() if code.declared_partition else None,
        "n_r": code.n_r,
        "delta_size": code.delta_size,
        "claimed_exponent": code.claimed_exponent,
    }


def code_from_dict(d: dict) -> CodeDefinition:
    try:
        n_t, T, k = int(d["n_t"]), int(d["T"]), int(d["k"])
        gens = []
        for g in d["generators"]:
            arr = np.array(g, dtype=float)
            if arr.shape != (n_t, T, 2):
                raise CodeFormatError(f"generator shape {arr.shape[:2]} != {(n_t, T)}")
            gens.append(arr[..., 0] + 1j * arr[..., 1])
        if len(gens) != k:
            raise CodeFormatError(f"declared k={k} but {len(gens)} generators")
        part = d.get("partition")
        return CodeDefinition(
            name=str(d.get("name", "external")),
            n_t=n_t,
            T=T,
            generators=tuple(gens),
            declared_partition=GroupPartition.from_dict(part) if part else None,
            n_r=int(d.get("n_r") or 1),
            delta_size=d.get("delta_size"),
            claimed_exponent=d.get("claimed_exponent"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (CodeFormatError, PartitionError)):
            raise CodeFormatError(str(exc)) from exc
        raise CodeFormatError(f"malformed code description: {exc}") from exc


def load_code(source: str) -> CodeDefinition:
    """A built-in code by name (``C1``..``C4``) or a JSON file path."""
    if source.upper() in _BUILDERS or source.upper() in CODE_ALIASES:
        return get_code(source)
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise CodeFormatError(f"{source!r} is neither a code name nor a readable file") from None
    except json.JSONDecodeError as exc:
        raise CodeFormatError(f"{source}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise CodeFormatError(f"{source}: expected a JSON object")
    return code_from_dict(data)
