"""Real-lattice view of a code and its fast-decoding structure.

A code seen through a channel ``H`` becomes a real matrix ``B`` whose column
``i`` is ``vec(H B_i)`` (columns stacked, real parts over imaginary parts).
The orthogonality matrix ``M`` records which pairs of generators decouple in
the ML metric, and the QR factor ``R`` of ``B`` exposes which symbols can be
sliced rather than enumerated.

Pairwise decoupling is measured by ``||A_l A_m^H + A_m A_l^H||_F`` with
``A_i = H B_i``.  Its vanishing is exactly what makes the real inner product
``<b_l, b_m> = Re Tr(A_l A_m^H)`` vanish for every channel, so the zero
pattern computed at ``H = I`` is inherited by every ``H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .partition import GroupPartition
from .stcodes import CodeDefinition, build_c2

__all__ = [
    "ZERO_TOL",
    "RealizedLattice",
    "OrthogonalityMatrix",
    "QRStructure",
    "RankDeficientError",
    "vectorize",
    "realize",
    "orthogonality_matrix",
    "zero_pattern",
    "verify_partition",
    "complexity_exponent",
    "auto_partition",
    "qr_structure",
    "pattern_stability_check",
    "complex_basis_partition",
    "complex_basis_group_check",
    "forced_block_pattern",
    "block_pattern_report",
    "ordered_exponent",
    "reduction_ratio",
    "format_percent",
    "certify",
]

ZERO_TOL = 1e-9


class RankDeficientError(ValueError):
    pass


def vectorize(Y: np.ndarray) -> np.ndarray:
    """Column-major stacking of ``Y`` followed by real parts over imaginary parts."""
    v = np.asarray(Y, dtype=complex).reshape(-1, order="F")
    return np.concatenate([v.real, v.imag])


def _channel(code: CodeDefinition, H) -> np.ndarray:
    if H is None:
        return np.eye(code.n_t, dtype=complex)
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.shape[1] != code.n_t:
        raise ValueError(f"channel has {H.shape[1]} columns, {code.name} needs {code.n_t}")
    return H


@dataclass(frozen=True)
class RealizedLattice:
    B: np.ndarray
    H: np.ndarray
    code: CodeDefinition | None = None

    @property
    def k(self) -> int:
        return self.B.shape[1]


def realize(code: CodeDefinition, H=None) -> RealizedLattice:
    """Real ``2 T n_r x k`` generator matrix of the lattice ``{vec(H X)}``."""
    H = _channel(code, H)
    A = np.einsum("rn,knt->krt", H, code.stack)
    cols = [vectorize(a) for a in A]
    return RealizedLattice(B=np.column_stack(cols), H=H, code=code)


@dataclass(frozen=True)
class OrthogonalityMatrix:
    M: np.ndarray
    tol: float = ZERO_TOL

    @property
    def k(self) -> int:
        return self.M.shape[0]

    def zero_mask(self) -> np.ndarray:
        return zero_pattern(self.M, self.tol)


def orthogonality_matrix(
    code: CodeDefinition, H=None, tol: float = ZERO_TOL, form: str = "outer"
) -> OrthogonalityMatrix:
    """Pairwise decoupling norms of ``A_i = H B_i``.

    ``form="outer"`` uses ``A_l A_m^H + A_m A_l^H`` (channel independent zeros);
    ``form="inner"`` uses ``A_l^H A_m + A_m^H A_l``.
    """
    H = _channel(code, H)
    A = np.einsum("rn,knt->krt", H, code.stack)
    if form == "outer":
        P = np.einsum("lrt,mst->lmrs", A, A.conj())
    elif form == "inner":
        P = np.einsum("lrt,mrs->lmts", A.conj(), A)
    else:
        raise ValueError(f"unknown form {form!r}")
    S = P + np.conj(np.swapaxes(P, 2, 3))
    M = np.sqrt(np.sum(np.abs(S) ** 2, axis=(2, 3)))
    return OrthogonalityMatrix(M=0.5 * (M + M.T), tol=tol)


def _as_array(M) -> np.ndarray:
    return M.M if isinstance(M, OrthogonalityMatrix) else np.asarray(M, dtype=float)


def zero_pattern(M, tol: float = ZERO_TOL) -> np.ndarray:
    """Boolean mask, ``True`` where ``M`` is numerically zero relative to its largest entry."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.abs(_as_array(M))
    top = A.max() if A.size else 0.0
    mask = A <= tol * top
    return mask & mask.T


def verify_partition(M, partition: GroupPartition, tol: float = ZERO_TOL) -> bool:
    """True iff every cross-group entry of ``M`` is zero (``Γ^C`` exempt)."""
    A = _as_array(M)
    partition.validate(A.shape[0])
    mask = zero_pattern(A, tol)
    for ga, gb in itertools.combinations(partition.groups, 2):
        if not mask[np.ix_(ga, gb)].all():
            return False
    return True


def complexity_exponent(partition: GroupPartition) -> int:
    """``|Γ^C| + max |Γ_i|``; equals ``k`` when everything is conditioned."""
    return partition.exponent()


def _components(vertices: list[int], adj: np.ndarray) -> list[list[int]]:
    left, comps = set(vertices), []
    for v in vertices:
        if v not in left:
            continue
        stack, comp = [v], []
        left.discard(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in np.flatnonzero(adj[u]):
                if w in left:
                    left.discard(w)
                    stack.append(int(w))
        comps.append(sorted(comp))
    return comps


def auto_partition(mask: np.ndarray) -> GroupPartition:
    """Greedy partition from a zero mask (not optimal).

    Vertices of the "nonzero" graph are moved into ``Γ^C`` one at a time,
    always the highest-degree vertex of the largest remaining component
    (smallest index on ties).  Every stage at which the rest splits into at
    least two components, or a single vertex is left, is a candidate; the
    candidate with the smallest exponent wins, earliest first on ties.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1] or not (mask == mask.T).all():
        raise ValueError("mask must be square and symmetric")
    k = mask.shape[0]
    if k == 0:
        return GroupPartition((), ())
    adj = ~mask
    np.fill_diagonal(adj, False)
    remaining, conditioned = list(range(k)), []
    best: GroupPartition | None = None
    while remaining:
        comps = _components(remaining, adj)
        if len(comps) >= 2 or len(remaining) == 1:
            cand = GroupPartition.make(comps, sorted(conditioned))
            if best is None or cand.exponent() < best.exponent():
                best = cand
        largest = max(comps, key=len)
        if len(largest) == 1:
            break
        deg = adj[np.ix_(largest, remaining)].sum(axis=1)
        v = largest[int(np.argmax(deg))]
        remaining.remove(v)
        conditioned.append(v)
    return best


@dataclass(frozen=True)
class QRStructure:
    R: np.ndarray
    Q: np.ndarray
    mask: np.ndarray
    delta_size: int

    def delta_block(self) -> np.ndarray:
        return self.R[: self.delta_size, : self.delta_size]


def qr_structure(B, tol: float = ZERO_TOL) -> QRStructure:
    """Thin QR with positive diagonal; ``delta_size`` is the largest diagonal leading block."""
    B = B.B if isinstance(B, RealizedLattice) else np.asarray(B, dtype=float)
    Q, R = np.linalg.qr(B)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q, R = Q * signs, signs[:, None] * R
    d = np.abs(np.diag(R))
    if d.size == 0 or d.min() <= 1e-10 * max(d.max(), 1e-300):
        raise RankDeficientError("lattice generator matrix is rank deficient")
    mask = zero_pattern(np.abs(R), tol)
    delta = 1
    while delta < R.shape[1] and mask[:delta, delta].all():
        delta += 1
    return QRStructure(R=R, Q=Q, mask=mask, delta_size=delta)


def _random_channel(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def pattern_stability_check(
    code: CodeDefinition,
    trials: int = 50,
    seed: int | None = 0,
    tol: float = ZERO_TOL,
    n_r: int | None = None,
) -> bool:
    """Zeros of ``M(I)`` stay zero in ``M(H)`` for ``trials`` random Gaussian channels.

    ``H`` is ``n_r x n_t``; by default it is square, hence full rank almost surely.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    base = orthogonality_matrix(code, None, tol).zero_mask()
    rows = code.n_t if n_r is None else n_r
    for _ in range(trials):
        H = _random_channel(rng, rows, code.n_t)
        mask = orthogonality_matrix(code, H, tol).zero_mask()
        if not mask[base].all():
            return False
    return True


def _c2_complex_basis() -> CodeDefinition:
    c2 = build_c2()
    return CodeDefinition(name="C2-complex", n_t=4, T=4, generators=c2.generators[:8], n_r=c2.n_r)


def complex_basis_partition(tol: float = ZERO_TOL) -> GroupPartition:
    """Partition found on the 8-element Z[i]-basis Γ_{1,1}, ..., Γ_{4,2} of C2."""
    return auto_partition(orthogonality_matrix(_c2_complex_basis(), None, tol).zero_mask())


def complex_basis_group_check(tol: float = ZERO_TOL) -> bool:
    """C2 over its complex basis is 4-group decodable with groups of size 2 and no ``Γ^C``."""
    om = orthogonality_matrix(_c2_complex_basis(), None, tol)
    part = auto_partition(om.zero_mask())
    expected = GroupPartition.make([(0, 1), (2, 3), (4, 5), (6, 7)])
    if part != expected or not verify_partition(om, part, tol):
        return False
    nz = ~om.zero_mask()
    return all(nz[np.ix_(g, g)].all() for g in part.groups)


def forced_block_pattern(block: int, n_blocks: int = 8) -> np.ndarray:
    """Entries forced to zero by the conditional 4-group layout.

    The leading ``n_blocks/2`` block rows and columns are block diagonal;
    everything touching the trailing half is unconstrained.
    """
    half = n_blocks // 2
    zero = np.zeros((n_blocks, n_blocks), dtype=bool)
    zero[:half, :half] = ~np.eye(half, dtype=bool)
    return np.kron(zero, np.ones((block, block), dtype=bool))


def block_pattern_report(mask: np.ndarray, block: int, n_blocks: int = 8) -> dict:
    """Compare a zero mask with the block layout of :func:`forced_block_pattern`."""
    forced = forced_block_pattern(block, n_blocks)
    diag_blocks = np.kron(np.eye(n_blocks, dtype=bool), np.ones((block, block), dtype=bool))
    forced_ok = bool(mask[forced].all())
    diagonal_ok = bool((~mask[np.eye(mask.shape[0], dtype=bool)]).all())
    blocks = mask.reshape(n_blocks, block, n_blocks, block).all(axis=(1, 3))
    forced_blocks = forced.reshape(n_blocks, block, n_blocks, block).all(axis=(1, 3))
    extra = [
        [int(i), int(j)]
        for i, j in zip(*np.nonzero(blocks & ~forced_blocks))
        if i < j
    ]
    return {
        "forced_zeros_hold": forced_ok,
        "diagonal_nonzero": diagonal_ok,
        "diagonal_blocks_nonzero": bool((~mask[diag_blocks]).any()),
        "extra_zero_blocks": extra,
        "pass": forced_ok and diagonal_ok,
    }


def ordered_exponent(k: int, delta_size: int) -> int:
    """Worst-case order when a diagonal ``Δ`` of size ``delta_size`` is sliced."""
    return k - delta_size + 1


def reduction_ratio(reduced: int, baseline: int) -> Fraction:
    return Fraction(baseline - reduced, baseline)


def format_percent(r: Fraction) -> str:
    pct = r * 100
    text = f"{float(pct):.10f}".rstrip("0").rstrip(".")
    return f"{text}%"


@dataclass
class Certificate:
    code: str
    ordering: list[int]
    mask: list[str]
    partition: dict | None
    exponent: int
    stability_trials: int
    passed: bool
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "ordering": self.ordering,
            "mask": self.mask,
            "partition": self.partition,
            "exponent": self.exponent,
            "stability_trials": self.stability_trials,
            "pass": self.passed,
            "checks": self.checks,
        }


_PATTERN_BLOCK = {"C1": 3, "C2": 2}


def certify(
    code: CodeDefinition,
    trials: int = 50,
    tol: float = ZERO_TOL,
    seed: int | None = 0,
    ordering: Sequence[int] | None = None,
) -> Certificate:
    """Run the structural checks appropriate to ``code``.

    With a declared partition: verify it on ``M`` and report its exponent.
    With a declared ``Δ``: check the QR leading block on random channels.
    Otherwise, or when ``ordering`` permutes the generators: use
    :func:`auto_partition`.
    """
    order = list(range(code.k)) if ordering is None else [int(i) for i in ordering]
    shuffled = order != list(range(code.k))
    work = code.permuted(order) if shuffled else code
    om = orthogonality_matrix(work, None, tol)
    mask = om.zero_mask()
    checks: dict = {}
    passed = True

    stable = pattern_stability_check(work, trials, seed, tol)
    checks["pattern_stable"] = stable
    passed &= stable

    partition = work.declared_partition
    if partition is not None:
        ok = verify_partition(om, partition, tol)
        checks["partition_verified"] = ok
        passed &= ok
        exponent = complexity_exponent(partition)
        if code.name in _PATTERN_BLOCK:
            rep = block_pattern_report(mask, _PATTERN_BLOCK[code.name])
            checks["block_pattern"] = rep
            passed &= rep["pass"]
    elif work.delta_size is not None:
        rng = np.random.default_rng(seed)
        sizes = []
        for _ in range(trials):
            H = _random_channel(rng, work.n_r, work.n_t)
            sizes.append(qr_structure(realize(work, H), tol).delta_size)
        worst = min(sizes)
        ok = worst >= work.delta_size
        checks["delta_size_min"] = worst
        checks["delta_size_claimed"] = work.delta_size
        checks["delta_diagonal"] = ok
        passed &= ok
        exponent = ordered_exponent(work.k, work.delta_size)
        baseline = int(work.rate * work.n_t)
        checks["reduction"] = format_percent(reduction_ratio(exponent, baseline))
    else:
        partition = auto_partition(mask)
        ok = verify_partition(om, partition, tol)
        checks["partition_verified"] = ok
        checks["auto_partition"] = True
        passed &= ok
        exponent = complexity_exponent(partition)

    return Certificate(
        code=code.name,
        ordering=order,
        mask=["".join("0" if z else "1" for z in row) for row in mask],
        partition=partition.to_dict() if partition is not None else None,
        exponent=exponent,
        stability_trials=trials,
        passed=bool(passed),
        checks=checks,
    )
