"""Maximum-likelihood lattice decoders with operation counters.

All decoders solve ``argmin_g ||y - B g||^2`` over ``g`` in ``S^k`` exactly.
Each one gathers every candidate whose (approximate) metric lies within a
small slack of its best, and the final choice is made by one shared routine:
the metric is recomputed as ``||y - B g||^2`` and ties within a relative
``1e-12`` go to the lexicographically smallest ``g``.  Different decoders
therefore return bit-identical results.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fastdec import RealizedLattice, qr_structure, ordered_exponent
from .partition import GroupPartition, PartitionError

__all__ = [
    "Alphabet",
    "DecodeResult",
    "DecoderError",
    "GuardError",
    "MAX_LEAVES",
    "GROUP_EXHAUSTIVE_LIMIT",
    "ml_metric",
    "exhaustive_ml",
    "sphere_decode",
    "fast_decode",
    "ordered_sphere_decode",
]

MAX_LEAVES = 10**7
GROUP_EXHAUSTIVE_LIMIT = 4096
_COLLECT_REL = 1e-9
_TIE_REL = 1e-12


class DecoderError(ValueError):
    pass


class GuardError(DecoderError):
    pass


@dataclass(frozen=True)
class Alphabet:
    points: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(sorted(int(p) for p in self.points))
        if not pts:
            raise ValueError("alphabet is empty")
        if len(set(pts)) != len(pts):
            raise ValueError("alphabet entries must be distinct")
        if pts != tuple(-p for p in reversed(pts)):
            raise ValueError("alphabet must be symmetric about 0")
        object.__setattr__(self, "points", pts)

    @classmethod
    def pam(cls, s: int) -> "Alphabet":
        if s < 2 or s % 2:
            raise ValueError(f"PAM size must be a positive even integer, got {s}")
        return cls(tuple(range(-(s - 1), s, 2)))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def slice(self, c: float) -> int:
        """Nearest point; exact midpoints go to the smaller symbol."""
        pts = self.points
        best = pts[0]
        for p in pts[1:]:
            if abs(c - p) < abs(c - best):
                best = p
        return best


@dataclass(frozen=True)
class DecodeResult:
    g_hat: tuple[int, ...]
    metric: float
    nodes_visited: int
    leaves_evaluated: int
    exponent: int | None = None


def _lattice(B) -> np.ndarray:
    return B.B if isinstance(B, RealizedLattice) else np.asarray(B, dtype=float)


def _alphabet(S) -> Alphabet:
    return S if isinstance(S, Alphabet) else Alphabet(tuple(S))


def ml_metric(y: np.ndarray, B, g: Sequence[int]) -> float:
    """Canonical ``||y - B g||^2`` used for every final comparison."""
    r = np.asarray(y, dtype=float) - _lattice(B) @ np.asarray(g, dtype=float)
    return float(r @ r)


def _slack(y: np.ndarray, B: np.ndarray, S: Alphabet) -> float:
    amp = np.linalg.norm(y) + np.linalg.norm(B) * max(abs(p) for p in S.points)
    return _COLLECT_REL * (1.0 + amp * amp)


def _select(y, B, candidates) -> tuple[tuple[int, ...], float]:
    scored = sorted({tuple(int(v) for v in c) for c in candidates})
    metrics = [ml_metric(y, B, c) for c in scored]
    best = min(metrics)
    tie = best + _TIE_REL * max(best, 1e-300)
    for c, m in zip(scored, metrics):
        if m <= tie:
            return c, m
    raise AssertionError("unreachable")


def _grid(points: np.ndarray, m: int) -> np.ndarray:
    """All ``len(points)**m`` vectors in lexicographic order."""
    if m == 0:
        return np.zeros((1, 0))
    idx = np.indices((len(points),) * m).reshape(m, -1).T
    return points[idx]


def _check_inputs(y, B, S):
    B = _lattice(B)
    S = _alphabet(S)
    y = np.asarray(y, dtype=float).reshape(-1)
    if B.ndim != 2 or B.shape[0] != y.size:
        raise DecoderError(f"observation length {y.size} does not match lattice rows {B.shape[0]}")
    return y, B, S


# -- exhaustive -------------------------------------------------------------


def exhaustive_ml(y, B, S, max_leaves: int = MAX_LEAVES, chunk: int = 1 << 22) -> DecodeResult:
    """Brute-force ML over all ``s^k`` vectors (guarded by ``max_leaves``)."""
    y, B, S = _check_inputs(y, B, S)
    k, s = B.shape[1], S.size
    total = s**k
    if total > max_leaves:
        raise GuardError(f"exhaustive search over {s}^{k} = {total} leaves exceeds {max_leaves}")
    pts = S.array
    h = k // 2
    heads = _grid(pts, h)
    tails = _grid(pts, k - h)
    Ph = B[:, :h] @ heads.T
    qh = np.einsum("ij,ij->j", Ph, Ph)
    slack = _slack(y, B, S)
    step = max(1, chunk // max(1, len(heads)))
    best = np.inf
    cands: list[np.ndarray] = []
    for start in range(0, len(tails), step):
        tt = tails[start : start + step]
        R = y[:, None] - B[:, h:] @ tt.T
        vals = np.einsum("ij,ij->j", R, R)[:, None] - 2.0 * (R.T @ Ph) + qh[None, :]
        lo = vals.min()
        if lo < best:
            best = lo
            cands = [c for c in cands if c[0] <= best + slack]
        ti, hi = np.nonzero(vals <= best + slack)
        for a, b in zip(ti, hi):
            cands.append((vals[a, b], np.concatenate([heads[b], tt[a]])))
    g, m = _select(y, B, [c for v, c in cands if v <= best + slack])
    return DecodeResult(g, m, nodes_visited=total, leaves_evaluated=total, exponent=k)


# -- Schnorr-Euchner sphere decoder -----------------------------------------


def _qr(B: np.ndarray):
    Q, R = np.linalg.qr(B)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q, R = Q * signs, signs[:, None] * R
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * d.max():
        raise DecoderError("lattice generator matrix is rank deficient")
    return Q, R


class _Search:
    """Depth-first Schnorr-Euchner search with candidate collection."""

    def __init__(self, z: np.ndarray, R: np.ndarray, S: Alphabet, slack: float, offset: float):
        self.z, self.R, self.pts = z, R, S.points
        self.slack, self.offset = slack, offset
        self.k = R.shape[1]
        self.best = np.inf
        self.cands: list[tuple[float, tuple[int, ...]]] = []
        self.nodes = 0
        self.leaves = 0
        self.g = [0] * self.k

    def radius(self) -> float:
        return self.best + self.slack

    def run(self):
        self._level(self.k - 1, self.offset)
        cut = self.radius()
        return [c for v, c in self.cands if v <= cut]

    def _level(self, i: int, acc: float):
        R, g = self.R, self.g
        c = (self.z[i] - sum(R[i, j] * g[j] for j in range(i + 1, self.k))) / R[i, i]
        order = sorted(self.pts, key=lambda p: (abs(c - p), p))
        rii = R[i, i]
        for p in order:
            d = rii * (c - p)
            m = acc + d * d
            self.nodes += 1
            if m > self.radius():
                break
            g[i] = p
            if i == 0:
                self.leaves += 1
                if m < self.best:
                    self.best = m
                self.cands.append((m, tuple(g)))
            else:
                self._level(i - 1, m)
        g[i] = 0


def sphere_decode(y, B, S, initial_radius: float = np.inf) -> DecodeResult:
    """Exact ML by Schnorr-Euchner enumeration with a shrinking radius."""
    y, B, S = _check_inputs(y, B, S)
    Q, R = _qr(B)
    z = Q.T @ y
    offset = max(float(y @ y - z @ z), 0.0)
    search = _Search(z, R, S, _slack(y, B, S), offset)
    if np.isfinite(initial_radius):
        search.best = float(initial_radius)
    cands = search.run()
    if not cands:
        raise DecoderError("no lattice point inside the initial radius")
    g, m = _select(y, B, cands)
    return DecodeResult(g, m, nodes_visited=search.nodes, leaves_evaluated=search.leaves, exponent=B.shape[1])


# -- conditional group decoder ----------------------------------------------


def _check_groups(B: np.ndarray, partition: GroupPartition, tol: float) -> None:
    try:
        partition.validate(B.shape[1])
    except PartitionError as exc:
        raise DecoderError(f"invalid partition: {exc}") from exc
    G = B.T @ B
    top = np.abs(G).max()
    for ga, gb in itertools.combinations(partition.groups, 2):
        if np.abs(G[np.ix_(ga, gb)]).max() > tol * top:
            raise DecoderError(
                f"groups {list(ga)} and {list(gb)} are not orthogonal for this channel; "
                "refusing to decode suboptimally"
            )


def fast_decode(
    y,
    B,
    S,
    partition: GroupPartition,
    tol: float = 1e-9,
    chunk: int = 1 << 20,
) -> DecodeResult:
    """Exact ML for a conditionally group-decodable lattice.

    Every assignment of ``Γ^C`` is enumerated; given it, each group is solved
    independently (exhaustively when ``s^{|Γ_i|} <= 4096``, else by a nested
    sphere search).
    """
    y, B, S = _check_inputs(y, B, S)
    _check_groups(B, partition, tol)
    s = S.size
    pts = S.array
    cond = list(partition.conditioned)
    groups = [list(g) for g in partition.groups]
    slack = _slack(y, B, S)
    k = B.shape[1]

    gc_all = _grid(pts, len(cond))
    Bc = B[:, cond]
    small = [s ** len(g) <= GROUP_EXHAUSTIVE_LIMIT for g in groups]
    tables = []
    for g, is_small in zip(groups, small):
        if is_small:
            G = _grid(pts, len(g))
            P = B[:, g] @ G.T
            tables.append((G, P, np.einsum("ij,ij->j", P, P)))
        else:
            tables.append(None)

    nodes = leaves = 0
    totals = np.empty(len(gc_all))
    per_group: list[list] = [[] for _ in groups]
    step = max(1, chunk // max(1, max((len(t[0]) for t in tables if t), default=1)))
    for start in range(0, len(gc_all), step):
        gc = gc_all[start : start + step]
        Rz = y[:, None] - Bc @ gc.T
        tot = np.einsum("ij,ij->j", Rz, Rz)
        nodes += len(gc)
        for gi, (g, tab) in enumerate(zip(groups, tables)):
            if tab is not None:
                G, P, q = tab
                vals = q[None, :] - 2.0 * (Rz.T @ P)
                leaves += vals.size
                nodes += vals.size
                lo = vals.min(axis=1)
                tot = tot + lo
                per_group[gi].append(vals)
            else:
                Bg = B[:, g]
                los, sets = [], []
                for col in Rz.T:
                    sub = sphere_decode(col, Bg, S)
                    nodes += sub.nodes_visited
                    leaves += sub.leaves_evaluated
                    base = float(col @ col)
                    los.append(sub.metric - base)
                    sets.append(sub.g_hat)
                tot = tot + np.array(los)
                per_group[gi].append((np.array(los), sets))
        totals[start : start + len(gc)] = tot

    best = totals.min()
    cands = []
    for ci in np.flatnonzero(totals <= best + slack):
        block, row = divmod(int(ci), step)
        options = []
        for gi, (g, tab) in enumerate(zip(groups, tables)):
            entry = per_group[gi][block]
            if tab is not None:
                vals = entry[row]
                options.append([tab[0][j] for j in np.flatnonzero(vals <= vals.min() + slack)])
            else:
                options.append([np.array(entry[1][row], dtype=float)])
        for combo in itertools.product(*options):
            full = np.zeros(k)
            full[cond] = gc_all[ci]
            for g, val in zip(groups, combo):
                full[g] = val
            cands.append(full)
    g_hat, m = _select(y, B, cands)
    return DecodeResult(g_hat, m, nodes_visited=nodes, leaves_evaluated=leaves, exponent=partition.exponent())


# -- ordered decoder with a sliced diagonal block ---------------------------


def ordered_sphere_decode(
    y,
    B,
    S,
    ordering: Sequence[int] | None = None,
    delta: int | None = None,
    tol: float = 1e-9,
) -> DecodeResult:
    """Exact ML exploiting a diagonal leading block ``Δ`` of ``R``.

    Columns are taken in ``ordering``.  The trailing ``k - d`` symbols are
    enumerated and the ``d`` leading ones are sliced independently, where
    ``d`` is the size of the diagonal leading block actually present in
    ``R`` (capped by ``delta`` when given), so the result is always ML.
    """
    y, B, S = _check_inputs(y, B, S)
    k = B.shape[1]
    order = list(range(k)) if ordering is None else [int(i) for i in ordering]
    if sorted(order) != list(range(k)):
        raise DecoderError("ordering is not a permutation")
    Bp = B[:, order]
    qs = qr_structure(Bp, tol)
    d = qs.delta_size if delta is None else min(delta, qs.delta_size)
    Q, R = qs.Q, qs.R
    z = Q.T @ y
    offset = max(float(y @ y - z @ z), 0.0)
    pts = S.array
    slack = _slack(y, B, S)

    tails = _grid(pts, k - d)
    # trailing levels: full triangular metric
    Rt = R[d:, d:]
    rt = z[d:, None] - Rt @ tails.T
    tail_metric = np.einsum("ij,ij->j", rt, rt)
    # sliced levels: each independent given the tail
    centers = (z[:d, None] - R[:d, d:] @ tails.T) / np.diag(R)[:d, None]
    inc = (np.diag(R)[:d, None, None] * (centers[:, :, None] - pts[None, None, :])) ** 2
    best_inc = inc.min(axis=2)
    totals = offset + tail_metric + best_inc.sum(axis=0)
    best = totals.min()

    cands = []
    for t in np.flatnonzero(totals <= best + slack):
        options = [pts[np.flatnonzero(inc[i, t] <= best_inc[i, t] + slack)] for i in range(d)]
        for head in itertools.product(*options):
            gp = np.concatenate([np.array(head, dtype=float), tails[t]])
            g = np.empty(k)
            g[order] = gp
            cands.append(g)
    g_hat, m = _select(y, B, cands)
    leaves = len(tails)
    return DecodeResult(
        g_hat,
        m,
        nodes_visited=leaves * (1 + d),
        leaves_evaluated=leaves,
        exponent=ordered_exponent(k, d),
    )
