"""Nonorthogonal amplify-and-forward relay channel and Monte Carlo sweeps.

Each relay ``r`` owns one two-slot cooperation block carrying rows
``2r, 2r+1`` of the codeword.  In the first slot the destination hears the
source directly while relay ``r`` listens; in the second slot the source
sends the next row and the relay forwards its scaled observation::

    Y_1 = sqrt(p1 SNR) F x_1 + V_1
    Y_r = sqrt(p1 rho SNR) h x_1 + W_1
    Y_2 = sqrt(p3 SNR) G (b Y_r) + sqrt(p2 SNR) F x_2 + V_2

with ``b^2 = 1 / (p1 rho SNR |h|^2 + 1)`` so the relay transmits unit power.
The forwarded relay noise makes the second-slot noise colored; it is
whitened with the inverse Cholesky factor of its covariance before decoding.

Codewords are scaled to average energy ``n_t T`` (one unit per entry).  With
the default allocation ``(1, 1/2, 1/2)`` the average received power per
destination antenna per slot equals ``SNR``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import jsonschema
import numpy as np

from .fastdec import vectorize
from .sphdec import (
    Alphabet,
    DecodeResult,
    exhaustive_ml,
    fast_decode,
    ordered_sphere_decode,
    sphere_decode,
)
from .stcodes import CodeDefinition, get_code

__all__ = [
    "NafParams",
    "NafRealization",
    "SimRecord",
    "ConfigError",
    "DECODERS",
    "CSV_HEADER",
    "CONFIG_SCHEMA",
    "default_params",
    "sample_channels",
    "equivalent_channel",
    "codeword_scale",
    "received_power",
    "simulate_trial",
    "run_sweep",
    "records_to_csv",
    "validate_config",
    "run_config",
    "wilson_interval",
]

DEFAULT_PI = (1.0, 0.5, 0.5)
DECODERS = ("exhaustive", "sphere", "fast", "ordered")
CSV_HEADER = ("code", "decoder", "snr_db", "trials", "block_errors", "bler", "avg_nodes", "avg_leaves", "seed")


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class NafParams:
    N: int = 2
    n_s: int = 1
    n_r: int = 1
    n_d: int = 2
    pi: tuple[float, float, float] = DEFAULT_PI
    rho: float = 1.0
    snr_db: float = 10.0

    def __post_init__(self):
        for name in ("N", "n_s", "n_r", "n_d"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if len(self.pi) != 3 or any(p < 0 for p in self.pi):
            raise ValueError("pi must be three nonnegative numbers")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.n_s != 1 or self.n_r != 1:
            raise ValueError("only single-antenna source and relays are modelled")
        object.__setattr__(self, "pi", tuple(float(p) for p in self.pi))

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def with_snr(self, snr_db: float) -> "NafParams":
        return replace(self, snr_db=float(snr_db))


def default_params(code: CodeDefinition, snr_db: float = 10.0, **overrides) -> NafParams:
    """Relay count from ``n_t = 2N``; destination antennas from the code's virtual MIMO size."""
    if code.n_t % 2:
        raise ValueError(f"{code.name}: n_t={code.n_t} is not two slots per relay")
    base = dict(N=code.n_t // 2, n_d=code.n_r, snr_db=snr_db)
    base.update(overrides)
    return NafParams(**base)


@dataclass(frozen=True)
class NafRealization:
    F: np.ndarray
    H: tuple[np.ndarray, ...]
    G: tuple[np.ndarray, ...]
    b: tuple[float, ...]


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def relay_gain(params: NafParams, h: np.ndarray) -> float:
    p1 = params.pi[0]
    return 1.0 / math.sqrt(p1 * params.rho * params.snr * float(np.sum(np.abs(h) ** 2)) + 1.0)


def sample_channels(params: NafParams, rng: np.random.Generator) -> NafRealization:
    """Rayleigh F (n_d x n_s), per-relay H (n_r x n_s) and G (n_d x n_r)."""
    F = _cn(rng, (params.n_d, params.n_s))
    H = tuple(_cn(rng, (params.n_r, params.n_s)) for _ in range(params.N))
    G = tuple(_cn(rng, (params.n_d, params.n_r)) for _ in range(params.N))
    b = tuple(relay_gain(params, h) for h in H)
    return NafRealization(F=F, H=H, G=G, b=b)


def equivalent_channel(real: NafRealization, params: NafParams, code: CodeDefinition | None = None):
    """``(H_eq, W, Sigma)`` with ``H_eq`` of shape ``(2 N n_d) x (2 N)``.

    The noise on ``H_eq X`` has per-column covariance ``Sigma`` and
    ``W Sigma W^H = I``.
    """
    N, nd = params.N, params.n_d
    if code is not None and code.n_t != 2 * N:
        raise ValueError(f"{code.name} has n_t={code.n_t}, the relay model needs {2 * N}")
    p1, p2, p3 = params.pi
    snr = params.snr
    F = real.F[:, 0]
    rows = 2 * N * nd
    Heq = np.zeros((rows, 2 * N), dtype=complex)
    Sigma = np.eye(rows, dtype=complex)
    for r in range(N):
        g = real.G[r][:, 0]
        h = real.H[r][0, 0]
        b = real.b[r]
        top, bot = 2 * r * nd, (2 * r + 1) * nd
        Heq[top : top + nd, 2 * r] = math.sqrt(p1 * snr) * F
        Heq[bot : bot + nd, 2 * r] = math.sqrt(p1 * p3 * params.rho) * snr * b * h * g
        Heq[bot : bot + nd, 2 * r + 1] = math.sqrt(p2 * snr) * F
        Sigma[bot : bot + nd, bot : bot + nd] += p3 * snr * b * b * np.outer(g, g.conj())
    L = np.linalg.cholesky(Sigma)
    W = np.linalg.inv(L)
    return Heq, W, Sigma


def relay_noise(real: NafRealization, params: NafParams, rng: np.random.Generator, T: int) -> np.ndarray:
    """Physical destination noise: direct-slot AWGN plus forwarded relay noise."""
    N, nd = params.N, params.n_d
    p3 = params.pi[2]
    out = _cn(rng, (2 * N * nd, T))
    for r in range(N):
        w = _cn(rng, (1, T))
        bot = (2 * r + 1) * nd
        out[bot : bot + nd] += math.sqrt(p3 * params.snr) * real.b[r] * real.G[r] @ w
    return out


def codeword_scale(code: CodeDefinition, alphabet: Alphabet) -> float:
    """``kappa`` with ``E ||kappa X||_F^2 = n_t T`` for i.i.d. uniform symbols."""
    e_g2 = float(np.mean(alphabet.array**2))
    energy = sum(float(np.sum(np.abs(B) ** 2)) for B in code.generators)
    return math.sqrt(code.n_t * code.T / (e_g2 * energy))


def received_power(real: NafRealization, params: NafParams, X: np.ndarray) -> float:
    """Average received power per destination antenna per slot (relay noise counted as relay output)."""
    Heq, _, _ = equivalent_channel(real, params)
    T = X.shape[1]
    p3 = params.pi[2]
    relay = sum(p3 * params.snr * b * b * float(np.sum(np.abs(G) ** 2)) for b, G in zip(real.b, real.G))
    total = float(np.sum(np.abs(Heq @ X) ** 2)) + T * relay
    return total / (Heq.shape[0] * T)


@dataclass(frozen=True)
class SimRecord:
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    avg_nodes: float
    avg_leaves: float
    decoder_id: str
    code_name: str
    seed: int

    def row(self) -> list:
        return [
            self.code_name,
            self.decoder_id,
            repr(float(self.snr_db)),
            self.trials,
            self.block_errors,
            repr(float(self.bler)),
            repr(float(self.avg_nodes)),
            repr(float(self.avg_leaves)),
            self.seed,
        ]


def _decoder(code: CodeDefinition, decoder_id: str, max_leaves: int | None) -> Callable:
    if decoder_id == "exhaustive":
        if max_leaves is None:
            return exhaustive_ml
        return lambda y, B, S: exhaustive_ml(y, B, S, max_leaves=max_leaves)
    if decoder_id == "sphere":
        return sphere_decode
    if decoder_id == "fast" and code.declared_partition is not None:
        part = code.declared_partition
        return lambda y, B, S: fast_decode(y, B, S, part)
    if decoder_id in ("fast", "ordered"):
        return lambda y, B, S: ordered_sphere_decode(y, B, S, delta=code.delta_size)
    raise ValueError(f"unknown decoder {decoder_id!r}; expected one of {', '.join(DECODERS)}")


def simulate_trial(
    code: CodeDefinition,
    params: NafParams,
    alphabet: Alphabet,
    decode: Callable,
    rng: np.random.Generator,
    noise_scale: float = 1.0,
) -> tuple[bool, DecodeResult]:
    real = sample_channels(params, rng)
    Heq, W, _ = equivalent_channel(real, params, code)
    kappa = codeword_scale(code, alphabet)
    eff = kappa * (W @ Heq)
    B = np.column_stack([vectorize(eff @ Bi) for Bi in code.generators])
    g = rng.choice(np.array(alphabet.points), size=code.k)
    noise = W @ relay_noise(real, params, rng, code.T)
    y = B @ g + noise_scale * vectorize(noise)
    res = decode(y, B, alphabet)
    return tuple(int(v) for v in g) != res.g_hat, res


def run_sweep(
    code: CodeDefinition,
    decoder_id: str,
    params_grid: Iterable[NafParams],
    trials: int,
    seed: int = 0,
    alphabet_size: int = 2,
    noise_scale: float = 1.0,
    max_leaves: int | None = None,
) -> list[SimRecord]:
    """Block error rate and decoder cost per SNR point.

    Trial ``t`` at grid index ``j`` draws from ``default_rng([seed, j, t])``,
    so results do not depend on execution order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alphabet = Alphabet.pam(alphabet_size)
    decode = _decoder(code, decoder_id, max_leaves)
    out = []
    for j, params in enumerate(params_grid):
        errors = nodes = leaves = 0
        for t in range(trials):
            rng = np.random.default_rng([seed, j, t])
            try:
                err, res = simulate_trial(code, params, alphabet, decode, rng, noise_scale)
            except ValueError as exc:
                raise RuntimeError(
                    f"{code.name}/{decoder_id} failed at {params.snr_db} dB, trial {t}: {exc}"
                ) from exc
            errors += err
            nodes += res.nodes_visited
            leaves += res.leaves_evaluated
        out.append(
            SimRecord(
                snr_db=params.snr_db,
                trials=trials,
                block_errors=errors,
                bler=errors / trials,
                avg_nodes=nodes / trials,
                avg_leaves=leaves / trials,
                decoder_id=decoder_id,
                code_name=code.name,
                seed=seed,
            )
        )
    return out


def records_to_csv(records: Iterable[SimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "code": {"type": "string", "minLength": 1},
        "decoder": {"enum": list(DECODERS)},
        "snr_db": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "pi": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 3, "maxItems": 3},
        "rho": {"type": "number", "minimum": 0},
        "alphabet_size": {"type": "integer", "minimum": 2, "multipleOf": 2},
        "seed": {"type": "integer", "minimum": 0},
        "noise_scale": {"type": "number", "minimum": 0},
    },
    "required": ["code", "decoder", "snr_db", "trials"],
    "additionalProperties": False,
}


def validate_config(cfg) -> dict:
    """Return the config with defaults filled in; raise ``ConfigError`` listing every problem."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        raise ConfigError(
            [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors]
        )
    out = {"pi": list(DEFAULT_PI), "rho": 1.0, "alphabet_size": 2, "seed": 0, "noise_scale": 1.0}
    out.update(cfg)
    return out


def run_config(cfg: dict) -> list[SimRecord]:
    cfg = validate_config(cfg)
    code = get_code(cfg["code"])
    base = default_params(code, pi=tuple(cfg["pi"]), rho=cfg["rho"])
    grid = [base.with_snr(s) for s in cfg["snr_db"]]
    return run_sweep(
        code,
        cfg["decoder"],
        grid,
        cfg["trials"],
        seed=cfg["seed"],
        alphabet_size=cfg["alphabet_size"],
        noise_scale=cfg["noise_scale"],
    )
