"""Reproducible Gaussian generator tuples ``X_1, ..., X_N`` in ``R^n``.

The generator is counter based, so every entry is a pure function of
``(seed, position)`` and the matrix is bit-identical on every platform that
has IEEE binary64 ``log``/``cos``/``sin`` (the uniform stage is exact integer
arithmetic).

Constant set
------------
Uniform stage, splitmix64 output for counter ``c`` under seed ``s``::

    z = s + (c + 1) * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9        (mod 2**64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB        (mod 2**64)
    z =  z ^ (z >> 31)

Counters ``2p`` and ``2p + 1`` give ``u1 = ((z >> 11) + 1) / 2**53`` in
``(0, 1]`` and ``u2 = (z >> 11) / 2**53`` in ``[0, 1)``; Box-Muller turns
them into normals ``2p`` and ``2p + 1``, namely ``(R cos T, R sin T)`` with
``R = sqrt(-2 log u1)`` and ``T = 2 pi u2``.  Entry ``(i, j)`` of ``A`` uses
normal number ``j * n + i`` (column-major), so column ``X_j`` depends only on
``(seed, n, j)``.

Stream derivation: ``derive_stream(seed, k) = mix(seed ^ mix((k + 1) *
0xD1B54A32D192ED03))`` with ``mix`` the last three splitmix64 lines.  ``mix``
is a bijection on 64-bit words, so distinct ``k`` never collide for a fixed
parent seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
STREAM_KEY = np.uint64(0xD1B54A32D192ED03)
_U64_MAX = 2**64 - 1
_TWO_M53 = 2.0**-53


def _mix(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed, counter):
    """Counter-mode splitmix64; broadcasts over ``seed`` and ``counter``."""
    seed = np.asarray(seed, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    return _mix(seed + (counter + np.uint64(1)) * GOLDEN)


def standard_normals(seeds, count: int) -> np.ndarray:
    """Normals ``0..count-1`` of each seed's stream, shape ``(len(seeds), count)``."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))[:, None]
    pairs = (count + 1) // 2
    c = np.arange(2 * pairs, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = splitmix64(seeds, c[None, :])
    hi = z >> np.uint64(11)
    u1 = (hi[:, 0::2].astype(np.float64) + 1.0) * _TWO_M53
    u2 = hi[:, 1::2].astype(np.float64) * _TWO_M53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty((seeds.shape[0], 2 * pairs))
    out[:, 0::2] = radius * np.cos(angle)
    out[:, 1::2] = radius * np.sin(angle)
    return out[:, :count]


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    N: int
    seed: int = 0
    ratio_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if int(self.n) != self.n or int(self.N) != self.N:
            raise ConfigurationError("n and N must be integers")
        if self.n < 1:
            raise ConfigurationError(f"ambient dimension must be positive, got n={self.n}")
        if self.N < self.n:
            raise ConfigurationError(f"need N >= n, got N={self.N} < n={self.n}")
        if not 0 <= int(self.seed) <= _U64_MAX:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.ratio_bounds is not None:
            K, Kp = self.ratio_bounds
            if not 1 < K <= Kp:
                raise ConfigurationError(f"ratio bounds need 1 < K <= K', got {self.ratio_bounds}")
            if not K <= self.N / self.n <= Kp:
                raise ConfigurationError(
                    f"N/n = {self.N / self.n:.4g} outside ratio bounds [{K}, {Kp}]"
                )

    def as_dict(self) -> dict:
        d = {"n": self.n, "N": self.N, "seed": int(self.seed)}
        if self.ratio_bounds is not None:
            d["ratio_bounds"] = list(self.ratio_bounds)
        return d


@dataclass(frozen=True, eq=False)
class Ensemble:
    """The ``n x N`` matrix ``A`` whose columns are the generators ``X_j``."""

    A: np.ndarray = field(repr=False)
    config: EnsembleConfig
    # derived, solver-owned data (start basis, rank check); never compared
    cache: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        if A.shape != (self.config.n, self.config.N):
            raise ConfigurationError(
                f"matrix shape {A.shape} does not match config ({self.config.n}, {self.config.N})"
            )
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def N(self) -> int:
        return self.config.N

    @cached_property
    def At(self) -> np.ndarray:
        """Contiguous transpose; row ``j`` is ``X_j``."""
        return np.ascontiguousarray(self.A.T)

    @classmethod
    def from_matrix(cls, A, seed: int = 0) -> "Ensemble":
        """Wrap an explicit matrix (hand-built instances, loaded files)."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return cls(A, EnsembleConfig(A.shape[0], A.shape[1], seed))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "N": self.N,
                "seed": int(self.config.seed),
                "data": [float(v) for v in self.A.ravel(order="C")],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Ensemble":
        try:
            obj = json.loads(text)
            n, N, seed, data = obj["n"], obj["N"], obj["seed"], obj["data"]
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"malformed ensemble record: {exc}") from exc
        config = EnsembleConfig(int(n), int(N), int(seed))
        if len(data) != n * N:
            raise ConfigurationError(f"data has {len(data)} values, expected n*N = {n * N}")
        return cls(np.asarray(data, dtype=np.float64).reshape(n, N), config)


def sample_ensemble(config: EnsembleConfig) -> Ensemble:
    """Draw ``A`` for ``config``; a pure function of the config."""
    n, N = config.n, config.N
    flat = standard_normals([config.seed], n * N)[0]
    A = flat.reshape(N, n).T
    if N > 1:
        # pairwise-distinct columns (probability one); cheap sanity check
        keys = np.unique(np.round(A.T, 12), axis=0)
        if keys.shape[0] != N:
            raise ConfigurationError("generator produced repeated columns")
    return Ensemble(A, config)


def derive_stream(config: EnsembleConfig, stream_id: int) -> EnsembleConfig:
    """Config whose seed is a collision-free mix of ``(config.seed, stream_id)``."""
    if stream_id < 0:
        raise ConfigurationError("stream_id must be non-negative")
    with np.errstate(over="ignore"):
        inner = _mix(np.uint64(stream_id + 1) * STREAM_KEY)
        seed = _mix(np.uint64(config.seed) ^ inner)
    return replace(config, seed=int(seed))


def derive_seed(seed: int, *stream_ids: int) -> int:
    """Chain :func:`derive_stream` over several ids; returns the raw seed."""
    cfg = EnsembleConfig(1, 1, seed)
    for sid in stream_ids:
        cfg = derive_stream(cfg, sid)
    return int(cfg.seed)
