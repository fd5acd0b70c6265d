"""Seeded samplers: increments, partial sums, Donsker polygons, Wiener paths, index paths.

All randomness flows from a :class:`Seed` ``(root, replicate)``.  Each
replicate owns independent numbered streams; by convention stream 0 feeds
the process family and stream 1 the random index, which keeps the two
independent by construction.

Draws are consumed one 53-bit uniform per value, so asking for more
increments never changes the ones already drawn.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Union

import numpy as np
from scipy.special import ndtri

from .cadlag import CadlagFn, IndexedFamily, IndexProcess
from .errors import BadDist, BadParam

__all__ = [
    "Seed",
    "IncrementSpec",
    "splitmix64",
    "sample_increments",
    "partial_sum_family",
    "donsker_family",
    "donsker_polygon",
    "sample_wiener",
    "poisson_index",
    "const_index",
    "uniform_dist",
    "PartialSumFamily",
    "DonskerFamily",
]

MASK64 = (1 << 64) - 1
FAMILY_STREAM = 0
INDEX_STREAM = 1
KINDS = ("rademacher", "standard-normal", "centered-uniform", "geometric-decay", "constant")


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function (Steele, Lea and Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Seed:
    """Root seed plus replicate index.

    The stream key is ``splitmix64(splitmix64(splitmix64(root) ^ replicate) ^ stream)``,
    which seeds a PCG64 generator.
    """

    root: int
    replicate: int = 0

    def __post_init__(self):
        if not (0 <= self.root <= MASK64) or not (0 <= self.replicate <= MASK64):
            raise BadParam("seed components must be unsigned 64-bit integers")

    def key(self, stream: int = 0) -> int:
        z = splitmix64(self.root)
        z = splitmix64(z ^ self.replicate)
        return splitmix64(z ^ (stream & MASK64))

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.key(stream)))

    def child(self, replicate: int) -> "Seed":
        return Seed(self.root, replicate)


@dataclass(frozen=True)
class IncrementSpec:
    """IID increments.

    ``sigma`` only enters the Donsker normalization ``S_i / (sigma sqrt(n))``;
    the increments themselves have unit variance (``rademacher``,
    ``standard-normal``, ``centered-uniform`` on ``[-sqrt 3, sqrt 3]``), are all
    ``+1`` (``constant``), or are ``xi_i * base**(-i)`` with Rademacher ``xi_i``
    (``geometric-decay``).
    """

    kind: str = "rademacher"
    sigma: float = 1.0
    base: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParam(f"unknown increment kind {self.kind!r}")
        if not self.sigma > 0:
            raise BadParam("sigma must be positive")
        if not self.base > 1:
            raise BadParam("decay base must exceed 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "base": self.base}


def _uniforms(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.random(k)


def sample_increments(spec: IncrementSpec, k: int, seed: Seed, stream: int = FAMILY_STREAM) -> np.ndarray:
    if k < 1:
        raise BadParam("need at least one increment")
    u = _uniforms(seed.rng(stream), k)
    kind = spec.kind
    if kind == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if kind == "standard-normal":
        # u is a multiple of 2**-53, so the shifted value is strictly inside (0, 1)
        return ndtri(u + 2.0**-54)
    if kind == "centered-uniform":
        return math.sqrt(3.0) * (2.0 * u - 1.0)
    if kind == "geometric-decay":
        signs = np.where(u < 0.5, -1.0, 1.0)
        return signs * spec.base ** -np.arange(1, k + 1, dtype=float)
    return np.ones(k)


class _SumCache:
    """Partial sums ``S_0 = 0, S_1, ...`` grown on demand."""

    def __init__(self, spec: IncrementSpec, seed: Seed, stream: int):
        self.spec, self.seed, self.stream = spec, seed, stream
        self.S = np.zeros(1)

    def upto(self, k: int) -> np.ndarray:
        if k >= self.S.size:
            size = max(k + 1, 2 * self.S.size, 64)
            x = sample_increments(self.spec, size - 1, self.seed, self.stream)
            self.S = np.concatenate([[0.0], np.cumsum(x)])
        return self.S


class PartialSumFamily(IndexedFamily):
    """``Y_k`` is the constant path with value ``S_k``; ``Y_0`` is zero."""

    def __init__(self, spec: IncrementSpec, seed: Seed, stream: int = FAMILY_STREAM, limit=None):
        super().__init__(self._build, limit=limit, min_index=0, cache=0)
        self.sums = _SumCache(spec, seed, stream)

    def partial_sum(self, k: int) -> float:
        return float(self.sums.upto(k)[k])

    def _build(self, k: int) -> CadlagFn:
        s = self.partial_sum(k)
        return CadlagFn([0.0, 1.0], [s, s], [s, s])

    def window(self, k, lo, hi):
        self.check_index(k)
        s = self.partial_sum(k)
        empty = np.empty(0)
        return s, empty, empty, empty, s

    def value(self, k, s):
        self.check_index(k)
        return self.partial_sum(k)


class DonskerFamily(IndexedFamily):
    """``Y_k`` is the ``k``-step Donsker polygon built from one shared increment sequence."""

    def __init__(self, spec: IncrementSpec, seed: Seed, stream: int = FAMILY_STREAM):
        super().__init__(self._build, min_index=1, cache=0)
        self.spec = spec
        self.sums = _SumCache(spec, seed, stream)

    def _build(self, k: int) -> CadlagFn:
        S = self.sums.upto(k)[: k + 1]
        x = S / (self.spec.sigma * math.sqrt(k))
        return CadlagFn(np.arange(k + 1) / k, x, x)

    def _at(self, k: int, s: float) -> float:
        S = self.sums.upto(k)
        pos = s * k
        i = min(int(math.floor(pos)), k - 1)
        frac = pos - i
        return (S[i] + frac * (S[i + 1] - S[i])) / (self.spec.sigma * math.sqrt(k))

    def window(self, k, lo, hi):
        self.check_index(k)
        S = self.sums.upto(k)
        i0 = int(math.floor(lo * k)) + 1
        i1 = int(math.ceil(hi * k)) - 1
        idx = np.arange(i0, i1 + 1)
        ts = idx / k
        keep = (ts > lo) & (ts < hi)
        idx, ts = idx[keep], ts[keep]
        vals = S[idx] / (self.spec.sigma * math.sqrt(k))
        return self._at(k, lo), ts, vals, vals, self._at(k, hi)

    def value(self, k, s):
        self.check_index(k)
        return self._at(k, s)


def partial_sum_family(spec: IncrementSpec, seed: Seed, stream: int = FAMILY_STREAM) -> PartialSumFamily:
    return PartialSumFamily(spec, seed, stream)


def donsker_family(spec: IncrementSpec, seed: Seed, stream: int = FAMILY_STREAM) -> DonskerFamily:
    return DonskerFamily(spec, seed, stream)


def donsker_polygon(spec: IncrementSpec, n: int, seed: Seed, stream: int = FAMILY_STREAM) -> CadlagFn:
    """Polygon through ``(i/n, S_i / (sigma sqrt(n)))``, ``i = 0..n``."""
    if n < 1:
        raise BadParam("need at least one step")
    x = sample_increments(spec, n, seed, stream)
    vals = np.concatenate([[0.0], np.cumsum(x)]) / (spec.sigma * math.sqrt(n))
    return CadlagFn(np.arange(n + 1) / n, vals, vals)


def sample_wiener(m: int, seed: Seed, stream: int = FAMILY_STREAM) -> CadlagFn:
    """Wiener reference path: polygon with exact N(0, 1/m) increments."""
    if m < 2:
        raise BadParam("grid must have at least two steps")
    return donsker_polygon(IncrementSpec("standard-normal"), m, seed, stream)


def poisson_index(n: float, a: float, seed: Seed, stream: int = INDEX_STREAM) -> IndexProcess:
    """Path ``t -> pi(n (t + a)) + 1`` for a unit-rate Poisson process ``pi``.

    Arrival times come from exponential interarrivals.  The ``+1`` keeps the
    index in {1, 2, ...}; it is asymptotically irrelevant.
    """
    if not n >= 1:
        raise BadParam("scale n must be at least 1")
    if not a > 0:
        raise BadParam("offset a must be positive (the normalized index must stay above c > 0)")
    rng = seed.rng(stream)
    horizon = n * (1.0 + a)
    batch = int(horizon + 10.0 * math.sqrt(horizon) + 20)
    arrivals = np.cumsum(-np.log1p(-_uniforms(rng, batch)))
    while arrivals[-1] < horizon:
        more = np.cumsum(-np.log1p(-_uniforms(rng, batch))) + arrivals[-1]
        arrivals = np.concatenate([arrivals, more])
    start = int(np.searchsorted(arrivals, n * a, side="right"))
    inside = arrivals[(arrivals > n * a) & (arrivals < horizon)]
    times = inside / n - a
    times = times[(times > 0.0) & (times < 1.0)]
    times = np.unique(times)
    m = times.size
    level = start + 1 + np.arange(m + 1, dtype=float)
    t = np.concatenate([[0.0], times, [1.0]])
    v = np.concatenate([level, [level[-1]]])
    l = np.concatenate([[level[0]], level])
    return IndexProcess(CadlagFn(t, v, l), c=a, f_n=float(n))


Dist = Union[Mapping[int, float], Mapping[int, Fraction]]


def uniform_dist(lo: int, hi: int) -> Dict[int, Fraction]:
    """Uniform distribution on ``{lo, ..., hi}``."""
    if lo < 1 or hi < lo:
        raise BadDist("need 1 <= lo <= hi")
    p = Fraction(1, hi - lo + 1)
    return {k: p for k in range(lo, hi + 1)}


def _check_dist(dist: Dist):
    if not dist:
        raise BadDist("empty distribution")
    for k, p in dist.items():
        if int(k) != k or k < 1:
            raise BadDist(f"support point {k!r} is not in {{1, 2, ...}}")
        if not p > 0:
            raise BadDist(f"weight of {k!r} must be positive")
    total = sum(dist.values())
    if abs(float(total) - 1.0) > 1e-12:
        raise BadDist(f"weights sum to {float(total)!r}, not 1")


def const_index(dist: Dist, seed: Seed, stream: int = INDEX_STREAM, c=None, f_n=None) -> IndexProcess:
    """Constant-in-time index drawn once from a finite distribution on {1, 2, ...}."""
    _check_dist(dist)
    keys = sorted(dist)
    cum = np.cumsum([float(dist[k]) for k in keys])
    u = _uniforms(seed.rng(stream), 1)[0] * cum[-1]
    k = keys[min(int(np.searchsorted(cum, u, side="right")), len(keys) - 1)]
    return IndexProcess.constant(int(k), c=c, f_n=f_n)
