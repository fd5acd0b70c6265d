"""Piecewise-linear càdlàg functions on [0, 1] and the operations on them.

A :class:`CadlagFn` is stored as three aligned arrays ``t``, ``v``, ``l``:
knot times, values at the knots, and left limits at the knots.  On every
open interval ``(t[i], t[i+1])`` the function is the straight line from
``v[i]`` to ``l[i+1]``, so a jump at ``t[i]`` has size ``v[i] - l[i]``.
Everything the package needs (Donsker polygons, counting paths, ramps and
steps, reparameterized paths) lives exactly in this class.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DomainNotUnit,
    InconsistentLeftLimit,
    IndexOutOfFamily,
    NonMonotoneKnots,
    OutOfDomain,
    SkorolabError,
)

__all__ = [
    "CadlagFn",
    "TimeChange",
    "IndexProcess",
    "IndexedFamily",
    "make_cadlag",
    "evaluate",
    "left_limit",
    "sup_norm_dist",
    "compose_time_change",
    "index_compose",
    "jump_sizes",
    "step_function",
    "polygon",
    "cadlag_to_dict",
    "cadlag_from_dict",
    "read_cadlag",
    "write_cadlag",
]

LEFT_LIMIT_RTOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class CadlagFn:
    """Right-continuous piecewise-linear function on [0, 1].

    Parameters
    ----------
    t, v, l : array_like
        Knot times (strictly increasing, from 0 to 1), values and left
        limits.  ``l[0]`` must equal ``v[0]``.

    Notes
    -----
    Construction does not merge collinear segments, so samplers can keep
    one knot per lattice point; :meth:`canonical` gives the merged form used
    for equality and serialization.
    """

    __slots__ = ("t", "v", "l")

    def __init__(self, t, v, l):
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        l = np.asarray(l, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.shape != l.shape:
            raise SkorolabError("knot arrays must be one-dimensional and aligned")
        if t.size < 2:
            raise DomainNotUnit("need at least the two knots t=0 and t=1")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v)) and np.all(np.isfinite(l))):
            raise SkorolabError("knots must be finite")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise DomainNotUnit(f"knot times must start at 0 and end at 1, got {t[0]!r}..{t[-1]!r}")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneKnots("knot times must be strictly increasing")
        if l[0] != v[0]:
            if abs(l[0] - v[0]) > LEFT_LIMIT_RTOL * max(1.0, abs(v[0])):
                raise InconsistentLeftLimit("left limit at t=0 must equal the value at t=0")
            l = l.copy()
            l[0] = v[0]
        self.t = _frozen(t)
        self.v = _frozen(v)
        self.l = _frozen(l)

    # -- evaluation -----------------------------------------------------
    def _right(self, s):
        t, v, l = self.t, self.v, self.l
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, t.size - 2)
        out = v[idx] + (l[idx + 1] - v[idx]) * ((s - t[idx]) / (t[idx + 1] - t[idx]))
        return np.where(s >= 1.0, v[-1], out)

    def _left(self, s):
        t, v, l = self.t, self.v, self.l
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(t, s, side="left") - 1, 0, t.size - 2)
        out = v[idx] + (l[idx + 1] - v[idx]) * ((s - t[idx]) / (t[idx + 1] - t[idx]))
        # exact at the knots, where the interpolation weight 1 may round
        return np.where(s == t[idx + 1], l[idx + 1], np.where(s <= 0.0, v[0], out))

    @staticmethod
    def _check_domain(s, open_left=False):
        s = np.asarray(s, dtype=float)
        lo_bad = (s <= 0.0) if open_left else (s < 0.0)
        if np.any(lo_bad) or np.any(s > 1.0) or np.any(np.isnan(s)):
            raise OutOfDomain(f"time outside {'(0, 1]' if open_left else '[0, 1]'}")
        return s

    def __call__(self, s):
        s = self._check_domain(s)
        out = self._right(s)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, s):
        # x(0-) is taken to be x(0)
        s = self._check_domain(s)
        out = self._left(s)
        return float(out) if out.ndim == 0 else out

    # -- structure ------------------------------------------------------
    @property
    def knots(self):
        return list(zip(self.t.tolist(), self.v.tolist(), self.l.tolist()))

    def jumps(self):
        d = self.v - self.l
        mask = d != 0.0
        return list(zip(self.t[mask].tolist(), d[mask].tolist()))

    @property
    def is_continuous(self) -> bool:
        return bool(np.all(self.v == self.l))

    @property
    def is_step(self) -> bool:
        """True when every segment is flat (a pure jump function)."""
        return bool(np.all(self.l[1:] == self.v[:-1]))

    def sup(self) -> float:
        return float(max(self.v.max(), self.l.max()))

    def inf(self) -> float:
        return float(min(self.v.min(), self.l.min()))

    def integral(self) -> float:
        return float(np.sum(0.5 * (self.v[:-1] + self.l[1:]) * np.diff(self.t)))

    def canonical(self, rtol: float = 1e-12) -> "CadlagFn":
        """Merge adjacent collinear segments (interior knots without a jump)."""
        t, v, l = self.t, self.v, self.l
        keep = [0]
        for i in range(1, t.size - 1):
            j = keep[-1]
            if v[i] != l[i]:
                keep.append(i)
                continue
            s_in = (l[i] - v[j]) / (t[i] - t[j])
            s_out = (l[i + 1] - v[i]) / (t[i + 1] - t[i])
            if abs(s_in - s_out) > rtol * max(1.0, abs(s_in), abs(s_out)):
                keep.append(i)
        keep.append(t.size - 1)
        keep = np.asarray(keep)
        return CadlagFn(t[keep], v[keep], l[keep])

    def shift(self, c: float) -> "CadlagFn":
        return CadlagFn(self.t, self.v + c, self.l + c)

    def scale(self, a: float) -> "CadlagFn":
        return CadlagFn(self.t, self.v * a, self.l * a)

    def equals(self, other: "CadlagFn", atol: float = 0.0) -> bool:
        a, b = self.canonical(), other.canonical()
        if a.t.size != b.t.size:
            return False
        return all(
            np.allclose(x, y, rtol=0.0, atol=atol) for x, y in ((a.t, b.t), (a.v, b.v), (a.l, b.l))
        )

    def __repr__(self):
        return f"CadlagFn({self.t.size} knots, {len(self.jumps())} jumps)"


def make_cadlag(knots: Iterable[Sequence[float]]) -> CadlagFn:
    """Build a :class:`CadlagFn` from ``(time, value, left_limit)`` triples."""
    knots = [tuple(k) for k in knots]
    if any(len(k) != 3 for k in knots):
        raise SkorolabError("each knot is a (time, value, left_limit) triple")
    t, v, l = (np.array(col, dtype=float) for col in zip(*knots)) if knots else ([], [], [])
    return CadlagFn(t, v, l)


def step_function(jumps: Sequence[tuple], start: float = 0.0) -> CadlagFn:
    """Piecewise-constant function: value ``start`` then jumps ``(time, size)``.

    Jumps at t=0 are folded into the starting value; a jump at t=1 is kept.
    """
    pts = sorted((float(s), float(h)) for s, h in jumps)
    level = start
    t, v, l = [0.0], [start], [start]
    for s, h in pts:
        if s <= 0.0:
            level += h
            v[0] = l[0] = level
            continue
        if s == t[-1]:
            level += h
            v[-1] = level
            continue
        t.append(s)
        l.append(level)
        level += h
        v.append(level)
    if t[-1] != 1.0:
        t.append(1.0)
        v.append(level)
        l.append(level)
    return CadlagFn(t, v, l)


def polygon(times: Sequence[float], values: Sequence[float]) -> CadlagFn:
    """Continuous polygon through ``(times[i], values[i])``."""
    return CadlagFn(times, values, values)


def evaluate(f: CadlagFn, t):
    return f(t)


def left_limit(f: CadlagFn, t):
    return f.left_limit(t)


def jump_sizes(f: CadlagFn):
    return f.jumps()


def sup_norm_dist(f: CadlagFn, g: CadlagFn) -> float:
    """Exact uniform distance; the difference is linear between merged knots."""
    p = np.union1d(f.t, g.t)
    right = np.abs(f._right(p) - g._right(p))
    left = np.abs(f._left(p) - g._left(p))
    return float(max(right.max(), left.max()))


class TimeChange:
    """Strictly increasing piecewise-linear bijection of [0, 1]."""

    __slots__ = ("t", "y")

    def __init__(self, t, y):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 2:
            raise SkorolabError("time change needs aligned knot arrays with at least two knots")
        if t[0] != 0.0 or t[-1] != 1.0 or y[0] != 0.0 or y[-1] != 1.0:
            raise DomainNotUnit("time change must pin (0, 0) and (1, 1)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(y) <= 0):
            raise NonMonotoneKnots("time change must be strictly increasing in both coordinates")
        self.t = _frozen(t)
        self.y = _frozen(y)

    @classmethod
    def identity(cls) -> "TimeChange":
        return cls([0.0, 1.0], [0.0, 1.0])

    @classmethod
    def through(cls, points: Iterable[Sequence[float]]) -> "TimeChange":
        """Time change through interior points ``(t, lambda(t))``; endpoints are added."""
        pts = sorted((float(a), float(b)) for a, b in points if 0.0 < a < 1.0)
        t = [0.0] + [a for a, _ in pts] + [1.0]
        y = [0.0] + [b for _, b in pts] + [1.0]
        return cls(t, y)

    def __call__(self, s):
        out = np.interp(s, self.t, self.y)
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self) -> "TimeChange":
        return TimeChange(self.y, self.t)

    def inv(self, s):
        out = np.interp(s, self.y, self.t)
        return float(out) if np.ndim(out) == 0 else out

    def then(self, outer: "TimeChange") -> "TimeChange":
        """The composition ``outer(self(t))``."""
        pts = np.union1d(self.t, self.inv(outer.t))
        return TimeChange(pts, outer(self(pts)))

    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.t)

    @property
    def knots(self):
        return list(zip(self.t.tolist(), self.y.tolist()))

    def __repr__(self):
        return f"TimeChange({self.t.size} knots)"


def compose_time_change(f: CadlagFn, lam: TimeChange) -> CadlagFn:
    """Return ``f o lam``.

    Preimages of ``f``'s knots carry ``f``'s stored value and left limit
    directly, so a jump never slips to the wrong side through rounding.
    """
    pre = lam.inv(f.t)
    pre[0], pre[-1] = 0.0, 1.0
    extra = np.setdiff1d(lam.t, pre)
    ye = lam(extra)
    s = np.concatenate([pre, extra])
    v = np.concatenate([f.v, f._right(ye)])
    l = np.concatenate([f.l, f._left(ye)])
    order = np.argsort(s, kind="stable")
    s, v, l = s[order], v[order], l[order]
    keep = np.concatenate([[True], np.diff(s) > 0])
    return CadlagFn(s[keep], v[keep], l[keep])


@dataclass(frozen=True)
class IndexProcess:
    """Non-decreasing step path with values in {1, 2, ...}.

    ``c`` is the lower threshold of the normalized limit and ``f_n`` the
    normalization, both carried along as metadata for the limit checks.
    """

    fn: CadlagFn
    c: Optional[float] = None
    f_n: Optional[float] = None

    def __post_init__(self):
        fn = self.fn
        if not fn.is_step:
            raise SkorolabError("index path must be piecewise constant")
        vals = np.concatenate([fn.v, fn.l])
        if np.any(vals != np.round(vals)) or np.any(vals < 1):
            raise SkorolabError("index path must take values in {1, 2, ...}")
        if np.any(np.diff(fn.v) < 0):
            raise SkorolabError("index path must be non-decreasing")

    @classmethod
    def constant(cls, k: int, c=None, f_n=None) -> "IndexProcess":
        return cls(CadlagFn([0.0, 1.0], [k, k], [k, k]), c=c, f_n=f_n)

    @classmethod
    def from_steps(cls, start: int, times, values, c=None, f_n=None) -> "IndexProcess":
        """Path equal to ``start`` and then ``values[j]`` from ``times[j]`` on."""
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        inner = (times > 0.0) & (times < 1.0)
        at_zero = times <= 0.0
        if np.any(at_zero):
            start = values[at_zero][-1]
        t = np.concatenate([[0.0], times[inner], [1.0]])
        v = np.concatenate([[start], values[inner]])
        last = values[times == 1.0][-1] if np.any(times == 1.0) else v[-1]
        l = np.concatenate([[start], v])
        v = np.concatenate([v, [last]])
        return cls(CadlagFn(t, v, l), c=c, f_n=f_n)

    def __call__(self, s):
        out = self.fn(s)
        return int(out) if np.ndim(out) == 0 else out.astype(np.int64)

    @property
    def min_value(self) -> int:
        return int(self.fn.v[0])

    @property
    def max_value(self) -> int:
        return int(self.fn.v[-1])

    def normalized(self) -> CadlagFn:
        if not self.f_n:
            raise SkorolabError("normalization f_n not set")
        return self.fn.scale(1.0 / self.f_n)


class IndexedFamily:
    """A deterministic sequence ``k -> CadlagFn`` with an optional limit.

    Subclasses with structured members override :meth:`window` so that
    :func:`index_compose` never has to materialize a whole member.
    """

    def __init__(
        self,
        member: Callable[[int], CadlagFn],
        limit: Optional[CadlagFn] = None,
        min_index: int = 1,
        max_index: Optional[int] = None,
        cache: int = 256,
    ):
        self._member = functools.lru_cache(maxsize=cache)(member) if cache else member
        self.limit = limit
        self.min_index = min_index
        self.max_index = max_index

    def check_index(self, k: int):
        if k < self.min_index or (self.max_index is not None and k > self.max_index):
            raise IndexOutOfFamily(f"index {k} outside the family")

    def __call__(self, k: int) -> CadlagFn:
        k = int(k)
        self.check_index(k)
        return self._member(k)

    def window(self, k: int, lo: float, hi: float):
        """Member ``k`` on ``[lo, hi]``.

        Returns ``(value_at_lo, inner_t, inner_v, inner_l, left_limit_at_hi)``
        where the inner arrays hold the knots strictly between ``lo`` and ``hi``.
        """
        f = self(k)
        i0 = np.searchsorted(f.t, lo, side="right")
        i1 = np.searchsorted(f.t, hi, side="left")
        return (
            float(f._right(lo)),
            f.t[i0:i1],
            f.v[i0:i1],
            f.l[i0:i1],
            float(f._left(hi)),
        )

    def value(self, k: int, s: float) -> float:
        return float(self(k)._right(s))


def index_compose(family: IndexedFamily, mu: IndexProcess) -> CadlagFn:
    """The path ``z(t) = x_{mu(t)}(t)``.

    At a jump time ``s`` of ``mu`` the value uses the new index and the left
    limit uses the old one, which is what right-continuity of ``z`` forces.
    """
    m = mu.fn
    ks = m.v.astype(np.int64)
    for k in np.unique(np.concatenate([ks, m.l.astype(np.int64)])):
        family.check_index(int(k))
    ts, vs, ls = [], [], []
    prev_left = None
    n_seg = m.t.size - 1
    for j in range(n_seg):
        lo, hi, k = m.t[j], m.t[j + 1], int(ks[j])
        start, it, iv, il, end_left = family.window(k, lo, hi)
        ts.append([lo])
        vs.append([start])
        ls.append([start if prev_left is None else prev_left])
        ts.append(it)
        vs.append(iv)
        ls.append(il)
        prev_left = end_left
    ts.append([1.0])
    vs.append([family.value(int(ks[-1]), 1.0)])
    ls.append([prev_left])
    return CadlagFn(np.concatenate(ts), np.concatenate(vs), np.concatenate(ls))


def cadlag_to_dict(f: CadlagFn, canonical: bool = True) -> dict:
    g = f.canonical() if canonical else f
    return {"knots": [{"t": t, "v": v, "l": l} for t, v, l in g.knots]}


def cadlag_from_dict(doc: dict) -> CadlagFn:
    try:
        knots = doc["knots"]
        return make_cadlag((k["t"], k["v"], k["l"]) for k in knots)
    except (KeyError, TypeError) as exc:
        raise SkorolabError(f"malformed function document: {exc}") from exc


def read_cadlag(path) -> CadlagFn:
    with open(path) as fh:
        return cadlag_from_dict(json.load(fh))


def write_cadlag(f: CadlagFn, path) -> None:
    with open(path, "w") as fh:
        json.dump(cadlag_to_dict(f), fh, indent=1)
        fh.write("\n")
