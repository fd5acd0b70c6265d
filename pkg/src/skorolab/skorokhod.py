"""Skorokhod distance on D[0, 1] with the log-slope time-change penalty.

For a time change ``lam`` the cost of aligning ``f`` with ``g`` is

    max( sup_t |f(t) - g(lam(t))| ,  sup_{s != t} |log((lam(t) - lam(s)) / (t - s))| )

and the distance is the infimum of that cost over all time changes.  The
infimum is bracketed: :func:`jump_lower_bound` gives an analytic lower
certificate, :func:`distance` and :func:`distance_oracle` give achievable
upper values together with the time change that achieves them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .cadlag import CadlagFn, TimeChange, compose_time_change, sup_norm_dist
from .errors import BadParam, GridTooCoarse

__all__ = [
    "TimeChange",
    "DistanceResult",
    "slope_metric",
    "shift_metric",
    "value_part",
    "distance_given",
    "jump_lower_bound",
    "distance_oracle",
    "distance",
    "result_to_dict",
]

MODES = ("log", "classic")


@dataclass(frozen=True)
class DistanceResult:
    upper: float
    lower: float
    witness: TimeChange
    value_part: float
    slope_part: float
    budget_exhausted: bool = False
    mode: str = "log"
    # feasibility level found by the oracle's search; equals ``upper`` when
    # the oracle is exact for the input pair
    level: Optional[float] = None
    evaluations: int = 0


def slope_metric(lam: TimeChange) -> float:
    """``sup |log chord slope|``, attained on a single segment.

    Every chord slope is a weighted mean of segment slopes, so its log lies
    between the extreme segment logs.
    """
    return float(np.max(np.abs(np.log(lam.slopes()))))


def shift_metric(lam: TimeChange) -> float:
    """``sup |lam(t) - t|`` (the classic, incomplete variant)."""
    return float(np.max(np.abs(lam.y - lam.t)))


def _time_part(lam: TimeChange, mode: str) -> float:
    if mode == "log":
        return slope_metric(lam)
    if mode == "classic":
        return shift_metric(lam)
    raise BadParam(f"unknown mode {mode!r}")


def _seg_eval(fn: CadlagFn, s, side):
    t, v, l = fn.t, fn.v, fn.l
    idx = np.searchsorted(t, s, side=side) - 1
    np.clip(idx, 0, t.size - 2, out=idx)
    out = v[idx] + (l[idx + 1] - v[idx]) * ((s - t[idx]) / (t[idx + 1] - t[idx]))
    if side == "right":
        out[s >= 1.0] = v[-1]
    return out


def _value_part_arrays(f: CadlagFn, g: CadlagFn, lt, ly) -> float:
    # f - g o lam is linear between the knots of f, the knots of lam and the
    # preimages of g's knots; preimages take g's stored values directly
    pre = np.interp(g.t, ly, lt)
    fr = _seg_eval(f, pre, "right")
    fl = _seg_eval(f, pre, "left")
    dev = max(np.max(np.abs(fr - g.v)), np.max(np.abs(fl - g.l)))
    s = np.concatenate([f.t, lt[1:-1]])
    ys = np.interp(s, lt, ly)
    fr = _seg_eval(f, s, "right")
    fl = _seg_eval(f, s, "left")
    gr = _seg_eval(g, ys, "right")
    gl = _seg_eval(g, ys, "left")
    dev = max(dev, np.max(np.abs(fr - gr)), np.max(np.abs(fl - gl)))
    return float(dev)


def value_part(f: CadlagFn, g: CadlagFn, lam: TimeChange) -> float:
    """``sup_t |f(t) - g(lam(t))|`` evaluated exactly."""
    return _value_part_arrays(f, g, lam.t, lam.y)


def distance_given(f: CadlagFn, g: CadlagFn, lam: TimeChange, mode: str = "log") -> Tuple[float, float]:
    return value_part(f, g, lam), _time_part(lam, mode)


def _max_abs_jump(f: CadlagFn) -> float:
    return float(np.max(np.abs(f.v - f.l)))


def jump_lower_bound(f: CadlagFn, g: CadlagFn) -> float:
    """Half the largest jump of whichever function jumps, if the other is continuous.

    ``f o lam`` stays continuous, so at the jump of size ``J`` the two sides
    cannot both be closer than ``J / 2``.
    """
    jf, jg = _max_abs_jump(f), _max_abs_jump(g)
    if jf == 0.0 and jg > 0.0:
        return 0.5 * jg
    if jg == 0.0 and jf > 0.0:
        return 0.5 * jf
    return 0.0


def _invert(res: DistanceResult, f: CadlagFn, g: CadlagFn) -> DistanceResult:
    """Turn a result for ``(g, f)`` into one for ``(f, g)``."""
    lam = res.witness.inverse()
    vp, sp = distance_given(f, g, lam, res.mode)
    return DistanceResult(
        upper=max(vp, sp),
        lower=res.lower,
        witness=lam,
        value_part=vp,
        slope_part=sp,
        budget_exhausted=res.budget_exhausted,
        mode=res.mode,
        level=res.level,
        evaluations=res.evaluations,
    )


# ---------------------------------------------------------------------------
# Oracle: interval reachability over time cells
# ---------------------------------------------------------------------------


def _band(g: CadlagFn, lo: float, hi: float) -> List[Tuple[float, float]]:
    """Closed intervals of ``y`` on which ``lo <= g <= hi``.

    Each segment is closed at both ends using its own endpoint values (the
    right end uses the left limit); touching pieces are merged.
    """
    t0, t1 = g.t[:-1], g.t[1:]
    a, b = g.v[:-1], g.l[1:]
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        s_lo = np.where(d > 0, (lo - a) / d, np.where(d < 0, (hi - a) / d, 0.0))
        s_hi = np.where(d > 0, (hi - a) / d, np.where(d < 0, (lo - a) / d, 1.0))
    flat_ok = (a >= lo) & (a <= hi)
    s_lo = np.where(d == 0, np.where(flat_ok, 0.0, 2.0), np.maximum(s_lo, 0.0))
    s_hi = np.where(d == 0, np.where(flat_ok, 1.0, -1.0), np.minimum(s_hi, 1.0))
    ok = s_lo <= s_hi
    y0 = np.where(s_lo <= 0.0, t0, t0 + s_lo * (t1 - t0))
    y1 = np.where(s_hi >= 1.0, t1, t0 + s_hi * (t1 - t0))
    out: List[Tuple[float, float]] = []
    for p, q in zip(y0[ok].tolist(), y1[ok].tolist()):
        if out and p <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], q))
        else:
            out.append((p, q))
    return out


def _intersect(r, s):
    out = []
    i = j = 0
    while i < len(r) and j < len(s):
        lo = max(r[i][0], s[j][0])
        hi = min(r[i][1], s[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if r[i][1] < s[j][1]:
            i += 1
        else:
            j += 1
    return out


def _union(iv):
    iv = sorted(iv)
    out = []
    for p, q in iv:
        if out and p <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], q))
        else:
            out.append((p, q))
    return out


class _Reachability:
    """Feasibility of level ``eps`` for ``sup|f - g o lam|`` plus a slope cone.

    ``lam`` is taken linear on every cell of the time grid; this loses
    nothing because on a cell only the endpoints of ``lam`` matter for both
    the range swept in ``g`` and the chord slopes.  When ``f`` is constant on
    every cell the test is exact; otherwise a cell only requires ``g`` to stay
    within ``eps`` of the range of ``f`` there, plus exact checks at the grid
    nodes, which is a relaxation that tightens as the grid is refined.
    """

    def __init__(self, f: CadlagFn, gs, grid: np.ndarray, slopes: bool = True):
        self.gs = list(gs)
        self.T = grid
        self.h = np.diff(grid)
        right = f._right(grid)
        left = f._left(grid)
        self.f_right = right
        self.cell_lo = np.minimum(right[:-1], left[1:])
        self.cell_hi = np.maximum(right[:-1], left[1:])
        self.f_end = float(f.v[-1])
        self.exact = f.is_step
        self.slopes = slopes
        self._cache = {}

    def _bands(self, lo, hi, eps_list):
        key = (lo, hi, eps_list)
        hit = self._cache.get(key)
        if hit is None:
            hit = [(0.0, 1.0)]
            for g, eps in zip(self.gs, eps_list):
                hit = _intersect(hit, _band(g, lo - eps, hi + eps))
                if not hit:
                    break
            if len(self._cache) > 20000:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def run(self, eps_list, keep=False):
        eps_list = tuple(float(e) for e in eps_list)
        for g, eps in zip(self.gs, eps_list):
            if abs(float(g.v[0]) - self.f_right[0]) > eps or abs(float(g.v[-1]) - self.f_end) > eps:
                return None
        if self.slopes:
            e = eps_list[0]
            a, b = math.exp(-e), math.exp(e)
        else:
            a, b = 0.0, math.inf
        R = [(0.0, 0.0)]
        history = [R] if keep else None
        comps_hist = [] if keep else None
        n = self.h.size
        for i in range(n):
            comps = self._bands(float(self.cell_lo[i]), float(self.cell_hi[i]), eps_list)
            h = float(self.h[i])
            nxt = []
            for p, q in comps:
                for r0, r1 in _intersect(R, [(p, q)]):
                    lo = max(r0 + a * h, p)
                    hi = min(r1 + b * h, q)
                    if lo <= hi:
                        nxt.append((lo, hi))
            if i + 1 < n:
                nxt = _union(nxt)
                if not self.exact and nxt:
                    fv = float(self.f_right[i + 1])
                    nxt = _intersect(nxt, self._bands(fv, fv, eps_list))
            else:
                nxt = [(1.0, 1.0)] if any(p <= 1.0 <= q for p, q in nxt) else []
            if not nxt:
                return None
            R = nxt
            if keep:
                history.append(R)
                comps_hist.append(comps)
        return (history, comps_hist) if keep else True

    def feasible(self, eps_list) -> bool:
        return self.run(eps_list) is not None

    def witness(self, eps_list) -> Optional[np.ndarray]:
        """Backward pass choosing the smallest admissible node value."""
        out = self.run(eps_list, keep=True)
        if out is None:
            return None
        history, comps_hist = out
        if self.slopes:
            e = eps_list[0]
            a, b = math.exp(-e), math.exp(e)
        else:
            a, b = 0.0, math.inf
        n = self.h.size
        lam = np.empty(n + 1)
        lam[n] = 1.0
        tiny = 1e-12
        for i in range(n - 1, -1, -1):
            y1 = lam[i + 1]
            h = float(self.h[i])
            best = None
            for p, q in comps_hist[i]:
                if not (p - tiny <= y1 <= q + tiny):
                    continue
                w0, w1 = max(p, y1 - b * h), min(q, y1 - a * h)
                for r0, r1 in _intersect(history[i], [(w0 - tiny, w1 + tiny)]):
                    cand = min(max(r0, w0), w1) if w0 <= w1 else r0
                    if best is None or cand < best:
                        best = cand
            if best is None:
                return None
            lam[i] = best
        lam[0] = 0.0
        return lam


def _clean_path(T: np.ndarray, lam: np.ndarray) -> Optional[TimeChange]:
    lam = np.clip(lam, 0.0, 1.0)
    lam[0], lam[-1] = 0.0, 1.0
    if np.any(np.diff(lam) <= 0):
        return None
    return TimeChange(T, lam)


def _check_grid(f: CadlagFn, g: CadlagFn, m: int):
    for fn in (f, g):
        jt = np.array([s for s, _ in fn.jumps()])
        if jt.size > 1 and np.min(np.diff(jt)) < 2.0 / m:
            raise GridTooCoarse(f"two jumps closer than 2/m with m={m}")


def distance_oracle(f: CadlagFn, g: CadlagFn, m: int = 1000, tol: float = 1e-9) -> DistanceResult:
    """Brute-force realization of the infimum by a level search.

    The level ``eps`` is bisected; each level is decided by propagating the
    set of reachable values ``lam(t_i)`` over the time grid ``t_i`` (the
    uniform ``m``-grid merged with the knots of ``f``), where each step obeys
    the slope cone ``[exp(-eps), exp(eps)]`` and the value constraint.  The
    reachable sets are unions of intervals, so no discretization of ``lam``'s
    values is needed.  Exact when ``f`` or ``g`` is a step function.
    """
    if m < 8:
        raise BadParam("grid size must be at least 8")
    _check_grid(f, g, m)
    if not f.is_step and g.is_step:
        return _invert(distance_oracle(g, f, m, tol), f, g)
    lower = jump_lower_bound(f, g)
    if f.is_step:
        grid = f.t.copy()
    else:
        grid = np.union1d(np.linspace(0.0, 1.0, m + 1), f.t)
    reach = _Reachability(f, [g], grid)
    hi = sup_norm_dist(f, g)
    lo = 0.0
    if reach.feasible((lo,)):
        hi = lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reach.feasible((mid,)):
            hi = mid
        else:
            lo = mid
    best = None
    for eps in (hi, hi + tol, hi + 10 * tol, hi + 1e-6):
        path = reach.witness((eps,))
        lam = None if path is None else _clean_path(grid, path)
        if lam is not None:
            vp, sp = distance_given(f, g, lam)
            cand = (max(vp, sp), vp, sp, lam)
            if best is None or cand[0] < best[0]:
                best = cand
            if cand[0] <= hi + 10 * tol:
                break
    if best is None:
        lam = TimeChange.identity()
        vp, sp = distance_given(f, g, lam)
        best = (max(vp, sp), vp, sp, lam)
    upper, vp, sp, lam = best
    return DistanceResult(
        upper=upper, lower=lower, witness=lam, value_part=vp, slope_part=sp, level=hi
    )


# ---------------------------------------------------------------------------
# Optimizer: jump-matching seeds refined by coordinate descent
# ---------------------------------------------------------------------------


def _monotone_matchings(a, b, limit):
    """All strictly increasing partial matchings between ``a`` and ``b``."""
    out = [()]
    kmax = min(len(a), len(b))
    for k in range(1, kmax + 1):
        for ia in itertools.combinations(range(len(a)), k):
            for ib in itertools.combinations(range(len(b)), k):
                out.append(tuple(zip(ia, ib)))
                if len(out) >= limit:
                    return out, True
    return out, False


class _Objective:
    def __init__(self, f, g, mode):
        self.f, self.g, self.mode = f, g, mode
        self.calls = 0

    def __call__(self, t, y):
        self.calls += 1
        if self.mode == "log":
            sp = float(np.max(np.abs(np.log(np.diff(y) / np.diff(t)))))
        else:
            sp = float(np.max(np.abs(y - t)))
        vp = _value_part_arrays(self.f, self.g, t, y)
        return max(vp, sp), vp, sp


def _seed_path(pairs, extra_t):
    """Time change through matched pairs plus extra (interpolated) knots."""
    t = [0.0] + [p for p, _ in pairs] + [1.0]
    y = [0.0] + [q for _, q in pairs] + [1.0]
    ex = [s for s in extra_t if 0.0 < s < 1.0 and s not in t]
    if ex:
        ye = np.interp(ex, t, y)
        t = t + list(ex)
        y = y + ye.tolist()
    order = np.argsort(t)
    return np.asarray(t)[order], np.asarray(y)[order]


def _coordinate_descent(obj, t, y, tol, max_evals, floor_value=0.0):
    """Compass search on interior knot values, one coordinate at a time."""
    best, _, _ = obj(t, y)
    y = y.copy()
    n = y.size
    if n <= 2 or best <= floor_value:
        return best, y
    step = 0.25 * float(np.max(np.diff(y)))
    floor = max(tol * 1e-2, 1e-12)
    while step > floor and obj.calls < max_evals:
        improved = False
        for i in range(1, n - 1):
            for direction in (1.0, -1.0):
                old = y[i]
                lo, hi = y[i - 1], y[i + 1]
                cand = old + direction * step
                if cand >= hi:
                    cand = 0.5 * (old + hi)
                elif cand <= lo:
                    cand = 0.5 * (old + lo)
                if not (lo < cand < hi) or cand == old:
                    continue
                y[i] = cand
                val, _, _ = obj(t, y)
                if val < best - 1e-15:
                    best = val
                    improved = True
                    break
                y[i] = old
            if obj.calls >= max_evals:
                break
        if best <= floor_value:
            break
        if not improved:
            step *= 0.5
    return best, y


def _one_way(f, g, knot_budget, restarts, tol, mode, max_seeds, max_evals):
    obj = _Objective(f, g, mode)
    ja = [s for s, _ in f.jumps() if 0.0 < s < 1.0]
    jb = [s for s, _ in g.jumps() if 0.0 < s < 1.0]
    matchings, truncated = _monotone_matchings(ja, jb, max_seeds)
    seeds = []
    for mt in matchings:
        pairs = [(ja[i], jb[j]) for i, j in mt]
        if len(pairs) > knot_budget:
            continue
        matched = {p for p, _ in pairs}
        spare = max(knot_budget - len(pairs), 0)
        extra = [s for s in ja if s not in matched][:spare]
        t, y = _seed_path(pairs, extra)
        val, _, _ = obj(t, y)
        seeds.append((val, len(seeds), t, y))
    seeds.sort(key=lambda s: (s[0], s[1]))
    lower = jump_lower_bound(f, g)
    best_val, best_t, best_y = math.inf, None, None
    per_seed = max(max_evals // max(1, min(restarts, len(seeds))), 50)
    for val, _, t, y in seeds[:restarts]:
        budget = obj.calls + per_seed
        refined, ry = _coordinate_descent(obj, t, y, tol, budget, lower + 1e-12)
        if refined < best_val:
            best_val, best_t, best_y = refined, t, ry
        if best_val <= lower + 1e-12:
            break
    for val, _, t, y in seeds[restarts:]:
        if val < best_val:
            best_val, best_t, best_y = val, t, y
    exhausted = truncated or obj.calls >= max_evals
    lam = TimeChange(best_t, best_y)
    vp, sp = distance_given(f, g, lam, mode)
    return DistanceResult(
        upper=max(vp, sp),
        lower=lower,
        witness=lam,
        value_part=vp,
        slope_part=sp,
        budget_exhausted=exhausted,
        mode=mode,
        evaluations=obj.calls,
    )


def distance(
    f: CadlagFn,
    g: CadlagFn,
    knot_budget: int = 8,
    restarts: int = 16,
    tolerance: float = 1e-3,
    mode: str = "log",
    max_seeds: int = 5000,
    max_evals: int = 20000,
) -> DistanceResult:
    """Bracket the Skorokhod distance between ``f`` and ``g``.

    Candidate time changes send jump times of ``f`` onto jump times of ``g``
    in order, for every monotone partial matching; the best ``restarts``
    candidates are refined by coordinate descent on the knot values.  Both
    orientations are searched (a witness for ``(g, f)`` inverts to one for
    ``(f, g)``), so the result is symmetric in its arguments.

    ``budget_exhausted`` is set when the seed list or the evaluation budget
    was cut short; the result is still the best time change found.
    """
    if knot_budget < 1 or restarts < 1 or tolerance <= 0:
        raise BadParam("knot_budget, restarts and tolerance must be positive")
    if mode not in MODES:
        raise BadParam(f"unknown mode {mode!r}")
    fwd = _one_way(f, g, knot_budget, restarts, tolerance, mode, max_seeds, max_evals)
    bwd = _invert(_one_way(g, f, knot_budget, restarts, tolerance, mode, max_seeds, max_evals), f, g)
    best = fwd if (fwd.upper, 0) <= (bwd.upper, 1) else bwd
    return DistanceResult(
        upper=best.upper,
        lower=fwd.lower,
        witness=best.witness,
        value_part=best.value_part,
        slope_part=best.slope_part,
        budget_exhausted=fwd.budget_exhausted or bwd.budget_exhausted,
        mode=mode,
        evaluations=fwd.evaluations + bwd.evaluations,
    )


def result_to_dict(res: DistanceResult) -> dict:
    out = {
        "upper": res.upper,
        "lower": res.lower,
        "value_part": res.value_part,
        "slope_part": res.slope_part,
        "mode": res.mode,
        "budget_exhausted": res.budget_exhausted,
        "witness": [{"t": t, "y": y} for t, y in res.witness.knots],
    }
    if res.level is not None:
        out["level"] = res.level
    return out
