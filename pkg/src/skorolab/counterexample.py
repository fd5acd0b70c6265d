"""Discontinuous limits: the ramp/step example and the common-reparameterization obstruction.

Members ``x_even`` and ``x_odd`` approach the unit step ``x`` at 1/2 from the
left and from the right.  With the index equal to ``2n`` or ``2n + 1`` with
probability 1/2 each, a single time change would have to serve both members
at once, which fails near the jump of ``x``.

Two variants are built:

``printed``
    continuous ramps ``x_even`` on ``[1/2 - 2^-2n, 1/2]`` and ``x_odd`` on
    ``[1/2, 1/2 + 2^-(2n+1)]``;
``step``
    unit steps at the left ends of those ramps (``x_even``) and the right end
    (``x_odd``), for which every member does converge to ``x`` in the
    Skorokhod metric.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cadlag import CadlagFn, TimeChange, make_cadlag, step_function
from .errors import BadParam, GridTooCoarse
from .skorokhod import _Reachability, distance, distance_given, jump_lower_bound

__all__ = [
    "ExampleInstance",
    "build_example",
    "printed_x_even",
    "printed_x_odd",
    "printed_lambda_even",
    "printed_lambda_odd",
    "unit_step",
    "deviation_report",
    "common_reparam_obstruction",
    "obstruction_certificate",
    "counterexample_row",
]

VARIANTS = ("printed", "step")


def unit_step(at: float = 0.5) -> CadlagFn:
    return step_function([(at, 1.0)])


def printed_x_even(n: int, t):
    t = np.asarray(t, dtype=float)
    a = 0.5 - 2.0 ** (-2 * n)
    ramp = 2.0 ** (2 * n) * t + 1.0 - 2.0 ** (2 * n - 1)
    return np.where(t <= a, 0.0, np.where(t <= 0.5, ramp, 1.0))


def printed_x_odd(n: int, t):
    t = np.asarray(t, dtype=float)
    b = 0.5 + 2.0 ** (-2 * n - 1)
    ramp = 2.0 ** (2 * n + 1) * t - 2.0 ** (2 * n)
    return np.where(t <= 0.5, 0.0, np.where(t <= b, ramp, 1.0))


def printed_lambda_even(n: int, t):
    t = np.asarray(t, dtype=float)
    d = 2.0 ** (1 - 2 * n)
    return np.where(t <= 0.5, (1.0 - d) * t, (1.0 + d) * t - d)


def printed_lambda_odd(n: int, t, intercept: Optional[float] = None):
    """Odd reparameterization with an adjustable second-piece intercept.

    Taken literally (``intercept = 2^(1-2n)``) the map ends at ``1 + 2^-2n``
    and is discontinuous at 1/2; ``intercept = 2^-2n`` pins ``(1, 1)``.
    """
    t = np.asarray(t, dtype=float)
    d = 2.0 ** (-2 * n)
    c = 2.0 ** (1 - 2 * n) if intercept is None else intercept
    return np.where(t <= 0.5, (1.0 + d) * t, (1.0 - d) * t + c)


@dataclass(frozen=True)
class ExampleInstance:
    n: int
    variant: str
    x_even: CadlagFn
    x_odd: CadlagFn
    lam_even: TimeChange
    lam_odd: TimeChange
    limit: CadlagFn


def build_example(n: int, variant: str = "printed") -> ExampleInstance:
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 25):
        raise BadParam("n must be an integer in 1..25")
    if variant not in VARIANTS:
        raise BadParam(f"unknown variant {variant!r}")
    n = int(n)
    a = 0.5 - 2.0 ** (-2 * n)
    b = 0.5 + 2.0 ** (-2 * n - 1)
    if variant == "printed":
        x_even = make_cadlag(
            [(0.0, 0.0, 0.0), (a, float(printed_x_even(n, a)), 0.0), (0.5, float(printed_x_even(n, 0.5)), 1.0), (1.0, 1.0, 1.0)]
        )
        x_odd = make_cadlag(
            [(0.0, 0.0, 0.0), (0.5, float(printed_x_odd(n, 0.5)), 0.0), (b, float(printed_x_odd(n, b)), 1.0), (1.0, 1.0, 1.0)]
        )
    else:
        x_even = unit_step(a)
        x_odd = unit_step(b)
    lam_even = TimeChange([0.0, 0.5, 1.0], [0.0, float(printed_lambda_even(n, 0.5)), 1.0])
    d = 2.0 ** (-2 * n)
    lam_odd = TimeChange([0.0, 0.5, 1.0], [0.0, float(printed_lambda_odd(n, 0.5, intercept=d)), 1.0])
    return ExampleInstance(n, variant, x_even, x_odd, lam_even, lam_odd, unit_step(0.5))


def deviation_report(inst: ExampleInstance, **distance_opts) -> dict:
    """Deviations under the given reparameterizations plus distance brackets.

    ``d_A = sup |x_n(lam_n(t)) - x(t)|`` and ``d_B = sup |x_n(t) - x(lam_n(t))|``.
    """
    x = inst.limit
    out = {"n": inst.n, "variant": inst.variant}
    for name, member, lam in (("even", inst.x_even, inst.lam_even), ("odd", inst.x_odd, inst.lam_odd)):
        out[f"d_A_{name}"] = distance_given(x, member, lam)[0]
        out[f"d_B_{name}"] = distance_given(member, x, lam)[0]
        res = distance(member, x, **distance_opts)
        out[f"dist_{name}_lower"] = res.lower
        out[f"dist_{name}_upper"] = res.upper
    return out


def obstruction_certificate(inst: ExampleInstance) -> float:
    """Analytic lower bound for the common-reparameterization deviation.

    Continuous members: half the jump of the limit.  Unit-step members at two
    different times: ``mu(1/2)`` cannot equal both jump times, so one member
    misses the jump of the limit by a full unit, in particular by at least 1/2.
    """
    x = inst.limit
    cert = max(jump_lower_bound(inst.x_even, x), jump_lower_bound(inst.x_odd, x))
    je, jo = inst.x_even.jumps(), inst.x_odd.jumps()
    if len(je) == 1 and len(jo) == 1 and je[0][0] != jo[0][0] and len(x.jumps()) == 1:
        cert = max(cert, 0.5)
    return cert


def _min_level(reach: _Reachability, fixed: Optional[float], hi: float, tol: float) -> float:
    def ok(e):
        return reach.feasible((e, e) if fixed is None else (fixed, e))

    if not ok(hi):
        return np.inf
    lo = 0.0
    if ok(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def common_reparam_obstruction(inst: ExampleInstance, grid: int = 1000, form: str = "max", tol: float = 1e-7) -> float:
    """Smallest deviation achievable by one time change applied to both members.

    ``form="max"`` minimizes ``max(sup|x_even(mu) - x|, sup|x_odd(mu) - x|)``;
    ``form="mean"`` minimizes the average of the two sups, the averaged form of
    the mixture deviation.  Feasibility is decided by reachability over the
    cells of the piecewise-constant limit, which is exact; for ``"mean"`` the
    even member's level is scanned on ``grid + 1`` points and the odd one is
    bisected.
    """
    if grid < 100:
        raise GridTooCoarse("grid must be at least 100")
    if form not in ("max", "mean"):
        raise BadParam(f"unknown form {form!r}")
    x = inst.limit
    if not x.is_step:
        raise BadParam("limit must be piecewise constant")
    reach = _Reachability(x, [inst.x_even, inst.x_odd], x.t.copy(), slopes=False)
    top = max(abs(f.sup() - x.inf()) for f in (inst.x_even, inst.x_odd))
    top = max(top, max(abs(f.inf() - x.sup()) for f in (inst.x_even, inst.x_odd)))
    if form == "max":
        return _min_level(reach, None, top, tol)
    best = np.inf
    for e in np.linspace(0.0, top, grid + 1):
        o = _min_level(reach, float(e), top, tol)
        best = min(best, 0.5 * (e + o))
    return float(best)


def counterexample_row(inst: ExampleInstance, grid: int = 1000, **distance_opts) -> dict:
    row = deviation_report(inst, **distance_opts)
    row["obstruction"] = common_reparam_obstruction(inst, grid, "max")
    row["eq2_value"] = common_reparam_obstruction(inst, grid, "mean")
    row["certificate"] = obstruction_certificate(inst)
    return row
