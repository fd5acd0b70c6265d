"""Verification of limit statements.

Empirical CDFs and Kolmogorov-Smirnov distances reduce convergence in
distribution of processes to real-valued functionals (terminal value, value
at a time, supremum, integral).  :func:`convergence_sweep` runs those
reductions over growing ``n``; :func:`lemma_check` is the deterministic
counterpart for a fixed family and index sequence; :func:`rate_bound_exact`
evaluates the rate inequality for finite models in rational arithmetic.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .cadlag import CadlagFn, IndexedFamily, IndexProcess, index_compose, sup_norm_dist
from .errors import BadCdf, BadParam, EmptySample, HypothesisViolation, IndexOutOfFamily, NotFinite
from .processes import (
    FAMILY_STREAM,
    INDEX_STREAM,
    IncrementSpec,
    Seed,
    donsker_family,
    partial_sum_family,
    poisson_index,
)

__all__ = [
    "ECDF",
    "ecdf",
    "ks_two_sample",
    "ks_vs_cdf",
    "std_normal_cdf",
    "normal_cdf",
    "sup_bm_cdf",
    "uniform_cdf",
    "KOLMOGOROV_SD",
    "SweepModel",
    "FUNCTIONALS",
    "apply_functional",
    "reference_cdf",
    "sample_functional",
    "convergence_sweep",
    "LemmaReport",
    "lemma_check",
    "grid_index",
    "shift_family",
    "FiniteModel",
    "RateBoundReport",
    "rate_bound_exact",
    "mixture_lhs_joint",
    "toy_model",
    "random_finite_model",
]


class ECDF:
    """Right-continuous empirical CDF ``F(x) = #{X_i <= x} / n``."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise EmptySample("empty sample")
        self.values = x
        self.count = x.size

    def __call__(self, x):
        out = np.searchsorted(self.values, x, side="right") / self.count
        return float(out) if np.ndim(out) == 0 else out

    def strict(self, x):
        """``#{X_i < x} / n``."""
        out = np.searchsorted(self.values, x, side="left") / self.count
        return float(out) if np.ndim(out) == 0 else out


def ecdf(samples) -> ECDF:
    return ECDF(samples)


def _as_ecdf(a) -> ECDF:
    return a if isinstance(a, ECDF) else ECDF(a)


def ks_two_sample(a, b) -> float:
    a, b = _as_ecdf(a), _as_ecdf(b)
    pts = np.concatenate([a.values, b.values])
    return float(np.max(np.abs(a(pts) - b(pts))))


def ks_vs_cdf(samples, cdf: Callable) -> float:
    """One-sample KS statistic against a continuous CDF."""
    e = _as_ecdf(samples)
    u = np.unique(e.values)
    F = np.asarray(cdf(u), dtype=float)
    if np.any(~np.isfinite(F)) or np.any(F < 0) or np.any(F > 1) or np.any(np.diff(F) < 0):
        raise BadCdf("cdf must be non-decreasing with values in [0, 1]")
    return float(max(np.max(np.abs(e(u) - F)), np.max(np.abs(e.strict(u) - F))))


def std_normal_cdf(x):
    return ndtr(x)


def normal_cdf(x, var: float = 1.0):
    return ndtr(np.asarray(x) / math.sqrt(var))


def sup_bm_cdf(a):
    """Law of ``sup_{t<=1} W(t)``: ``P{sup W <= a} = max(0, 2 Phi(a) - 1)``."""
    return np.maximum(0.0, 2.0 * ndtr(a) - 1.0)


def uniform_cdf(x, lo: float = -1.0, hi: float = 1.0):
    return np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


# standard deviation of the Kolmogorov distribution; sqrt(reps) * KS converges to it
KOLMOGOROV_SD = math.sqrt(math.pi**2 / 12.0 - (math.pi / 2.0) * math.log(2.0) ** 2)


# ---------------------------------------------------------------------------
# Monte Carlo sweeps
# ---------------------------------------------------------------------------

FUNCTIONALS = ("terminal", "eval-at-t", "sup", "integral")


@dataclass(frozen=True)
class SweepModel:
    """A randomly indexed experiment.

    family
        ``"donsker"``: ``Y_k`` is the ``k``-step Donsker polygon, limit W.
        ``"partial-sums"``: ``Y_k`` is the constant path ``S_k``; with
        geometric-decay base 2 increments the limit is Uniform[-1, 1].
    index
        ``"fixed"`` (``nu_n = n``), ``"uniform"`` (``nu_n`` uniform on
        ``{ceil(lo n), ..., floor(hi n)}``) or ``"poisson"``
        (``nu_n(t) = pi(n (t + a)) + 1``).
    """

    family: str = "donsker"
    index: str = "fixed"
    increments: IncrementSpec = field(default_factory=IncrementSpec)
    lo: float = 1.0
    hi: float = 2.0
    a: float = 0.5
    t: float = 0.5

    def __post_init__(self):
        if self.family not in ("donsker", "partial-sums"):
            raise BadParam(f"unknown family {self.family!r}")
        if self.index not in ("fixed", "uniform", "poisson"):
            raise BadParam(f"unknown index {self.index!r}")
        if self.index == "uniform" and not (0 < self.lo <= self.hi):
            raise HypothesisViolation("uniform index needs 0 < lo <= hi")
        if self.index == "poisson" and not self.a > 0:
            raise HypothesisViolation("poisson index needs a > 0")
        if not 0.0 <= self.t <= 1.0:
            raise BadParam("evaluation time must lie in [0, 1]")
        if self.family == "partial-sums" and self.increments.kind != "geometric-decay":
            raise BadParam("partial-sums family needs convergent (geometric-decay) increments")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SweepModel":
        doc = dict(doc)
        allowed = {"family", "index", "increments", "lo", "hi", "a", "t"}
        unknown = set(doc) - allowed
        if unknown:
            raise BadParam(f"unknown model key(s): {', '.join(sorted(unknown))}")
        inc = doc.pop("increments", {})
        unknown = set(inc) - {"kind", "sigma", "base"}
        if unknown:
            raise BadParam(f"unknown increments key(s): {', '.join(sorted(unknown))}")
        return cls(increments=IncrementSpec(**inc), **doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["increments"] = self.increments.to_dict()
        return d

    def threshold(self) -> float:
        """The constant ``c`` with ``nu_n / f(n)`` eventually above it."""
        if self.index == "fixed":
            return 0.5
        if self.index == "uniform":
            return 0.5 * self.lo
        return self.a


def apply_functional(z: CadlagFn, functional: str, t: float = 0.5) -> float:
    if functional == "terminal":
        return float(z.v[-1])
    if functional == "eval-at-t":
        return float(z(t))
    if functional == "sup":
        return z.sup()
    if functional == "integral":
        return z.integral()
    raise BadParam(f"unknown functional {functional!r}")


def reference_cdf(model: SweepModel, functional: str) -> Callable:
    """Exact law of the functional applied to the limit process."""
    if functional not in FUNCTIONALS:
        raise BadParam(f"unknown functional {functional!r}")
    if model.family == "partial-sums":
        # the limit path is constant in t, so every functional returns S_inf
        b = model.increments.base
        if b != 2.0:
            raise BadParam("closed-form limit law only for base 2")
        return lambda x: uniform_cdf(x, -1.0, 1.0)
    if functional == "terminal":
        return std_normal_cdf
    if functional == "eval-at-t":
        t = model.t
        if t == 0.0:
            raise BadParam("W(0) = 0 is degenerate")
        return lambda x: normal_cdf(x, t)
    if functional == "sup":
        return sup_bm_cdf
    return lambda x: normal_cdf(x, 1.0 / 3.0)


def _index_path(model: SweepModel, n: int, seed: Seed) -> IndexProcess:
    if model.index == "fixed":
        return IndexProcess.constant(n, c=model.threshold(), f_n=n)
    if model.index == "uniform":
        lo = max(1, math.ceil(model.lo * n))
        hi = max(lo, math.floor(model.hi * n))
        u = seed.rng(INDEX_STREAM).random()
        k = lo + min(int(u * (hi - lo + 1)), hi - lo)
        return IndexProcess.constant(k, c=model.threshold(), f_n=n)
    return poisson_index(n, model.a, seed)


def sample_path(model: SweepModel, n: int, seed: Seed) -> CadlagFn:
    """One replicate of ``Y_{nu_n}``, built with :func:`index_compose`."""
    if model.family == "donsker":
        fam = donsker_family(model.increments, seed, FAMILY_STREAM)
    else:
        fam = partial_sum_family(model.increments, seed, FAMILY_STREAM)
    return index_compose(fam, _index_path(model, n, seed))


def sample_functional(model: SweepModel, n: int, functionals: Sequence[str], seed: Seed) -> List[float]:
    z = sample_path(model, n, seed)
    return [apply_functional(z, fn, model.t) for fn in functionals]


def _replicate_block(args):
    model, n, functionals, root, reps = args
    return [sample_functional(model, n, functionals, Seed(root, r)) for r in reps]


def convergence_sweep(
    model: SweepModel,
    ns: Sequence[int],
    functionals: Sequence[str] = ("terminal",),
    reps: int = 2000,
    seed: int = 42,
    threads: int = 1,
) -> List[dict]:
    """KS distance between the sampled functional and its limit law, per ``n``.

    Replicate ``r`` at every ``n`` uses ``Seed(seed, r)``.  ``stderr`` is the
    asymptotic standard deviation of the KS statistic, ``KOLMOGOROV_SD / sqrt(reps)``.
    """
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise BadParam("ns must be strictly increasing")
    if reps < 100:
        raise BadParam("need at least 100 replicates")
    if isinstance(functionals, str):
        functionals = (functionals,)
    refs = {fn: reference_cdf(model, fn) for fn in functionals}
    rows = []
    for n in ns:
        if threads > 1:
            chunks = np.array_split(np.arange(reps), threads * 4)
            jobs = [(model, n, tuple(functionals), seed, c.tolist()) for c in chunks if c.size]
            with ProcessPoolExecutor(max_workers=threads) as pool:
                vals = [v for block in pool.map(_replicate_block, jobs) for v in block]
        else:
            vals = _replicate_block((model, n, tuple(functionals), seed, range(reps)))
        vals = np.asarray(vals)
        for j, fn in enumerate(functionals):
            rows.append(
                {
                    "n": n,
                    "functional": fn,
                    "ks": ks_vs_cdf(vals[:, j], refs[fn]),
                    "stderr": KOLMOGOROV_SD / math.sqrt(reps),
                    "reps": reps,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Deterministic index composition
# ---------------------------------------------------------------------------


@dataclass
class LemmaReport:
    ns: List[int]
    deviations: List[float]
    normalized_min: List[float]
    threshold_ok: bool
    # rung -> first position after which every deviation stays at or below it (None if never)
    settles_at: Dict[float, Optional[int]]

    def eventually_below(self, rung: float) -> bool:
        return self.settles_at.get(rung) is not None


def lemma_check(
    family: IndexedFamily,
    indices: Sequence[IndexProcess],
    fs: Optional[Sequence[float]] = None,
    c: Optional[float] = None,
    ns: Optional[Sequence[int]] = None,
    rungs: Sequence[float] = (0.1, 0.01, 0.001),
) -> LemmaReport:
    """Uniform distance between ``x_{mu_n}`` and the family's limit, along ``n``."""
    if family.limit is None:
        raise BadParam("family has no limit member")
    devs, mins = [], []
    threshold_ok = True
    for j, mu in enumerate(indices):
        f_n = fs[j] if fs is not None else mu.f_n
        c_n = c if c is not None else mu.c
        z = index_compose(family, mu)
        devs.append(sup_norm_dist(z, family.limit))
        if f_n:
            m = float(mu.fn.v.min()) / f_n
            mins.append(m)
            if c_n is not None and not m > c_n:
                threshold_ok = False
    settles = {}
    for r in rungs:
        pos = None
        for i in range(len(devs) - 1, -1, -1):
            if devs[i] <= r:
                pos = i
            else:
                break
        settles[r] = pos
    return LemmaReport(
        ns=list(ns) if ns is not None else list(range(1, len(devs) + 1)),
        deviations=devs,
        normalized_min=mins,
        threshold_ok=threshold_ok,
        settles_at=settles,
    )


def grid_index(n: int, shift: float = 1.0, multiple: int = 1, c: float = 0.5) -> IndexProcess:
    """Step path equal to ``multiple * ceil(n (t + shift))`` at the knots ``t = j/n``.

    Between knots the path holds the knot value (right-continuity), i.e. it
    equals ``multiple * floor(n (t + shift))``.
    """
    if n < 1:
        raise BadParam("n must be positive")
    j = np.arange(n + 1)
    t = j / n
    vals = multiple * np.ceil(n * (t + shift) - 1e-9)
    v = vals
    l = np.concatenate([[vals[0]], vals[:-1]])
    return IndexProcess(CadlagFn(t, v, l), c=c, f_n=float(n))


def shift_family(limit: CadlagFn, shift: Callable[[int], float] = lambda k: 1.0 / k) -> IndexedFamily:
    """Family ``x_k = limit + shift(k)``, a constant vertical offset per member."""

    class _Shift(IndexedFamily):
        def window(self, k, lo, hi):
            self.check_index(k)
            d = shift(k)
            i0 = np.searchsorted(limit.t, lo, side="right")
            i1 = np.searchsorted(limit.t, hi, side="left")
            return (
                float(limit._right(lo)) + d,
                limit.t[i0:i1],
                limit.v[i0:i1] + d,
                limit.l[i0:i1] + d,
                float(limit._left(hi)) + d,
            )

        def value(self, k, s):
            self.check_index(k)
            return float(limit._right(s)) + shift(k)

    return _Shift(lambda k: limit.shift(shift(k)), limit=limit)


# ---------------------------------------------------------------------------
# Exact rate bound for finite models
# ---------------------------------------------------------------------------

FDist = Dict[Fraction, Fraction]


def _fdist(d: Mapping, what: str) -> FDist:
    out: FDist = {}
    for x, p in d.items():
        if isinstance(x, float) and not math.isfinite(x):
            raise NotFinite(f"{what}: non-finite atom")
        x, p = Fraction(x), Fraction(p)
        if p < 0:
            raise NotFinite(f"{what}: negative weight")
        if p:
            out[x] = out.get(x, Fraction(0)) + p
    if sum(out.values()) != 1:
        raise NotFinite(f"{what}: weights do not sum to 1 exactly")
    return out


def _strict_cdf(d: FDist, x: Fraction) -> Fraction:
    return sum((p for a, p in d.items() if a < x), Fraction(0))


def _probe_points(*dists: FDist) -> List[Fraction]:
    atoms = sorted({a for d in dists for a in d})
    pts = list(atoms)
    pts += [(a + b) / 2 for a, b in zip(atoms, atoms[1:])]
    pts += [atoms[0] - 1, atoms[-1] + 1]
    return sorted(set(pts))


def _sup_diff(a: FDist, b: FDist, pts) -> Fraction:
    return max(abs(_strict_cdf(a, x) - _strict_cdf(b, x)) for x in pts)


@dataclass
class FiniteModel:
    """Exactly computable instance of the rate-bound setting.

    ``members[k]`` is the law of ``Y_k`` for ``k = 1..K``; ``index(n)`` the law
    of ``nu_n`` on ``{1..K}``; ``norm(n)`` is ``f(n)``; ``limit_index`` the law
    of ``nu``; ``c`` the lower threshold with ``nu > c``.
    """

    members: Dict[int, FDist]
    limit: FDist
    index: Callable[[int], Mapping[int, Fraction]]
    norm: Callable[[int], Fraction]
    limit_index: FDist
    c: Fraction

    def __post_init__(self):
        self.members = {int(k): _fdist(d, f"Y_{k}") for k, d in self.members.items()}
        self.limit = _fdist(self.limit, "Y")
        self.limit_index = _fdist(self.limit_index, "nu")
        self.c = Fraction(self.c)
        if self.c <= 0:
            raise HypothesisViolation("threshold c must be positive")
        if min(self.limit_index) <= self.c:
            raise HypothesisViolation("limit index must exceed c")

    @property
    def K(self) -> int:
        return max(self.members)

    def index_law(self, n: int) -> Dict[int, Fraction]:
        raw = self.index(n)
        law = {}
        for k, p in raw.items():
            if int(k) != k or k not in self.members:
                raise NotFinite(f"nu_{n} puts mass on {k}, outside 1..{self.K}")
            law[int(k)] = Fraction(p)
        if sum(law.values()) != 1 or any(p < 0 for p in law.values()):
            raise NotFinite(f"nu_{n} is not a probability law")
        return law


@dataclass
class RateBoundReport:
    n: int
    lhs: Fraction
    term1: Fraction
    term2_printed: Fraction
    term2_sup_variant: Fraction
    rhs_printed: Fraction
    holds: bool
    rhs_sup_variant: Fraction
    holds_sup_variant: bool

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = float(v) if isinstance(v, Fraction) else v
        out["exact"] = {k: str(v) for k, v in asdict(self).items() if isinstance(v, Fraction)}
        return out


def _mixture(model: FiniteModel, law: Mapping[int, Fraction]) -> FDist:
    mix: FDist = {}
    for k, p in law.items():
        for a, q in model.members[k].items():
            mix[a] = mix.get(a, Fraction(0)) + p * q
    return mix


def rate_bound_exact(model: FiniteModel, n: int) -> RateBoundReport:
    """Both sides of the rate inequality at ``n``, exactly.

    ``lhs = sup_x |P{Y_{nu_n} < x} - P{Y < x}|`` with the law of ``Y_{nu_n}``
    the mixture ``sum_k P{nu_n = k} F_k``.  ``term1`` takes the sup over
    ``k >= max(1, floor(c f(n)))``.  ``term2_printed`` uses the infimum over
    ``x`` of the index CDF discrepancy; ``term2_sup_variant`` the supremum.
    """
    law = model.index_law(n)
    f_n = Fraction(model.norm(n))
    if f_n <= 0:
        raise HypothesisViolation("normalization f(n) must be positive")
    pts = _probe_points(model.limit, *model.members.values())
    mix = _mixture(model, law)
    lhs = _sup_diff(mix, model.limit, pts)
    per_k = {k: _sup_diff(d, model.limit, pts) for k, d in model.members.items()}
    k0 = max(1, math.floor(model.c * f_n))
    term1 = max((v for k, v in per_k.items() if k >= k0), default=Fraction(0))
    sup_all = max(per_k.values())
    scaled: FDist = {}
    for k, p in law.items():
        scaled[Fraction(k) / f_n] = scaled.get(Fraction(k) / f_n, Fraction(0)) + p
    ipts = _probe_points(scaled, model.limit_index)
    gaps = [abs(_strict_cdf(scaled, x) - _strict_cdf(model.limit_index, x)) for x in ipts]
    term2_printed = 2 * sup_all * min(gaps)
    term2_sup = 2 * sup_all * max(gaps)
    rhs = term1 + term2_printed
    rhs_sup = term1 + term2_sup
    return RateBoundReport(
        n=n,
        lhs=lhs,
        term1=term1,
        term2_printed=term2_printed,
        term2_sup_variant=term2_sup,
        rhs_printed=rhs,
        holds=lhs <= rhs,
        rhs_sup_variant=rhs_sup,
        holds_sup_variant=lhs <= rhs_sup,
    )


def mixture_lhs_joint(model: FiniteModel, n: int) -> Fraction:
    """``lhs`` recomputed from the joint law of independent ``(nu_n, Y_1..Y_K)``.

    Enumerates every outcome ``(k, y_k)`` with probability
    ``P{nu_n = k} P{Y_k = y_k}``, then takes the law of the selected value.
    """
    law = model.index_law(n)
    out: FDist = {}
    for k in sorted(law):
        pk = law[k]
        for y in sorted(model.members[k]):
            out[y] = out.get(y, Fraction(0)) + pk * model.members[k][y]
    pts = _probe_points(model.limit, *model.members.values())
    return _sup_diff(out, model.limit, pts)


def toy_model(K: int = 64) -> FiniteModel:
    """``Y_k`` is 0 w.p. ``1/2 + 2^-k`` else 1; ``Y`` fair on {0, 1}; ``nu_n`` uniform on {n, n+1}."""
    half = Fraction(1, 2)
    members = {k: {0: half + Fraction(1, 2**k), 1: half - Fraction(1, 2**k)} for k in range(1, K + 1)}
    return FiniteModel(
        members=members,
        limit={0: half, 1: half},
        index=lambda n: {n: half, n + 1: half},
        norm=lambda n: Fraction(n),
        limit_index={1: Fraction(1)},
        c=half,
    )


def _random_law(rng: np.random.Generator, atoms, size: int) -> FDist:
    pts = rng.choice(atoms, size=size, replace=False)
    w = rng.integers(1, 10, size=size)
    tot = int(w.sum())
    return {Fraction(int(a)): Fraction(int(x), tot) for a, x in zip(pts, w)}


def random_finite_model(rng: np.random.Generator, max_support: int = 4, max_K: int = 12) -> FiniteModel:
    """Random model meeting the stated hypotheses and nothing more.

    Laws of ``Y_k`` and ``Y`` live on at most ``max_support`` integer atoms;
    ``nu_n`` is an arbitrary law on ``{1..K}``; ``nu`` has atoms above ``c``;
    ``f(n)`` is chosen with ``floor(c f(n)) <= K``.
    """
    K = int(rng.integers(1, max_K + 1))
    atoms = np.arange(-3, 4)
    members = {k: _random_law(rng, atoms, int(rng.integers(1, max_support + 1))) for k in range(1, K + 1)}
    limit = _random_law(rng, atoms, int(rng.integers(1, max_support + 1)))
    c = Fraction(int(rng.integers(1, 5)), 4)
    # keep floor(c f(n)) <= K so the tail sup in term1 ranges over defined members
    f_n = Fraction(int(rng.integers(1, 4 * K + 1)), 2)
    while math.floor(c * f_n) > K:
        f_n /= 2
    idx = _random_law(rng, np.arange(1, K + 1), int(rng.integers(1, min(max_support, K) + 1)))
    idx = {int(k): p for k, p in idx.items()}
    nu_atoms = c + Fraction(1, 4) * np.arange(1, 9)
    nu = _random_law(rng, np.arange(8), int(rng.integers(1, max_support + 1)))
    nu = {nu_atoms[int(a)]: p for a, p in nu.items()}
    return FiniteModel(
        members=members,
        limit=limit,
        index=lambda n, idx=idx: idx,
        norm=lambda n, f_n=f_n: f_n,
        limit_index=nu,
        c=c,
    )
