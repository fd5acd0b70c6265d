"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line that is printed in
the terminal summary, then asserts at the stated tolerance.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from skorolab.cadlag import CadlagFn, IndexedFamily, step_function
from skorolab.counterexample import build_example, common_reparam_obstruction
from skorolab.limits import (
    SweepModel,
    convergence_sweep,
    grid_index,
    lemma_check,
    mixture_lhs_joint,
    random_finite_model,
    rate_bound_exact,
    shift_family,
    toy_model,
)
from skorolab.processes import IncrementSpec
from skorolab.skorokhod import distance, distance_oracle, jump_lower_bound


def report(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def random_pl(rng):
    """Piecewise-linear cadlag function on the 1/64 grid, with occasional jumps."""
    k = int(rng.integers(0, 4))
    t = np.r_[0.0, np.sort(rng.choice(np.arange(1, 64), k, replace=False)) / 64, 1.0]
    v = rng.uniform(-1, 1, t.size)
    l = np.where(rng.random(t.size) < 0.3, rng.uniform(-1, 1, t.size), v)
    l[0] = v[0]
    return CadlagFn(t, v, l)


def random_steps(rng):
    k = int(rng.integers(0, 5))
    times = np.sort(rng.choice(np.arange(1, 64), k, replace=False)) / 64
    sizes = rng.choice([-1.0, -0.5, 0.5, 1.0], k)
    return step_function(list(zip(times, sizes)), start=float(rng.uniform(-1, 1)))


def test_criterion_1_metric_axioms():
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    self_max = sym_max = 0.0
    for _ in range(200):
        f, g = random_pl(rng), random_pl(rng)
        self_max = max(self_max, distance(f, f).upper)
        sym_max = max(sym_max, abs(distance(f, g).upper - distance(g, f).upper))
    tri_worst = -np.inf
    for _ in range(100):
        f, g, h = random_pl(rng), random_pl(rng), random_pl(rng)
        tri_worst = max(tri_worst, distance(f, h).upper - distance(f, g).upper - distance(g, h).upper)
    elapsed = time.perf_counter() - start
    ok = self_max <= 1e-9 and sym_max <= 2e-3 and tri_worst <= 5e-3 and elapsed < 120
    report(
        1, ok,
        f"max d(f,f)={self_max:.2e} max asym={sym_max:.2e} worst triangle excess={tri_worst:.3e} time={elapsed:.0f}s",
    )


def test_criterion_2_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst_gap, worst_lb = 0.0, np.inf
    for _ in range(50):
        f, g = random_steps(rng), random_steps(rng)
        opt, orc = distance(f, g), distance_oracle(f, g, m=1000)
        lb = jump_lower_bound(f, g)
        worst_gap = max(worst_gap, abs(opt.upper - orc.upper))
        worst_lb = min(worst_lb, opt.upper - lb, orc.upper - lb)
    ok = worst_gap <= 2e-3 and worst_lb >= -1e-12
    report(2, ok, f"max |optimizer - oracle|={worst_gap:.2e} min margin over jump bound={worst_lb:.3g}")


def test_criterion_3_half_jump_certificate():
    failures = []
    step_uppers = []
    for n in range(1, 7):
        inst = build_example(n)
        for name, member in (("even", inst.x_even), ("odd", inst.x_odd)):
            res = distance(member, inst.limit)
            if res.lower < 0.5 or res.upper < 0.5 - 1e-3:
                failures.append(f"printed n={n} {name}: [{res.lower}, {res.upper}]")
        for variant in ("printed", "step"):
            obs = common_reparam_obstruction(build_example(n, variant))
            if obs < 0.5:
                failures.append(f"{variant} n={n} obstruction {obs}")
        step = build_example(n, "step")
        bound = abs(math.log(1 - 2.0 ** (1 - 2 * n))) + 2e-3
        ups = [distance(step.x_even, step.limit).upper, distance(step.x_odd, step.limit).upper]
        if max(ups) > bound:
            failures.append(f"step n={n} upper {max(ups)} > {bound}")
        step_uppers.append(ups)
    for a, b in zip(step_uppers, step_uppers[1:]):
        if not (b[0] < a[0] and b[1] < a[1]):
            failures.append("step-variant uppers not decreasing")
    detail = "; ".join(failures) if failures else (
        "printed lower=0.5 for n=1..6, obstruction>=0.5 both variants, step uppers "
        + ", ".join(f"{u[0]:.4f}" for u in step_uppers)
    )
    report(3, not failures, detail)


def test_criterion_4_donsker_baseline():
    start = time.perf_counter()
    rows = convergence_sweep(SweepModel(), [4096], ["terminal", "sup"], reps=2000, seed=42, threads=1)
    elapsed = time.perf_counter() - start
    ks = {r["functional"]: r["ks"] for r in rows}
    ok = ks["terminal"] <= 0.05 and ks["sup"] <= 0.06 and elapsed < 60
    report(4, ok, f"KS terminal={ks['terminal']:.4f} sup={ks['sup']:.4f} time={elapsed:.1f}s")


def test_criterion_5_uniform_random_index():
    model = SweepModel(index="uniform", lo=1.0, hi=2.0)
    assert model.threshold() == 0.5
    ks = convergence_sweep(model, [4096], ["terminal"], reps=2000, seed=42)[0]["ks"]
    report(5, ks <= 0.05, f"KS terminal={ks:.4f}")


def test_criterion_6_poisson_indexed_sums():
    inc = IncrementSpec("geometric-decay", base=2.0)
    ks = {}
    for label, func, t in (("terminal", "terminal", 0.5), ("t=0.25", "eval-at-t", 0.25), ("t=0.75", "eval-at-t", 0.75)):
        model = SweepModel(family="partial-sums", index="poisson", increments=inc, a=0.5, t=t)
        ks[label] = convergence_sweep(model, [200], [func], reps=2000, seed=42)[0]["ks"]
    ok = all(v <= 0.05 for v in ks.values())
    report(6, ok, " ".join(f"KS {k}={v:.4f}" for k, v in ks.items()))


def test_criterion_7_time_varying_index():
    model = SweepModel(family="donsker", index="poisson", a=1.0)
    ks = convergence_sweep(model, [1024], ["terminal"], reps=1000, seed=42)[0]["ks"]
    report(7, ks <= 0.06, f"KS terminal={ks:.4f}")


def test_criterion_8_rate_bound():
    start = time.perf_counter()
    toy = toy_model()
    toy_ok = all(rate_bound_exact(toy, n).holds for n in range(1, 21))
    rng = np.random.default_rng(2024)
    printed_bad = sup_bad = mixture_bad = 0
    first = None
    for _ in range(500):
        model = random_finite_model(rng)
        r = rate_bound_exact(model, 1)
        mixture_bad += mixture_lhs_joint(model, 1) != r.lhs
        sup_bad += not r.holds_sup_variant
        if not r.holds:
            printed_bad += 1
            first = first or r
    elapsed = time.perf_counter() - start
    ok = toy_ok and printed_bad == 0 and elapsed < 30
    detail = (
        f"toy n=1..20 {'holds' if toy_ok else 'fails'}; random models: {printed_bad}/500 violate the printed bound"
        f" ({sup_bad} violate the sup variant, {mixture_bad} mixture mismatches); time={elapsed:.1f}s"
    )
    if first is not None:
        detail += f"; e.g. lhs={first.lhs} > rhs={first.rhs_printed}"
    report(8, ok, detail)


def test_criterion_9_lemma_deviation():
    ns = [10, 100, 1000]
    x = step_function([(0.5, 1.0)])
    rep = lemma_check(shift_family(x), [grid_index(n) for n in ns], ns=ns)
    errs = [abs(d - 1.0 / n) / math.ulp(1.0 / n) for n, d in zip(ns, rep.deviations)]
    report(9, max(errs) <= 4, f"deviations={rep.deviations} max error={max(errs):.0f} ulp")


CLI_RUNS = [
    ["lemma-check", "--ns", "10,100"],
    ["rate-bound", "--n-range", "1..5"],
    ["counterexample", "--n", "1..1", "--variant", "step", "--grid", "100"],
    ["sample", "--what", "donsker", "--n", "64", "--seed", "9"],
    ["sample", "--what", "poisson-index", "--n", "64", "--rep", "3"],
    ["sweep", "--model", "{model}", "--ns", "32,64", "--reps", "200", "--threads", "2"],
    ["distance", "--f", "{f}", "--g", "{g}"],
]


def test_criterion_10_reproducibility(tmp_path):
    from skorolab.cadlag import write_cadlag

    paths = {"model": tmp_path / "m.json", "f": tmp_path / "f.json", "g": tmp_path / "g.json"}
    paths["model"].write_text(json.dumps({"family": "donsker", "index": "poisson", "a": 1.0}))
    write_cadlag(step_function([(0.25, 1.0), (0.5, -1.0)]), paths["f"])
    write_cadlag(step_function([(0.3, 1.0), (0.6, -1.0)]), paths["g"])
    mismatched = []
    for args in CLI_RUNS:
        args = [a.format(**{k: str(v) for k, v in paths.items()}) for a in args]
        outs = []
        for rep in range(2):
            out = tmp_path / f"out{rep}"
            res = subprocess.run([sys.executable, "-m", "skorolab", *args, "--out", str(out)], capture_output=True)
            assert res.returncode == 0, res.stderr.decode()
            outs.append(out.read_bytes())
        if outs[0] != outs[1]:
            mismatched.append(args[0])
    report(10, not mismatched, f"{len(CLI_RUNS)} configs run twice, mismatches={mismatched or 'none'}")
