"""
Donsker polygons under random indices
=====================================

Monte Carlo checks that randomly indexed processes keep their limit laws.
KS is the Kolmogorov distance to the exact limit CDF; stderr is the
asymptotic standard deviation of KS at this replicate count.
"""
from skorolab import (
    IncrementSpec,
    Seed,
    SweepModel,
    convergence_sweep,
    donsker_polygon,
    grid_index,
    lemma_check,
    step_function,
)
from skorolab.limits import shift_family

# one polygon: constant +1 increments give the line X(t) = 2t at n = 4
print("X(1) for constant increments:", donsker_polygon(IncrementSpec("constant"), 4, Seed(0))(1.0))

# plain Donsker: terminal value and supremum
for row in convergence_sweep(SweepModel(), [64, 256, 1024], ["terminal", "sup"], reps=1000, seed=42):
    print(row)

# index uniform on {n, ..., 2n}
print(convergence_sweep(SweepModel(index="uniform"), [1024], ["terminal"], reps=1000, seed=42))

# partial sums with geometrically decaying increments, Poisson index: limit Uniform[-1, 1]
m = SweepModel(family="partial-sums", index="poisson", increments=IncrementSpec("geometric-decay"))
print(convergence_sweep(m, [200], ["terminal"], reps=1000, seed=42))

# deterministic check: x_k = x + 1/k along mu_n(t) = ceil(n (t + 1)) is off by exactly 1/n
x = step_function([(0.5, 1.0)])
rep = lemma_check(shift_family(x), [grid_index(n) for n in (10, 100, 1000)], ns=[10, 100, 1000])
print("deviations:", rep.deviations, "index above c:", rep.threshold_ok)
