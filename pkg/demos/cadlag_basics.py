"""
Cadlag functions, time changes and random indices
=================================================

Paths in D[0, 1] are stored as knots ``(t, value, left limit)`` joined by
straight segments.  This script builds a few of them and composes them.
"""
import numpy as np

from skorolab import (
    IndexedFamily,
    IndexProcess,
    TimeChange,
    compose_time_change,
    index_compose,
    make_cadlag,
    polygon,
    step_function,
    sup_norm_dist,
)

# the unit step at 1/2: value 1 from 1/2 on, left limit 0 there
x = make_cadlag([(0, 0, 0), (0.5, 1, 0), (1, 1, 1)])
print("x(0.25), x(0.5), x(0.5-):", x(0.25), x(0.5), x.left_limit(0.5))
print("jumps:", x.jumps())

# a ramp that approximates it; the uniform distance stays 1 however steep the ramp
ramp = polygon([0, 0.45, 0.5, 1], [0, 0, 1, 1])
print("sup |ramp - x| =", sup_norm_dist(ramp, x))

# a time change moves the jump: a step at 0.6 pulled back by lam(0.5) = 0.6
lam = TimeChange.through([(0.5, 0.6)])
moved = compose_time_change(step_function([(0.6, 1.0)]), lam)
print("step at 0.6 composed with lam equals x:", moved.equals(x, atol=1e-15))

# random index: z(t) = x_{mu(t)}(t) for the family x_k = x + 1/k
family = IndexedFamily(lambda k: x.shift(1.0 / k), limit=x)
mu = IndexProcess.from_steps(2, [0.25, 0.75], [4, 10])
z = index_compose(family, mu)
grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
print("z on", grid, "->", z(grid))
print("z(0.75-) uses the old index:", z.left_limit(0.75))
