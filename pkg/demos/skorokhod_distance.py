"""
Bracketing the Skorokhod distance
=================================

The distance is an infimum over time changes, so the library reports a
bracket: an analytic lower bound and the value of the best time change found.
"""
import math

from skorolab import distance, distance_oracle, jump_lower_bound, polygon, step_function
from skorolab.skorokhod import distance_given

f = step_function([(0.5, 1.0)])
g = step_function([(0.6, 1.0)])

res = distance(f, g)
print(f"optimizer: [{res.lower:.6f}, {res.upper:.6f}]   ln 1.25 = {math.log(1.25):.6f}")
print("witness knots:", res.witness.knots)

# the reachability oracle is exact for step functions
orc = distance_oracle(f, g, m=1000)
print(f"oracle upper: {orc.upper:.6f}")

# the value part and the slope part of one fixed time change
print("value part, slope part:", distance_given(f, g, res.witness))

# a continuous function is never closer than half the largest jump
ramp = polygon([0, 0.49, 0.51, 1], [0, 0, 1, 1])
print("half-jump bound for a steep ramp:", jump_lower_bound(ramp, f))
print("distance bracket:", (distance(ramp, f).lower, distance(ramp, f).upper))

# classic mode penalizes sup |lam(t) - t| instead of log slopes
print("classic mode:", round(distance(f, g, mode="classic").upper, 6))
