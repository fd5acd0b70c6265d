"""
A discontinuous limit without a common time change
==================================================

Members x_even and x_odd approach the unit step x from both sides.  With the
index equal to 2n or 2n+1 at random, one time change would have to serve
both members at once.
"""
import math

from skorolab import build_example, common_reparam_obstruction, distance

for variant in ("printed", "step"):
    print(f"-- {variant} variant")
    for n in (1, 2, 3):
        inst = build_example(n, variant)
        de = distance(inst.x_even, inst.limit)
        do = distance(inst.x_odd, inst.limit)
        obs = common_reparam_obstruction(inst)
        print(
            f"n={n}  d(x_even, x) in [{de.lower:.4f}, {de.upper:.4f}]"
            f"  d(x_odd, x) in [{do.lower:.4f}, {do.upper:.4f}]  common time change >= {obs:.3f}"
        )

# ramps stay at distance 1/2 from the step; steps converge at rate |ln(1 - 2^(1-2n))|
print("step-variant bound at n=3:", abs(math.log(1 - 2.0**-5)))
