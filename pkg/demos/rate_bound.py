"""
Exact rate bound for finite models
==================================

For laws with finitely many atoms every term of the rate inequality can be
computed in rational arithmetic.  Two versions of the second term are shown:
the infimum over x of the index CDF gap, and the supremum.
"""
import numpy as np

from skorolab import rate_bound_exact, toy_model
from skorolab.limits import random_finite_model

toy = toy_model()
for n in (1, 2, 5, 10):
    r = rate_bound_exact(toy, n)
    print(f"n={n:2d}  lhs={r.lhs}  term1={r.term1}  term2(inf)={r.term2_printed}  holds={r.holds}")

# random models meeting the hypotheses: the inf form can fail, the sup form does not
rng = np.random.default_rng(2024)
reports = [rate_bound_exact(random_finite_model(rng), 1) for _ in range(500)]
print("violations with inf:", sum(not r.holds for r in reports), "of", len(reports))
print("violations with sup:", sum(not r.holds_sup_variant for r in reports))
bad = next(r for r in reports if not r.holds)
print("one violation:", bad.lhs, ">", bad.rhs_printed)
