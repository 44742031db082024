"""How the refinement factor tightens the semi-definite envelope.

Builds a random pool, certifies rho, and prints the envelope scales of the
two-sided bound next to the one-sided bounds for a few refinement factors.
"""

import numpy as np

from sdbounds import concentration as cc
from sdbounds.ensemble import expected_info, random_pool, rho_min, uniform

d, eta, delta = 3, 60, 0.05
pool = random_pool(d, eta, sigma2=0.5, seed=0)
p = uniform(eta)
ez = expected_info(pool, p)
rho = rho_min(pool, p)
print(f"rho = {rho:.3f}, lambda(E[Z]) = {np.round(np.linalg.eigvalsh(ez), 3)}")
print(f"two-sided sample complexity {cc.sample_complexity_aw(d, delta, rho):.1f}")

for gamma in (100, 400, 1600):
    print(f"\ngamma = {gamma}")
    try:
        aw = cc.AwParams.solve(d, delta, gamma, rho, p, pool=pool)
        lo, hi = cc.aw_bounds(aw, ez)
        print(f"  two-sided    scales [{lo.scale:8.2f}, {hi.scale:8.2f}]")
    except cc.InsufficientSamples as exc:
        print(f"  two-sided    infeasible ({exc})")
    for zeta in (0.0, 0.5, 1.0):
        gp = cc.GenParams.solve(d, delta, gamma, rho, p, zeta, pool=pool)
        lo, hi = cc.gen_bounds(gp, ez)
        flag = "  (lower side trivial)" if lo.trivial else ""
        print(f"  zeta = {zeta:.1f}   scales [{lo.scale:8.2f}, {hi.scale:8.2f}]{flag}")
