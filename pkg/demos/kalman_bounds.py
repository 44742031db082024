"""Steady-state covariance envelopes for a randomly selected sensor set.

The one-sided bound on the information sum is pushed through the Riccati
fixed point, and a single random draw is compared against it.
"""

import numpy as np

from sdbounds import kalman, symmat
from sdbounds.concentration import AwParams, GenParams
from sdbounds.ensemble import draw_selection, expected_info, rho_min, selection_sum, uniform
from sdbounds.harness import build_fig1_instance

inst = build_fig1_instance(seed=1)
sys, pool = inst.system, inst.pool
p = uniform(pool.eta)
ez, rho = expected_info(pool, p), rho_min(pool, p)
gamma, delta = 240, 0.05

U_bar, L_bar = kalman.ss_bounds_aw(sys, AwParams.solve(3, delta, gamma, rho, p), ez)
U, L = kalman.ss_bounds_gen(sys, GenParams.solve(3, delta, gamma, rho, p, zeta=1.0), ez)

sel = draw_selection(pool, p, gamma, seed=1)
P = kalman.steady_state(sys, selection_sum(pool, sel)).matrix

print(f"rho = {rho:.3f}; worst-case error variance lambda_max(P):")
print(f"  two-sided upper envelope  {symmat.max_eig(U_bar.matrix):.4f}")
print(f"  one-sided, zeta = 1       {symmat.max_eig(U.matrix):.4f}")
print(f"  one random draw           {symmat.max_eig(P):.4f}")
print(f"  lower envelopes           {symmat.max_eig(L_bar.matrix):.4f} / {symmat.max_eig(L.matrix):.4f}")
print("draw inside the one-sided envelope:", symmat.loewner_leq(L.matrix, P) and symmat.loewner_leq(P, U.matrix))
print("iterations to the fixed point:", U.iterations, L.iterations)
print("eigenvalues of U - P:", np.round(np.linalg.eigvalsh(U.matrix - P), 4))
