"""Monte Carlo coverage of every bound on the reference instance.

Each event should hold in at least a 1 - delta fraction of trials, up to a
three-sigma binomial allowance; in practice the bounds are conservative.
"""

import json

from sdbounds.harness import ExperimentConfig, run_coverage

cfg = ExperimentConfig(gamma=240, zetas=(0.0, 0.5, 1.0), trials=2000, seed=1)
rep = run_coverage(cfg)
print(f"rho = {rep.rho:.3f}, threshold = {rep.threshold:.4f}, excluded = {rep.n_excluded}")
print(f"two-sided: sum {rep.aw.freq_two_sided:.4f}, steady state {rep.aw.freq_ss:.4f}")
for g in rep.gen:
    print(f"zeta={g.zeta:.1f}: sum lower {g.freq_lower:.4f}, upper {g.freq_upper:.4f}; "
          f"P <= U {g.freq_ss_upper:.4f}, L <= P {g.freq_ss_lower:.4f}; "
          f"implication violations {g.implication_violations}")
print(json.dumps({"lam_P_mean": rep.lam_P_mean, "lam_P_std": rep.lam_P_std}))
