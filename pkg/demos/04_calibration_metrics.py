# What the recovery metrics look like for a trivially calibrated estimator.
#
# If the "posterior" is just the prior and the truths are also prior draws,
# every central credible interval covers its truth at the nominal rate. The
# coverage curve should hug the diagonal (ECE near 0), contraction should be
# near 0, and NRMSE should be about sqrt(2) prior standard deviations.

import numpy as np

from swarmroom import DEFAULT_PRIOR, run_recovery_study

report, _ = run_recovery_study(DEFAULT_PRIOR, None, None, num_cases=300, base_seed=8, method="prior")

for name, par in report.parameters.items():
    print(f"{name:>4}  ECE {par.ece:.3f}  PC {par.contraction:+.3f}  NRMSE {par.nrmse:.3f}")

print("\ncoverage of w at each credibility level (with 95% band):")
for alpha, cov, lo, hi in report.coverage_table("w"):
    mark = "" if lo <= alpha <= hi else "  <- outside band"
    print(f"  {alpha:.3f}  {cov:.3f}  [{lo:.3f}, {hi:.3f}]{mark}")

expected = np.sqrt(2 * DEFAULT_PRIOR.variances()[0])
print(f"\nNRMSE(w) for the null estimator should be near {expected:.3f}")
