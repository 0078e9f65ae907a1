# Posterior for one observed swarm from a small prior-predictive table.
#
# The reference table pairs prior draws with their 14 summary statistics.
# ABC rejection keeps the rows whose standardized summaries are closest to
# the observation. Here the table is small (600 rows) so the demo runs in
# about ten seconds; the acceptance study uses 3000 and 30000 rows.

import numpy as np

from swarmroom import DEFAULT_PRIOR, Scenario, abc_rejection, build_reference_table
from swarmroom.params import PARAM_NAMES

scenario = Scenario.from_config()
truth = np.array([0.7, 1.4, 0.6, 0.15])
observed = scenario.summary(truth, seed=99)

table = build_reference_table(DEFAULT_PRIOR, scenario, 600, base_seed=1)
post = abc_rejection(observed, table, accept_fraction=0.05)

print(f"kept {len(post)} of {len(table)} rows, tolerance {post.info['tolerance']:.2f}")
print(f"{'':>4} {'truth':>7} {'median':>7} {'2.5%':>7} {'97.5%':>7} {'prior sd':>9} {'post sd':>8}")
prior_sd = np.sqrt(DEFAULT_PRIOR.variances())
post_sd = np.sqrt(post.var())
for k, name in enumerate(PARAM_NAMES):
    print(f"{name:>4} {truth[k]:7.3f} {post.median(name):7.3f} {post.quantile(name, 0.025):7.3f} "
          f"{post.quantile(name, 0.975):7.3f} {prior_sd[k]:9.3f} {post_sd[k]:8.3f}")
