# ABC-SMC on the same kind of observation, starting from a rejection step.
#
# Generation 0 takes the closest rows of a reference table; each later
# generation perturbs the weighted population, simulates, and keeps
# proposals inside a shrinking tolerance. A population of 100 keeps the
# demo to a few minutes on one core.

import numpy as np

from swarmroom import DEFAULT_PRIOR, Scenario, SMCSchedule, abc_rejection, abc_smc, build_reference_table
from swarmroom.params import PARAM_NAMES

scenario = Scenario.from_config()
truth = np.array([0.3, 0.8, 0.8, 0.3])
observed = scenario.summary(truth, seed=5)

table = build_reference_table(DEFAULT_PRIOR, scenario, 1000, base_seed=2)
schedule = SMCSchedule(population=100, generations=3, quantile=0.5)
post = abc_smc(observed, DEFAULT_PRIOR, scenario, schedule, base_seed=11, table=table)
rej = abc_rejection(observed, table, 100 / len(table))

print("tolerances per generation:", np.round(post.info["tolerances"], 2))
print("simulations per generation:", post.info["simulations"])
print(f"effective sample size: {post.ess():.0f}")
print(f"{'':>4} {'truth':>7} {'rejection':>10} {'smc':>7}")
for name, t in zip(PARAM_NAMES, truth):
    print(f"{name:>4} {t:7.3f} {rej.median(name):10.3f} {post.median(name):7.3f}")
