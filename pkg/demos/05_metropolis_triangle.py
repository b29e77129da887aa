"""Finding the asymmetric triangle with simulated annealing.

With an outer ion excited, a structure with no mirror symmetry (TRIA*)
becomes stable.  Annealing from random starts, restricted to asymmetric
configurations and followed by Newton refinement, lands on the same
minimum from different seeds.
"""
# %%
import numpy as np

from crystalcat.crystal import MetropolisTrace, SpinPattern, TrapParams, metropolis_search, mirror_deviation

trap = TrapParams(3, 1.3, 0.1)
outer = SpinPattern.outer(3)

# %%
trace = MetropolisTrace()
best = metropolis_search(trap, outer, 0, trace=trace)
print(best.kind.label, "energy", round(best.energy, 10), "stable", best.stable)
print(np.round(best.config.positions, 6).tolist())
print("mirror deviations x / y:", round(mirror_deviation(best.config, "x"), 4), round(mirror_deviation(best.config, "y"), 4))

# %% Different seeds, same refined structure.
energies = [metropolis_search(trap, outer, seed).energy for seed in range(1, 6)]
print("energy spread over seeds:", np.ptp(energies))
