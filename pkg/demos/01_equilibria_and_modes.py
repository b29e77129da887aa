"""Equilibria and normal modes of a three-ion crystal.

Walks through the homogeneous linear chain, the zigzag below the critical
aspect ratio, and what happens to the mode spectrum when only the middle
ion feels a stiffer transverse trap.
"""
# %%
import numpy as np

from crystalcat.crystal import (
    ALPHA_CRITICAL,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    find_equilibrium,
)
from crystalcat.modes import branch_sweep, linear_center_excited_frequencies, normal_modes

ground = SpinPattern.ground(3)
print(f"critical aspect ratio alpha_c = {ALPHA_CRITICAL:.6f}")

# %% Above alpha_c the ions line up along x at 0 and +-(5/4)^(1/3).
trap = TrapParams(3, 1.8, 0.0)
line = find_equilibrium(trap, ground, [[-1.0, 0.02], [0.0, -0.01], [1.0, 0.0]])
print(line.kind.label, np.round(line.config.positions, 6).tolist())
print("modes:", np.round(normal_modes(line.config, trap, ground).frequencies, 6))

# %% Below alpha_c the line is a saddle and the crystal buckles into a zigzag.
trap = TrapParams(3, 1.3, 0.0)
zz = find_equilibrium(trap, ground, analytic_equilibrium(StructureKind.ZIGZAG_X, trap, ground))
print(zz.kind.label, np.round(zz.config.positions, 6).tolist())
print("modes:", np.round(normal_modes(zz.config, trap, ground).frequencies, 6))

# %% The soft mode goes to zero from both sides of the transition.
alphas = np.linspace(1.3, 1.8, 11)
freqs, kinds = branch_sweep(alphas)
for a, f, k in zip(alphas, freqs, kinds):
    print(f"alpha {a:.2f}  {k.label:5s}  lowest {f[0]:.4f}")

# %% Exciting the middle ion (delta_alpha > 0) stiffens one transverse direction.
print(np.round(linear_center_excited_frequencies(1.6, 0.1), 6))
