"""Loschmidt echo after flipping the middle ion of a Be+ crystal.

The vibrational ground state of the all-ground crystal is evolved under
the excited-sector Hamiltonian; the overlap with the initial state decays
and revives at the period of the softest excited mode.
"""
# %%
import math

import numpy as np

from crystalcat.gaussian import default_time_grid, physical_echo
from crystalcat.ramsey import revival_period, revival_times
from crystalcat.units import PhysicalTrap, length_scale, quantum_length

# %% Zigzag to zigzag close to the transition.
trap = PhysicalTrap.from_khz("Be9", 500.0, 745.0, 10.0)
print(f"l = {length_scale(trap) * 1e6:.3f} um, sigma = {quantum_length(trap):.5f} l")
series = physical_echo(trap, time_grid=default_time_grid())
meta = series.metadata
print(meta["g_structure"], "->", meta["e_structure"], "soft mode", round(meta["e_soft_frequency"], 4))
print("revival spacing", round(revival_period(series), 2), "vs 2 pi / omega_soft",
      round(2 * math.pi / meta["e_soft_frequency"], 2))

# %% Linear to linear: the soft mode only squeezes, revivals come at half its period.
series = physical_echo(PhysicalTrap.from_khz("Be9", 500.0, 775.0, 10.0), time_grid=default_time_grid())
w = series.metadata["e_soft_frequency"]
print("first revivals at", np.round(revival_times(series)[:4], 2), "; pi / omega_soft =", round(math.pi / w, 2))
print("closest return to 1:", f"{1 - series.modulus[1:].max():.2e}")

# %% Heavier ions have smaller quantum fluctuations and weaker revivals.
for species in ("Be9", "Mg24", "Ca40"):
    s = physical_echo(PhysicalTrap.from_khz(species, 500.0, 773.5, 10.0), time_grid=default_time_grid())
    T = 2 * math.pi / s.metadata["e_soft_frequency"]
    window = (s.times > 0.5 * T) & (s.times < 1.5 * T)
    print(f"{species:5s} sigma {s.metadata['sigma']:.5f}  first revival {s.modulus[window].max():.3f}")
