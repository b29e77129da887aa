"""From the echo to what a Ramsey experiment records, and its spectrum."""
# %%
import numpy as np

from crystalcat.gaussian import default_time_grid, physical_echo
from crystalcat.ramsey import ramsey_p1, ramsey_p2, reconstruct, spectrum
from crystalcat.units import PhysicalTrap, angular_to_khz

trap = PhysicalTrap.from_khz("Be9", 500.0, 773.5, 10.0)
series = physical_echo(trap, time_grid=default_time_grid())

# %% Two Ramsey sequences give Re I and Im I; together they rebuild the echo.
p1, p2 = ramsey_p1(series), ramsey_p2(series)
print("P1 range", p1.min().round(3), p1.max().round(3), " P2 range", p2.min().round(3), p2.max().round(3))
print("reconstruction error", np.abs(reconstruct(p1, p2) - series.values).max())

# %% Spectrum of |I|: the strongest line is tied to the soft excited mode.
for window in ("none", "hann"):
    spec = spectrum(series, window)
    peak = spec.dominant()
    print(f"{window:5s} dominant omega {peak:.4f} ({angular_to_khz(peak, trap):.1f} kHz), bin {spec.bin_width:.4f},"
          f" Parseval {spec.parseval_energy():.6g} vs {spec.signal_energy:.6g}")
print("soft excited mode", round(series.metadata["e_soft_frequency"], 4))
