"""Which structures are stable where, with one ion excited.

A coarse scan of the (alpha, delta_alpha) plane for the middle-excited
and the outer-excited crystal.  Use the ``stability`` CLI command with the
shipped ``fig3`` / ``figA`` configs for the full 200x200 maps.
"""
# %%
import sys

import numpy as np

from crystalcat.crystal import SpinPattern
from crystalcat.plotting import plot_diagram
from crystalcat.stability import delta_alpha_critical, scan_diagram

resolution = int(sys.argv[1]) if len(sys.argv) > 1 else 30

# %% Middle ion excited: LIN X, ZZ X and ZZ Y with overlapping regions.
center = scan_diagram(resolution=resolution, spins=SpinPattern.center(3))
for kind in center.kinds:
    print(f"{kind.label:6s} stable in {int(center.stable(kind).sum())} of {resolution**2} cells")
print("cells with two or more stable structures:", int((center.count_stable() >= 2).sum()))

# %% The linear-chain boundary is the closed-form critical shift.
curve = center.curve("numeric", center.kinds[0]).points
err = np.abs(curve[:, 1] - [delta_alpha_critical(a) for a in curve[:, 0]])
print(f"numeric vs closed-form linear boundary: max {err.max():.2e}")

# %% Outer ion excited: the asymmetric triangle TRIA* appears, plus cells with nothing stable.
outer = scan_diagram(resolution=resolution, spins=SpinPattern.outer(3))
for kind in outer.kinds:
    print(f"{kind.label:6s} stable in {int(outer.stable(kind).sum())} cells")
print("no stable structure:", int((outer.count_stable() == 0).sum()), "cells")

plot_diagram("stability_center.svg", center)
plot_diagram("stability_outer.svg", outer)
