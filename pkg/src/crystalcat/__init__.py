"""Trapped-ion crystal structures and their quantum superpositions.

Equilibria and normal modes of small ion crystals in state-dependent
harmonic traps, stability diagrams of the structures, and the Loschmidt
echo / Ramsey signal produced when one ion is flipped into the state that
feels a different transverse confinement.
"""

__version__ = "0.1.0"

from .crystal import (  # noqa: E402
    IonConfiguration,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    classify,
    find_equilibrium,
    metropolis_search,
    potential_energy,
)
from .gaussian import (  # noqa: E402
    GaussianPureState,
    OverlapSeries,
    QuadraticModel,
    evolve,
    ground_state,
    loschmidt_echo,
    overlap,
    physical_echo,
)
from .modes import NormalModes, normal_modes  # noqa: E402
from .ramsey import ramsey_p1, ramsey_p2, revival_times, spectrum  # noqa: E402
from .stability import scan_diagram  # noqa: E402
from .units import PhysicalTrap, get_species  # noqa: E402
