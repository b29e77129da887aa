"""Conversion between SI quantities and the dimensionless crystal units.

Lengths are measured in ``l = q^(2/3) / (4 pi eps0 m nu_x^2)^(1/3)``,
energies in ``m nu_x^2 l^2`` and times in ``1/nu_x``.  All frequencies are
angular (rad/s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# CODATA 2018
ELEMENTARY_CHARGE = 1.602176634e-19  # C
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
HBAR = 1.054571817e-34  # J s

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float  # kg
    charge: float = ELEMENTARY_CHARGE  # C

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"ion mass must be positive, got {self.mass}")
        if not self.charge > 0:
            raise ValueError(f"ion charge must be positive, got {self.charge}")

    @classmethod
    def from_amu(cls, name: str, mass_amu: float, charge_state: int = 1) -> "IonSpecies":
        return cls(name, mass_amu * ATOMIC_MASS_UNIT, charge_state * ELEMENTARY_CHARGE)


SPECIES = {
    "Be9": IonSpecies.from_amu("Be9", 9.0122),
    "Mg24": IonSpecies.from_amu("Mg24", 23.985),
    "Ca40": IonSpecies.from_amu("Ca40", 39.963),
    "Sr88": IonSpecies.from_amu("Sr88", 87.906),
}


def get_species(name: str) -> IonSpecies:
    """Look up a species by name (case-insensitive, ``+`` suffix ignored)."""
    key = name.strip().rstrip("+").lower()
    for species_name, species in SPECIES.items():
        if species_name.lower() == key:
            return species
    raise KeyError(f"unknown ion species {name!r}; known: {sorted(SPECIES)}")


def register_species(species: IonSpecies) -> None:
    SPECIES[species.name] = species


@dataclass(frozen=True)
class PhysicalTrap:
    """Trap frequencies in rad/s.

    ``delta_nu_y`` is the transverse frequency shift felt by ions in the
    excited internal state.
    """

    species: IonSpecies
    nu_x: float
    nu_y: float
    delta_nu_y: float = 0.0

    def __post_init__(self):
        if not self.nu_x > 0:
            raise ValueError(f"nu_x must be positive, got {self.nu_x}")
        if not self.nu_y > 0:
            raise ValueError(f"nu_y must be positive, got {self.nu_y}")

    @classmethod
    def from_khz(cls, species, nu_x_khz, nu_y_khz, delta_nu_y_khz=0.0) -> "PhysicalTrap":
        """Build a trap from ordinary frequencies in kHz (``nu = 2 pi f``)."""
        if isinstance(species, str):
            species = get_species(species)
        scale = TWO_PI * 1e3
        return cls(species, nu_x_khz * scale, nu_y_khz * scale, delta_nu_y_khz * scale)

    @property
    def alpha(self) -> float:
        return self.nu_y / self.nu_x

    @property
    def delta_alpha(self) -> float:
        return self.delta_nu_y / self.nu_x


def length_scale(trap: PhysicalTrap) -> float:
    """Characteristic inter-ion distance ``l`` in meters."""
    q, m = trap.species.charge, trap.species.mass
    return q ** (2.0 / 3.0) / (4.0 * math.pi * VACUUM_PERMITTIVITY * m * trap.nu_x**2) ** (1.0 / 3.0)


def energy_scale(trap: PhysicalTrap) -> float:
    """Energy unit ``m nu_x^2 l^2`` in joules."""
    return trap.species.mass * trap.nu_x**2 * length_scale(trap) ** 2


def quantum_length(trap: PhysicalTrap) -> float:
    """Oscillator length ``sqrt(hbar / (m nu_x))`` in units of ``l``.

    Its square is the effective Planck constant of the dimensionless
    dynamics; this is how the ion mass enters the quantum overlaps.
    """
    return math.sqrt(HBAR / (trap.species.mass * trap.nu_x)) / length_scale(trap)


def to_dimensionless(trap: PhysicalTrap, n_ions: int = 3):
    """Aspect ratios of ``trap`` packaged as :class:`~crystalcat.crystal.TrapParams`."""
    from .crystal import TrapParams

    return TrapParams(n_ions, trap.alpha, trap.delta_alpha)


def to_physical_time(t, trap: PhysicalTrap):
    """Dimensionless time (units of ``1/nu_x``) to seconds."""
    return t / trap.nu_x


def to_dimensionless_time(t_seconds, trap: PhysicalTrap):
    return t_seconds * trap.nu_x


def angular_to_khz(omega, trap: PhysicalTrap):
    """Dimensionless angular frequency (units of ``nu_x``) to ordinary kHz."""
    return omega * trap.nu_x / TWO_PI / 1e3
