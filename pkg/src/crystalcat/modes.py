"""Normal modes of a crystal about an equilibrium.

Frequencies are in units of the axial trap frequency.  Negative Hessian
eigenvalues are kept and reported as signed frequencies
``sign(lam) * sqrt(|lam|)`` so unstable directions stay visible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .crystal import (
    ALPHA_CRITICAL,
    STABILITY_FLOOR,
    EquilibriumResult,
    IonConfiguration,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    evaluate_equilibrium,
    gradient,
    hessian,
)
from .exceptions import PreconditionError

DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class NormalModes:
    frequencies: np.ndarray  # signed, ascending
    vectors: np.ndarray  # column k pairs with frequencies[k]
    eigenvalues: np.ndarray
    stable: bool

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    def squared(self) -> np.ndarray:
        return self.eigenvalues


def signed_sqrt(lam):
    lam = np.asarray(lam, dtype=float)
    return np.sign(lam) * np.sqrt(np.abs(lam))


def _canonical_basis(Q):
    """Deterministic orthonormal basis of span(Q).

    Standard basis vectors are projected onto the subspace in index order and
    Gram-Schmidt orthogonalised, so the result does not depend on the
    arbitrary rotation LAPACK returns inside a degenerate cluster.
    """
    k = Q.shape[1]
    P = Q @ Q.T
    basis = []
    for i in range(Q.shape[0]):
        v = P[:, i].copy()
        for b in basis:
            v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
        if len(basis) == k:
            break
    return np.column_stack(basis)


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def modes_from_hessian(H) -> NormalModes:
    lam, V = np.linalg.eigh(H)
    scale = max(1.0, np.abs(lam).max())
    start = 0
    while start < lam.size:
        stop = start + 1
        while stop < lam.size and lam[stop] - lam[stop - 1] < DEGENERACY_GAP * scale:
            stop += 1
        if stop - start > 1:
            V[:, start:stop] = _canonical_basis(V[:, start:stop])
        start = stop
    V = _fix_signs(V)
    return NormalModes(
        frequencies=signed_sqrt(lam),
        vectors=V,
        eigenvalues=lam,
        stable=bool(lam[0] > STABILITY_FLOOR),
    )


def normal_modes(equilibrium, trap: TrapParams, spins: SpinPattern, tol: float = 1e-10) -> NormalModes:
    """Eigen-decomposition of the Hessian at an equilibrium.

    ``equilibrium`` may be an :class:`EquilibriumResult` or a configuration;
    either way its gradient norm must be below ``tol``.
    """
    config = equilibrium.config if isinstance(equilibrium, EquilibriumResult) else equilibrium
    config = config if isinstance(config, IonConfiguration) else IonConfiguration(config)
    gnorm = np.linalg.norm(gradient(config, trap, spins))
    if gnorm > tol:
        raise PreconditionError(f"not an equilibrium: gradient norm {gnorm:.2e} > {tol:.0e}")
    return modes_from_hessian(hessian(config, trap, spins))


def linear_chain_frequencies(alpha: float) -> np.ndarray:
    """Homogeneous three-ion linear chain: three axial then three
    transverse frequencies, signed."""
    axial = [1.0, math.sqrt(3.0), math.sqrt(29.0 / 5.0)]
    transverse = signed_sqrt([alpha**2 - ALPHA_CRITICAL**2, alpha**2 - 1.0, alpha**2])
    return np.sort(np.concatenate([axial, transverse]))


def linear_center_excited_squared(alpha: float, delta_alpha: float) -> np.ndarray:
    """Squared frequencies of the linear chain with the middle ion excited."""
    a, d = alpha, delta_alpha
    rho = math.sqrt(128.0 + (5.0 * d * (2.0 * a + d) - 4.0) ** 2)
    common = a**2 + a * d
    return np.array([
        1.0,
        3.0,
        29.0 / 5.0,
        a**2 - 1.0,
        common - (12.0 - 5.0 * d**2 - rho) / 10.0,
        common - (12.0 - 5.0 * d**2 + rho) / 10.0,
    ])


def linear_center_excited_frequencies(alpha: float, delta_alpha: float) -> np.ndarray:
    """Six signed frequencies, ascending; a negative entry flags an
    unstable linear chain."""
    return np.sort(signed_sqrt(linear_center_excited_squared(alpha, delta_alpha)))


def homogeneous_structure(alpha: float) -> StructureKind:
    return StructureKind.LIN_X if alpha > ALPHA_CRITICAL else StructureKind.ZIGZAG_X


def branch_sweep(alphas, delta_alpha: float = 0.0, spins: SpinPattern | None = None):
    """Mode frequencies of the stable three-ion structure along ``alphas``.

    Below the linear-zigzag point the x-zigzag is used, above it the linear
    chain.  Returns ``(frequencies, kinds)`` with ``frequencies`` of shape
    ``(len(alphas), 6)``.
    """
    spins = spins or SpinPattern.ground(3)
    out = np.empty((len(alphas), 6))
    kinds = []
    for i, alpha in enumerate(alphas):
        trap = TrapParams(3, float(alpha), delta_alpha)
        kind = StructureKind.LIN_X
        lin = evaluate_equilibrium(analytic_equilibrium(StructureKind.LIN_X, trap, spins), trap, spins)
        if not lin.stable:
            kind = StructureKind.ZIGZAG_X
        config = analytic_equilibrium(kind, trap, spins)
        out[i] = normal_modes(config, trap, spins).frequencies
        kinds.append(kind)
    return out, kinds


def sector_support(modes: NormalModes, n_ions: int, tol: float = 1e-12) -> list:
    """``"x"``, ``"y"`` or ``"mixed"`` for each mode vector."""
    labels = []
    for v in modes.vectors.T:
        wx = np.linalg.norm(v[:n_ions])
        wy = np.linalg.norm(v[n_ions:])
        labels.append("x" if wy < tol else "y" if wx < tol else "mixed")
    return labels
