"""Gaussian vibrational states and their exact evolution in quadratic models.

Coordinates are the dimensionless crystal coordinates (units of ``l``) in
the block order ``(x_1..x_N, y_1..y_N)``, masses are one and time is in
units of ``1/nu_x``.  Quantum mechanics enters through the effective Planck
constant ``hbar = sigma**2`` with ``sigma = sqrt(hbar_SI / (m nu_x)) / l``
(see :func:`crystalcat.units.quantum_length`).  A state is

    psi(q) = N exp(-(q - q0)^T A (q - q0) / (2 hbar)
                   + i p0^T (q - q0) / hbar + i phase)

with ``A`` complex symmetric, ``Re A`` positive definite and ``N`` real and
positive.  The ground state of a model with Hessian ``K = V diag(w^2) V^T``
has ``A = V diag(w) V^T``, independent of ``hbar``.

Internally everything is rescaled to ``u = q / sigma`` where ``hbar = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .crystal import (
    ALPHA_CRITICAL,
    IonConfiguration,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    find_equilibrium,
    potential_energy,
)
from .exceptions import DomainError, PreconditionError, UnstableModelError
from .modes import NormalModes, normal_modes

SOFT_MODE_FLOOR = 1e-4


@dataclass(frozen=True)
class QuadraticModel:
    """Harmonic expansion of one spin sector about an equilibrium.

    ``energy_offset`` is the classical potential energy at the equilibrium
    (units ``m nu_x^2 l^2``), measured from whatever reference the caller
    declares; :func:`loschmidt_echo` re-references it.
    """

    equilibrium: IonConfiguration
    modes: NormalModes
    energy_offset: float
    hbar: float = 1.0

    def __post_init__(self):
        if not self.modes.stable:
            raise UnstableModelError("quadratic model needs a stable equilibrium (all Hessian eigenvalues > 0)")
        if self.modes.frequencies[0] < SOFT_MODE_FLOOR:
            raise UnstableModelError(
                f"soft mode frequency {self.modes.frequencies[0]:.2e} is below {SOFT_MODE_FLOOR:g}; "
                "the harmonic ground state would be unphysically wide"
            )
        if not math.isfinite(self.energy_offset):
            raise ValueError("energy_offset must be finite")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def omegas(self) -> np.ndarray:
        return self.modes.frequencies

    @property
    def zero_point(self) -> float:
        """Zero-point energy ``hbar * sum(w) / 2`` in classical energy units."""
        return 0.5 * self.hbar * float(self.omegas.sum())

    @property
    def ground_energy(self) -> float:
        return self.energy_offset + self.zero_point

    @classmethod
    def from_equilibrium(cls, config, trap: TrapParams, spins: SpinPattern, hbar: float = 1.0,
                         energy_reference: float = 0.0) -> "QuadraticModel":
        config = config if isinstance(config, IonConfiguration) else IonConfiguration(config)
        modes = normal_modes(config, trap, spins)
        energy = potential_energy(config, trap, spins) - energy_reference
        return cls(config, modes, energy, hbar)

    @classmethod
    def from_matrices(cls, center, stiffness, energy_offset: float = 0.0, hbar: float = 1.0) -> "QuadraticModel":
        """Model with an explicit stiffness matrix (toy models and tests).

        ``center`` is a flat vector of length ``2N``.
        """
        from .modes import modes_from_hessian

        center = np.asarray(center, dtype=float)
        stiffness = np.asarray(stiffness, dtype=float)
        if stiffness.shape != (center.size, center.size):
            raise ValueError("stiffness must be square and match center")
        return cls(_FlatConfiguration(center), modes_from_hessian(0.5 * (stiffness + stiffness.T)), energy_offset, hbar)


class _FlatConfiguration:
    """Minimal stand-in for toy models whose dimension is not 2N."""

    def __init__(self, flat):
        self.flat = np.array(flat, dtype=float)
        self.flat.setflags(write=False)


@dataclass(frozen=True)
class GaussianPureState:
    mean_q: np.ndarray
    mean_p: np.ndarray
    width: np.ndarray
    phase: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        q = np.array(self.mean_q, dtype=float)
        p = np.array(self.mean_p, dtype=float)
        A = np.array(self.width, dtype=complex)
        n = q.size
        if p.shape != (n,) or A.shape != (n, n):
            raise ValueError("mean_q, mean_p and width dimensions disagree")
        if not np.allclose(A, A.T, rtol=0, atol=1e-9 * max(1.0, np.abs(A).max())):
            raise ValueError("width matrix must be symmetric")
        A = 0.5 * (A + A.T)
        try:
            np.linalg.cholesky(A.real)
        except np.linalg.LinAlgError:
            raise DomainError("real part of the width matrix is not positive definite") from None
        for name, value in (("mean_q", q), ("mean_p", p), ("width", A)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "phase", float(self.phase))

    @property
    def dim(self) -> int:
        return self.mean_q.size

    def position_covariance(self) -> np.ndarray:
        """``<(q - q0)(q - q0)^T>``; equals ``hbar/2 (Re A)^-1``."""
        return 0.5 * self.hbar * np.linalg.inv(self.width.real)

    def wavefunction(self, points) -> np.ndarray:
        """Evaluate ``psi`` at rows of ``points`` (shape ``(M, dim)``)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h = self.hbar
        d = points - self.mean_q
        quad = np.einsum("mi,ij,mj->m", d, self.width, d)
        norm = (np.linalg.det(self.width.real) / (math.pi * h) ** self.dim) ** 0.25
        return norm * np.exp(-0.5 * quad / h + 1j * (d @ self.mean_p) / h + 1j * self.phase)


def ground_state(model: QuadraticModel) -> GaussianPureState:
    V, w = model.modes.vectors, model.omegas
    n = w.size
    return GaussianPureState(
        mean_q=model.equilibrium.flat.copy(),
        mean_p=np.zeros(n),
        width=(V * w) @ V.T,
        phase=0.0,
        hbar=model.hbar,
    )


def _check_hbar(state, model):
    if not math.isclose(state.hbar, model.hbar, rel_tol=1e-12):
        raise PreconditionError(f"state hbar {state.hbar} differs from model hbar {model.hbar}")
    if state.dim != model.omegas.size:
        raise PreconditionError("state and model dimensions disagree")


def _log_det_factor(B, wt):
    """``log det(C + i S B)`` on the branch continuous in ``t``.

    ``B`` is the width in mass-weighted normal coordinates scaled by
    ``W^-1/2``, ``wt`` the stacked phases ``w t`` (shape ``(T, n)``).  Uses
    ``C + iSB = 1/2 E (I + E^-2 G)(I + B)`` with ``E = exp(i w t)`` and the
    contraction ``G = (I - B)(I + B)^-1``: every factor has eigenvalues in
    the open right half plane, so principal logarithms are continuous.
    """
    n = B.shape[0]
    eye = np.eye(n)
    G = np.linalg.solve((eye + B).T, (eye - B).T).T
    log_base = np.log(np.linalg.eigvals(eye + B)).sum() - n * math.log(2.0)
    D2 = np.exp(-2j * wt)
    inner = eye + D2[:, :, None] * G[None, :, :]
    return log_base + 1j * wt.sum(axis=1) + np.log(np.linalg.eigvals(inner)).sum(axis=1)


def _propagate(state: GaussianPureState, model: QuadraticModel, times):
    """Vectorised exact evolution; returns arrays over ``times``."""
    _check_hbar(state, model)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    h = model.hbar
    s = math.sqrt(h)
    V, w = model.modes.vectors, model.omegas
    # scaled mode coordinates, hbar = 1
    xi0 = V.T @ (state.mean_q - model.equilibrium.flat) / s
    pi0 = V.T @ state.mean_p / s
    Am = V.T @ state.width @ V
    wt = np.outer(times, w)
    C, S = np.cos(wt), np.sin(wt)
    xi = C * xi0 + S * (pi0 / w)
    pi = -w * S * xi0 + C * pi0
    # width: A_t = -i P Q^-1 with Q = C + i S W^-1 A, P = -W S + i C A
    Q = C[:, :, None] * np.eye(w.size) + 1j * (S / w)[:, :, None] * Am[None]
    P = -(w * S)[:, :, None] * np.eye(w.size) + 1j * C[:, :, None] * Am[None]
    At = -1j * np.linalg.solve(Q.transpose(0, 2, 1), P.transpose(0, 2, 1))
    At = 0.5 * (At + At.transpose(0, 2, 1))
    rw = 1.0 / np.sqrt(w)
    B = rw[:, None] * Am * rw[None, :]
    log_det = _log_det_factor(B, wt)
    action = 0.5 * ((pi * xi).sum(axis=1) - pi0 @ xi0)
    phase = state.phase + action - model.energy_offset / h * times - 0.5 * log_det.imag
    mean_q = model.equilibrium.flat + s * xi @ V.T
    mean_p = s * pi @ V.T
    width = V[None] @ At @ V.T[None]
    return mean_q, mean_p, width, phase


def evolve(state: GaussianPureState, model: QuadraticModel, t: float) -> GaussianPureState:
    """Exact evolution of ``state`` for time ``t`` under ``model``.

    Means follow the classical trajectory about the model equilibrium; the
    phase collects the classical action, ``energy_offset`` and the
    zero-point (metaplectic) contribution.
    """
    q, p, A, phase = _propagate(state, model, [t])
    return GaussianPureState(q[0], p[0], A[0], float(phase[0]), state.hbar)


def _overlap_arrays(a: GaussianPureState, qb, pb, Ab, gb):
    """``<a|b_t>`` for stacked ket parameters (leading axis is time)."""
    s = math.sqrt(a.hbar)
    n = a.dim
    delta = (qb - a.mean_q) / s
    dp = (pb - a.mean_p) / s
    Aa = np.conj(a.width)
    M = Aa[None] + Ab
    J = -(delta @ Aa.T) + 1j * dp
    MinvJ = np.linalg.solve(M, J[..., None])[..., 0]
    lam = np.linalg.eigvals(M)
    if np.any(lam.real <= 0):
        raise DomainError("Re(A_a* + A_b) is not positive definite")
    det_re_a = np.linalg.det(a.width.real)
    det_re_b = np.linalg.det(Ab.real)
    amp = 2.0 ** (n / 2) * (det_re_a * det_re_b) ** 0.25
    exponent = (
        0.5 * (J * MinvJ).sum(axis=1)
        - 0.5 * np.einsum("ti,ij,tj->t", delta, Aa, delta)
        - 1j * (delta @ a.mean_p) / s
        + 1j * (gb - a.phase)
        - 0.5 * np.log(lam).sum(axis=1)
    )
    return amp * np.exp(exponent)


def overlap(a: GaussianPureState, b: GaussianPureState) -> complex:
    """``<a|b>`` in closed form, relative phases included."""
    if not math.isclose(a.hbar, b.hbar, rel_tol=1e-12):
        raise PreconditionError("states use different hbar")
    if a.dim != b.dim:
        raise PreconditionError("states have different dimensions")
    value = _overlap_arrays(a, b.mean_q[None], b.mean_p[None], b.width[None], np.array([b.phase]))
    return complex(value[0])


@dataclass(frozen=True)
class OverlapSeries:
    times: np.ndarray  # units 1/nu_x
    values: np.ndarray  # complex I(t)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=complex)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def __len__(self):
        return self.times.size


def default_time_grid(n_samples: int = 4096, duration: float = 200.0) -> np.ndarray:
    """Uniform grid starting at zero with spacing ``duration / n_samples``."""
    return np.arange(n_samples) * (duration / n_samples)


def loschmidt_echo(g_model: QuadraticModel, e_model: QuadraticModel, time_grid=None,
                   metadata: dict | None = None) -> OverlapSeries:
    """``I(t) = <phi(0)| exp(-i H_e t / hbar) |phi(0)>`` with ``phi(0)`` the
    ground state of ``g_model``.

    Energies are referenced to the ``g`` ground level (classical minimum plus
    zero point), which is set to zero; both models must share that reference
    in their ``energy_offset``.
    """
    if time_grid is None:
        time_grid = default_time_grid()
    times = np.asarray(time_grid, dtype=float)
    psi0 = ground_state(g_model)
    # subtract the classical offsets first: their sum with the zero point
    # would lose digits that hbar ~ sigma^2 turns into phase
    shifted = replace(e_model, energy_offset=(e_model.energy_offset - g_model.energy_offset) - g_model.zero_point)
    q, p, A, phase = _propagate(psi0, shifted, times)
    values = _overlap_arrays(psi0, q, p, A, phase)
    meta = {"phase_convention": "energy zero at g-sector ground level (classical minimum + zero point)"}
    meta.update(metadata or {})
    return OverlapSeries(times, values, meta)


def single_mode_echo_reference(omega_g: float, omega_e: float, displacement: float, t):
    """Closed-form echo for one oscillator quenched ``w_g -> w_e``.

    The excited well is centered ``displacement`` away (``hbar = 1`` units)
    and has the same classical minimum energy; the zero of energy is the
    ``g`` ground level.  Evaluated in the Bargmann (coherent-state)
    representation of the ``e`` oscillator: the initial state is a squeezed
    coherent state with parameters ``(G, beta)``, and under ``H_e`` these
    rotate as ``G exp(-2 i w_e t)``, ``beta exp(-i w_e t)``.
    """
    if not (omega_g > 0 and omega_e > 0):
        raise ValueError("frequencies must be positive")
    t = np.asarray(t, dtype=float)
    b = omega_g / omega_e
    xi0 = -displacement * math.sqrt(omega_e)
    G = (1.0 - b) / (1.0 + b)
    beta = math.sqrt(2.0) * b * xi0 / (1.0 + b)

    def bargmann_overlap(G1, b1, G2, b2):
        den = 1.0 - np.conj(G1) * G2
        num = np.conj(b1) ** 2 * G2 + b2**2 * np.conj(G1) + 2.0 * np.conj(b1) * b2
        return den ** -0.5 * np.exp(num / (2.0 * den))

    rot = np.exp(-1j * omega_e * t)
    value = bargmann_overlap(G, beta, G * rot**2, beta * rot) / bargmann_overlap(G, beta, G, beta)
    # H_e = w_e (n + 1/2) in this basis; shift to the g ground level
    return value * np.exp(-1j * (0.5 * omega_e - 0.5 * omega_g) * t)


# --- physical sectors -----------------------------------------------------


def sector_models(trap: TrapParams, spins: SpinPattern, hbar: float):
    """Quadratic models for the all-ground and the ``spins`` sector.

    The ground sector uses the homogeneous structure (linear chain above
    the critical aspect ratio, otherwise the x-zigzag with the upper ion
    pair at ``y > 0``).  The excited sector uses the equilibrium reached by
    relaxing that structure in the excited potential, i.e. the structure
    the crystal is driven towards after the quench.
    """
    ground_spins = SpinPattern.ground(trap.n_ions)
    if trap.n_ions == 3:
        kind = StructureKind.LIN_X if trap.alpha > ALPHA_CRITICAL else StructureKind.ZIGZAG_X
        start = analytic_equilibrium(kind, trap, ground_spins)
        # the zigzag closed form puts the pair at +ybar; keep it at y > 0
        if kind is StructureKind.ZIGZAG_X and start.y[0] < 0:
            start = IonConfiguration(start.positions * np.array([1.0, -1.0]))
    else:
        raise PreconditionError("sector models are implemented for three ions")
    g_eq = find_equilibrium(trap, ground_spins, start)
    if not g_eq.stable:
        raise UnstableModelError(f"ground-sector structure unstable at alpha={trap.alpha}")
    if trap.delta_alpha == 0.0 or not spins.excited_indices:
        # identical potentials: a second relaxation would only add round-off
        # to the energy offset, which hbar ~ sigma^2 amplifies into a phase
        e_eq = g_eq
    else:
        e_eq = find_equilibrium(trap, spins, g_eq.config)
    if not e_eq.stable:
        raise UnstableModelError(
            f"excited-sector equilibrium unstable at alpha={trap.alpha}, delta_alpha={trap.delta_alpha}"
        )
    g_model = QuadraticModel.from_equilibrium(g_eq.config, trap, ground_spins, hbar)
    e_model = QuadraticModel.from_equilibrium(e_eq.config, trap, spins, hbar)
    return g_model, e_model, g_eq.kind, e_eq.kind


def physical_echo(trap, spins: SpinPattern | None = None, time_grid=None, n_ions: int = 3) -> OverlapSeries:
    """Echo for a :class:`~crystalcat.units.PhysicalTrap` (center ion excited
    by default)."""
    from .units import quantum_length, to_dimensionless

    params = to_dimensionless(trap, n_ions)
    spins = spins or SpinPattern.center(n_ions)
    sigma = quantum_length(trap)
    g_model, e_model, g_kind, e_kind = sector_models(params, spins, sigma**2)
    meta = {
        "alpha": params.alpha,
        "delta_alpha": params.delta_alpha,
        "species": trap.species.name,
        "nu_x": trap.nu_x,
        "sigma": sigma,
        "spins": str(spins),
        "g_structure": g_kind.label,
        "e_structure": e_kind.label,
        "e_soft_frequency": float(e_model.omegas[0]),
    }
    return loschmidt_echo(g_model, e_model, time_grid, meta)
