"""Planar ion crystals in a state-dependent harmonic trap.

Dimensionless potential for ions at ``r_j = (x_j, y_j)``::

    V = sum_{j<k} 1/|r_j - r_k| + sum_j (x_j**2 + a_j**2 * y_j**2) / 2

with ``a_j = alpha`` for ions in |g> and ``alpha + delta_alpha`` for ions
in |e>.  Flattened coordinate vectors use block ordering
``(x_1, ..., x_N, y_1, ..., y_N)``.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import (
    ConvergenceError,
    DomainError,
    PreconditionError,
    SearchExhausted,
    UnsupportedError,
)

COINCIDENCE_THRESHOLD = 1e-9
STABILITY_FLOOR = 1e-9
CLASSIFY_TOL = 1e-6

LINEAR_SPACING = (5.0 / 4.0) ** (1.0 / 3.0)
ALPHA_CRITICAL = math.sqrt(12.0 / 5.0)


class StructureKind(enum.Enum):
    LIN_X = "LinX"
    ZIGZAG_X = "ZigzagX"
    ZIGZAG_Y = "ZigzagY"
    LIN_X_STAR = "LinXStar"
    TRIA_STAR = "TriaStar"
    OTHER = "Other"

    @property
    def bit(self) -> int:
        return 1 << list(StructureKind).index(self)

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    StructureKind.LIN_X: "LIN X",
    StructureKind.ZIGZAG_X: "ZZ X",
    StructureKind.ZIGZAG_Y: "ZZ Y",
    StructureKind.LIN_X_STAR: "LIN X*",
    StructureKind.TRIA_STAR: "TRIA*",
    StructureKind.OTHER: "other",
}


@dataclass(frozen=True)
class TrapParams:
    n_ions: int
    alpha: float
    delta_alpha: float = 0.0

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 2:
            raise ValueError(f"n_ions must be an integer >= 2, got {self.n_ions}")
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.alpha + self.delta_alpha > 0.0:
            raise ValueError("alpha + delta_alpha must be positive")


@dataclass(frozen=True)
class SpinPattern:
    """Internal state per ion; ``True`` marks |e>."""

    excited: tuple

    def __post_init__(self):
        object.__setattr__(self, "excited", tuple(bool(e) for e in self.excited))

    @classmethod
    def ground(cls, n: int) -> "SpinPattern":
        return cls((False,) * n)

    @classmethod
    def center(cls, n: int = 3) -> "SpinPattern":
        if n % 2 == 0:
            raise ValueError("a center ion exists only for odd n")
        return cls(tuple(j == n // 2 for j in range(n)))

    @classmethod
    def outer(cls, n: int = 3) -> "SpinPattern":
        return cls(tuple(j == 0 for j in range(n)))

    @classmethod
    def parse(cls, spec, n: int) -> "SpinPattern":
        """Accept ``"ground"``, ``"center"``, ``"outer"``, a string such as
        ``"geg"`` or a sequence of 0/1 flags."""
        if isinstance(spec, SpinPattern):
            pattern = spec
        elif isinstance(spec, str):
            key = spec.strip().lower()
            if key in ("ground", "all_ground", "homogeneous"):
                pattern = cls.ground(n)
            elif key in ("center", "centre", "center_excited"):
                pattern = cls.center(n)
            elif key in ("outer", "outer_excited"):
                pattern = cls.outer(n)
            elif set(key) <= {"g", "e"}:
                pattern = cls(tuple(c == "e" for c in key))
            else:
                raise ValueError(f"cannot parse spin pattern {spec!r}")
        else:
            pattern = cls(tuple(spec))
        if len(pattern) != n:
            raise ValueError(f"spin pattern has {len(pattern)} entries, expected {n}")
        return pattern

    def __len__(self):
        return len(self.excited)

    @property
    def excited_indices(self) -> list:
        return [j for j, e in enumerate(self.excited) if e]

    @property
    def is_symmetric(self) -> bool:
        return self.excited == self.excited[::-1]

    def __str__(self):
        return "".join("e" if e else "g" for e in self.excited)


class IonConfiguration:
    """Positions of N ions in the trap plane, shape ``(N, 2)``."""

    def __init__(self, positions):
        if isinstance(positions, IonConfiguration):
            positions = positions.positions
        pos = np.array(positions, dtype=float)
        if pos.ndim == 1:
            if pos.size % 2:
                raise ValueError("flat coordinate vector must have even length")
            pos = pos.reshape(2, -1).T
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must have shape (N, 2), got {pos.shape}")
        if pos.shape[0] > 1 and _min_pair_distance(pos) < COINCIDENCE_THRESHOLD:
            raise DomainError("two ions coincide (pairwise distance below 1e-9)")
        pos.setflags(write=False)
        self.positions = pos

    @classmethod
    def from_flat(cls, q) -> "IonConfiguration":
        return cls(np.asarray(q, dtype=float))

    @property
    def n_ions(self) -> int:
        return self.positions.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]

    @property
    def flat(self) -> np.ndarray:
        return self.positions.T.reshape(-1).copy()

    def __repr__(self):
        return f"IonConfiguration({self.positions.tolist()!r})"


def _min_pair_distance(pos):
    i, j = np.triu_indices(pos.shape[0], 1)
    d = pos[i] - pos[j]
    return np.sqrt((d**2).sum(-1)).min()


def _positions(config) -> np.ndarray:
    if isinstance(config, IonConfiguration):
        return config.positions
    return IonConfiguration(config).positions


def transverse_stiffness(trap: TrapParams, spins: SpinPattern) -> np.ndarray:
    """Squared transverse aspect ratio felt by each ion."""
    if len(spins) != trap.n_ions:
        raise ValueError("spin pattern length does not match n_ions")
    a_e = trap.alpha + trap.delta_alpha
    return np.array([a_e**2 if e else trap.alpha**2 for e in spins.excited])


# array kernels: ``pos`` is (N, 2), ``k`` the per-ion transverse stiffness


@lru_cache(maxsize=32)
def _pairs(n):
    i, j = np.triu_indices(n, 1)
    incidence = np.zeros((n, i.size))
    incidence[i, np.arange(i.size)] = 1.0
    incidence[j, np.arange(i.size)] = -1.0
    return i, j, incidence


def _pair_vectors(pos):
    i, j, incidence = _pairs(pos.shape[0])
    d = pos[i] - pos[j]
    r = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)
    if r.min() < COINCIDENCE_THRESHOLD:
        raise DomainError("two ions coincide (pairwise distance below 1e-9)")
    return d, r, incidence


def _energy(pos, k):
    _, r, _ = _pair_vectors(pos)
    return float((1.0 / r).sum() + 0.5 * (pos[:, 0] @ pos[:, 0] + k @ (pos[:, 1] ** 2)))


def _gradient(pos, k):
    d, r, incidence = _pair_vectors(pos)
    force = incidence @ (d / (r**3)[:, None])
    return np.concatenate([pos[:, 0] - force[:, 0], k * pos[:, 1] - force[:, 1]])


def _hessian(pos, k):
    n = pos.shape[0]
    d, r, incidence = _pair_vectors(pos)
    inv5 = 1.0 / r**5
    inv3 = 1.0 / r**3
    # Hessian of 1/|r_i - r_j| is (e_i - e_j)(e_i - e_j)^T times the 2x2 block b
    bxx = 3.0 * d[:, 0] ** 2 * inv5 - inv3
    byy = 3.0 * d[:, 1] ** 2 * inv5 - inv3
    bxy = 3.0 * d[:, 0] * d[:, 1] * inv5
    hxx = (incidence * bxx) @ incidence.T
    hyy = (incidence * byy) @ incidence.T
    hxy = (incidence * bxy) @ incidence.T
    hxx[np.diag_indices(n)] += 1.0
    hyy[np.diag_indices(n)] += k
    return np.block([[hxx, hxy], [hxy.T, hyy]])


def potential_energy(config, trap: TrapParams, spins: SpinPattern) -> float:
    return _energy(_positions(config), transverse_stiffness(trap, spins))


def gradient(config, trap: TrapParams, spins: SpinPattern) -> np.ndarray:
    return _gradient(_positions(config), transverse_stiffness(trap, spins))


def hessian(config, trap: TrapParams, spins: SpinPattern) -> np.ndarray:
    return _hessian(_positions(config), transverse_stiffness(trap, spins))


# ---------------------------------------------------------------------------
# closed-form three-ion equilibria


def linear_chain_positions(n_ions: int = 3) -> np.ndarray:
    if n_ions != 3:
        raise UnsupportedError("closed-form linear chain implemented for 3 ions only")
    return np.array([[-LINEAR_SPACING, 0.0], [0.0, 0.0], [LINEAR_SPACING, 0.0]])


def zigzag_x_positions(outer_aspect: float, center_aspect: float) -> np.ndarray:
    """Zigzag symmetric about the y-axis with the middle ion opposite the
    two outer ones; returns the ``ybar > 0`` branch."""
    ratio = outer_aspect**2 / center_aspect**2
    s = 1.0 + 2.0 * ratio
    base = 4.0 * (1.0 - outer_aspect**2 / s)
    if base <= 0.0:
        raise DomainError(f"no x-zigzag: 1 - alpha^2/(1+2R) = {base / 4:.3g} <= 0")
    xbar = base ** (-1.0 / 3.0)
    radicand = (s / outer_aspect**2) ** (2.0 / 3.0) - xbar**2
    if radicand <= 0.0:
        raise DomainError(f"no x-zigzag: transverse radicand {radicand:.3g} <= 0")
    ybar = math.sqrt(radicand) / s
    return np.array([[-xbar, ybar], [0.0, -2.0 * ratio * ybar], [xbar, ybar]])


def zigzag_y_geometry(base_aspect: float):
    """``(xbar, ybar)`` of the zigzag oriented along y.

    The apex ion sits on the x-axis at ``-2 xbar``; the two base ions sit at
    ``(xbar, +-ybar)`` and share the transverse aspect ``base_aspect``.
    """
    a2 = base_aspect**2
    if a2 <= 1.0 / 3.0:
        raise DomainError("no y-zigzag for base aspect^2 <= 1/3")
    ybar = (4.0 * (a2 - 1.0 / 3.0)) ** (-1.0 / 3.0)
    radicand = 3.0 ** (2.0 / 3.0) - ybar**2
    if radicand <= 0.0:
        raise DomainError(f"no y-zigzag: radicand {radicand:.3g} <= 0")
    return math.sqrt(radicand) / 3.0, ybar


def _zigzag_y_layout(trap: TrapParams, spins: SpinPattern):
    exc = spins.excited
    counts = sum(exc)
    if counts in (0, 3):
        apex = 1
    elif counts == 1:
        apex = exc.index(True)
    else:
        apex = exc.index(False)
    base = [j for j in range(3) if j != apex]
    k = transverse_stiffness(trap, spins)
    return apex, base, math.sqrt(k[base[0]])


def analytic_equilibrium(kind: StructureKind, trap: TrapParams, spins: SpinPattern) -> IonConfiguration:
    """Closed-form three-ion equilibrium of the requested structure."""
    if trap.n_ions != 3:
        raise UnsupportedError("closed forms exist for three ions only")
    if len(spins) != 3:
        raise ValueError("spin pattern length does not match n_ions")
    if kind in (StructureKind.LIN_X, StructureKind.LIN_X_STAR):
        pos = linear_chain_positions(3)
    elif kind is StructureKind.ZIGZAG_X:
        if spins.excited[0] != spins.excited[2]:
            raise UnsupportedError("x-zigzag closed form needs equal spins on the outer ions")
        k = np.sqrt(transverse_stiffness(trap, spins))
        pos = zigzag_x_positions(k[0], k[1])
    elif kind is StructureKind.ZIGZAG_Y:
        apex, base, base_aspect = _zigzag_y_layout(trap, spins)
        if spins.excited[base[0]] != spins.excited[base[1]]:
            raise UnsupportedError("y-zigzag closed form needs equal spins on the base ions")
        xbar, ybar = zigzag_y_geometry(base_aspect)
        pos = np.empty((3, 2))
        pos[apex] = (-2.0 * xbar, 0.0)
        pos[base[0]] = (xbar, ybar)
        pos[base[1]] = (xbar, -ybar)
    else:
        raise UnsupportedError(f"no closed form for {kind.value}")
    gnorm = np.linalg.norm(gradient(pos, trap, spins))
    if gnorm > 1e-10:
        raise ConvergenceError(f"closed form for {kind.value} has gradient norm {gnorm:.2e}")
    return IonConfiguration(pos)


# ---------------------------------------------------------------------------
# symmetry and classification


def _matched_deviation(a, b):
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols].max()


def mirror_deviation(config, axis: str) -> float:
    """Largest displacement between the crystal and its reflection
    ``x -> -x`` (``axis="x"``) or ``y -> -y`` (``axis="y"``), after optimal
    relabelling of the ions."""
    pos = _positions(config)
    flip = pos.copy()
    flip[:, 0 if axis == "x" else 1] *= -1.0
    return _matched_deviation(pos, flip)


@lru_cache(maxsize=8)
def _permutations(n):
    return np.array(list(itertools.permutations(range(n))))


def asymmetry(config) -> float:
    """Distance of the point set from its closest mirror image about any
    axis through the centroid (principal axes and centroid-to-ion lines)."""
    pos = _positions(config) if not isinstance(config, np.ndarray) else config
    centered = pos - pos.mean(axis=0)
    _, axes = np.linalg.eigh(centered.T @ centered)
    norms = np.hypot(centered[:, 0], centered[:, 1])
    spokes = centered[norms > 1e-12] / norms[norms > 1e-12, None]
    e = np.vstack([axes.T, spokes])
    reflect = 2.0 * e[:, :, None] * e[:, None, :] - np.eye(2)
    images = np.einsum("aij,nj->ani", reflect, centered)
    n = centered.shape[0]
    if n > 6:
        return float(min(_matched_deviation(centered, img) for img in images))
    perms = _permutations(n)
    diff = images[:, perms, :] - centered[None, None, :, :]
    dev = np.sqrt((diff**2).sum(-1)).max(-1)
    return float(dev.min())


def _alternates(values, tol):
    signs = np.sign(values)
    if np.any(np.abs(values) < tol):
        nonzero = np.abs(values) >= tol
        signs = signs[nonzero]
    return signs.size >= 2 and np.all(signs[1:] != signs[:-1])


def classify(config, tol: float = CLASSIFY_TOL, spins: SpinPattern | None = None) -> StructureKind:
    """Assign a :class:`StructureKind` from the geometry.

    ``spins`` is only needed to tell a linear chain with an off-center
    excitation (LIN X*) from the symmetric case.
    """
    pos = _positions(config)
    x, y = pos[:, 0], pos[:, 1]
    if np.all(np.abs(y) < tol):
        if spins is not None and not spins.is_symmetric:
            return StructureKind.LIN_X_STAR
        return StructureKind.LIN_X
    if mirror_deviation(pos, "x") < tol and _alternates(y[np.argsort(x)], tol):
        return StructureKind.ZIGZAG_X
    if mirror_deviation(pos, "y") < tol and _alternates(x[np.argsort(y)], tol):
        return StructureKind.ZIGZAG_Y
    if pos.shape[0] == 3 and asymmetry(pos) > tol:
        return StructureKind.TRIA_STAR
    return StructureKind.OTHER


def structure_distance(a, b, spins: SpinPattern) -> float:
    """Distance between two crystals modulo the exact symmetries of the
    potential: reflections ``x -> -x``, ``y -> -y`` and relabelling of ions
    with equal internal state."""
    pa, pb = _positions(a), _positions(b)
    groups = [np.flatnonzero(np.array(spins.excited) == s) for s in (False, True)]
    best = np.inf
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            flipped = pb * np.array([sx, sy])
            worst = 0.0
            for idx in groups:
                if idx.size:
                    worst = max(worst, _matched_deviation(pa[idx], flipped[idx]))
            best = min(best, worst)
    return float(best)


# ---------------------------------------------------------------------------
# numerical equilibria


@dataclass(frozen=True)
class EquilibriumResult:
    config: IonConfiguration
    energy: float
    gradient_norm: float
    stable: bool
    kind: StructureKind
    min_eigenvalue: float = float("nan")
    iterations: int = 0

    def as_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "energy": self.energy,
            "gradient_norm": self.gradient_norm,
            "stable": self.stable,
            "min_eigenvalue": self.min_eigenvalue,
            "iterations": self.iterations,
            "positions": self.config.positions.tolist(),
        }


def evaluate_equilibrium(config, trap: TrapParams, spins: SpinPattern, iterations: int = 0,
                         classify_tol: float = CLASSIFY_TOL) -> EquilibriumResult:
    """Energy, gradient norm, stability and kind of a given configuration."""
    cfg = config if isinstance(config, IonConfiguration) else IonConfiguration(config)
    lam = np.linalg.eigvalsh(hessian(cfg, trap, spins))
    return EquilibriumResult(
        config=cfg,
        energy=potential_energy(cfg, trap, spins),
        gradient_norm=float(np.linalg.norm(gradient(cfg, trap, spins))),
        stable=bool(lam[0] > STABILITY_FLOOR),
        kind=classify(cfg, classify_tol, spins),
        min_eigenvalue=float(lam[0]),
        iterations=iterations,
    )


def _safe_energy(pos, k):
    try:
        return _energy(pos, k)
    except DomainError:
        return np.inf


def find_equilibrium(trap: TrapParams, spins: SpinPattern, initial_guess, *,
                     tol: float = 1e-12, max_iter: int = 500, max_step: float = 0.5,
                     classify_tol: float = CLASSIFY_TOL) -> EquilibriumResult:
    """Refine ``initial_guess`` to a stationary point of the potential.

    Newton steps are taken while the Hessian is positive definite. Elsewhere
    the step uses absolute Hessian eigenvalues, which keeps it a descent
    direction, and is backtracked on the energy.  Saddles reached from
    symmetric guesses are returned with ``stable=False``.
    """
    q = IonConfiguration(initial_guess).flat
    n = trap.n_ions
    if q.size != 2 * n:
        raise ValueError("initial guess does not match n_ions")
    k = transverse_stiffness(trap, spins)

    def as_pos(v):
        return v.reshape(2, n).T

    energy = _safe_energy(as_pos(q), k)
    it = 0
    for it in range(1, max_iter + 1):
        g = _gradient(as_pos(q), k)
        gnorm = np.linalg.norm(g)
        if gnorm < tol:
            break
        lam, U = np.linalg.eigh(_hessian(as_pos(q), k))
        positive = lam[0] > 1e-8 * max(1.0, lam[-1])
        curvature = np.abs(lam) if positive else np.maximum(np.abs(lam), 1e-3)
        step = -U @ ((U.T @ g) / curvature)
        length = np.linalg.norm(step)
        if length > max_step:
            step *= max_step / length
        if positive and gnorm < 1e-6:
            # energy differences are below round-off here
            q = q + step
            energy = _safe_energy(as_pos(q), k)
            continue
        slope = g @ step
        if -slope < 1e-12 * max(1.0, abs(energy)):
            # energy differences are lost in round-off (flat, quartic directions);
            # backtrack on the gradient norm instead
            s = 1.0
            while s >= 1e-6:
                trial = q + s * step
                try:
                    if np.linalg.norm(_gradient(as_pos(trial), k)) < gnorm:
                        break
                except DomainError:
                    pass
                s *= 0.5
            else:
                break
            q, energy = trial, _safe_energy(as_pos(trial), k)
            continue
        s = 1.0
        while s >= 1e-12:
            trial = q + s * step
            e_trial = _safe_energy(as_pos(trial), k)
            if e_trial <= energy + 1e-4 * s * slope:
                break
            s *= 0.5
        else:
            # no representable energy decrease; accept only if the gradient shrinks
            trial = q + step
            try:
                g_trial = np.linalg.norm(_gradient(as_pos(trial), k))
            except DomainError:
                g_trial = np.inf
            if g_trial >= gnorm:
                break
            e_trial = _safe_energy(as_pos(trial), k)
        q, energy = trial, e_trial
    result = evaluate_equilibrium(IonConfiguration.from_flat(q), trap, spins, it, classify_tol)
    if result.gradient_norm > 1e-10:
        raise ConvergenceError(
            f"equilibrium search stopped at gradient norm {result.gradient_norm:.2e} after {it} iterations"
        )
    return result


@dataclass(frozen=True)
class MetropolisSchedule:
    n_steps: int = 5000
    step: float = 0.05
    t_initial: float = 0.5
    cooling: float = 0.995
    box: tuple = (2.0, 1.0)

    def __post_init__(self):
        if self.n_steps < 1 or self.step <= 0 or self.t_initial <= 0 or not 0 < self.cooling <= 1:
            raise ValueError(f"invalid Metropolis schedule {self}")


@dataclass
class MetropolisTrace:
    accepted: list = field(default_factory=list)
    best_energy: float = np.inf


def metropolis_search(trap: TrapParams, spins: SpinPattern, rng_seed: int,
                      schedule: MetropolisSchedule | None = None,
                      constraint: float | None = 1e-2,
                      trace: MetropolisTrace | None = None,
                      max_restarts: int = 8) -> EquilibriumResult:
    """Simulated annealing from random positions, then Newton refinement.

    The walk only visits configurations whose :func:`asymmetry` is at least
    ``constraint`` (pass ``None`` to disable), which steers it away from the
    symmetric linear and zigzag minima.  A refined structure is accepted if
    it is stable and still satisfies the constraint; otherwise the walk is
    repeated with the same generator, up to ``max_restarts`` times, before
    :class:`SearchExhausted` is raised.
    """
    schedule = schedule or MetropolisSchedule()
    rng = np.random.default_rng(rng_seed)
    box = np.array(schedule.box)

    def feasible(pos):
        if _min_pair_distance(pos) < 1e-3:
            return False
        return constraint is None or asymmetry(pos) >= constraint

    for attempt in range(max_restarts):
        best_pos = _anneal(trap, spins, rng, schedule, feasible, box, trace)
        try:
            result = find_equilibrium(trap, spins, best_pos)
        except ConvergenceError:
            continue
        # refinement may slide into a symmetric structure that only touched
        # the constraint tolerance; those are discarded and the walk restarts
        if result.stable and (constraint is None or asymmetry(result.config) >= constraint):
            return result
    raise SearchExhausted(
        f"no stable structure satisfying the asymmetry constraint after {max_restarts} annealing runs"
    )


def _anneal(trap, spins, rng, schedule, feasible, box, trace):
    n = trap.n_ions
    for _ in range(1000):
        pos = rng.uniform(-1.0, 1.0, size=(n, 2)) * box
        if feasible(pos):
            break
    else:
        raise SearchExhausted("could not draw a feasible initial configuration")

    k = transverse_stiffness(trap, spins)
    energy = _energy(pos, k)
    best_pos, best_energy = pos.copy(), energy
    temperature = schedule.t_initial
    for step in range(schedule.n_steps):
        j = rng.integers(n)
        trial = pos.copy()
        trial[j] += rng.normal(scale=schedule.step, size=2)
        u = rng.random()
        if feasible(trial):
            e_trial = _energy(trial, k)
            if e_trial <= energy or u < math.exp(-(e_trial - energy) / temperature):
                pos, energy = trial, e_trial
                if trace is not None:
                    trace.accepted.append(step)
                if energy < best_energy:
                    best_pos, best_energy = pos.copy(), energy
        temperature *= schedule.cooling
    if trace is not None:
        trace.best_energy = min(trace.best_energy, best_energy)
    return best_pos


def require_equilibrium(result: EquilibriumResult, tol: float = 1e-10) -> None:
    if result.gradient_norm > tol:
        raise PreconditionError(
            f"configuration is not an equilibrium (gradient norm {result.gradient_norm:.2e})"
        )
