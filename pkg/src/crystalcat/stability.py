"""Stability boundaries of three-ion crystals in the (alpha, delta_alpha) plane.

Residual sign convention: every ``*_residual`` function returns
``LHS - RHS`` of its boundary equation and is positive on the side where
the corresponding structure is stable.  This was calibrated against the
sign of the lowest Hessian eigenvalue.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .crystal import (
    STABILITY_FLOOR,
    EquilibriumResult,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    evaluate_equilibrium,
    find_equilibrium,
    metropolis_search,
    zigzag_x_positions,
    zigzag_y_geometry,
)
from .exceptions import ConvergenceError, DomainError, PreconditionError, SearchExhausted, UnsupportedError

BISECTION_STEPS = 30
DEFAULT_RESOLUTION = 200

SIGN_CONVENTION = "residual = LHS - RHS; positive where the structure is stable"


# ---------------------------------------------------------------------------
# analytic boundaries


def delta_alpha_critical(alpha: float) -> float:
    """Lower stability edge of the linear chain with the middle ion excited."""
    radicand = 5.0 * alpha**2 - 4.0
    if radicand <= 0.0:
        raise DomainError(f"5 alpha^2 - 4 = {radicand:.3g} <= 0")
    return (2.0 * math.sqrt(2.0 / radicand) - 1.0) * alpha


def _ratio(alpha, delta_alpha):
    if alpha + delta_alpha <= 0.0:
        raise DomainError("alpha + delta_alpha must be positive")
    return alpha**2 / (alpha + delta_alpha) ** 2


def zzy_boundary_rhs(alpha: float) -> float:
    xbar, ybar = zigzag_y_geometry(alpha)
    D = 3.0 ** (1.0 / 3.0)
    t = (ybar / D) ** 2
    denom = 2.0 - alpha**2 - t
    if denom == 0.0:
        raise DomainError(f"y-zigzag boundary equation has a pole at alpha={alpha}")
    return -t + 1.0 / 3.0 + (3.0 * xbar * ybar) ** 2 / (D**4 * denom)


def zzy_boundary_residual(alpha: float, delta_alpha: float) -> float:
    """Vanishing-determinant condition of the y-zigzag Hessian."""
    R = _ratio(alpha, delta_alpha)
    return alpha**2 / (2.0 * R + 1.0) - zzy_boundary_rhs(alpha)


def zzy_boundary_delta_alpha(alpha: float) -> float:
    """Root of :func:`zzy_boundary_residual` in ``delta_alpha`` (NaN if none)."""
    rhs = zzy_boundary_rhs(alpha)
    if rhs <= 0.0:
        return float("nan")
    R = 0.5 * (alpha**2 / rhs - 1.0)
    if R <= 0.0:
        return float("nan")
    return alpha / math.sqrt(R) - alpha


def _outer_denominator(alpha):
    return 5.0 * (5.0 * alpha**4 - 12.5 * alpha**2 + 4.0)


def outer_excited_poles() -> tuple:
    """Values of alpha where the outer-ion boundary equation has a pole."""
    disc = math.sqrt(625.0 / 4.0 - 80.0)
    return tuple(math.sqrt((12.5 + s * disc) / 10.0) for s in (-1.0, 1.0))


def outer_excited_linear_boundary_rhs(alpha: float) -> float:
    den = _outer_denominator(alpha)
    if abs(den) < 1e-12:
        raise DomainError(f"outer-ion boundary equation has a pole at alpha={alpha}")
    return 9.0 / 20.0 + (65.0 / 8.0 * alpha**2 - 9.0) / den


def outer_excited_linear_boundary_residual(alpha: float, delta_alpha: float) -> float:
    """Vanishing-determinant condition of the linear chain with one outer
    ion excited."""
    R = _ratio(alpha, delta_alpha)
    return alpha**2 / (2.0 * R) - outer_excited_linear_boundary_rhs(alpha)


def outer_excited_boundary_delta_alpha(alpha: float) -> float:
    rhs = outer_excited_linear_boundary_rhs(alpha)
    if rhs <= 0.0:
        return float("nan")
    return math.sqrt(2.0 * rhs) - alpha


# ---------------------------------------------------------------------------
# per-point stability


def diagram_kinds(spins: SpinPattern) -> tuple:
    ex = spins.excited
    if len(ex) != 3:
        raise PreconditionError("stability diagrams are implemented for three ions")
    if ex in ((False, False, False), (False, True, False)):
        return (StructureKind.LIN_X, StructureKind.ZIGZAG_X, StructureKind.ZIGZAG_Y)
    if ex in ((True, False, False), (False, False, True)):
        return (StructureKind.LIN_X_STAR, StructureKind.TRIA_STAR, StructureKind.ZIGZAG_Y)
    raise PreconditionError(f"no stability diagram for spin pattern {spins}")


def _tria_templates(alpha: float, spins: SpinPattern) -> list:
    """Asymmetric starting triangles with the excited ion on a base vertex."""
    exc = spins.excited.index(True)
    others = [j for j in range(3) if j != exc]
    a = min(alpha, 1.5)
    zz = zigzag_x_positions(a, a)
    xbar, ybar = zz[2, 0], zz[2, 1]
    guesses = []
    pos = np.empty((3, 2))
    pos[exc] = (xbar, 0.8 * ybar)
    pos[others[0]] = (-xbar, ybar)
    pos[others[1]] = (0.05, -2.0 * ybar)
    guesses.append(pos.copy())
    xy, yy = zigzag_y_geometry(a)
    pos[others[0]] = (-2.0 * xy, 0.05)
    pos[exc] = (xy, 0.9 * yy)
    pos[others[1]] = (xy, -yy)
    guesses.append(pos.copy())
    return guesses


def _closed_form_result(kind, trap, spins):
    try:
        config = analytic_equilibrium(kind, trap, spins)
    except (DomainError, UnsupportedError, ConvergenceError):
        return None
    return evaluate_equilibrium(config, trap, spins)


def _numeric_result(kind, trap, spins, guess):
    try:
        res = find_equilibrium(trap, spins, guess, max_iter=200)
    except (ConvergenceError, DomainError):
        return None
    return res if res.kind is kind else None


def _verified(res: EquilibriumResult | None) -> bool:
    return res is not None and res.stable and res.gradient_norm < 1e-10 and res.min_eigenvalue > STABILITY_FLOOR


def stable_structures(alpha: float, delta_alpha: float, spins: SpinPattern,
                      guesses: dict | None = None) -> dict:
    """Verified stable structures at one parameter point.

    ``guesses`` maps kinds without a closed form (TRIA*) to a previously
    found configuration used for continuation before the fixed templates.
    """
    trap = TrapParams(3, alpha, delta_alpha)
    found = {}
    for kind in diagram_kinds(spins):
        if kind is StructureKind.TRIA_STAR:
            candidates = []
            if guesses and guesses.get(kind) is not None:
                candidates.append(guesses[kind])
            candidates.extend(_tria_templates(alpha, spins))
            for guess in candidates:
                res = _numeric_result(kind, trap, spins, guess)
                if _verified(res):
                    found[kind] = res
                    break
        else:
            res = _closed_form_result(kind, trap, spins)
            if _verified(res):
                found[kind] = res
    return found


def is_stable(kind: StructureKind, alpha: float, delta_alpha: float, spins: SpinPattern, guess=None):
    """``(stable, result)`` for a single structure kind."""
    trap = TrapParams(3, alpha, delta_alpha)
    if kind is StructureKind.TRIA_STAR:
        res = _numeric_result(kind, trap, spins, guess) if guess is not None else None
    else:
        res = _closed_form_result(kind, trap, spins)
    return _verified(res), res


# ---------------------------------------------------------------------------
# grid scans


@dataclass
class BoundaryCurve:
    kind: StructureKind | None
    source: str  # "analytic" or "numeric"
    points: np.ndarray  # (M, 2) columns alpha, delta_alpha; NaN rows split branches
    label: str = ""


@dataclass
class StabilityDiagram:
    alphas: np.ndarray
    dalphas: np.ndarray
    masks: np.ndarray  # (n_alpha, n_dalpha) bitmask of StructureKind.bit
    spins: SpinPattern
    kinds: tuple
    unknown: np.ndarray  # cells whose evaluation failed
    curves: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def stable(self, kind: StructureKind) -> np.ndarray:
        return (self.masks & kind.bit) != 0

    def count_stable(self) -> np.ndarray:
        return sum(self.stable(k).astype(int) for k in self.kinds)

    @property
    def cell_size(self) -> tuple:
        da = self.alphas[1] - self.alphas[0] if self.alphas.size > 1 else 0.0
        dd = self.dalphas[1] - self.dalphas[0] if self.dalphas.size > 1 else 0.0
        return da, dd

    def curve(self, source: str, kind: StructureKind | None = None, label: str | None = None):
        for c in self.curves:
            if c.source == source and (kind is None or c.kind is kind) and (label is None or c.label == label):
                return c
        return None


def _scan_column(args):
    alpha, dalphas, spins, seed, metropolis = args
    masks = np.zeros(dalphas.size, dtype=np.int64)
    unknown = np.zeros(dalphas.size, dtype=bool)
    tria_configs = [None] * dalphas.size
    guess = None
    for j, dalpha in enumerate(dalphas):
        try:
            found = stable_structures(alpha, dalpha, spins, {StructureKind.TRIA_STAR: guess})
            if metropolis and StructureKind.TRIA_STAR in diagram_kinds(spins) \
                    and StructureKind.TRIA_STAR not in found:
                try:
                    res = metropolis_search(TrapParams(3, alpha, dalpha), spins, seed)
                    if res.kind is StructureKind.TRIA_STAR and _verified(res):
                        found[StructureKind.TRIA_STAR] = res
                except SearchExhausted:
                    pass
        except (ValueError, ConvergenceError):
            unknown[j] = True
            continue
        for kind in found:
            masks[j] |= kind.bit
        tria = found.get(StructureKind.TRIA_STAR)
        guess = tria.config.positions if tria is not None else None
        tria_configs[j] = guess
    return masks, unknown, tria_configs


def _bisect(kind, alpha, lo, hi, stable_lo, spins, guess):
    """Locate the stability change of ``kind`` between ``lo`` and ``hi``."""
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        ok, res = is_stable(kind, alpha, mid, spins, guess)
        if ok == stable_lo:
            lo = mid
            if ok and res is not None:
                guess = res.config.positions
        else:
            hi = mid
            if ok and res is not None:
                guess = res.config.positions
    return 0.5 * (lo + hi)


def _numeric_boundaries(alphas, dalphas, masks, spins, kinds, tria_configs):
    curves = []
    for kind in kinds:
        pts = []
        stable = (masks & kind.bit) != 0
        for i, alpha in enumerate(alphas):
            col = stable[i]
            for j in np.flatnonzero(col[1:] != col[:-1]):
                stable_lo = bool(col[j])
                guess = None
                if kind is StructureKind.TRIA_STAR:
                    guess = tria_configs[i][j] if stable_lo else tria_configs[i][j + 1]
                d = _bisect(kind, alpha, dalphas[j], dalphas[j + 1], stable_lo, spins, guess)
                pts.append((alpha, d, 1.0 if not stable_lo else -1.0))
        arr = np.array(pts, dtype=float).reshape(-1, 3)
        curves.append(BoundaryCurve(kind, "numeric", arr[:, :2], label=kind.label))
    return curves


def _sample_curve(fn, alphas, breaks=()):
    rows = []
    for a in alphas:
        if any(abs(a - b) < 1e-9 for b in breaks):
            rows.append((np.nan, np.nan))
            continue
        try:
            rows.append((a, fn(a)))
        except DomainError:
            rows.append((np.nan, np.nan))
    pts = np.array(rows, dtype=float)
    for b in breaks:
        # split the polyline at poles
        k = np.searchsorted(pts[:, 0], b)
        if 0 < k < len(pts):
            pts = np.insert(pts, k, (np.nan, np.nan), axis=0)
    return pts


def analytic_curves(spins: SpinPattern, alphas) -> list:
    kinds = diagram_kinds(spins)
    curves = []
    if StructureKind.LIN_X in kinds:
        curves.append(BoundaryCurve(StructureKind.LIN_X, "analytic",
                                    _sample_curve(delta_alpha_critical, alphas), "delta_alpha_c"))
    if StructureKind.LIN_X_STAR in kinds:
        poles = outer_excited_poles()
        curves.append(BoundaryCurve(StructureKind.LIN_X_STAR, "analytic",
                                    _sample_curve(outer_excited_boundary_delta_alpha, alphas, poles),
                                    "outer_linear"))
    curves.append(BoundaryCurve(StructureKind.ZIGZAG_Y, "analytic",
                                _sample_curve(zzy_boundary_delta_alpha, alphas), "zigzag_y"))
    return curves


def _grid(lo_hi, n):
    lo, hi = lo_hi
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def scan_diagram(alpha_range=(1.0, 2.0), dalpha_range=(-0.5, 1.5), resolution=DEFAULT_RESOLUTION,
                 spins: SpinPattern | None = None, *, threads: int = 1, seed: int = 0,
                 metropolis: bool = False, boundaries: bool = True) -> StabilityDiagram:
    """Stable structures on a cell-centred grid.

    Columns of constant alpha are independent work items; within a column
    the TRIA* solution of the previous cell seeds the next one.  With
    ``metropolis=True`` cells where the deterministic guesses find no TRIA*
    additionally get a seeded Metropolis search.
    """
    spins = spins or SpinPattern.center(3)
    if np.isscalar(resolution):
        n_a = n_d = int(resolution)
    else:
        n_a, n_d = (int(r) for r in resolution)
    if n_a < 1 or n_d < 1:
        raise ValueError("resolution must be positive")
    kinds = diagram_kinds(spins)
    alphas = _grid(alpha_range, n_a)
    dalphas = _grid(dalpha_range, n_d)
    jobs = [(float(a), dalphas, spins, seed, metropolis) for a in alphas]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(_scan_column, jobs, chunksize=max(1, n_a // (4 * threads))))
    else:
        columns = [_scan_column(job) for job in jobs]
    masks = np.vstack([c[0] for c in columns])
    unknown = np.vstack([c[1] for c in columns])
    tria_configs = [c[2] for c in columns]
    diagram = StabilityDiagram(
        alphas=alphas, dalphas=dalphas, masks=masks, spins=spins, kinds=kinds, unknown=unknown,
        metadata={
            "spins": str(spins),
            "alpha_range": list(alpha_range),
            "dalpha_range": list(dalpha_range),
            "resolution": [n_a, n_d],
            "stability_floor": STABILITY_FLOOR,
            "bisection_steps": BISECTION_STEPS,
            "residual_sign": SIGN_CONVENTION,
            "metropolis": metropolis,
            "bits": {k.value: k.bit for k in StructureKind},
        },
    )
    fine = np.linspace(alpha_range[0], alpha_range[1], 4 * n_a + 1)
    diagram.curves.extend(analytic_curves(spins, fine))
    if boundaries:
        diagram.curves.extend(_numeric_boundaries(alphas, dalphas, masks, spins, kinds, tria_configs))
    return diagram


def numeric_soft_mode_point(alpha_lo: float = 1.2, alpha_hi: float = 2.0, steps: int = 60) -> float:
    """Bisect on the sign of the lowest Hessian eigenvalue of the
    homogeneous linear chain to locate the linear-zigzag point."""
    spins = SpinPattern.ground(3)

    def soft(alpha):
        trap = TrapParams(3, alpha, 0.0)
        return evaluate_equilibrium(analytic_equilibrium(StructureKind.LIN_X, trap, spins), trap, spins).min_eigenvalue

    f_lo, f_hi = soft(alpha_lo), soft(alpha_hi)
    if f_lo * f_hi > 0:
        raise DomainError("soft mode does not change sign on the bracket")
    for _ in range(steps):
        mid = 0.5 * (alpha_lo + alpha_hi)
        if (soft(mid) > 0) == (f_hi > 0):
            alpha_hi = mid
        else:
            alpha_lo = mid
    return 0.5 * (alpha_lo + alpha_hi)
