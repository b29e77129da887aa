"""Batch front end: ``crystalcat <command> --config run.yaml --out DIR``.

Each command reads a YAML run configuration, validates it, and writes CSV
tables (plus an optional SVG).  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import io as cio
from .crystal import (
    ALPHA_CRITICAL,
    SpinPattern,
    StructureKind,
    TrapParams,
    analytic_equilibrium,
    evaluate_equilibrium,
    find_equilibrium,
    metropolis_search,
)
from .exceptions import ConfigError, CrystalCatError
from .gaussian import default_time_grid, physical_echo
from .modes import branch_sweep
from .ramsey import ramsey_p1, ramsey_p2, revival_times, spectrum
from .stability import scan_diagram, stable_structures
from .units import PhysicalTrap, SPECIES

log = logging.getLogger("crystalcat")

COMMANDS = ("equilibrium", "modes", "stability", "echo", "spectrum", "ramsey")


# --- config validation ------------------------------------------------------


def _get(cfg, key, kind, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"key {key!r} must be {getattr(kind, '__name__', kind)}, got {value!r}")
    return value


def _positive(cfg, key, default=None, required=False):
    value = _get(cfg, key, float, default, required)
    if value is not None and not value > 0:
        raise ConfigError(f"key {key!r} must be positive, got {value}")
    return value


def _range(cfg, key, default):
    value = cfg.get(key, default)
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
            and value[0] < value[1]):
        raise ConfigError(f"key {key!r} must be an increasing pair of numbers, got {value!r}")
    return float(value[0]), float(value[1])


def _spins(cfg, n_ions, default="ground"):
    text = _get(cfg, "spins", str, default)
    try:
        spins = SpinPattern.parse(text, n_ions)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return spins


def _species(name):
    for key in SPECIES:
        if key.lower() == str(name).lower().rstrip("+"):
            return SPECIES[key]
    raise ConfigError(f"unknown species {name!r}; known: {sorted(SPECIES)}")


def _check_keys(cfg, allowed):
    unknown = set(cfg) - set(allowed) - {"command"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")


def _time_grid(cfg):
    tcfg = cfg.get("time", {}) or {}
    if not isinstance(tcfg, dict):
        raise ConfigError("'time' must be a mapping")
    _check_keys(tcfg, {"duration", "samples"})
    duration = _positive(tcfg, "duration", 200.0)
    samples = _get(tcfg, "samples", int, 4096)
    if samples < 2:
        raise ConfigError("'time.samples' must be at least 2")
    return default_time_grid(samples, duration)


def _echo_cases(cfg):
    """Expand an echo-style config into a list of :class:`PhysicalTrap`."""
    species = _species(_get(cfg, "species", str, "Be9"))
    cases = cfg.get("cases")
    if not isinstance(cases, list) or not cases:
        raise ConfigError("'cases' must be a non-empty list")
    traps = []
    for case in cases:
        if not isinstance(case, dict):
            raise ConfigError("each case must be a mapping")
        _check_keys(case, {"species", "nu_x_khz", "nu_y_khz", "delta_nu_y_khz", "label"})
        sp = _species(case["species"]) if "species" in case else species
        nu_x = _positive(case, "nu_x_khz", _positive(cfg, "nu_x_khz", 500.0))
        nu_y = _positive(case, "nu_y_khz", required=True)
        dnu = _get(case, "delta_nu_y_khz", float, _get(cfg, "delta_nu_y_khz", float, 0.0))
        traps.append((case.get("label") or f"{sp.name} {nu_x:g}/{nu_y:g}/{dnu:g} kHz",
                      PhysicalTrap.from_khz(sp, nu_x, nu_y, dnu)))
    return traps


ECHO_KEYS = {"species", "nu_x_khz", "delta_nu_y_khz", "cases", "time", "spins", "svg", "seed"}


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a YAML mapping")
    return cfg


def shipped_config(name: str) -> Path:
    """Path of a configuration shipped with the package (``fig2`` etc.)."""
    path = resources.files("crystalcat") / "configs" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"no shipped config named {name!r}")
    return Path(str(path))


# --- commands ---------------------------------------------------------------


def _trap_params(cfg, n_ions):
    if "alpha" in cfg:
        alpha = _get(cfg, "alpha", float, required=True)
        dalpha = _get(cfg, "delta_alpha", float, 0.0)
    else:
        nu_x = _positive(cfg, "nu_x_khz", required=True)
        alpha = _positive(cfg, "nu_y_khz", required=True) / nu_x
        dalpha = _get(cfg, "delta_nu_y_khz", float, 0.0) / nu_x
    try:
        return TrapParams(n_ions, alpha, dalpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_equilibrium(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, {"n_ions", "alpha", "delta_alpha", "nu_x_khz", "nu_y_khz", "delta_nu_y_khz",
                      "spins", "structure", "seed", "svg"})
    n = _get(cfg, "n_ions", int, 3)
    trap = _trap_params(cfg, n)
    spins = _spins(cfg, n)
    structure = _get(cfg, "structure", str, "auto")
    meta = cio.header(cfg, alpha=trap.alpha, delta_alpha=trap.delta_alpha, spins=str(spins))
    if structure == "metropolis" or (structure == "auto" and n != 3):
        results = [metropolis_search(trap, spins, seed, constraint=None if n != 3 else 1e-2)]
    elif structure == "auto":
        found = stable_structures(trap.alpha, trap.delta_alpha, spins)
        if not found:
            raise CrystalCatError(f"no stable structure at alpha={trap.alpha}, delta_alpha={trap.delta_alpha}")
        results = sorted(found.values(), key=lambda r: r.energy)
    else:
        try:
            kind = StructureKind(structure)
        except ValueError:
            raise ConfigError(f"unknown structure {structure!r}") from None
        config = analytic_equilibrium(kind, trap, spins)
        results = [find_equilibrium(trap, spins, config)]
    best = results[0]
    meta["structure"] = best.kind.label
    meta["all_stable"] = [r.kind.label for r in results]
    path = cio.write_configuration(out / "equilibrium.csv", best, spins, meta)
    print(f"{best.kind.label}: energy {best.energy:.12f}, stable={best.stable} -> {path}")


def cmd_modes(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, {"alpha_range", "points", "delta_alpha", "spins", "svg", "seed"})
    lo, hi = _range(cfg, "alpha_range", (1.05, 2.5))
    if lo < 1.0:
        raise ConfigError("alpha_range must start at or above 1")
    points = _get(cfg, "points", int, 201)
    spins = _spins(cfg, 3)
    dalpha = _get(cfg, "delta_alpha", float, 0.0)
    alphas = np.linspace(lo, hi, points)
    # skip the critical point itself, where the soft mode vanishes
    alphas = alphas[np.abs(alphas - ALPHA_CRITICAL) > 1e-9]
    freqs, kinds = branch_sweep(alphas, dalpha, spins)
    meta = cio.header(cfg, spins=str(spins), delta_alpha=dalpha, alpha_critical=ALPHA_CRITICAL)
    path = cio.write_modes(out / "modes.csv", alphas, freqs, kinds, meta)
    if cfg.get("svg", True):
        from .plotting import plot_modes

        plot_modes(out / "modes.svg", alphas, freqs, ALPHA_CRITICAL)
    print(f"{len(alphas)} alpha values -> {path}")


def cmd_stability(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, {"alpha_range", "dalpha_range", "resolution", "spins", "metropolis", "svg", "seed"})
    spins = _spins(cfg, 3, "center")
    res = _get(cfg, "resolution", int, 200)
    if res < 2:
        raise ConfigError("resolution must be at least 2")
    diagram = scan_diagram(_range(cfg, "alpha_range", (1.0, 2.0)), _range(cfg, "dalpha_range", (-0.5, 1.5)),
                           res, spins, threads=threads, seed=seed,
                           metropolis=_get(cfg, "metropolis", bool, False))
    meta = cio.header(cfg, seed=seed)
    path = cio.write_diagram(out / "diagram.csv", diagram, meta)
    cio.write_boundaries(out / "boundaries.csv", diagram, meta)
    if cfg.get("svg", True):
        from .plotting import plot_diagram

        plot_diagram(out / "diagram.svg", diagram)
    counts = {k.label: int(diagram.stable(k).sum()) for k in diagram.kinds}
    print(f"{counts}, no stable structure in {int((diagram.count_stable() == 0).sum())} cells -> {path}")


def _run_echoes(cfg):
    spins = _spins(cfg, 3, "center")
    grid = _time_grid(cfg)
    out = []
    for label, trap in _echo_cases(cfg):
        log.info("echo %s", label)
        out.append((label, trap, physical_echo(trap, spins, grid)))
    return out


def cmd_echo(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, ECHO_KEYS)
    runs = _run_echoes(cfg)
    for k, (label, trap, series) in enumerate(runs):
        meta = cio.header(cfg, label=label)
        path = cio.write_series(out / f"echo_{k}.csv", series, trap.nu_x, meta)
        rev = revival_times(series)
        print(f"{label}: {series.metadata['g_structure']} -> {series.metadata['e_structure']}, "
              f"{len(rev)} revivals above 0.5 -> {path}")
    if cfg.get("svg", True):
        from .plotting import plot_series

        plot_series(out / "echo.svg", [r[2] for r in runs], [r[0] for r in runs])


def cmd_spectrum(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, ECHO_KEYS | {"inputs", "window"})
    window = _get(cfg, "window", str, "none")
    if window not in ("none", "hann"):
        raise ConfigError("window must be 'none' or 'hann'")
    if "inputs" in cfg:
        if not isinstance(cfg["inputs"], list):
            raise ConfigError("'inputs' must be a list of echo CSV paths")
        runs = []
        for p in cfg["inputs"]:
            try:
                runs.append((str(p), None, cio.read_series(p)))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read echo series {p}: {exc}") from None
    else:
        runs = _run_echoes(cfg)
    spectra = []
    for k, (label, trap, series) in enumerate(runs):
        spec = spectrum(series, window)
        spectra.append(spec)
        nu_x = trap.nu_x if trap is not None else series.metadata.get("nu_x")
        path = cio.write_spectrum(out / f"spectrum_{k}.csv", spec, nu_x, cio.header(cfg, label=label))
        print(f"{label}: dominant peak at omega = {spec.dominant():.4f} +- {spec.bin_width:.4f} -> {path}")
    if cfg.get("svg", True):
        from .plotting import plot_spectra

        plot_spectra(out / "spectrum.svg", spectra, [r[0] for r in runs])


def cmd_ramsey(cfg, out: Path, threads: int, seed: int):
    _check_keys(cfg, ECHO_KEYS)
    for k, (label, trap, series) in enumerate(_run_echoes(cfg)):
        meta = cio.header(cfg, label=label)
        path = cio.write_ramsey(out / f"ramsey_{k}.csv", series, ramsey_p1(series), ramsey_p2(series),
                                trap.nu_x, meta)
        print(f"{label} -> {path}")


HANDLERS = {
    "equilibrium": cmd_equilibrium,
    "modes": cmd_modes,
    "stability": cmd_stability,
    "echo": cmd_echo,
    "spectrum": cmd_spectrum,
    "ramsey": cmd_ramsey,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crystalcat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__name__.replace("cmd_", "") + " run")
        p.add_argument("--config", required=True,
                       help="YAML run configuration, or the name of a shipped one (e.g. fig3)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes for grid scans")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        path = Path(args.config)
        if not path.exists() and not path.suffix:
            path = shipped_config(args.config)
        cfg = load_config(path)
        declared = cfg.get("command", args.command)
        if declared != args.command:
            raise ConfigError(f"config is for command {declared!r}, not {args.command!r}")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        seed = args.seed if args.seed is not None else _get(cfg, "seed", int, 0)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](cfg, out, args.threads, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CrystalCatError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
