"""Ramsey-protocol observables and spectral analysis of echo series.

Two Ramsey sequences read out the echo: without a phase gate the
probability to find the addressed ion in ``|g>`` is ``(1 + Re I)/2``; with
a gate ``|e> -> -i|e>`` between the pulses it is ``(1 + Im I)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .exceptions import PreconditionError
from .gaussian import OverlapSeries

UNIFORM_GRID_RTOL = 1e-9


def _values(series):
    return series.values if isinstance(series, OverlapSeries) else np.asarray(series, dtype=complex)


def ramsey_p1(series) -> np.ndarray:
    """Ground-state probability ``(1 + Re I)/2`` after the second pulse."""
    return np.clip(0.5 * (1.0 + _values(series).real), 0.0, 1.0)


def ramsey_p2(series) -> np.ndarray:
    """Same with the phase gate applied: ``(1 + Im I)/2``."""
    return np.clip(0.5 * (1.0 + _values(series).imag), 0.0, 1.0)


def reconstruct(p1, p2) -> np.ndarray:
    """Recover ``I = (2 P1 - 1) + i (2 P2 - 1)``."""
    return (2.0 * np.asarray(p1, dtype=float) - 1.0) + 1j * (2.0 * np.asarray(p2, dtype=float) - 1.0)


def _require_uniform(times):
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise PreconditionError("a spectrum needs at least two samples")
    dt = np.diff(times)
    if dt.min() <= 0 or np.ptp(dt) > UNIFORM_GRID_RTOL * abs(dt.mean()) + 1e-15:
        raise PreconditionError("time grid is not uniform")
    return float(dt.mean())


@dataclass(frozen=True)
class Spectrum:
    """One-sided discrete Fourier transform of ``|I(t)|``.

    ``frequencies`` are angular, in units of ``nu_x``; ``magnitudes`` are the
    raw ``|sum_n w_n |I_n| exp(-i w_k t_n)|`` with no normalisation.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    window: str
    n_samples: int
    signal_energy: float  # sum of squared (windowed) samples
    metadata: dict = field(default_factory=dict)

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def khz(self, nu_x: float | None = None) -> np.ndarray:
        """Frequencies as ordinary kHz, given the axial angular frequency."""
        from .units import TWO_PI

        nu_x = nu_x if nu_x is not None else self.metadata.get("nu_x")
        if nu_x is None:
            raise PreconditionError("nu_x is needed to convert to kHz")
        return self.frequencies * nu_x / TWO_PI / 1e3

    def parseval_energy(self) -> float:
        """Time-domain energy rebuilt from the one-sided magnitudes."""
        power = self.magnitudes**2
        weights = np.full(power.size, 2.0)
        weights[0] = 1.0
        if self.n_samples % 2 == 0:
            weights[-1] = 1.0
        return float((weights * power).sum() / self.n_samples)

    def dominant(self, skip_dc: bool = True) -> float:
        """Frequency of the largest peak.

        With ``skip_dc`` the search starts after the first local minimum,
        so the main lobe of the DC component (wider than one bin under a
        window) is excluded.
        """
        start = 0
        if skip_dc:
            m = self.magnitudes
            start = 1
            while start + 1 < m.size and m[start + 1] < m[start]:
                start += 1
        return float(self.frequencies[start + np.argmax(self.magnitudes[start:])])


def spectrum(series: OverlapSeries, window: str = "none") -> Spectrum:
    """Transform the modulus ``|I(t)|``; the DC component is retained."""
    dt = _require_uniform(series.times)
    signal = np.abs(series.values)
    n = signal.size
    if window == "none":
        taper = np.ones(n)
    elif window == "hann":
        taper = np.hanning(n)
    else:
        raise ValueError(f"unknown window {window!r}; use 'none' or 'hann'")
    signal = signal * taper
    mags = np.abs(np.fft.rfft(signal))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n, dt)
    meta = dict(series.metadata)
    meta["spectrum_convention"] = "angular frequency in units of nu_x; unnormalised |rfft(|I|)|"
    return Spectrum(freqs, mags, window, n, float(signal @ signal), meta)


def revival_times(series: OverlapSeries, threshold: float = 0.5) -> np.ndarray:
    """Times of local maxima of ``|I|`` above ``threshold``, ``t = 0``
    excluded."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    mod = np.abs(series.values)
    peaks, _ = find_peaks(mod, height=threshold)
    times = series.times[peaks]
    return times[times > 0]


def revival_period(series: OverlapSeries, threshold: float = 0.1, tolerance: float = 0.95) -> float:
    """Fundamental spacing of the revival train.

    Revivals sit near integer multiples of a period ``T`` but not every
    multiple clears the threshold, so consecutive differences can be
    multiples of ``T``.  The revival times (and ``t = 0``) are treated as a
    pulse train; ``T = 2 pi / f`` for the lowest frequency ``f`` whose comb
    alignment ``|mean exp(i f t_k)|`` reaches ``tolerance`` times the best
    one.  Returns ``nan`` with fewer than two revivals.
    """
    times = np.concatenate([[0.0], revival_times(series, threshold)])
    if times.size < 3:
        return float("nan")
    span = series.times[-1] - series.times[0]
    shortest = max(np.diff(times).min(), series.times[1] - series.times[0])
    # extend past the shortest spacing so a fundamental there is an interior peak
    freqs = np.linspace(2.0 * np.pi / span, 3.0 * np.pi / shortest, 20000)
    score = np.abs(np.exp(1j * np.outer(freqs, times)).mean(axis=1))
    peaks, _ = find_peaks(score)
    candidates = peaks[score[peaks] >= tolerance * score[peaks].max()] if peaks.size else [np.argmax(score)]
    return float(2.0 * np.pi / freqs[candidates[0]])
