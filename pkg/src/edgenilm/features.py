"""Per-frame time-domain power features and odd-harmonic spectra.

Frequency analysis runs on a synchronous window: four mains cycles of the
current signal resampled to 512 points (128 per cycle), so the fundamental
falls exactly on bin 4 and the odd harmonics 1..15 on bins 4, 12, ..., 60.
The transform is an iterative radix-2 decimation-in-frequency FFT whose
butterfly passes leave the output in bit-reversed order; the plain entry
point applies the reordering permutation, while the skip-reorder entry
point reads the requested bins at translated indices and never builds the
permutation table.  Both share the same butterfly arithmetic, so they
agree bit for bit on every bin.
"""

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InconsistencyError
from .validation import as_float_series, check_power_of_two

MAINS_HZ = 50.0
ODD_ORDERS = (1, 3, 5, 7, 9, 11, 13, 15)
POINTS_PER_CYCLE = 128
WINDOW_CYCLES = 4
WINDOW_POINTS = POINTS_PER_CYCLE * WINDOW_CYCLES  # 512


@dataclass(frozen=True)
class PowerFeatures:
    """Time-domain features of one whole-cycle frame."""

    p: float  # active power, W
    s: float  # apparent power, VA
    q: float  # reactive power, var (derived from p and s)
    vrms: float
    irms: float


@dataclass(frozen=True)
class Spectrum:
    """One-sided DFT of a real window: bins 0..n/2."""

    n: int
    fs: float
    bins: np.ndarray  # complex, length n/2 + 1


@dataclass(frozen=True)
class SkipReorderResult:
    """Magnitudes/phases read straight from the bit-reversed FFT output."""

    n: int
    fs: float
    wanted_bins: tuple
    magnitudes: np.ndarray
    phases: np.ndarray


@dataclass(frozen=True)
class HarmonicVector:
    """Odd-harmonic current magnitudes (peak amps) and phases.

    Phases use the sine convention referenced to the fundamental: writing
    the window as sum_h m_h * sin(h*theta + psi_h) with theta the
    fundamental's phase ramp, the stored phase of order h is psi_h (and 0
    for the fundamental itself).  This is invariant under time shifts of
    the window.
    """

    f0: float
    orders: tuple
    magnitudes: np.ndarray
    phases: np.ndarray


# --------------------------------------------------------------------------
# time-domain features
# --------------------------------------------------------------------------

def active_power(frame):
    """Mean instantaneous v*i over the frame (whole mains cycles assumed)."""
    if frame.v is None:
        raise DomainError("active power needs the voltage channel")
    if len(frame.i) == 0:
        raise DomainError("empty frame")
    return float(np.mean(frame.v * frame.i))


def apparent_power(frame):
    """rms(v) * rms(i)."""
    if frame.v is None:
        raise DomainError("apparent power needs the voltage channel")
    if len(frame.i) == 0:
        raise DomainError("empty frame")
    return float(_rms(frame.v) * _rms(frame.i))


def reactive_power(p, s):
    """sqrt(s^2 - p^2), clamping rounding-noise negatives to zero.

    Raises InconsistencyError when |p| exceeds s beyond 1e-6 * s, which
    can only come from an upstream numerical fault.
    """
    if s < 0:
        raise DomainError(f"apparent power must be >= 0, got {s}")
    if abs(p) > s * (1.0 + 1e-6):
        raise InconsistencyError(f"|p|={abs(p)} exceeds s={s}")
    radicand = s * s - p * p
    if radicand < 0.0:
        radicand = 0.0
    return float(np.sqrt(radicand))


def power_features(frame):
    """P, S, Q plus the rms values, as one record."""
    p = active_power(frame)
    s = apparent_power(frame)
    q = reactive_power(p, s)
    return PowerFeatures(p=p, s=s, q=q, vrms=float(_rms(frame.v)), irms=float(_rms(frame.i)))


def _rms(x):
    return np.sqrt(np.mean(np.square(x)))


def rms(x):
    """Root mean square of a series."""
    return float(_rms(as_float_series(x, "series")))


# --------------------------------------------------------------------------
# radix-2 FFT
# --------------------------------------------------------------------------

_TWIDDLE_CACHE = {}
_BITREV_CACHE = {}


def twiddle_table(n):
    """Half-circle twiddle factors exp(-2*pi*i*k/n), k < n/2 (cached)."""
    tab = _TWIDDLE_CACHE.get(n)
    if tab is None:
        tab = np.exp(-2j * np.pi * np.arange(n // 2) / n)
        tab.setflags(write=False)
        _TWIDDLE_CACHE[n] = tab
    return tab


def bit_reversal_table(n):
    """Index permutation taking bit-reversed order to natural order (cached)."""
    tab = _BITREV_CACHE.get(n)
    if tab is None:
        bits = n.bit_length() - 1
        fwd = np.arange(n)
        rev = np.zeros(n, dtype=np.int64)
        for _ in range(bits):
            rev = (rev << 1) | (fwd & 1)
            fwd >>= 1
        rev.setflags(write=False)
        _BITREV_CACHE[n] = rev
        tab = rev
    return tab


def bit_reverse_index(k, bits):
    """Bit-reverse a single index (used for skip-reorder bin translation)."""
    r = 0
    for _ in range(bits):
        r = (r << 1) | (k & 1)
        k >>= 1
    return r


def _dif_butterflies(x, n):
    """Decimation-in-frequency passes; output in bit-reversed order."""
    tw = twiddle_table(n)
    y = np.array(x[:n], dtype=np.complex128)
    m = n
    while m >= 2:
        h = m // 2
        w = tw[:: n // m][:h]
        z = y.reshape(-1, m)
        v = z[:, h:].copy()
        z[:, h:] = (z[:, :h] - v) * w
        z[:, :h] += v
        m = h
    return y


def fft(x, n, fs=0.0):
    """Forward DFT of the first n samples, one-sided Spectrum.

    n must be a power of two and len(x) >= n.  The transform runs the DIF
    butterflies and then undoes the bit-reversed output order with the
    precomputed permutation table.
    """
    n = check_power_of_two(n)
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim != 1 or len(xs) < n:
        raise ConfigurationError(f"need a 1-D input with at least {n} samples")
    y = _dif_butterflies(xs, n)
    natural = y[bit_reversal_table(n)]
    return Spectrum(n=n, fs=float(fs), bins=natural[: n // 2 + 1])


def fft_skip_reorder(x, n, wanted_bins, fs=0.0):
    """DIF transform without the reordering pass; reads only wanted bins.

    The requested bin indices are translated to their bit-reversed
    positions (no n-entry lookup table is allocated) and the magnitudes
    and phases at those positions are returned.  Values agree bit for bit
    with fft() at the same bins.
    """
    n = check_power_of_two(n)
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim != 1 or len(xs) < n:
        raise ConfigurationError(f"need a 1-D input with at least {n} samples")
    wanted = tuple(int(k) for k in wanted_bins)
    if any(k < 0 or k > n // 2 for k in wanted):
        raise ConfigurationError(f"wanted bins must lie in [0, {n // 2}]")
    positions = translated_bin_positions(wanted, n)
    y = _dif_butterflies(xs, n)
    vals = y[positions]
    return SkipReorderResult(
        n=n,
        fs=float(fs),
        wanted_bins=wanted,
        magnitudes=np.abs(vals),
        phases=np.angle(vals),
    )


def translated_bin_positions(wanted_bins, n):
    """Bit-reversed positions of the wanted bins inside the DIF output.

    For a fixed configuration these are constants; computing them once
    outside the per-frame loop mirrors how a deployed extractor would
    hard-code them.
    """
    bits = int(n).bit_length() - 1
    return np.array([bit_reverse_index(int(k), bits) for k in wanted_bins], dtype=np.int64)


# --------------------------------------------------------------------------
# synchronous resampling and harmonic extraction
# --------------------------------------------------------------------------

def first_rising_crossing(x, min_spacing=None):
    """Fractional index of the first rising zero crossing, or None.

    min_spacing suppresses harmonic-induced extra crossings by ignoring
    any crossing closer than that many samples to the previous accepted
    one (only the first crossing is returned, so it simply guards the
    search start).
    """
    xs = np.asarray(x, dtype=np.float64)
    if len(xs) < 2:
        return None
    below = xs[:-1] <= 0.0
    above = xs[1:] > 0.0
    idx = np.nonzero(below & above)[0]
    if len(idx) == 0:
        return None
    k = int(idx[0])
    denom = xs[k + 1] - xs[k]
    frac = 0.0 if denom == 0.0 else -xs[k] / denom
    return k + frac


def resample_window(x, start, period, n_cycles, points_per_cycle=POINTS_PER_CYCLE):
    """Linear-interpolation resampling of whole cycles onto a uniform grid.

    Takes n_cycles periods beginning at fractional sample position start
    and returns n_cycles * points_per_cycle evenly spaced samples.
    """
    xs = np.asarray(x, dtype=np.float64)
    total = n_cycles * points_per_cycle
    positions = start + period * np.arange(total) / points_per_cycle
    if positions[-1] > len(xs) - 1 or start < 0:
        raise DomainError("resampling window extends past the series")
    return np.interp(positions, np.arange(len(xs)), xs)


def odd_harmonics(spec, f0=MAINS_HZ, orders=ODD_ORDERS):
    """Odd-harmonic magnitudes (peak amps) and fundamental-relative phases.

    Accepts a Spectrum or a SkipReorderResult.  The window behind the
    spectrum must span an integer number of mains cycles so that f0 sits
    on an exact bin; otherwise a ConfigurationError is raised.
    """
    n, fs = spec.n, spec.fs
    if fs <= 0:
        raise ConfigurationError("spectrum carries no sampling rate")
    cycles = f0 * n / fs
    k1 = cycles
    if abs(k1 - round(k1)) > 1e-9:
        raise ConfigurationError(
            f"f0={f0} Hz is not bin-aligned for n={n}, fs={fs} (bin {k1:.3f})"
        )
    k1 = int(round(k1))
    mags = np.empty(len(orders))
    raw_phases = np.empty(len(orders))
    for idx, h in enumerate(orders):
        k = h * k1
        if isinstance(spec, SkipReorderResult):
            try:
                pos = spec.wanted_bins.index(k)
            except ValueError:
                raise ConfigurationError(f"bin {k} missing from skip-reorder result")
            mag, ph = spec.magnitudes[pos], spec.phases[pos]
        else:
            if k >= len(spec.bins):
                raise ConfigurationError(f"harmonic order {h} beyond Nyquist for n={n}")
            val = spec.bins[k]
            mag, ph = abs(val), cmath.phase(val)
        mags[idx] = 2.0 * mag / n
        raw_phases[idx] = ph
    ords = np.asarray(orders, dtype=float)
    # DFT angles are cosine-referenced; convert to fundamental-anchored
    # sine phases: psi_h = (phi_h - h*phi_1) + (1 - h)*pi/2
    rel = raw_phases - ords * raw_phases[0] + (1.0 - ords) * np.pi / 2.0
    rel = np.mod(rel + np.pi, 2.0 * np.pi) - np.pi
    rel[0] = 0.0
    return HarmonicVector(f0=f0, orders=tuple(orders), magnitudes=mags, phases=rel)


def harmonic_bins(n=WINDOW_POINTS, cycles=WINDOW_CYCLES, orders=ODD_ORDERS):
    """Spectrum bins carrying the odd harmonics for a synchronous window."""
    return tuple(h * cycles for h in orders)


def harmonic_rms(hv):
    """rms current implied by the harmonic magnitudes (peak amps)."""
    return float(np.sqrt(np.sum(np.square(hv.magnitudes)) / 2.0))
