"""Threshold-triggered switching events and their feature windows.

Detection runs on a per-cycle feature series (active power in dual-channel
mode, rms current in current-only mode).  An event is marked at cycle j,
the last cycle before the step: the step between x[j] and x[j+1] must
reach the threshold, the previous step must not (so a decaying inrush
cannot retrigger), and the new level must persist for the debounce count.
The mark's cycle j and the offsets -10/-20 therefore lie strictly before
the switching instant, while +1/+10/+20 lie strictly after it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FeatureError, WindowError
from .features import (
    MAINS_HZ,
    POINTS_PER_CYCLE,
    WINDOW_CYCLES,
    first_rising_crossing,
    resample_window,
)

CYCLE_OFFSETS = (-20, -10, 0, 1, 10, 20)
POWER_FEATURE_LEN = 20  # dP,dS,dQ + 8 harmonic deltas + 9 DTW values
CURRENT_FEATURE_LEN = 17  # dIrms + 7 harmonic deltas (orders 3..15) + 9 DTW values


@dataclass(frozen=True)
class DetectorConfig:
    threshold: float = 5.0  # W in power mode, A rms in current mode
    mode: str = "power"
    refractory: int = 25  # cycles between kept events
    debounce: int = 3  # cycles the new level must persist

    def __post_init__(self):
        if self.threshold <= 0:
            raise ConfigurationError("threshold must be positive")
        if self.mode not in ("power", "current"):
            raise ConfigurationError(f"mode must be power|current, got {self.mode!r}")
        if self.refractory < 1 or self.debounce < 1:
            raise ConfigurationError("refractory and debounce must be >= 1 cycle")


@dataclass(frozen=True)
class EventMark:
    j: int  # last pre-event cycle index
    direction: str  # on | off
    delta: float  # signed step magnitude is abs(delta)


@dataclass(frozen=True)
class CycleGrid:
    """Uniform cycle grid anchored at the reference channel's first
    rising zero crossing and extended back to the recording start."""

    anchor: float  # fractional sample index of cycle 0's start
    period: float  # samples per cycle
    n_cycles: int

    def start_of(self, j):
        return self.anchor + j * self.period


@dataclass(frozen=True)
class CycleSet:
    """Six single-cycle current snippets around an event, resampled to
    128 points each, at cycle offsets -20, -10, 0, +1, +10, +20."""

    mark: EventMark
    offsets: tuple
    cycles: np.ndarray  # (6, 128)
    cycle_indices: tuple


@dataclass(frozen=True)
class FeatureVector:
    """Composite event feature: deltas plus the DTW signature."""

    values: np.ndarray
    mark: EventMark
    mode: str


def cycle_grid(reference, fs, f0=MAINS_HZ):
    """Build the cycle grid from a reference channel.

    Falls back to an origin-anchored grid when the channel never crosses
    zero (silent current-only recordings).
    """
    period = fs / f0
    ref = np.asarray(reference, dtype=np.float64)
    z0 = first_rising_crossing(ref)
    if z0 is None:
        z0 = 0.0
    z0 -= np.floor(z0 / period) * period
    n_cycles = int(np.floor((len(ref) - 1 - z0) / period))
    if n_cycles < 1:
        raise WindowError("recording shorter than one mains cycle")
    return CycleGrid(anchor=float(z0), period=period, n_cycles=n_cycles)


def cycle_series(wave_v, wave_i, fs, mode="power", f0=MAINS_HZ):
    """Per-cycle detection series plus the grid it was measured on.

    Power mode returns mean(v*i) per cycle; current mode returns rms(i)
    per cycle and ignores the voltage channel entirely.
    """
    if mode == "power":
        if wave_v is None:
            raise ConfigurationError("power mode needs the voltage channel")
        grid = cycle_grid(wave_v, fs, f0)
    else:
        grid = cycle_grid(wave_i, fs, f0)
    i = np.asarray(wave_i, dtype=np.float64)
    out = np.empty(grid.n_cycles)
    for j in range(grid.n_cycles):
        a = int(np.ceil(grid.start_of(j)))
        b = int(np.ceil(grid.start_of(j + 1)))
        if mode == "power":
            out[j] = np.mean(wave_v[a:b] * i[a:b])
        else:
            out[j] = np.sqrt(np.mean(np.square(i[a:b])))
    return out, grid


def detect_events(series, cfg):
    """Scan a per-cycle series for threshold-crossing level steps.

    A candidate at j needs |x[j+1] - x[j]| >= threshold with a steady
    pre cycle (|x[j] - x[j-1]| < threshold) and the changed level holding
    for cfg.debounce consecutive cycles.  Events closer than the
    refractory are merged, keeping the larger step.
    """
    x = np.asarray(series, dtype=np.float64)
    if len(x) < 2:
        return []
    thr = cfg.threshold
    marks = []
    last = len(x) - 1
    for j in range(last):
        delta = x[j + 1] - x[j]
        if abs(delta) < thr:
            continue
        if j > 0 and abs(x[j] - x[j - 1]) >= thr:
            continue  # still inside a transient
        if j + cfg.debounce > last:
            continue  # ran out of cycles to confirm
        sign = 1.0 if delta > 0 else -1.0
        confirmed = all(
            sign * (x[j + m] - x[j]) >= thr for m in range(1, cfg.debounce + 1)
        )
        if not confirmed:
            continue
        marks.append(EventMark(j=j, direction="on" if delta > 0 else "off", delta=float(delta)))
    merged = []
    for mark in marks:
        if merged and mark.j - merged[-1].j < cfg.refractory:
            if abs(mark.delta) > abs(merged[-1].delta):
                merged[-1] = mark
        else:
            merged.append(mark)
    return merged


def extract_cycles(current, fs, mark, grid=None, f0=MAINS_HZ):
    """Cut the six single-cycle snippets around an event.

    Each snippet starts at a cycle boundary of the grid (a rising zero
    crossing of the reference channel) and is resampled to 128 points.
    Raises WindowError when fewer than 21 cycles exist on either side.
    """
    i = np.asarray(current, dtype=np.float64)
    if grid is None:
        grid = cycle_grid(i, fs, f0)
    j = mark.j
    if j + CYCLE_OFFSETS[0] < 0 or j + CYCLE_OFFSETS[-1] >= grid.n_cycles:
        raise WindowError(
            f"event at cycle {j} lacks the +-{CYCLE_OFFSETS[-1]}-cycle margin "
            f"(grid holds {grid.n_cycles} cycles)"
        )
    snippets = np.empty((len(CYCLE_OFFSETS), POINTS_PER_CYCLE))
    indices = []
    for row, off in enumerate(CYCLE_OFFSETS):
        c = j + off
        snippets[row] = resample_window(i, grid.start_of(c), grid.period, 1)
        indices.append(c)
    return CycleSet(mark=mark, offsets=CYCLE_OFFSETS, cycles=snippets, cycle_indices=tuple(indices))


def event_windows(mark, grid):
    """(pre, post) cycle ranges used for the event's feature frames.

    Four whole cycles each: the pre window ends at the mark cycle j, the
    post window ends at j+20 where the inrush transient has decayed.
    """
    pre = (mark.j - (WINDOW_CYCLES - 1), mark.j)
    post = (mark.j + 21 - WINDOW_CYCLES, mark.j + 20)
    if pre[0] < 0 or post[1] >= grid.n_cycles:
        raise WindowError(f"event at cycle {mark.j} lacks feature-window margin")
    return pre, post


def composite_feature(pre_power, post_power, pre_harm, post_harm, signature, mode="power", mark=None):
    """Fuse power/harmonic deltas with the DTW signature.

    Power mode: [dP, dS, dQ] + harmonic magnitude deltas for the odd
    orders 1..15 (8 values) + the 9 signature distances = 20 values.
    Current mode: pre_power/post_power are the window rms currents
    (plain floats); the fundamental delta is dropped as redundant with
    dIrms, giving [dIrms] + orders 3..15 (7 values) + 9 = 17 values.
    Deltas are post minus pre.
    """
    sig = np.asarray(signature, dtype=np.float64)
    if sig.shape != (9,):
        raise FeatureError(f"signature must hold 9 values, got shape {sig.shape}")
    dmag = np.asarray(post_harm.magnitudes, dtype=np.float64) - np.asarray(
        pre_harm.magnitudes, dtype=np.float64
    )
    if mode == "power":
        head = np.array(
            [
                post_power.p - pre_power.p,
                post_power.s - pre_power.s,
                post_power.q - pre_power.q,
            ]
        )
        values = np.concatenate([head, dmag, sig])
        expected = POWER_FEATURE_LEN
    elif mode == "current":
        head = np.array([float(post_power) - float(pre_power)])
        values = np.concatenate([head, dmag[1:], sig])
        expected = CURRENT_FEATURE_LEN
    else:
        raise ConfigurationError(f"mode must be power|current, got {mode!r}")
    if len(values) != expected:
        raise FeatureError(f"feature length {len(values)} != {expected}")
    if not np.all(np.isfinite(values)):
        raise FeatureError("non-finite values in composite feature")
    return FeatureVector(values=values, mark=mark, mode=mode)


def switched_appliance(wave, mark, grid):
    """Ground-truth label of the appliance toggled at a detected event.

    Compares the recording's label sets in the middle of cycles j and
    j+1; returns the single differing id or None when that is ambiguous.
    """
    mid_pre = int(grid.start_of(mark.j) + grid.period / 2)
    mid_post = int(grid.start_of(mark.j + 1) + grid.period / 2)
    mid_post = min(mid_post, len(wave) - 1)
    changed = wave.active_at(mid_pre) ^ wave.active_at(mid_post)
    if len(changed) == 1:
        return next(iter(changed))
    return None
