"""Labeled synthetic voltage/current waveforms for appliance archetypes.

Five bundled presets (see data/default_config.json) stand in for lab
measurements: two resistive loads, one switched-mode supply with strong
odd harmonics, and two motor loads with lagging power factor and an
exponentially decaying inrush.  The voltage channel is always a clean
230 Vrms 50 Hz sine; appliance currents superpose sample-wise and
switching snaps to the nearest rising voltage zero crossing so cycle
extraction stays well-posed.
"""

import csv
import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .validation import check_positive

MAINS_HZ = 50.0
MAINS_VRMS = 230.0
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ApplianceModel:
    """Electrical parameterization of one appliance archetype.

    harmonic_profile entries are (odd order k, amplitude relative to the
    fundamental, phase radians).  The waveform is

        i(t) = I1p * [sin(w*t - phi) + sum_k a_k * sin(k*(w*t - phi) + theta_k)]

    scaled by the inrush envelope and with Gaussian noise added, where
    I1p = sqrt(2) * rated_power / (vrms * power_factor) and
    phi = arccos(power_factor).
    """

    id: str
    kind: str  # resistive | smps | motor
    rated_power: float  # W
    power_factor: float
    harmonic_profile: tuple = ()
    inrush_ratio: float = 1.0
    inrush_decay: float = 0.05  # s
    current_noise_sigma: float = 0.0  # A

    def __post_init__(self):
        check_positive(self.rated_power, "rated_power")
        if not 0.0 < self.power_factor <= 1.0:
            raise ConfigurationError(f"power_factor must be in (0, 1], got {self.power_factor}")
        if self.kind not in ("resistive", "smps", "motor"):
            raise ConfigurationError(f"unknown appliance kind {self.kind!r}")
        for order, amp, _phase in self.harmonic_profile:
            if order % 2 == 0 or order > 15 or order < 3:
                raise ConfigurationError(f"harmonic orders must be odd and in [3, 15], got {order}")
            if not 0.0 <= amp <= 1.0:
                raise ConfigurationError(f"relative harmonic amplitude must be in [0, 1], got {amp}")
        if self.inrush_ratio < 1.0:
            raise ConfigurationError(f"inrush_ratio must be >= 1, got {self.inrush_ratio}")
        if self.current_noise_sigma < 0.0:
            raise ConfigurationError("current_noise_sigma must be >= 0")

    @property
    def highest_harmonic_hz(self):
        orders = [1] + [int(o) for o, _, _ in self.harmonic_profile]
        return max(orders) * MAINS_HZ


@dataclass(frozen=True)
class ScheduleEntry:
    appliance_id: str
    t_on: float
    t_off: float


@dataclass(frozen=True)
class Mains:
    frequency: float = MAINS_HZ
    vrms: float = MAINS_VRMS


@dataclass(frozen=True)
class Schedule:
    entries: tuple
    duration: float
    mains: Mains = field(default_factory=Mains)

    def __post_init__(self):
        check_positive(self.duration, "duration")
        check_positive(self.mains.frequency, "mains frequency")
        for e in self.entries:
            if not 0.0 <= e.t_on < e.t_off <= self.duration:
                raise ConfigurationError(
                    f"entry {e.appliance_id}: need 0 <= t_on < t_off <= duration, "
                    f"got ({e.t_on}, {e.t_off}) with duration {self.duration}"
                )


@dataclass(frozen=True)
class WaveformPair:
    """Synchronized voltage/current series with per-sample activity labels.

    labels is a uint32 bitmask per sample; bit b set means appliance
    appliance_ids[b] is on at that sample.  active_at() decodes one
    sample back into a frozenset of ids.
    """

    fs: float
    v: np.ndarray | None
    i: np.ndarray
    labels: np.ndarray
    appliance_ids: tuple = ()

    def __post_init__(self):
        if self.v is not None and len(self.v) != len(self.i):
            raise ConfigurationError("voltage/current length mismatch")
        if len(self.labels) != len(self.i):
            raise ConfigurationError("labels length mismatch")

    def __len__(self):
        return len(self.i)

    def active_at(self, k):
        mask = int(self.labels[k])
        return frozenset(aid for b, aid in enumerate(self.appliance_ids) if mask >> b & 1)


def _nyquist_check(model, fs):
    limit = 2.0 * model.highest_harmonic_hz
    if fs <= limit:
        raise ConfigurationError(
            f"fs={fs} Hz violates Nyquist for {model.id} (needs > {limit} Hz)"
        )


def _voltage(n, fs, mains):
    t = np.arange(n) / fs
    return SQRT2 * mains.vrms * np.sin(2.0 * np.pi * mains.frequency * t)


def _steady_current(model, n, fs, mains):
    t = np.arange(n) / fs
    w = 2.0 * np.pi * mains.frequency
    phi = np.arccos(model.power_factor)
    i1_peak = SQRT2 * model.rated_power / (mains.vrms * model.power_factor)
    arg = w * t - phi
    i = np.sin(arg)
    for order, amp, theta in model.harmonic_profile:
        i = i + amp * np.sin(order * arg + theta)
    return i1_peak * i


def _inrush_envelope(model, n, fs):
    if model.inrush_ratio <= 1.0 or model.inrush_decay <= 0.0:
        return 1.0
    t = np.arange(n) / fs
    return 1.0 + (model.inrush_ratio - 1.0) * np.exp(-t / model.inrush_decay)


def _rng(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def synth_appliance(model, duration, fs, seed, mains=Mains()):
    """Synthesize one appliance switched on at t=0 for the whole duration.

    Deterministic for a fixed seed; the inrush envelope decays from the
    first sample and noise is Gaussian on the current channel only.
    """
    if duration <= 0:
        raise ConfigurationError(f"duration must be positive, got {duration}")
    _nyquist_check(model, fs)
    n = int(round(duration * fs))
    v = _voltage(n, fs, mains)
    i = _steady_current(model, n, fs, mains) * _inrush_envelope(model, n, fs)
    if model.current_noise_sigma > 0.0:
        rng = _rng(seed)
        i = i + rng.normal(0.0, model.current_noise_sigma, n)
    labels = np.ones(n, dtype=np.uint32)
    return WaveformPair(fs=fs, v=v, i=i, labels=labels, appliance_ids=(model.id,))


def scenario_entry_seed(seed, entry_index):
    """Seed handed to entry number entry_index inside synth_scenario."""
    return np.random.SeedSequence([int(seed), int(entry_index)])


def snap_to_cycle(t, mains=Mains()):
    """Nearest rising voltage zero crossing (whole-cycle boundary)."""
    period = 1.0 / mains.frequency
    return round(t / period) * period


def synth_scenario(models, schedule, fs, seed, background_noise_sigma=0.0):
    """Superpose scheduled appliances over a shared mains voltage.

    Each entry's current is generated with its own child seed (see
    scenario_entry_seed) with the time origin at its snapped switch-on,
    so the inrush transient starts there.  Switch instants snap to the
    nearest rising voltage zero crossing.  Labels carry the on-set at
    every sample.
    """
    by_id = {m.id: m for m in models}
    mains = schedule.mains
    n = int(round(schedule.duration * fs))
    v = _voltage(n, fs, mains)
    i = np.zeros(n)
    if background_noise_sigma > 0.0:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB6]))
        i += rng.normal(0.0, background_noise_sigma, n)
    labels = np.zeros(n, dtype=np.uint32)
    ids = tuple(sorted({e.appliance_id for e in schedule.entries}))
    bit = {aid: b for b, aid in enumerate(ids)}
    for k, entry in enumerate(schedule.entries):
        model = by_id.get(entry.appliance_id)
        if model is None:
            raise ConfigurationError(f"schedule references unknown appliance {entry.appliance_id!r}")
        _nyquist_check(model, fs)
        n_on = int(round(snap_to_cycle(entry.t_on, mains) * fs))
        n_off = int(round(snap_to_cycle(entry.t_off, mains) * fs))
        n_on, n_off = max(0, n_on), min(n, n_off)
        if n_off <= n_on:
            continue
        span = n_off - n_on
        seg = _steady_current(model, span, fs, mains) * _inrush_envelope(model, span, fs)
        if model.current_noise_sigma > 0.0:
            rng = _rng(scenario_entry_seed(seed, k))
            seg = seg + rng.normal(0.0, model.current_noise_sigma, span)
        i[n_on:n_off] += seg
        labels[n_on:n_off] |= np.uint32(1 << bit[model.id])
    return WaveformPair(fs=fs, v=v, i=i, labels=labels, appliance_ids=ids)


# --------------------------------------------------------------------------
# bundled presets and config parsing
# --------------------------------------------------------------------------

def appliance_from_dict(d):
    return ApplianceModel(
        id=d["id"],
        kind=d["kind"],
        rated_power=float(d["rated_power"]),
        power_factor=float(d["power_factor"]),
        harmonic_profile=tuple((int(o), float(a), float(p)) for o, a, p in d.get("harmonic_profile", [])),
        inrush_ratio=float(d.get("inrush_ratio", 1.0)),
        inrush_decay=float(d.get("inrush_decay", 0.05)),
        current_noise_sigma=float(d.get("current_noise_sigma", 0.0)),
    )


def appliance_to_dict(m):
    return {
        "id": m.id,
        "kind": m.kind,
        "rated_power": m.rated_power,
        "power_factor": m.power_factor,
        "harmonic_profile": [list(h) for h in m.harmonic_profile],
        "inrush_ratio": m.inrush_ratio,
        "inrush_decay": m.inrush_decay,
        "current_noise_sigma": m.current_noise_sigma,
    }


def default_appliances():
    """The five bundled presets, freshly parsed."""
    text = resources.files("edgenilm").joinpath("data/default_config.json").read_text()
    return tuple(appliance_from_dict(d) for d in json.loads(text)["appliances"])


def without_noise(model):
    return replace(model, current_noise_sigma=0.0)


def schedule_from_dict(d):
    mains = d.get("mains", {})
    return Schedule(
        entries=tuple(
            ScheduleEntry(e["id"], float(e["t_on"]), float(e["t_off"])) for e in d["entries"]
        ),
        duration=float(d["duration"]),
        mains=Mains(
            frequency=float(mains.get("frequency_hz", MAINS_HZ)),
            vrms=float(mains.get("vrms", MAINS_VRMS)),
        ),
    )


# --------------------------------------------------------------------------
# waveform CSV
# --------------------------------------------------------------------------

def write_waveform_csv(wave, path):
    """Rows t_s,v_V,i_A,labels with labels a |-joined id list."""
    n = len(wave)
    t = np.arange(n) / wave.fs
    with open(path, "w", newline="") as fh:
        fh.write("t_s,v_V,i_A,labels\n")
        for k in range(n):
            ids = sorted(wave.active_at(k))
            vcol = "" if wave.v is None else repr(float(wave.v[k]))
            fh.write(f"{float(t[k])!r},{vcol},{float(wave.i[k])!r},{'|'.join(ids)}\n")


def read_waveform_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(row)
    if not rows:
        raise ConfigurationError(f"{path} contains no samples")
    t = np.array([float(r["t_s"]) for r in rows])
    has_v = rows[0]["v_V"] != ""
    v = np.array([float(r["v_V"]) for r in rows]) if has_v else None
    i = np.array([float(r["i_A"]) for r in rows])
    label_sets = [frozenset(r["labels"].split("|")) - {""} for r in rows]
    ids = tuple(sorted(set().union(*label_sets)))
    bit = {aid: b for b, aid in enumerate(ids)}
    labels = np.zeros(len(rows), dtype=np.uint32)
    for k, s in enumerate(label_sets):
        for aid in s:
            labels[k] |= np.uint32(1 << bit[aid])
    if len(t) > 1:
        fs = 1.0 / np.median(np.diff(t))
    else:
        fs = 1.0
    return WaveformPair(fs=float(np.round(fs, 6)), v=v, i=i, labels=labels, appliance_ids=ids)
