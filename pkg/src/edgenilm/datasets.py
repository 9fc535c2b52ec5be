"""Synthetic event datasets mirroring the single-load and multi-load
benchmark protocols.

Each single-load scenario switches one jittered appliance instance on at
0.5 s and off at 2.0 s, contributing one on-event and one off-event.
Multi-load scenarios overlap two appliances (A on, B on, B off, A off)
with 1.5 s spacing so every switch keeps its cycle margins.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import classify, signalgen
from .errors import ConfigurationError


def jittered_model(model, rng, power_spread=0.15, pf_spread=0.03, harm_spread=0.1):
    """Random per-event variant of a preset (power, pf, harmonic jitter)."""
    pf = min(1.0, model.power_factor * (1.0 + rng.uniform(-pf_spread, pf_spread)))
    profile = tuple(
        (
            order,
            float(np.clip(amp * (1.0 + rng.uniform(-harm_spread, harm_spread)), 0.0, 1.0)),
            phase + rng.uniform(-0.25, 0.25),
        )
        for order, amp, phase in model.harmonic_profile
    )
    return replace(
        model,
        rated_power=model.rated_power * (1.0 + rng.uniform(-power_spread, power_spread)),
        power_factor=pf,
        harmonic_profile=profile,
        inrush_ratio=max(1.0, model.inrush_ratio * (1.0 + rng.uniform(-0.1, 0.1))),
    )


def single_load_wave(model, fs, seed, t_on=0.5, t_off=2.0, duration=2.5):
    schedule = signalgen.Schedule(
        entries=(signalgen.ScheduleEntry(model.id, t_on, t_off),), duration=duration
    )
    return signalgen.synth_scenario([model], schedule, fs, seed)


@dataclass(frozen=True)
class EventDataset:
    X: np.ndarray  # (n, feature_len)
    y: np.ndarray  # (n,) labels
    cycles: np.ndarray  # (n, 3, 128) direction-normalized delta cycles
    directions: np.ndarray  # (n,) "on"/"off"


def collect_single_load_events(
    models, events_per_class, seed, fs, acq_cfg, det_cfg, jitter=True
):
    """Labeled event dataset from single-appliance schedules.

    events_per_class must be even: each scenario contributes its on and
    its off event.  Raises if any scenario does not produce exactly the
    two scheduled events with the right ground-truth labels, so silent
    detector regressions cannot skew the data.
    """
    if events_per_class % 2 != 0:
        raise ConfigurationError("events_per_class must be even (on+off per scenario)")
    scenarios = events_per_class // 2
    rows_X, rows_y, rows_c, rows_d = [], [], [], []
    for cls_idx, model in enumerate(models):
        for s_idx in range(scenarios):
            ss = np.random.SeedSequence([int(seed), cls_idx, s_idx])
            rng = np.random.default_rng(ss)
            inst = jittered_model(model, rng) if jitter else model
            wave_seed = int(ss.generate_state(1)[0])
            wave = single_load_wave(inst, fs, wave_seed)
            records = classify.extract_event_records(wave, acq_cfg, det_cfg)
            if len(records) != 2 or {r.mark.direction for r in records} != {"on", "off"}:
                raise RuntimeError(
                    f"scenario {model.id}/{s_idx}: expected one on and one off event, "
                    f"got {[(r.mark.j, r.mark.direction) for r in records]}"
                )
            for rec in records:
                if rec.label != model.id:
                    raise RuntimeError(
                        f"scenario {model.id}/{s_idx}: ground-truth label {rec.label!r}"
                    )
                rows_X.append(rec.feature.values)
                rows_y.append(model.id)
                rows_c.append(classify.delta_cycles(rec.cycle_set))
                rows_d.append(rec.mark.direction)
    return EventDataset(
        X=np.asarray(rows_X),
        y=np.asarray(rows_y),
        cycles=np.asarray(rows_c),
        directions=np.asarray(rows_d),
    )


def overlap_pairs(models):
    """All unordered appliance pairs, as ordered (first, second) tuples."""
    pairs = []
    for a in range(len(models)):
        for b in range(a + 1, len(models)):
            pairs.append((models[a], models[b]))
    return pairs


def overlap_schedule(first_id, second_id, duration=5.5):
    """A on 0.5s, B on 2.0s, B off 3.5s, A off 5.0s."""
    return signalgen.Schedule(
        entries=(
            signalgen.ScheduleEntry(first_id, 0.5, 5.0),
            signalgen.ScheduleEntry(second_id, 2.0, 3.5),
        ),
        duration=duration,
    )


def expected_switches(schedule, fs, f0=signalgen.MAINS_HZ):
    """(cycle index of last pre cycle, direction, appliance id) per switch."""
    out = []
    for entry in schedule.entries:
        for t, direction in ((entry.t_on, "on"), (entry.t_off, "off")):
            cycle = int(round(signalgen.snap_to_cycle(t) * f0))
            out.append((cycle - 1, direction, entry.appliance_id))
    out.sort()
    return out


def overlap_scenarios(models, n_scenarios, seed, jitter=True):
    """Two-appliance scenarios cycling through all ordered pairs."""
    pairs = overlap_pairs(models)
    ordered = pairs + [(b, a) for a, b in pairs]
    scenarios = []
    for k in range(n_scenarios):
        first, second = ordered[k % len(ordered)]
        ss = np.random.SeedSequence([int(seed), 0xCA5E2, k])
        rng = np.random.default_rng(ss)
        if jitter:
            first = jittered_model(first, rng)
            second = jittered_model(second, rng)
        schedule = overlap_schedule(first.id, second.id)
        scenarios.append((k, first, second, schedule, int(ss.generate_state(1)[0])))
    return scenarios
