"""Host-side resource accounting for the feature-extraction stages.

Times the per-frame cost of calibration, power features, and the two FFT
variants (with and without the output reordering pass) on one standard
100 ms frame, and reports each stage's lookup-table memory from exact
element-count arithmetic rather than measurement.  The FFT comparison
extracts the same odd-harmonic bins in both variants so the only
difference is the reordering pass itself; one-time setup (twiddle tables,
translated bin positions) stays outside the timed region, as it would on
a deployed extractor.

Absolute numbers are host wall times; only the skip/full ratio is meant
to be compared (directionally) against cycle counts measured elsewhere.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from . import acquisition, features, signalgen

BENCH_STAGES = ("raw_conv_vi", "raw_conv_i", "P", "S", "fft", "fft_skip_reorder")


@dataclass(frozen=True)
class StageStats:
    ns_median: float  # per frame, median over all repetitions
    table_bytes: int  # persistent lookup tables + working buffer


@dataclass(frozen=True)
class BenchReport:
    stages: dict
    reps: int
    fft_n: int
    skip_speedup: float  # full time / skip time, > 1 means skip is faster
    skip_table_reduction_pct: float

    def to_dict(self):
        return {
            "reps": self.reps,
            "fft_n": self.fft_n,
            "stages": {
                name: {"ns_median": s.ns_median, "table_bytes": s.table_bytes}
                for name, s in self.stages.items()
            },
            "skip_speedup": self.skip_speedup,
            "skip_table_reduction_pct": self.skip_table_reduction_pct,
        }

    def table(self):
        lines = [f"{'stage':<18} {'ns/frame':>12} {'table bytes':>12}"]
        for name in BENCH_STAGES:
            s = self.stages[name]
            lines.append(f"{name:<18} {s.ns_median:>12.0f} {s.table_bytes:>12d}")
        lines.append(
            f"skip-reorder speedup: {self.skip_speedup:.3f}x "
            f"(time saved {100.0 * (1.0 - 1.0 / self.skip_speedup):.1f}%), "
            f"table memory saved {self.skip_table_reduction_pct:.1f}%"
        )
        return "\n".join(lines)


def fft_table_bytes(n, skip_reorder):
    """Exact byte count of the transform's tables and working buffer."""
    twiddles = (n // 2) * 16  # complex128
    buffer = n * 16
    if skip_reorder:
        return twiddles + buffer
    bitrev = n * 8  # int64 permutation table
    return twiddles + bitrev + buffer


def _median_ns(fn, reps, batch=20):
    """Median per-call time; calls are grouped in small batches so the
    timer resolution does not dominate sub-microsecond differences."""
    n_batches = max(1, reps // batch)
    out = np.empty(n_batches)
    fn()  # warm caches outside the timed region
    for b in range(n_batches):
        t0 = time.perf_counter_ns()
        for _ in range(batch):
            fn()
        out[b] = (time.perf_counter_ns() - t0) / batch
    return float(np.median(out))


def _standard_frame(fs=6400.0, seed=42):
    """One 100 ms frame of a harmonic-rich load for representative input."""
    models = signalgen.default_appliances()
    laptop = next(m for m in models if m.kind == "smps")
    wave = signalgen.synth_appliance(signalgen.without_noise(laptop), 0.2, fs, seed)
    return wave


def run_bench(reps=10000, fs=6400.0, fft_n=512, seed=42):
    """Measure every stage and assemble the report."""
    wave = _standard_frame(fs, seed)
    frame_len = int(round(fs * acquisition.FRAME_SPAN_S))
    cfg = acquisition.AcquisitionConfig.ideal(fs)
    raw, _ = acquisition.quantize(wave, cfg)
    counts_v = raw.counts_v[:frame_len]
    counts_i = raw.counts_i[:frame_len]
    frame_vi = acquisition.RawFrame(counts_v=counts_v, counts_i=counts_i, fs=fs)
    frame_i = acquisition.RawFrame(counts_v=None, counts_i=counts_i, fs=fs)
    cal = acquisition.raw_conv(frame_vi, cfg)
    window = features.resample_window(cal.i, 0.0, fs / 50.0, features.WINDOW_CYCLES)
    wanted = features.harmonic_bins(fft_n)
    positions = features.translated_bin_positions(wanted, fft_n)
    bitrev = features.bit_reversal_table(fft_n)
    features.twiddle_table(fft_n)  # built once, outside the timed loops
    half = fft_n // 2

    def run_fft_full():
        y = features._dif_butterflies(window, fft_n)
        bins = y[bitrev][: half + 1]
        vals = bins[list(wanted)]
        return np.abs(vals), np.angle(vals)

    def run_fft_skip():
        y = features._dif_butterflies(window, fft_n)
        vals = y[positions]
        return np.abs(vals), np.angle(vals)

    timed = {
        "raw_conv_vi": lambda: acquisition.raw_conv(frame_vi, cfg),
        "raw_conv_i": lambda: acquisition.raw_conv(frame_i, cfg),
        "P": lambda: features.active_power(cal),
        "S": lambda: features.apparent_power(cal),
        "fft": run_fft_full,
        "fft_skip_reorder": run_fft_skip,
    }
    tables = {
        "raw_conv_vi": 2 * frame_len * 8,
        "raw_conv_i": frame_len * 8,
        "P": frame_len * 8,
        "S": frame_len * 8,
        "fft": fft_table_bytes(fft_n, skip_reorder=False),
        "fft_skip_reorder": fft_table_bytes(fft_n, skip_reorder=True),
    }
    # interleave the two FFT variants so clock drift cancels
    stages = {}
    for name in ("raw_conv_vi", "raw_conv_i", "P", "S"):
        stages[name] = StageStats(_median_ns(timed[name], reps), tables[name])
    batch = 20
    n_batches = max(1, reps // batch)
    tf = np.empty(n_batches)
    ts = np.empty(n_batches)
    run_fft_full()
    run_fft_skip()
    for b in range(n_batches):
        t0 = time.perf_counter_ns()
        for _ in range(batch):
            run_fft_full()
        tf[b] = (time.perf_counter_ns() - t0) / batch
        t0 = time.perf_counter_ns()
        for _ in range(batch):
            run_fft_skip()
        ts[b] = (time.perf_counter_ns() - t0) / batch
    stages["fft"] = StageStats(float(np.median(tf)), tables["fft"])
    stages["fft_skip_reorder"] = StageStats(float(np.median(ts)), tables["fft_skip_reorder"])
    full_mem = tables["fft"]
    skip_mem = tables["fft_skip_reorder"]
    return BenchReport(
        stages=stages,
        reps=reps,
        fft_n=fft_n,
        skip_speedup=float(stages["fft"].ns_median / stages["fft_skip_reorder"].ns_median),
        skip_table_reduction_pct=100.0 * (full_mem - skip_mem) / full_mem,
    )


def bench_json(report, path=None):
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(payload + "\n")
    return payload
