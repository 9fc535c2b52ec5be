"""ADC front-end model: sampling-rate arithmetic, quantization, calibration.

The sampling rate of the modeled converter follows

    f_sample = f_clock / (prescaler * sampling_cycles)

with a possibly fractional cycle count.  Quantization maps engineering
units onto mid-scale-offset integer codes; the affine gain/offset
conversion (raw_conv) maps codes back.  With the default coefficients the
two are inverses up to half an LSB.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .validation import check_positive

FRAME_SPAN_S = 0.1


@dataclass(frozen=True)
class AcquisitionConfig:
    f_adc_clock: float  # Hz
    adc_prescaler: float
    sampling_cycles: float  # clock cycles per conversion, may be fractional
    adc_bits: int = 12
    full_scale_v: float = 400.0
    full_scale_i: float = 70.0
    gain_v: float = 400.0 / 2048
    offset_v: float = 2048.0
    gain_i: float = 70.0 / 2048
    offset_i: float = 2048.0

    def __post_init__(self):
        check_positive(self.f_adc_clock, "f_adc_clock")
        if self.adc_prescaler < 1:
            raise ConfigurationError(f"adc_prescaler must be >= 1, got {self.adc_prescaler}")
        check_positive(self.sampling_cycles, "sampling_cycles")
        if not 8 <= self.adc_bits <= 16:
            raise ConfigurationError(f"adc_bits must be in [8, 16], got {self.adc_bits}")
        check_positive(self.full_scale_v, "full_scale_v")
        check_positive(self.full_scale_i, "full_scale_i")

    @property
    def code_span(self):
        return (1 << self.adc_bits) - 1

    @property
    def mid_code(self):
        return 1 << (self.adc_bits - 1)

    @classmethod
    def ideal(cls, fs, adc_bits=12, full_scale_v=400.0, full_scale_i=70.0):
        """Config whose sampling rate is exactly fs and whose calibration
        coefficients invert the quantizer (gain = full_scale / mid_code)."""
        half = float(1 << (adc_bits - 1))
        return cls(
            f_adc_clock=fs * 1024.0,
            adc_prescaler=1.0,
            sampling_cycles=1024.0,
            adc_bits=adc_bits,
            full_scale_v=full_scale_v,
            full_scale_i=full_scale_i,
            gain_v=full_scale_v / half,
            offset_v=half,
            gain_i=full_scale_i / half,
            offset_i=half,
        )


DEFAULT_ACQUISITION = AcquisitionConfig.ideal(6400.0)


@dataclass(frozen=True)
class RawFrame:
    """Quantized counts; counts_v is None for current-only capture."""

    counts_v: np.ndarray | None
    counts_i: np.ndarray
    fs: float


@dataclass(frozen=True)
class CalibratedFrame:
    """Engineering-unit samples; v is None in current-only mode."""

    v: np.ndarray | None
    i: np.ndarray
    fs: float
    frame_span: float

    def __len__(self):
        return len(self.i)


def sampling_rate(cfg):
    """Evaluate f_clock / (prescaler * sampling_cycles)."""
    divisor = cfg.adc_prescaler * cfg.sampling_cycles
    if divisor <= 0:
        raise ConfigurationError("prescaler * sampling_cycles must be positive")
    return cfg.f_adc_clock / divisor


def _quantize_channel(x, full_scale, cfg):
    half = float(cfg.mid_code)
    codes = np.rint(np.asarray(x, dtype=np.float64) / full_scale * half) + half
    clipped = int(np.count_nonzero((codes < 0) | (codes > cfg.code_span)))
    codes = np.clip(codes, 0, cfg.code_span).astype(np.int32)
    return codes, clipped


def quantize(wave, cfg):
    """Quantize a waveform to mid-scale-offset ADC codes.

    Returns (RawFrame, clipped) where clipped counts the samples that
    saturated at either end of the code range.  Saturation itself is
    silent.
    """
    clipped = 0
    counts_v = None
    if wave.v is not None:
        counts_v, cv = _quantize_channel(wave.v, cfg.full_scale_v, cfg)
        clipped += cv
    counts_i, ci = _quantize_channel(wave.i, cfg.full_scale_i, cfg)
    clipped += ci
    return RawFrame(counts_v=counts_v, counts_i=counts_i, fs=wave.fs), clipped


def raw_conv(raw, cfg):
    """Affine gain/offset conversion from codes to engineering units."""
    v = None
    if raw.counts_v is not None:
        v = cfg.gain_v * (raw.counts_v.astype(np.float64) - cfg.offset_v)
    i = cfg.gain_i * (raw.counts_i.astype(np.float64) - cfg.offset_i)
    return CalibratedFrame(v=v, i=i, fs=raw.fs, frame_span=len(i) / raw.fs)


def frame_stream(wave, cfg, frame_span=FRAME_SPAN_S):
    """Quantize, calibrate, and cut into consecutive fixed-span frames.

    Frames are non-overlapping, frame_span seconds (nominally 100 ms)
    long; a trailing partial frame is dropped.  A waveform shorter than
    one frame yields an empty list.
    """
    raw, _ = quantize(wave, cfg)
    cal = raw_conv(raw, cfg)
    frame_len = int(round(wave.fs * frame_span))
    if frame_len <= 0:
        raise ConfigurationError("frame_span too short for the sampling rate")
    n_frames = len(cal.i) // frame_len
    frames = []
    for k in range(n_frames):
        sl = slice(k * frame_len, (k + 1) * frame_len)
        frames.append(
            CalibratedFrame(
                v=None if cal.v is None else cal.v[sl],
                i=cal.i[sl],
                fs=wave.fs,
                frame_span=frame_span,
            )
        )
    return frames


def calibrate_recording(wave, cfg):
    """One-shot quantize + raw_conv over a whole recording."""
    raw, _ = quantize(wave, cfg)
    return raw_conv(raw, cfg)


def frame_from_arrays(v, i, fs):
    """Wrap already-calibrated samples (tests, event windows)."""
    i = np.asarray(i, dtype=np.float64)
    v = None if v is None else np.asarray(v, dtype=np.float64)
    if v is not None and len(v) != len(i):
        raise DomainError("voltage and current lengths differ")
    return CalibratedFrame(v=v, i=i, fs=fs, frame_span=len(i) / fs)


def raw_frame_csv(raw, path):
    """Write counts as t_s,counts_v,counts_i (fixture generation)."""
    n = len(raw.counts_i)
    t = np.arange(n) / raw.fs
    cv = raw.counts_v if raw.counts_v is not None else np.full(n, "", dtype=object)
    with open(path, "w") as fh:
        fh.write("t_s,counts_v,counts_i\n")
        for k in range(n):
            fh.write(f"{t[k]:.9f},{cv[k]},{raw.counts_i[k]}\n")


def drop_voltage(wave):
    """Current-only view of a recording (keeps labels and rate)."""
    return replace(wave, v=None) if hasattr(wave, "v") else wave
