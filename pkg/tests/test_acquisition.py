import numpy as np
import pytest

from edgenilm import acquisition as aq
from edgenilm import signalgen as sg
from edgenilm.errors import ConfigurationError


def make_cfg(**kw):
    base = dict(f_adc_clock=6553600.0, adc_prescaler=1.0, sampling_cycles=1024.0)
    base.update(kw)
    return aq.AcquisitionConfig(**base)


class TestSamplingRate:
    def test_simple(self):
        cfg = make_cfg(f_adc_clock=1e6, adc_prescaler=1.0, sampling_cycles=1000.0)
        assert aq.sampling_rate(cfg) == pytest.approx(1000.0)

    def test_fractional_cycles(self):
        cfg = make_cfg(f_adc_clock=21714286.0, adc_prescaler=1.0, sampling_cycles=810.5)
        assert aq.sampling_rate(cfg) == pytest.approx(21714286.0 / 810.5)
        assert aq.sampling_rate(cfg) == pytest.approx(26791.2, abs=0.1)

    def test_with_prescaler_four(self):
        cfg = make_cfg(f_adc_clock=21714286.0, adc_prescaler=4.0, sampling_cycles=810.5)
        assert aq.sampling_rate(cfg) == pytest.approx(21714286.0 / (4.0 * 810.5))
        assert aq.sampling_rate(cfg) == pytest.approx(6697.9, abs=0.2)

    def test_strictly_decreasing_in_divisors(self):
        rates_presc = [
            aq.sampling_rate(make_cfg(adc_prescaler=p)) for p in (1.0, 2.0, 4.0, 8.0, 16.0)
        ]
        assert all(a > b for a, b in zip(rates_presc, rates_presc[1:]))
        rates_cyc = [
            aq.sampling_rate(make_cfg(sampling_cycles=c))
            for c in (64.0, 128.5, 512.0, 810.5, 2048.0)
        ]
        assert all(a > b for a, b in zip(rates_cyc, rates_cyc[1:]))

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigurationError):
            make_cfg(f_adc_clock=0.0)
        with pytest.raises(ConfigurationError):
            make_cfg(adc_prescaler=0.5)
        with pytest.raises(ConfigurationError):
            make_cfg(adc_bits=6)


def wave_from(v, i, fs=6400.0):
    n = len(i)
    return sg.WaveformPair(
        fs=fs,
        v=None if v is None else np.asarray(v, float),
        i=np.asarray(i, float),
        labels=np.zeros(n, dtype=np.uint32),
        appliance_ids=(),
    )


class TestQuantize:
    def test_zero_maps_to_mid_code(self):
        cfg = aq.AcquisitionConfig.ideal(6400.0)
        raw, clipped = aq.quantize(wave_from(np.zeros(100), np.zeros(100)), cfg)
        assert np.all(raw.counts_v == 2048)
        assert np.all(raw.counts_i == 2048)
        assert clipped == 0

    def test_full_scale_saturates(self):
        cfg = aq.AcquisitionConfig.ideal(6400.0)
        v = np.array([cfg.full_scale_v, -cfg.full_scale_v, 2 * cfg.full_scale_v])
        raw, clipped = aq.quantize(wave_from(v, np.zeros(3)), cfg)
        assert raw.counts_v[0] == 4095
        assert raw.counts_v[1] == 0
        assert raw.counts_v[2] == 4095
        assert clipped >= 2

    def test_round_trip_within_half_lsb(self):
        cfg = aq.AcquisitionConfig.ideal(6400.0)
        t = np.arange(1280) / 6400.0
        v = 325.0 * np.sin(2 * np.pi * 50 * t)
        i = 50.0 * np.sin(2 * np.pi * 50 * t + 0.3)
        raw, clipped = aq.quantize(wave_from(v, i), cfg)
        cal = aq.raw_conv(raw, cfg)
        assert clipped == 0
        lsb_v = cfg.full_scale_v / cfg.mid_code
        lsb_i = cfg.full_scale_i / cfg.mid_code
        assert np.max(np.abs(cal.v - v)) <= lsb_v / 2 + 1e-12
        assert np.max(np.abs(cal.i - i)) <= lsb_i / 2 + 1e-12

    def test_current_only(self):
        cfg = aq.AcquisitionConfig.ideal(6400.0)
        raw, _ = aq.quantize(wave_from(None, np.zeros(10)), cfg)
        assert raw.counts_v is None
        cal = aq.raw_conv(raw, cfg)
        assert cal.v is None

    def test_deterministic(self):
        cfg = aq.AcquisitionConfig.ideal(6400.0)
        rng = np.random.default_rng(3)
        v = rng.normal(0, 100, 500)
        i = rng.normal(0, 10, 500)
        r1, _ = aq.quantize(wave_from(v, i), cfg)
        r2, _ = aq.quantize(wave_from(v, i), cfg)
        assert np.array_equal(r1.counts_v, r2.counts_v)
        assert np.array_equal(r1.counts_i, r2.counts_i)


class TestRawConv:
    def test_identity_coefficients(self):
        cfg = make_cfg(gain_v=1.0, offset_v=0.0, gain_i=1.0, offset_i=0.0)
        raw = aq.RawFrame(
            counts_v=np.array([0, 100, 4095]), counts_i=np.array([1, 2, 3]), fs=6400.0
        )
        cal = aq.raw_conv(raw, cfg)
        assert np.array_equal(cal.v, [0.0, 100.0, 4095.0])
        assert np.array_equal(cal.i, [1.0, 2.0, 3.0])

    def test_mid_code_offset_gives_zero(self):
        cfg = make_cfg(gain_i=0.123, offset_i=2048.0)
        raw = aq.RawFrame(counts_v=None, counts_i=np.full(8, 2048), fs=6400.0)
        assert np.all(aq.raw_conv(raw, cfg).i == 0.0)

    def test_signed_span(self):
        cfg = make_cfg(gain_i=70.0 / 2048, offset_i=2048.0)
        raw = aq.RawFrame(counts_v=None, counts_i=np.array([0, 4095]), fs=6400.0)
        cal = aq.raw_conv(raw, cfg)
        assert cal.i[0] == pytest.approx(-70.0)
        assert cal.i[1] == pytest.approx(2047 * 70.0 / 2048)
        assert cal.i[1] == pytest.approx(69.966, abs=1e-3)


class TestFrameStream:
    def _wave(self, seconds, fs=6600.0):
        n = int(seconds * fs)
        t = np.arange(n) / fs
        v = 300.0 * np.sin(2 * np.pi * 50 * t)
        return wave_from(v, 0.1 * v / 300.0, fs)

    def test_one_second_ten_frames(self):
        frames = aq.frame_stream(self._wave(1.0), aq.AcquisitionConfig.ideal(6600.0))
        assert len(frames) == 10
        assert all(len(f) == 660 for f in frames)

    def test_too_short_is_empty(self):
        frames = aq.frame_stream(self._wave(0.05), aq.AcquisitionConfig.ideal(6600.0))
        assert frames == []

    def test_trailing_partial_dropped(self):
        frames = aq.frame_stream(self._wave(0.95), aq.AcquisitionConfig.ideal(6600.0))
        assert len(frames) == 9

    def test_boundaries_exact_multiples(self):
        fs = 6400.0
        frames = aq.frame_stream(self._wave(0.751, fs), aq.AcquisitionConfig.ideal(fs))
        frame_len = round(fs * 0.1)
        assert len(frames) == 7
        assert all(len(f) == frame_len for f in frames)

    def test_current_only_stream(self):
        wave = wave_from(None, np.ones(1300), fs=6400.0)
        frames = aq.frame_stream(wave, aq.AcquisitionConfig.ideal(6400.0))
        assert len(frames) == 2
        assert frames[0].v is None


def test_raw_frame_csv_round_numbers(tmp_path):
    cfg = aq.AcquisitionConfig.ideal(6400.0)
    raw, _ = aq.quantize(wave_from(np.zeros(5), np.zeros(5)), cfg)
    path = tmp_path / "raw.csv"
    aq.raw_frame_csv(raw, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t_s,counts_v,counts_i"
    assert lines[1].endswith(",2048,2048")
    assert len(lines) == 6
