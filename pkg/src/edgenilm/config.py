"""Global JSON config: mains, acquisition, detector, training, presets.

The bundled default (data/default_config.json) documents the schema; a
user config replaces any subset of blocks and may add a "schedule" block
for waveform generation.
"""

import json
from dataclasses import dataclass
from importlib import resources

from .acquisition import AcquisitionConfig, sampling_rate
from .errors import ConfigurationError
from .events import DetectorConfig
from .neuralnet import TrainConfig
from .signalgen import Mains, Schedule, appliance_from_dict, schedule_from_dict


@dataclass(frozen=True)
class PipelineConfig:
    mains: Mains
    acquisition: AcquisitionConfig
    detector: DetectorConfig
    training: TrainConfig
    appliances: tuple
    schedule: Schedule | None = None

    @property
    def fs(self):
        return sampling_rate(self.acquisition)

    def appliance(self, appliance_id):
        for m in self.appliances:
            if m.id == appliance_id:
                return m
        raise ConfigurationError(f"unknown appliance {appliance_id!r}")


def _default_dict():
    text = resources.files("edgenilm").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def config_from_dict(d, mode=None, threshold=None):
    base = _default_dict()
    merged = dict(base)
    merged.update(d or {})
    mains_d = merged.get("mains", {})
    mains = Mains(
        frequency=float(mains_d.get("frequency_hz", 50.0)),
        vrms=float(mains_d.get("vrms", 230.0)),
    )
    a = merged["acquisition"]
    acq = AcquisitionConfig(
        f_adc_clock=float(a["f_adc_clock_hz"]),
        adc_prescaler=float(a["adc_prescaler"]),
        sampling_cycles=float(a["sampling_cycles"]),
        adc_bits=int(a["adc_bits"]),
        full_scale_v=float(a["full_scale_v"]),
        full_scale_i=float(a["full_scale_i"]),
        gain_v=float(a["gain_v"]),
        offset_v=float(a["offset_v"]),
        gain_i=float(a["gain_i"]),
        offset_i=float(a["offset_i"]),
    )
    det_d = merged["detector"]
    det_mode = mode or det_d.get("mode", "power")
    if threshold is not None:
        thr = threshold
    elif det_mode == "power":
        thr = float(det_d.get("threshold_w", 5.0))
    else:
        thr = float(det_d.get("threshold_a", 5.0 / mains.vrms))
    det = DetectorConfig(
        threshold=thr,
        mode=det_mode,
        refractory=int(det_d.get("refractory_cycles", 25)),
        debounce=int(det_d.get("debounce_cycles", 3)),
    )
    t = merged["training"]
    train = TrainConfig(
        learning_rate=float(t["learning_rate"]),
        epochs=int(t["epochs"]),
        batch_size=int(t["batch_size"]),
        seed=int(t["seed"]),
        weight_init=t.get("weight_init", "xavier_uniform"),
    )
    appliances = tuple(appliance_from_dict(x) for x in merged["appliances"])
    schedule = None
    if "schedule" in merged and merged["schedule"]:
        schedule = schedule_from_dict(merged["schedule"])
    return PipelineConfig(
        mains=mains,
        acquisition=acq,
        detector=det,
        training=train,
        appliances=appliances,
        schedule=schedule,
    )


def load_config(path=None, mode=None, threshold=None):
    """Parse a config file, filling gaps from the bundled default."""
    if path is None:
        return config_from_dict({}, mode=mode, threshold=threshold)
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(d, mode=mode, threshold=threshold)
