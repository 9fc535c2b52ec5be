"""Synthetic edge-style NILM pipeline.

Waveform synthesis -> ADC-model acquisition -> time/frequency features ->
threshold event detection -> DTW signatures -> lightweight-CNN or
k-NN-DTW classification, plus a stage-level resource benchmark.
"""

from .acquisition import AcquisitionConfig, CalibratedFrame, RawFrame, frame_stream, quantize, raw_conv, sampling_rate
from .classify import KnnDtwClassifier, Metrics, evaluate, knn_dtw_classify, run_pipeline, split_dataset
from .dtw import DtwResult, dtw_distance, dtw_signature
from .events import CycleSet, DetectorConfig, EventMark, FeatureVector, composite_feature, detect_events, extract_cycles
from .features import HarmonicVector, PowerFeatures, Spectrum, active_power, apparent_power, fft, fft_skip_reorder, odd_harmonics, reactive_power
from .neuralnet import MobileMiniClassifier, MobileMiniModel, TrainConfig, h_sigmoid, h_swish, train
from .signalgen import ApplianceModel, Schedule, ScheduleEntry, WaveformPair, default_appliances, synth_appliance, synth_scenario

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "CalibratedFrame", "RawFrame", "frame_stream", "quantize", "raw_conv", "sampling_rate",
    "KnnDtwClassifier", "Metrics", "evaluate", "knn_dtw_classify", "run_pipeline", "split_dataset",
    "DtwResult", "dtw_distance", "dtw_signature",
    "CycleSet", "DetectorConfig", "EventMark", "FeatureVector", "composite_feature", "detect_events", "extract_cycles",
    "HarmonicVector", "PowerFeatures", "Spectrum", "active_power", "apparent_power", "fft", "fft_skip_reorder", "odd_harmonics", "reactive_power",
    "MobileMiniClassifier", "MobileMiniModel", "TrainConfig", "h_sigmoid", "h_swish", "train",
    "ApplianceModel", "Schedule", "ScheduleEntry", "WaveformPair", "default_appliances", "synth_appliance", "synth_scenario",
    "__version__",
]
