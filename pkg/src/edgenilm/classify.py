"""End-to-end classification: dataset splitting, k-NN-over-DTW baseline,
Table-style metrics, and the full waveform -> predictions pipeline.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import acquisition, events, features
from .dtw import _distance_rolling, dtw_signature
from .errors import (
    ConfigurationError,
    DomainError,
    PipelineError,
    StratificationError,
    WindowError,
)
from .validation import as_feature_matrix

MIN_CLASS_EXAMPLES = 10


# --------------------------------------------------------------------------
# dataset splitting
# --------------------------------------------------------------------------

def split_dataset(labels, ratios=(0.7, 0.1, 0.2), seed=0):
    """Stratified train/val/test split; returns three index arrays.

    Within each class the indices are shuffled with the given seed and
    allocated by largest-remainder rounding, so the three parts form an
    exact partition and per-class proportions are off by at most one
    example.
    """
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DomainError("cannot split an empty dataset")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError(f"ratios must sum to 1, got {ratios}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x59]))
    parts = [[], [], []]
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < MIN_CLASS_EXAMPLES:
            raise StratificationError(
                f"class {cls!r} has {len(idx)} examples, need >= {MIN_CLASS_EXAMPLES}"
            )
        idx = idx[rng.permutation(len(idx))]
        n = len(idx)
        counts = np.floor(np.asarray(ratios) * n).astype(int)
        remainders = np.asarray(ratios) * n - counts
        for _ in range(n - counts.sum()):
            k = int(np.argmax(remainders))
            counts[k] += 1
            remainders[k] = -1.0
        stops = np.cumsum(counts)
        parts[0].append(idx[: stops[0]])
        parts[1].append(idx[stops[0] : stops[1]])
        parts[2].append(idx[stops[1] : stops[2]])
    return tuple(np.sort(np.concatenate(p)).astype(np.int64) for p in parts)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    confusion: np.ndarray  # rows = truth, cols = prediction
    labels: tuple

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
        }


def evaluate(predictions, truth, labels=None):
    """Accuracy plus macro-averaged precision/recall/F1 and the confusion
    matrix (row = true class).  Per-class F1 is the harmonic mean of that
    class's precision and recall; empty denominators count as zero.
    """
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if len(predictions) == 0 or len(predictions) != len(truth):
        raise DomainError("predictions and truth must be equal-length and non-empty")
    if labels is None:
        labels = np.unique(np.concatenate([truth, predictions]))
    labels = np.asarray(labels)
    index = {lab: k for k, lab in enumerate(labels.tolist())}
    c = len(labels)
    confusion = np.zeros((c, c), dtype=np.int64)
    for t, p in zip(truth, predictions):
        confusion[index[t], index[p]] += 1
    tp = np.diag(confusion).astype(float)
    col = confusion.sum(axis=0).astype(float)
    row = confusion.sum(axis=1).astype(float)
    precision = np.divide(tp, col, out=np.zeros(c), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros(c), where=row > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(c), where=denom > 0)
    return Metrics(
        accuracy=float(tp.sum() / confusion.sum()),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
        confusion=confusion,
        labels=tuple(labels.tolist()),
    )


# --------------------------------------------------------------------------
# k-NN over DTW distances
# --------------------------------------------------------------------------

def delta_cycles(cycle_set):
    """Direction-normalized appliance cycles implied by an event.

    Subtracting each pre-event snippet from its same-distance post-event
    partner isolates the switched appliance's current (shared voltage
    makes aggregate current additive); off events are negated so both
    directions land in the same space.  Rows pair offsets (+1, 0),
    (+10, -10), (+20, -20).
    """
    cyc = cycle_set.cycles
    out = np.stack([cyc[3] - cyc[2], cyc[4] - cyc[1], cyc[5] - cyc[0]])
    if cycle_set.mark is not None and cycle_set.mark.direction == "off":
        out = -out
    return out


@dataclass
class TemplateLibrary:
    """Per-label template cycles (and optional feature vectors)."""

    cycles_by_label: dict = field(default_factory=dict)
    features_by_label: dict = field(default_factory=dict)

    def add(self, label, cycles, feature=None):
        self.cycles_by_label.setdefault(label, []).append(np.asarray(cycles, dtype=np.float64))
        if feature is not None:
            self.features_by_label.setdefault(label, []).append(np.asarray(feature))

    def smallest_class_size(self):
        if not self.cycles_by_label:
            return 0
        return min(len(v) for v in self.cycles_by_label.values())


def knn_dtw_classify(query_cycles, library, k=1):
    """Majority vote over the k nearest templates by mean DTW distance.

    query_cycles: (m, 128) event cycles (see delta_cycles); each template
    with the same row count contributes the mean of its row-paired DTW
    distances.  Ties on the vote break toward the smaller mean distance.
    Returns (label, sorted neighbor distances).
    """
    if library.smallest_class_size() == 0:
        raise DomainError("template library is empty")
    if k > library.smallest_class_size():
        raise DomainError(
            f"k={k} exceeds the smallest class template count "
            f"{library.smallest_class_size()}"
        )
    q = np.asarray(query_cycles, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    dists = []
    for label, templates in sorted(library.cycles_by_label.items()):
        for tmpl in templates:
            t = tmpl if tmpl.ndim == 2 else tmpl[None, :]
            rows = min(len(q), len(t))
            d = np.mean(
                [_distance_rolling(q[r], t[r], False, -1) for r in range(rows)]
            )
            dists.append((float(d), label))
    dists.sort(key=lambda pair: pair[0])
    nearest = dists[:k]
    votes = {}
    for d, label in nearest:
        cnt, total = votes.get(label, (0, 0.0))
        votes[label] = (cnt + 1, total + d)
    best = sorted(votes.items(), key=lambda kv: (-kv[1][0], kv[1][1] / kv[1][0], kv[0]))
    return best[0][0], [d for d, _ in nearest]


class KnnDtwClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper around the DTW template vote."""

    def __init__(self, k=5):
        self.k = k

    def fit(self, X, y):
        """X: (n, m, 128) event cycles (delta_cycles output); y: labels."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        self.library_ = TemplateLibrary()
        for cycles, label in zip(X, y):
            self.library_.add(label, cycles)
        if self.k > self.library_.smallest_class_size():
            raise DomainError("k exceeds the smallest class template count")
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.asarray([knn_dtw_classify(q, self.library_, self.k)[0] for q in X])


# --------------------------------------------------------------------------
# end-to-end pipeline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EventRecord:
    """One detected event with everything the classifiers consume."""

    mark: events.EventMark
    cycle_set: events.CycleSet
    feature: events.FeatureVector
    label: str | None = None  # ground truth when derivable


@dataclass(frozen=True)
class Prediction:
    mark: events.EventMark
    label: str
    probabilities: dict


def extract_event_records(wave, acq_cfg, det_cfg, attach_labels=True):
    """Acquisition -> per-cycle series -> detection -> per-event features.

    Events without the required cycle margins are dropped.  When the
    waveform carries activity labels the toggled appliance is attached
    as ground truth.
    """
    mode = det_cfg.mode
    cal = acquisition.calibrate_recording(wave, acq_cfg)
    v = None if mode == "current" else cal.v
    series, grid = events.cycle_series(v, cal.i, wave.fs, mode=mode)
    marks = events.detect_events(series, det_cfg)
    wanted = features.harmonic_bins()
    records = []
    for mark in marks:
        try:
            cset = events.extract_cycles(cal.i, wave.fs, mark, grid)
            pre_rng, post_rng = events.event_windows(mark, grid)
        except WindowError:
            continue  # not enough margin around this event
        sig = dtw_signature(cset)
        windows = {}
        for name, (c0, c1) in (("pre", pre_rng), ("post", post_rng)):
            i_win = features.resample_window(
                cal.i, grid.start_of(c0), grid.period, events.WINDOW_CYCLES
            )
            spec = features.fft_skip_reorder(
                i_win, features.WINDOW_POINTS, wanted, fs=features.POINTS_PER_CYCLE * 50.0
            )
            harm = features.odd_harmonics(spec)
            if mode == "power":
                v_win = features.resample_window(
                    cal.v, grid.start_of(c0), grid.period, events.WINDOW_CYCLES
                )
                frame = acquisition.frame_from_arrays(
                    v_win, i_win, features.POINTS_PER_CYCLE * 50.0
                )
                power = features.power_features(frame)
            else:
                power = float(np.sqrt(np.mean(np.square(i_win))))
            windows[name] = (power, harm)
        fv = events.composite_feature(
            windows["pre"][0],
            windows["post"][0],
            windows["pre"][1],
            windows["post"][1],
            sig,
            mode=mode,
            mark=mark,
        )
        label = None
        if attach_labels and len(wave.appliance_ids) > 0:
            label = events.switched_appliance(wave, mark, grid)
        records.append(EventRecord(mark=mark, cycle_set=cset, feature=fv, label=label))
    return records


def run_pipeline(wave, acq_cfg, det_cfg, classifier):
    """Classify every detected switching event in a recording.

    classifier is either a fitted MobileMiniClassifier (predict_proba) or
    a fitted KnnDtwClassifier (template vote on delta cycles).  Errors
    are re-raised tagged with the stage that failed.
    """
    try:
        records = extract_event_records(wave, acq_cfg, det_cfg)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("features", exc) from exc
    predictions = []
    for rec in records:
        try:
            if hasattr(classifier, "predict_proba"):
                probs = classifier.predict_proba(rec.feature.values[None, :])[0]
                labels = classifier.classes_
                best = labels[int(np.argmax(probs))]
                prob_map = {str(l): float(p) for l, p in zip(labels, probs)}
            else:
                best, dists = knn_dtw_classify(
                    delta_cycles(rec.cycle_set), classifier.library_, classifier.k
                )
                prob_map = {str(best): 1.0}
        except Exception as exc:
            raise PipelineError("classify", exc) from exc
        predictions.append(Prediction(mark=rec.mark, label=str(best), probabilities=prob_map))
    return predictions


def metrics_json(metrics, path=None):
    """Serialize Metrics in the documented JSON layout."""
    payload = json.dumps(metrics.to_dict(), indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(payload + "\n")
    return payload
