"""Lightweight 1-D CNN built from scratch: depthwise-separable blocks,
squeeze-excitation gating, hard activations, softmax output.

Inputs are composite event feature vectors treated as a length-L,
one-channel signal.  The default "MobileMini" stack is

    conv(1->8, k3) -> DS block (8->16, SE) -> DS block (16->16)
    -> global average pool -> dense(16 -> n_classes)

with h-swish after every convolution, roughly 780 parameters.  All
layers implement forward/backward with plain numpy; training is
mini-batch SGD, deterministic for a fixed seed.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import ConfigurationError, DomainError, ShapeError, TrainingError
from .validation import as_feature_matrix

FORMAT_VERSION = 1


# --------------------------------------------------------------------------
# hard activations
# --------------------------------------------------------------------------

def h_sigmoid(x):
    """min(max(x + 3, 0), 6) / 6, elementwise."""
    return np.clip(np.asarray(x, dtype=np.float64) + 3.0, 0.0, 6.0) / 6.0


def h_swish(x):
    """x * h_sigmoid(x), elementwise."""
    x = np.asarray(x, dtype=np.float64)
    return x * h_sigmoid(x)


def h_sigmoid_grad(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where((x > -3.0) & (x < 3.0), 1.0 / 6.0, 0.0)


def h_swish_grad(x):
    x = np.asarray(x, dtype=np.float64)
    inner = np.where(x <= -3.0, 0.0, np.where(x >= 3.0, 1.0, (2.0 * x + 3.0) / 6.0))
    return inner


# --------------------------------------------------------------------------
# layers: forward(x) -> y, backward(dy) -> dx, params/grads as flat lists
# --------------------------------------------------------------------------

def _shifted_stack(x, k):
    """(B, C, L) -> (B, C, L, k) view stack for same-padded correlation."""
    b, c, l = x.shape
    pad = k // 2
    xp = np.zeros((b, c, l + 2 * pad))
    xp[:, :, pad : pad + l] = x
    return np.stack([xp[:, :, t : t + l] for t in range(k)], axis=-1)


def _scatter_shifts(dstack, l, k):
    """Adjoint of _shifted_stack: (B, C, L, k) -> (B, C, L)."""
    b, c = dstack.shape[:2]
    pad = k // 2
    dxp = np.zeros((b, c, l + 2 * pad))
    for t in range(k):
        dxp[:, :, t : t + l] += dstack[:, :, :, t]
    return dxp[:, :, pad : pad + l]


class Conv1d:
    """Standard same-padded 1-D convolution (cross-correlation form)."""

    def __init__(self, w, b):
        self.w = w  # (out, in, k)
        self.b = b  # (out,)

    def forward(self, x):
        self._x = x
        self._stack = _shifted_stack(x, self.w.shape[2])
        return np.einsum("bclt,oct->bol", self._stack, self.w) + self.b[None, :, None]

    def backward(self, dy):
        self.dw = np.einsum("bclt,bol->oct", self._stack, dy)
        self.db = dy.sum(axis=(0, 2))
        dstack = np.einsum("bol,oct->bclt", dy, self.w)
        return _scatter_shifts(dstack, self._x.shape[2], self.w.shape[2])

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]


class DepthwiseConv1d:
    """Per-channel same-padded 1-D convolution."""

    def __init__(self, w, b):
        self.w = w  # (C, k)
        self.b = b  # (C,)

    def forward(self, x):
        self._x = x
        self._stack = _shifted_stack(x, self.w.shape[1])
        return np.einsum("bclt,ct->bcl", self._stack, self.w) + self.b[None, :, None]

    def backward(self, dy):
        self.dw = np.einsum("bclt,bcl->ct", self._stack, dy)
        self.db = dy.sum(axis=(0, 2))
        dstack = np.einsum("bcl,ct->bclt", dy, self.w)
        return _scatter_shifts(dstack, self._x.shape[2], self.w.shape[1])

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]


class PointwiseConv1d:
    """1x1 cross-channel projection."""

    def __init__(self, w, b):
        self.w = w  # (out, in)
        self.b = b  # (out,)

    def forward(self, x):
        self._x = x
        return np.einsum("bcl,oc->bol", x, self.w) + self.b[None, :, None]

    def backward(self, dy):
        self.dw = np.einsum("bol,bcl->oc", dy, self._x)
        self.db = dy.sum(axis=(0, 2))
        return np.einsum("bol,oc->bcl", dy, self.w)

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]


def depthwise_separable_conv(x, depthwise_w, depthwise_b, pointwise_w, pointwise_b):
    """One-shot depthwise-then-pointwise convolution (no caching).

    Parameter count is C*k + C*C' (+ biases) against C*C'*k for the
    equivalent full convolution.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected (batch, channels, length), got {x.shape}")
    c = x.shape[1]
    if depthwise_w.shape[0] != c or pointwise_w.shape[1] != c:
        raise ShapeError("channel counts disagree between input and kernels")
    if depthwise_w.shape[1] % 2 == 0:
        raise ShapeError("depthwise kernel size must be odd")
    mid = DepthwiseConv1d(depthwise_w, depthwise_b).forward(x)
    return PointwiseConv1d(pointwise_w, pointwise_b).forward(mid)


class SEBlock:
    """Squeeze-excitation: pool -> bottleneck -> h-sigmoid gate -> rescale."""

    def __init__(self, w1, b1, w2, b2):
        self.w1 = w1  # (r, C)
        self.b1 = b1
        self.w2 = w2  # (C, r)
        self.b2 = b2

    def forward(self, x):
        self._x = x
        self._z = x.mean(axis=2)  # (B, C)
        self._a1 = self._z @ self.w1.T + self.b1
        self._r = np.maximum(self._a1, 0.0)
        self._a2 = self._r @ self.w2.T + self.b2
        self._s = h_sigmoid(self._a2)
        return x * self._s[:, :, None]

    def backward(self, dy):
        l = self._x.shape[2]
        ds = (dy * self._x).sum(axis=2)
        dx = dy * self._s[:, :, None]
        da2 = ds * h_sigmoid_grad(self._a2)
        self.dw2 = da2.T @ self._r
        self.db2 = da2.sum(axis=0)
        dr = da2 @ self.w2
        da1 = dr * (self._a1 > 0.0)
        self.dw1 = da1.T @ self._z
        self.db1 = da1.sum(axis=0)
        dz = da1 @ self.w1
        dx += dz[:, :, None] / l
        return dx

    def params(self):
        return [("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)]

    def grads(self):
        return [self.dw1, self.db1, self.dw2, self.db2]


def se_block(x, w1, b1, w2, b2):
    """Functional squeeze-excitation (no caching)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected (batch, channels, length), got {x.shape}")
    c = x.shape[1]
    if w1.shape[1] != c or w2.shape[0] != c or w1.shape[0] != w2.shape[1]:
        raise ShapeError("SE weight shapes inconsistent with the channel count")
    return SEBlock(w1, b1, w2, b2).forward(x)


class HSwish:
    def forward(self, x):
        self._x = x
        return h_swish(x)

    def backward(self, dy):
        return dy * h_swish_grad(self._x)

    def params(self):
        return []

    def grads(self):
        return []


class GlobalAvgPool:
    def forward(self, x):
        self._l = x.shape[2]
        return x.mean(axis=2)

    def backward(self, dy):
        return np.repeat(dy[:, :, None], self._l, axis=2) / self._l

    def params(self):
        return []

    def grads(self):
        return []


class Dense:
    def __init__(self, w, b):
        self.w = w  # (out, in)
        self.b = b

    def forward(self, x):
        self._x = x
        return x @ self.w.T + self.b

    def backward(self, dy):
        self.dw = dy.T @ self._x
        self.db = dy.sum(axis=0)
        return dy @ self.w

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [self.dw, self.db]


def softmax(logits):
    """Max-stabilized softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, labels):
    """Mean -log p[true] with the probabilities floored at 1e-12."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
        raise DomainError("label index out of range")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-12)).mean())


# --------------------------------------------------------------------------
# the model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    weight_init: str = "xavier_uniform"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be >= 0")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ConfigurationError("epochs and batch_size must be positive")


def _xavier(rng, shape, fan_in, fan_out, gain=1.0):
    bound = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class MobileMiniModel:
    """Fixed small stack; see the module docstring for the layout."""

    def __init__(self, layers, input_len, n_classes, channels, se_reduction):
        self.layers = layers
        self.input_len = input_len
        self.n_classes = n_classes
        self.channels = channels
        self.se_reduction = se_reduction

    @classmethod
    def build(cls, input_len, n_classes, seed=0, channels=(8, 16), se_reduction=4, kernel=3):
        if input_len < kernel:
            raise ConfigurationError("input too short for the convolution kernel")
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1135]))
        c1, c2 = channels
        r = max(1, c2 // se_reduction)
        # Xavier-uniform with a nonlinearity gain: every h-swish halves the
        # activation scale near the origin and the SE gate halves it again,
        # so layers feeding them get gain 2 (4 right after the SE block) to
        # keep the forward signal from collapsing through the stack.
        g = 2.0
        layers = [
            Conv1d(_xavier(rng, (c1, 1, kernel), kernel, c1 * kernel, g), np.zeros(c1)),
            HSwish(),
            # DS block 1 (c1 -> c2) with SE
            DepthwiseConv1d(_xavier(rng, (c1, kernel), kernel, kernel, g), np.zeros(c1)),
            HSwish(),
            SEBlock(
                _xavier(rng, (r, c1), c1, r),
                np.zeros(r),
                _xavier(rng, (c1, r), r, c1),
                np.zeros(c1),
            ),
            PointwiseConv1d(_xavier(rng, (c2, c1), c1, c2, 2.0 * g), np.zeros(c2)),
            HSwish(),
            # DS block 2 (c2 -> c2)
            DepthwiseConv1d(_xavier(rng, (c2, kernel), kernel, kernel, g), np.zeros(c2)),
            HSwish(),
            PointwiseConv1d(_xavier(rng, (c2, c2), c2, c2, g), np.zeros(c2)),
            HSwish(),
            GlobalAvgPool(),
            Dense(_xavier(rng, (n_classes, c2), c2, n_classes), np.zeros(n_classes)),
        ]
        return cls(layers, input_len, n_classes, tuple(channels), se_reduction)

    def forward(self, X):
        """Class probabilities for a (n, input_len) batch."""
        X = as_feature_matrix(X)
        if X.shape[1] != self.input_len:
            raise ShapeError(f"expected {self.input_len} features, got {X.shape[1]}")
        h = X[:, None, :]
        for layer in self.layers:
            h = layer.forward(h)
        probs = softmax(h)
        if not np.all(np.isfinite(probs)):
            raise TrainingError("non-finite probabilities in forward pass")
        return probs

    def forward_backward(self, X, labels):
        """One loss evaluation plus gradient accumulation; returns loss."""
        probs = self.forward(X)
        loss = cross_entropy(probs, labels)
        b = len(labels)
        dlogits = probs.copy()
        dlogits[np.arange(b), labels] -= 1.0
        dlogits /= b
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss

    def sgd_step(self, lr):
        for layer in self.layers:
            for (name, param), g in zip(layer.params(), layer.grads()):
                param -= lr * g

    def parameter_count(self):
        return sum(p.size for layer in self.layers for _, p in layer.params())

    def to_dict(self):
        spec = []
        for layer in self.layers:
            entry = {"kind": type(layer).__name__}
            for name, p in layer.params():
                entry[name] = {"shape": list(p.shape), "data": p.ravel().tolist()}
            spec.append(entry)
        return {
            "format_version": FORMAT_VERSION,
            "input_len": self.input_len,
            "n_classes": self.n_classes,
            "channels": list(self.channels),
            "se_reduction": self.se_reduction,
            "layers": spec,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported model format {d.get('format_version')!r}")
        model = cls.build(
            input_len=int(d["input_len"]),
            n_classes=int(d["n_classes"]),
            channels=tuple(d["channels"]),
            se_reduction=int(d["se_reduction"]),
        )
        if len(d["layers"]) != len(model.layers):
            raise ShapeError("layer count mismatch in serialized model")
        for layer, entry in zip(model.layers, d["layers"]):
            if entry["kind"] != type(layer).__name__:
                raise ShapeError(f"layer kind mismatch: {entry['kind']} vs {type(layer).__name__}")
            for name, p in layer.params():
                stored = entry[name]
                if list(p.shape) != stored["shape"]:
                    raise ShapeError(f"shape mismatch for {entry['kind']}.{name}")
                p[...] = np.asarray(stored["data"], dtype=np.float64).reshape(p.shape)
        return model


def train(model, X, y, cfg):
    """Mini-batch SGD; returns the per-epoch mean loss history.

    Shuffling comes from a generator seeded with cfg.seed, so identical
    inputs produce bit-identical trained weights.
    """
    X = as_feature_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise DomainError("empty training set")
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise DomainError("training label out of range")
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0x7E41]))
    history = []
    n = len(X)
    for _epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss = model.forward_backward(X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {_epoch}")
            model.sgd_step(cfg.learning_rate)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return history


# --------------------------------------------------------------------------
# sklearn-style estimator wrapper
# --------------------------------------------------------------------------

class MobileMiniClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade: standardizes inputs, trains the CNN, predicts.

    Parameters mirror TrainConfig plus the architecture knobs; get_params
    and set_params come from BaseEstimator so the classifier drops into
    sklearn pipelines and grid searches.
    """

    def __init__(
        self,
        channels=(8, 16),
        se_reduction=4,
        learning_rate=0.05,
        epochs=300,
        batch_size=32,
        seed=0,
    ):
        self.channels = channels
        self.se_reduction = se_reduction
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        codes = np.searchsorted(self.classes_, y)
        self.feature_mean_ = X.mean(axis=0)
        self.feature_std_ = np.maximum(X.std(axis=0), 1e-8)
        Xn = (X - self.feature_mean_) / self.feature_std_
        self.model_ = MobileMiniModel.build(
            input_len=X.shape[1],
            n_classes=len(self.classes_),
            seed=self.seed,
            channels=tuple(self.channels),
            se_reduction=self.se_reduction,
        )
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.loss_history_ = train(self.model_, Xn, codes, cfg)
        return self

    def predict_proba(self, X):
        self._check_fitted()
        X = as_feature_matrix(X)
        Xn = (X - self.feature_mean_) / self.feature_std_
        return self.model_.forward(Xn)

    def predict(self, X):
        self._check_fitted()
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise TrainingError("classifier is not fitted")

    def to_dict(self):
        self._check_fitted()
        return {
            "format_version": FORMAT_VERSION,
            "classes": [str(c) for c in self.classes_],
            "feature_mean": self.feature_mean_.tolist(),
            "feature_std": self.feature_std_.tolist(),
            "params": {
                "channels": list(self.channels),
                "se_reduction": self.se_reduction,
                "learning_rate": self.learning_rate,
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "seed": self.seed,
            },
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported classifier format {d.get('format_version')!r}")
        p = d["params"]
        clf = cls(
            channels=tuple(p["channels"]),
            se_reduction=int(p["se_reduction"]),
            learning_rate=float(p["learning_rate"]),
            epochs=int(p["epochs"]),
            batch_size=int(p["batch_size"]),
            seed=int(p["seed"]),
        )
        clf.classes_ = np.asarray(d["classes"])
        clf.feature_mean_ = np.asarray(d["feature_mean"], dtype=np.float64)
        clf.feature_std_ = np.asarray(d["feature_std"], dtype=np.float64)
        clf.model_ = MobileMiniModel.from_dict(d["model"])
        return clf
