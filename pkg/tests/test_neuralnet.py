import numpy as np
import pytest

from conftest import central_difference, gradient_close

from edgenilm import neuralnet as nn
from edgenilm.errors import ConfigurationError, DomainError, ShapeError, TrainingError

KINKS = (-3.0, 0.0, 3.0)


def away_from_kinks(rng, shape, margin=0.15, span=5.0):
    """Uniform values at least `margin` away from the hard-activation kinks."""
    x = rng.uniform(-span, span, size=shape)
    for _ in range(100):
        bad = np.zeros(x.shape, dtype=bool)
        for k in KINKS:
            bad |= np.abs(x - k) < margin
        if not bad.any():
            return x
        x[bad] = rng.uniform(-span, span, size=int(bad.sum()))
    raise RuntimeError("could not sample kink-avoiding point")


class TestHardActivations:
    def test_h_swish_regions(self):
        assert nn.h_swish(0.0) == 0.0
        assert nn.h_swish(5.0) == 5.0
        assert nn.h_swish(-4.0) == 0.0
        assert nn.h_swish(1.0) == pytest.approx(4.0 / 6.0, abs=1e-9)

    def test_h_sigmoid_regions(self):
        assert nn.h_sigmoid(0.0) == 0.5
        assert nn.h_sigmoid(3.0) == 1.0
        assert nn.h_sigmoid(-3.0) == 0.0
        assert nn.h_sigmoid(7.0) == 1.0

    def test_elementwise_on_arrays(self):
        x = np.array([-4.0, 0.0, 1.0, 5.0])
        assert np.allclose(nn.h_swish(x), [0.0, 0.0, 4.0 / 6.0, 5.0])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = away_from_kinks(rng, (7,))
            ga = nn.h_swish_grad(x) * np.ones_like(x)
            gn = central_difference(lambda z: nn.h_swish(z).sum(), x.copy())
            assert gradient_close(ga, gn)
            ga = nn.h_sigmoid_grad(x)
            gn = central_difference(lambda z: nn.h_sigmoid(z).sum(), x.copy())
            assert gradient_close(ga, gn)


class TestDepthwiseSeparable:
    def test_identity_kernels(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 3, 10))
        dw = np.zeros((3, 3))
        dw[:, 1] = 1.0  # delta kernel
        pw = np.eye(3)
        out = nn.depthwise_separable_conv(x, dw, np.zeros(3), pw, np.zeros(3))
        assert np.allclose(out, x, atol=1e-12)

    def test_matches_explicit_composition(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(4, 5, 12))
        dw = rng.normal(size=(5, 3))
        db = rng.normal(size=5)
        pw = rng.normal(size=(7, 5))
        pb = rng.normal(size=7)
        fused = nn.depthwise_separable_conv(x, dw, db, pw, pb)
        step1 = nn.DepthwiseConv1d(dw, db).forward(x)
        step2 = nn.PointwiseConv1d(pw, pb).forward(step1)
        assert np.allclose(fused, step2, atol=1e-12)

    def test_equals_standard_conv_on_rank_one_kernel(self):
        # a separable pair with zero biases is the standard convolution
        # whose kernel is w_std[o, c, t] = pw[o, c] * dw[c, t]
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 4, 16))
        dw = rng.normal(size=(4, 3))
        pw = rng.normal(size=(6, 4))
        w_std = pw[:, :, None] * dw[None, :, :]
        sep = nn.depthwise_separable_conv(x, dw, np.zeros(4), pw, np.zeros(6))
        std = nn.Conv1d(w_std, np.zeros(6)).forward(x)
        assert np.max(np.abs(sep - std)) < 1e-9

    def test_parameter_count_identity(self):
        c, c_out, k = 8, 16, 3
        dw_params = c * k + c
        pw_params = c * c_out + c_out
        std_params = c * c_out * k + c_out
        layer_dw = nn.DepthwiseConv1d(np.zeros((c, k)), np.zeros(c))
        layer_pw = nn.PointwiseConv1d(np.zeros((c_out, c)), np.zeros(c_out))
        count = sum(p.size for _, p in layer_dw.params()) + sum(
            p.size for _, p in layer_pw.params()
        )
        assert count == dw_params + pw_params
        assert count < std_params

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            nn.depthwise_separable_conv(
                np.zeros((1, 3, 8)), np.zeros((4, 3)), np.zeros(4), np.eye(3), np.zeros(3)
            )

    def test_gradients(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = rng.normal(size=(2, 3, 8))
            dw = rng.normal(size=(3, 3))
            db = rng.normal(size=3)
            layer = nn.DepthwiseConv1d(dw.copy(), db.copy())
            out = layer.forward(x)
            layer.backward(np.ones_like(out))

            def loss_wrt_w(w):
                return nn.DepthwiseConv1d(w, db).forward(x).sum()

            assert gradient_close(layer.dw, central_difference(loss_wrt_w, dw.copy()))

            def loss_wrt_x(z):
                return nn.DepthwiseConv1d(dw, db).forward(z).sum()

            dx = nn.DepthwiseConv1d(dw, db)
            out = dx.forward(x)
            got = dx.backward(np.ones_like(out))
            assert gradient_close(got, central_difference(loss_wrt_x, x.copy()))


class TestSEBlock:
    def rand_se(self, rng, c=4, r=2):
        return (
            rng.normal(size=(r, c)),
            rng.normal(size=r),
            rng.normal(size=(c, r)),
            rng.normal(size=c),
        )

    def test_saturated_open_gate_passes_input(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 4, 6))
        w1 = np.zeros((2, 4))
        b1 = np.zeros(2)
        w2 = np.zeros((4, 2))
        b2 = np.full(4, 10.0)  # pre-activation >= 3 -> scale exactly 1
        assert np.allclose(nn.se_block(x, w1, b1, w2, b2), x, atol=1e-12)

    def test_saturated_closed_gate_zeroes_output(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(2, 4, 6))
        out = nn.se_block(x, np.zeros((2, 4)), np.zeros(2), np.zeros((4, 2)), np.full(4, -10.0))
        assert np.all(out == 0.0)

    def test_matches_manual_composition(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(3, 4, 5))
        w1, b1, w2, b2 = self.rand_se(rng)
        got = nn.se_block(x, w1, b1, w2, b2)
        z = x.mean(axis=2)
        s = nn.h_sigmoid(np.maximum(z @ w1.T + b1, 0.0) @ w2.T + b2)
        assert np.allclose(got, x * s[:, :, None], atol=1e-12)

    def test_scaling_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            x = rng.normal(size=(2, 6, 9))
            w1, b1, w2, b2 = self.rand_se(rng, c=6, r=3)
            out = nn.se_block(x, w1, b1, w2, b2)
            assert np.all(np.abs(out) <= np.abs(x) + 1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            nn.se_block(np.zeros((1, 4, 5)), np.zeros((2, 3)), np.zeros(2), np.zeros((4, 2)), np.zeros(4))

    def test_gradients_away_from_kinks(self):
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 20:
            x = rng.normal(size=(2, 4, 5))
            w1, b1, w2, b2 = self.rand_se(rng)
            layer = nn.SEBlock(w1.copy(), b1, w2.copy(), b2.copy())
            layer.forward(x)
            a1, a2 = layer._a1, layer._a2
            if np.any(np.abs(a1) < 0.1) or np.any(np.abs(np.abs(a2) - 3.0) < 0.1):
                continue  # resample: too close to a relu/h-sigmoid kink
            checked += 1
            out = layer.forward(x)
            got_dx = layer.backward(np.ones_like(out))

            def loss_wrt_x(z):
                return nn.SEBlock(w1, b1, w2, b2).forward(z).sum()

            assert gradient_close(got_dx, central_difference(loss_wrt_x, x.copy()))

            def loss_wrt_w2(w):
                return nn.SEBlock(w1, b1, w, b2).forward(x).sum()

            assert gradient_close(layer.dw2, central_difference(loss_wrt_w2, w2.copy()))

            def loss_wrt_w1(w):
                return nn.SEBlock(w, b1, w2, b2).forward(x).sum()

            assert gradient_close(layer.dw1, central_difference(loss_wrt_w1, w1.copy()))


class TestForwardAndLoss:
    def test_zero_final_layer_gives_uniform(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5, seed=0)
        dense = model.layers[-1]
        dense.w[...] = 0.0
        dense.b[...] = 0.0
        probs = model.forward(np.random.default_rng(0).normal(size=(3, 20)))
        assert np.allclose(probs, 0.2, atol=1e-12)

    def test_probabilities_sum_to_one(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5, seed=1)
        X = np.random.default_rng(1).normal(size=(8, 20))
        probs = model.forward(X)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(probs >= 0.0)

    def test_softmax_shift_invariance(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(size=(4, 5))
        assert np.allclose(nn.softmax(logits), nn.softmax(logits + 13.7), atol=1e-12)

    def test_cross_entropy_values(self):
        assert nn.cross_entropy(np.full((1, 5), 0.2), [3]) == pytest.approx(np.log(5.0))
        one_hot = np.zeros((1, 5))
        one_hot[0, 2] = 1.0
        assert nn.cross_entropy(one_hot, [2]) == pytest.approx(0.0)
        probs = np.array([[0.7, 0.1, 0.1, 0.05, 0.05]])
        assert nn.cross_entropy(probs, [0]) == pytest.approx(-np.log(0.7), abs=1e-12)

    def test_bad_label_rejected(self):
        with pytest.raises(DomainError):
            nn.cross_entropy(np.full((1, 5), 0.2), [5])

    def test_dense_softmax_ce_gradient(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.normal(size=(4, 6))
            w = rng.normal(size=(5, 6))
            b = rng.normal(size=5)
            labels = rng.integers(0, 5, size=4)
            layer = nn.Dense(w.copy(), b.copy())
            probs = nn.softmax(layer.forward(x))
            dlogits = probs.copy()
            dlogits[np.arange(4), labels] -= 1.0
            dlogits /= 4
            layer.backward(dlogits)

            def loss_wrt_w(wz):
                return nn.cross_entropy(nn.softmax(nn.Dense(wz, b).forward(x)), labels)

            assert gradient_close(layer.dw, central_difference(loss_wrt_w, w.copy()))


class TestTraining:
    def toy_data(self):
        rng = np.random.default_rng(10)
        a = rng.normal([2.0, 2.0, 0.0, 0.0], 0.1, size=(20, 4))
        b = rng.normal([0.0, 0.0, 2.0, 2.0], 0.1, size=(20, 4))
        X = np.vstack([a, b])
        y = np.array([0] * 20 + [1] * 20)
        return X, y

    def test_zero_learning_rate_leaves_weights(self):
        X, y = self.toy_data()
        model = nn.MobileMiniModel.build(input_len=4, n_classes=2, seed=0)
        before = [p.copy() for layer in model.layers for _, p in layer.params()]
        nn.train(model, X, y, nn.TrainConfig(learning_rate=0.0, epochs=3))
        after = [p for layer in model.layers for _, p in layer.params()]
        for b_, a_ in zip(before, after):
            assert np.array_equal(b_, a_)

    def test_separable_toy_set_converges(self):
        X, y = self.toy_data()
        model = nn.MobileMiniModel.build(input_len=4, n_classes=2, seed=0)
        history = nn.train(model, X, y, nn.TrainConfig(learning_rate=0.05, epochs=500, batch_size=8))
        assert history[-1] < 0.01

    def test_deterministic_training(self):
        X, y = self.toy_data()
        m1 = nn.MobileMiniModel.build(input_len=4, n_classes=2, seed=3)
        m2 = nn.MobileMiniModel.build(input_len=4, n_classes=2, seed=3)
        cfg = nn.TrainConfig(learning_rate=0.05, epochs=20, batch_size=8, seed=5)
        h1 = nn.train(m1, X, y, cfg)
        h2 = nn.train(m2, X, y, cfg)
        assert h1 == h2
        for l1, l2 in zip(m1.layers, m2.layers):
            for (_, p1), (_, p2) in zip(l1.params(), l2.params()):
                assert np.array_equal(p1, p2)

    def test_empty_dataset_rejected(self):
        model = nn.MobileMiniModel.build(input_len=4, n_classes=2)
        with pytest.raises(DomainError):
            nn.train(model, np.zeros((0, 4)), np.zeros(0, dtype=int), nn.TrainConfig())


class TestModelSerialization:
    def test_round_trip_bit_identical(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5, seed=11)
        clone = nn.MobileMiniModel.from_dict(model.to_dict())
        X = np.random.default_rng(4).normal(size=(6, 20))
        assert np.array_equal(model.forward(X), clone.forward(X))

    def test_shape_validation_on_load(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5)
        d = model.to_dict()
        d["layers"][0]["w"]["shape"] = [2, 2, 2]
        with pytest.raises(ShapeError):
            nn.MobileMiniModel.from_dict(d)

    def test_format_version_checked(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5)
        d = model.to_dict()
        d["format_version"] = 99
        with pytest.raises(ConfigurationError):
            nn.MobileMiniModel.from_dict(d)

    def test_parameter_budget(self):
        model = nn.MobileMiniModel.build(input_len=20, n_classes=5)
        assert 500 <= model.parameter_count() <= 1000


class TestClassifierEstimator:
    def test_sklearn_get_set_params(self):
        clf = nn.MobileMiniClassifier(epochs=10)
        params = clf.get_params()
        assert params["epochs"] == 10
        clf.set_params(epochs=20)
        assert clf.epochs == 20

    def test_fit_predict_on_blobs(self):
        rng = np.random.default_rng(12)
        X = np.vstack(
            [rng.normal(m, 0.2, size=(30, 6)) for m in (-2.0, 0.0, 2.0)]
        )
        y = np.repeat(["a", "b", "c"], 30)
        clf = nn.MobileMiniClassifier(epochs=600, seed=1)
        clf.fit(X, y)
        assert (clf.predict(X) == y).mean() > 0.95
        probs = clf.predict_proba(X[:5])
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_unfitted_predict_rejected(self):
        with pytest.raises(TrainingError):
            nn.MobileMiniClassifier().predict(np.zeros((1, 4)))

    def test_classifier_round_trip(self):
        rng = np.random.default_rng(13)
        X = np.vstack([rng.normal(-1, 0.2, (15, 5)), rng.normal(1, 0.2, (15, 5))])
        y = np.repeat(["off", "on"], 15)
        clf = nn.MobileMiniClassifier(epochs=50, seed=2).fit(X, y)
        clone = nn.MobileMiniClassifier.from_dict(clf.to_dict())
        assert np.array_equal(clf.predict_proba(X), clone.predict_proba(X))
        assert list(clone.classes_) == ["off", "on"]
