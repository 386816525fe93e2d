"""Architecture contracts: shapes, degenerate cases, oracles, checkpoints."""

import numpy as np
import pytest

from helpers import attention_matrix_oracle, conv1d_loop_oracle, lstm_unrolled_oracle
from moodfusion.errors import AlignmentError, ConfigurationError
from moodfusion.models import (
    BaselineConfig,
    BaselineModel,
    DynamicFusionModel,
    EncoderConfig,
    FusionConfig,
    UnimodalClassifier,
    load_model,
    save_model,
)
from moodfusion.numerics import (
    RngStream,
    Tape,
    Tensor,
    backward,
    bce_with_logits,
    finite_difference_gradients,
    max_relative_error,
    mean,
    sigmoid,
)

TOY_DIMS = {"audio": 5, "video": 3, "text": 4}
TOY_ENCODER = EncoderConfig(layers=((4, 3, 2),), head_hidden=(6,))
TOY_FUSION = FusionConfig(n_layers=1, n_heads=2, ff_dim=8, head_hidden=(6,))


def _toy_inputs(rng, t=11, batch=None):
    shape = (t,) if batch is None else (batch, t)
    return {
        m: Tensor(rng.normal(shape + (d,)), name=m, requires_grad=False)
        for m, d in TOY_DIMS.items()
    }


def _build_fusion(seed=0):
    rng = RngStream(seed)
    configs = {m: TOY_ENCODER for m in TOY_DIMS}
    return DynamicFusionModel.build(configs, TOY_DIMS, TOY_FUSION, rng)


class TestEncoder:
    def test_composed_output_length(self):
        cfg = EncoderConfig(layers=((8, 5, 2), (8, 3, 2)))
        assert cfg.output_frames(100) == 23  # 100 -> 48 -> 23

    def test_eval_forward_deterministic(self):
        rng = RngStream(1)
        model = UnimodalClassifier.build("audio", 5, TOY_ENCODER, rng)
        x = Tensor(rng.normal((3, 11, 5)))
        p1 = model.predict_proba(x)
        p2 = model.predict_proba(x)
        np.testing.assert_array_equal(p1, p2)

    def test_embedding_matches_layer_composition_oracle(self):
        rng = RngStream(2)
        cfg = EncoderConfig(layers=((4, 3, 2), (3, 2, 1)), use_batch_norm=False, dropout_p=0.0)
        model = UnimodalClassifier.build("video", 3, cfg, rng)
        x = rng.normal((9, 3))
        emb = model.encoder.forward(Tensor(x), "eval")
        k0 = model.params["encoder/video/conv0/kernels"].data
        b0 = model.params["encoder/video/conv0/bias"].data
        k1 = model.params["encoder/video/conv1/kernels"].data
        b1 = model.params["encoder/video/conv1/bias"].data
        h = np.maximum(conv1d_loop_oracle(x, k0, b0, stride=2), 0.0)
        h = np.maximum(conv1d_loop_oracle(h, k1, b1, stride=1), 0.0)
        np.testing.assert_allclose(emb.data, h, atol=1e-10)

    def test_zero_head_probability_half(self):
        rng = RngStream(3)
        model = UnimodalClassifier.build("audio", 5, TOY_ENCODER, rng)
        for name, t in model.params.items():
            if name.startswith("head/"):
                t.data[...] = 0.0
        x = Tensor(rng.normal((2, 11, 5)))
        np.testing.assert_allclose(model.predict_proba(x), 0.5)

    def test_probabilities_in_open_interval(self):
        rng = RngStream(4)
        model = UnimodalClassifier.build("text", 4, TOY_ENCODER, rng)
        probs = model.predict_proba(Tensor(rng.normal((4, 11, 4), scale=10.0)))
        assert np.all(probs > 0.0) and np.all(probs < 1.0)


class TestFusion:
    def test_zero_layers_zero_head_is_half(self):
        rng = RngStream(5)
        configs = {m: TOY_ENCODER for m in TOY_DIMS}
        model = DynamicFusionModel.build(configs, TOY_DIMS, FusionConfig(n_layers=0), rng)
        for name, t in model.params.items():
            if name.startswith("fusion/head/"):
                t.data[...] = 0.0
        probs = model.predict_proba(_toy_inputs(rng, batch=2))
        np.testing.assert_allclose(probs, 0.5)

    def test_constant_sequence_invariant_without_positions(self):
        rng = RngStream(6)
        configs = {m: TOY_ENCODER for m in TOY_DIMS}
        model = DynamicFusionModel.build(
            configs, TOY_DIMS, FusionConfig(n_layers=1, n_heads=2, positional_encoding=False), rng
        )
        emb_dim = TOY_ENCODER.embedding_dim
        base = {m: rng.normal(emb_dim) for m in TOY_DIMS}
        for t_len in (3, 5):
            embs = {m: Tensor(np.tile(base[m], (t_len, 1))) for m in TOY_DIMS}
            logit = model.fuse_forward(embs, "eval")
            if t_len == 3:
                first = logit.item()
            else:
                assert abs(logit.item() - first) < 1e-9  # pooled output ignores length

    def test_single_block_matches_explicit_oracle(self):
        rng = RngStream(7)
        configs = {m: EncoderConfig(layers=((2, 3, 2),)) for m in TOY_DIMS}
        model = DynamicFusionModel.build(
            configs, TOY_DIMS,
            FusionConfig(n_layers=1, n_heads=1, ff_dim=4, positional_encoding=False), rng
        )
        t_e, d_m = 3, 2
        embs = {m: rng.normal((t_e, d_m)) for m in TOY_DIMS}
        x = np.concatenate([embs[m] for m in sorted(TOY_DIMS)], axis=-1)
        p = {n: t.data for n, t in model.params.items()}
        attn = attention_matrix_oracle(
            x,
            p["fusion/block0/attn/wq"], p["fusion/block0/attn/bq"],
            p["fusion/block0/attn/wk"], p["fusion/block0/attn/bk"],
            p["fusion/block0/attn/wv"], p["fusion/block0/attn/bv"],
            p["fusion/block0/attn/wo"], p["fusion/block0/attn/bo"],
            n_heads=1,
        )
        h = x + attn
        eps = model.config.layer_norm_eps

        def norm(z, gamma, beta):
            mu = z.mean(-1, keepdims=True)
            var = z.var(-1, keepdims=True)
            return gamma * (z - mu) / np.sqrt(var + eps) + beta

        h = norm(h, p["fusion/block0/norm1/gamma"], p["fusion/block0/norm1/beta"])
        ff = np.maximum(h @ p["fusion/block0/ff/w1"].T + p["fusion/block0/ff/b1"], 0.0)
        ff = ff @ p["fusion/block0/ff/w2"].T + p["fusion/block0/ff/b2"]
        h = norm(h + ff, p["fusion/block0/norm2/gamma"], p["fusion/block0/norm2/beta"])
        pooled = np.concatenate([h.max(axis=0), h.mean(axis=0)])
        z = np.maximum(pooled @ p["fusion/head/fc0/weight"].T + p["fusion/head/fc0/bias"], 0.0)
        expected_logit = (z @ p["fusion/head/out/weight"].T + p["fusion/head/out/bias"]).item()
        logit = model.fuse_forward({m: Tensor(embs[m]) for m in TOY_DIMS}, "eval")
        assert abs(logit.item() - expected_logit) < 1e-9

    def test_mismatched_embedding_lengths_raise(self):
        model = _build_fusion()
        rng = RngStream(8)
        embs = {
            "audio": Tensor(rng.normal((4, 4))),
            "video": Tensor(rng.normal((5, 4))),
            "text": Tensor(rng.normal((4, 4))),
        }
        with pytest.raises(AlignmentError):
            model.fuse_forward(embs, "eval")


class TestBaselines:
    def test_tensor_fusion_dimension(self):
        cfg = BaselineConfig(variant="lstm_tensor_fusion", hidden=2)
        assert cfg.fused_dim() == 27

    def test_unknown_variant_rejected(self):
        with pytest.raises(ConfigurationError):
            BaselineModel.build(BaselineConfig(variant="gru_concat"), TOY_DIMS, RngStream(0))

    def test_static_attention_uniform_scores_give_time_mean(self):
        rng = RngStream(9)
        cfg = BaselineConfig(variant="bilstm_static_attention", hidden=3)
        model = BaselineModel.build(cfg, TOY_DIMS, rng)
        # zero scoring network -> constant scores -> uniform weights
        for m in TOY_DIMS:
            model.params[f"attn/{m}/v"].data[...] = 0.0
            model.params[f"attn/{m}/c"].data[...] = 0.0
        x = rng.normal((7, TOY_DIMS["audio"]))
        pooled = model._static_vector("audio", Tensor(x))
        fwd = lstm_unrolled_oracle(
            x,
            model.params["lstm/audio/w"].data,
            model.params["lstm/audio/u"].data,
            model.params["lstm/audio/b"].data,
        )
        rev = lstm_unrolled_oracle(
            x,
            model.params["lstm_rev/audio/w"].data,
            model.params["lstm_rev/audio/u"].data,
            model.params["lstm_rev/audio/b"].data,
            reverse=True,
        )
        states = np.concatenate([fwd, rev], axis=-1)
        np.testing.assert_allclose(pooled.data, states.mean(axis=0), atol=1e-10)

    def test_lstm_concat_matches_unrolled_oracle(self):
        rng = RngStream(10)
        cfg = BaselineConfig(variant="lstm_concat", hidden=2, head_hidden=())
        model = BaselineModel.build(cfg, {"audio": 2, "video": 2, "text": 2}, rng)
        inputs = {m: rng.normal((3, 2)) for m in ("audio", "video", "text")}
        finals = []
        for m in sorted(inputs):
            states = lstm_unrolled_oracle(
                inputs[m],
                model.params[f"lstm/{m}/w"].data,
                model.params[f"lstm/{m}/u"].data,
                model.params[f"lstm/{m}/b"].data,
            )
            finals.append(states[-1])
        fused = np.concatenate(finals)
        w = model.params["head/out/weight"].data
        b = model.params["head/out/bias"].data
        expected = 1.0 / (1.0 + np.exp(-(fused @ w.T + b)))
        probs = model.predict_proba({m: Tensor(v) for m, v in inputs.items()})
        np.testing.assert_allclose(probs, expected[0], atol=1e-10)

    def test_baselines_collapse_time_before_fusion(self):
        rng = RngStream(11)
        for variant in ("lstm_concat", "bilstm_static_attention", "lstm_tensor_fusion"):
            cfg = BaselineConfig(variant=variant, hidden=2)
            model = BaselineModel.build(cfg, TOY_DIMS, rng.substream(variant))
            x = _toy_inputs(rng.substream(f"x/{variant}"), t=6, batch=2)
            vectors = {m: model._static_vector(m, x[m]) for m in TOY_DIMS}
            for v in vectors.values():
                assert v.ndim == 2  # (batch, features): no time axis survives


class TestCheckpoints:
    def test_fusion_round_trip_bit_exact(self, tmp_path):
        model = _build_fusion(seed=12)
        rng = RngStream(13)
        inputs = _toy_inputs(rng, batch=2)
        before = model.predict_proba(inputs)
        path = tmp_path / "fusion.ckpt"
        save_model(path, model)
        loaded = load_model(path)
        after = loaded.predict_proba(inputs)
        np.testing.assert_array_equal(before, after)
        for name, t in model.params.items():
            np.testing.assert_array_equal(t.data, loaded.params[name].data)

    def test_unimodal_and_baseline_round_trip(self, tmp_path):
        rng = RngStream(14)
        uni = UnimodalClassifier.build("audio", 5, TOY_ENCODER, rng)
        base = BaselineModel.build(BaselineConfig(variant="lstm_tensor_fusion", hidden=2),
                                   TOY_DIMS, rng)
        x = Tensor(rng.normal((2, 9, 5)))
        inputs = _toy_inputs(rng, t=9, batch=2)
        save_model(tmp_path / "uni.ckpt", uni)
        save_model(tmp_path / "base.ckpt", base)
        np.testing.assert_array_equal(
            uni.predict_proba(x), load_model(tmp_path / "uni.ckpt").predict_proba(x)
        )
        np.testing.assert_array_equal(
            base.predict_proba(inputs), load_model(tmp_path / "base.ckpt").predict_proba(inputs)
        )


class TestFullModelGradients:
    def _gradient_check(self, build_loss, params, tol=1e-4, sample=40):
        with Tape() as tape:
            loss = build_loss()
            backward(tape, loss)
        names = [n for n, t in params.items() if t.requires_grad]
        rng = np.random.default_rng(0)
        picked = [names[i] for i in rng.choice(len(names), size=min(sample, len(names)), replace=False)]
        tensors = [params[n] for n in picked]
        analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]
        params.zero_grads()
        numeric = finite_difference_gradients(lambda: build_loss().item(), tensors)
        for name, a, n in zip(picked, analytic, numeric):
            err = max_relative_error(a, n)
            assert err < tol, f"{name}: {err}"

    def test_unimodal_full_gradient(self):
        rng = RngStream(15)
        cfg = EncoderConfig(layers=((3, 3, 2),), head_hidden=(4,), dropout_p=0.0)
        model = UnimodalClassifier.build("video", 3, cfg, rng)
        x = Tensor(rng.normal((2, 8, 3)))
        y = np.array([1.0, 0.0])

        def build_loss():
            return mean(bce_with_logits(model.forward_logit(x, "train"), y))

        self._gradient_check(build_loss, model.params)

    def test_fusion_full_gradient(self):
        rng = RngStream(16)
        configs = {m: EncoderConfig(layers=((2, 3, 2),), head_hidden=(4,), dropout_p=0.0) for m in TOY_DIMS}
        model = DynamicFusionModel.build(
            configs, TOY_DIMS,
            FusionConfig(n_layers=1, n_heads=2, ff_dim=4, head_hidden=(4,), dropout_fc=0.0), rng
        )
        inputs = _toy_inputs(rng, t=9, batch=2)
        y = np.array([1.0, 0.0])

        def build_loss():
            return mean(bce_with_logits(model.forward_logit(inputs, "train"), y))

        self._gradient_check(build_loss, model.params)


def test_eval_forward_does_not_mutate_params():
    model = _build_fusion(seed=17)
    rng = RngStream(18)
    inputs = _toy_inputs(rng, batch=3)
    before = model.params.checksum()
    model.predict_proba(inputs)
    assert model.params.checksum() == before
