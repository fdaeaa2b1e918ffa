import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcheck import fd_gradient, max_rel_error
from unilite.tensornet import (
    Arch,
    DivergenceError,
    Grads,
    ModelParams,
    Normalizer,
    OptState,
    adam_step,
    backward,
    forward,
    gaussian_dist,
    gaussian_entropy,
    gaussian_log_prob,
    init_params,
    load_checkpoint,
    norm_update_apply,
    save_checkpoint,
    value_forward,
)


def tiny_net(seed=0, input_dim=3, hidden=(4,), output_dim=2) -> ModelParams:
    arch = Arch(input_dim, tuple(hidden), output_dim)
    return init_params(arch, seed=seed, dtype=np.float64)


class TestInit:
    def test_log_std_zero_at_unit_noise(self):
        params = init_params(Arch(6, (64, 64), 2), seed=0, init_noise_std=1.0)
        assert np.all(params.log_std == 0.0)

    def test_same_seed_identical(self):
        a = init_params(Arch(6, (64, 64), 2), seed=3)
        b = init_params(Arch(6, (64, 64), 2), seed=3)
        assert np.array_equal(a.flat(), b.flat())

    def test_shape_chaining(self):
        params = init_params(Arch(6, (64, 64), 2), seed=0)
        shapes = [w.shape for w, _ in params.layers]
        assert shapes == [(64, 6), (64, 64), (2, 64)]

    def test_linear_model_allowed(self):
        params = init_params(Arch(4, (), 3), seed=0)
        assert len(params.layers) == 1

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            Arch(4, (0,), 3)


class TestForward:
    def test_zero_weights(self):
        params = tiny_net()
        for w, b in params.layers:
            w[:] = 0
            b[:] = 0
        out, _ = forward(params, np.random.default_rng(0).normal(size=(5, 3)))
        assert np.all(out == 0.0)

    def test_single_linear_layer_exact(self):
        params = init_params(Arch(3, (), 2), seed=1, dtype=np.float64)
        x = np.random.default_rng(2).normal(size=(4, 3))
        w, b = params.layers[0]
        out, _ = forward(params, x)
        np.testing.assert_allclose(out, x @ w.T + b, atol=1e-15)

    def test_matches_per_element_oracle(self):
        # naive loop-based forward in float64
        params = tiny_net(seed=5, input_dim=4, hidden=(5, 3), output_dim=2)
        x = np.random.default_rng(3).normal(size=(6, 4))
        out, _ = forward(params, x)

        def elu(v):
            return v if v > 0 else math.exp(v) - 1.0

        for bi in range(6):
            h = list(x[bi])
            for li, (w, b) in enumerate(params.layers):
                z = [
                    sum(w[o, i] * h[i] for i in range(w.shape[1])) + b[o]
                    for o in range(w.shape[0])
                ]
                h = [elu(v) for v in z] if li < len(params.layers) - 1 else z
            np.testing.assert_allclose(out[bi], h, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="incompatible"):
            forward(tiny_net(), np.zeros((2, 7)))


class TestBackward:
    def test_linear_sum_loss(self):
        # loss = sum(outputs) on a linear net: dW[o, i] = sum_b x[b, i]
        params = init_params(Arch(3, (), 2), seed=1, dtype=np.float64)
        x = np.random.default_rng(4).normal(size=(5, 3))
        out, cache = forward(params, x)
        _, grads = backward(params, cache, np.ones_like(out))
        expected_w = np.tile(x.sum(axis=0), (2, 1))
        np.testing.assert_allclose(grads.layers[0][0], expected_w, atol=1e-12)
        np.testing.assert_allclose(grads.layers[0][1], np.full(2, 5.0), atol=1e-12)

    def test_zero_upstream(self):
        params = tiny_net()
        x = np.random.default_rng(5).normal(size=(4, 3))
        out, cache = forward(params, x)
        _, grads = backward(params, cache, np.zeros_like(out))
        assert np.all(grads.flat() == 0.0)

    def test_against_finite_differences(self):
        rng = np.random.default_rng(6)
        params = tiny_net(seed=7, input_dim=3, hidden=(4, 3), output_dim=2)
        x = rng.normal(size=(5, 3))
        coeff = rng.normal(size=(5, 2))

        def loss_fn(p):
            out, _ = forward(p, x)
            return float(np.sum(coeff * np.tanh(out)))

        out, cache = forward(params, x)
        dout = coeff * (1 - np.tanh(out) ** 2)
        _, grads = backward(params, cache, dout)
        numeric = fd_gradient(loss_fn, params)
        # log_std does not participate in this loss
        analytic = grads.flat()
        assert max_rel_error(analytic, numeric) < 1e-6

    def test_stale_cache_rejected(self):
        params = tiny_net()
        _, cache = forward(params, np.zeros((4, 3)))
        with pytest.raises(ValueError, match="cached"):
            backward(params, cache, np.zeros((3, 2)))

    def test_input_grad(self):
        params = tiny_net(seed=8)
        x = np.random.default_rng(7).normal(size=(4, 3))

        def loss_of_x(xv):
            out, _ = forward(params, xv.reshape(4, 3))
            return float(np.sum(out**2))

        out, cache = forward(params, x)
        dx, _ = backward(params, cache, 2 * out)
        h = 1e-6
        flat = x.ravel()
        numeric = np.zeros_like(flat)
        for i in range(len(flat)):
            up, down = flat.copy(), flat.copy()
            up[i] += h
            down[i] -= h
            numeric[i] = (loss_of_x(up) - loss_of_x(down)) / (2 * h)
        assert max_rel_error(dx.ravel(), numeric) < 1e-6


class TestGaussianDist:
    def test_log_prob_at_mode(self):
        mean = np.zeros((1, 3))
        _, logp, _ = gaussian_dist(mean, np.zeros(3), action=np.zeros((1, 3)))
        assert logp[0] == pytest.approx(-0.5 * math.log(2 * math.pi) * 3)

    def test_entropy_closed_form(self):
        ent = gaussian_entropy(np.zeros(2))
        assert ent == pytest.approx(math.log(2 * math.pi * math.e), abs=1e-9)
        assert float(ent) == pytest.approx(2.837877, abs=1e-6)

    @given(st.floats(-1.5, 1.5), st.floats(-1.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_entropy_monotone_in_log_std(self, base, bump):
        lo = gaussian_entropy(np.array([base, base]))
        hi = gaussian_entropy(np.array([base + abs(bump) + 1e-3, base]))
        assert hi > lo

    def test_squashed_density_normalizes(self):
        # quadrature oracle: squashed density integrates to 1 over (-1, 1)
        mean = np.array([[0.3]])
        log_std = np.array([-0.7])
        grid = np.linspace(-1 + 1e-4, 1 - 1e-4, 20001)
        _, logp, _ = gaussian_dist(
            mean.repeat(len(grid), 0), log_std, action=grid[:, None], squashed=True
        )
        integral = np.trapezoid(np.exp(logp), grid)
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_squashed_sample_in_bounds(self):
        rng = np.random.default_rng(0)
        sample, logp, _ = gaussian_dist(
            np.zeros((256, 2)), np.zeros(2), squashed=True, rng=rng
        )
        assert np.all(np.abs(sample) < 1.0)
        assert np.all(np.isfinite(logp))


class TestAdam:
    def test_zero_grads_noop(self):
        params = tiny_net()
        before = params.flat().copy()
        opt = OptState.for_params(params, lr=1e-3)
        adam_step(params, Grads.zeros_like(params), opt)
        assert np.array_equal(params.flat(), before)
        assert opt.t == 1

    def test_first_step_closed_form(self):
        # single scalar param, g=1: bias-corrected m/sqrt(v) = 1 -> delta = lr
        params = ModelParams(
            layers=[(np.array([[1.0]]), np.array([0.0]))],
            log_std=np.zeros(1),
            arch=Arch(1, (), 1),
        )
        grads = Grads(layers=[(np.array([[1.0]]), np.zeros(1))], log_std=np.zeros(1))
        opt = OptState.for_params(params, lr=1e-3)
        adam_step(params, grads, opt)
        assert params.layers[0][0][0, 0] == pytest.approx(1.0 - 1e-3, abs=1e-9)

    def test_grad_clip_scaling(self):
        params = ModelParams(
            layers=[(np.array([[0.0]]), np.zeros(1))],
            log_std=np.zeros(1),
            arch=Arch(1, (), 1),
        )
        grads = Grads(layers=[(np.array([[10.0]]), np.zeros(1))], log_std=np.zeros(1))
        from unilite.tensornet import clip_global_norm

        norm = clip_global_norm([grads], 1.0)
        assert norm == pytest.approx(10.0)
        assert grads.layers[0][0][0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_nonfinite_grads_raise(self):
        params = tiny_net()
        grads = Grads.zeros_like(params)
        grads.log_std[0] = np.nan
        with pytest.raises(DivergenceError):
            adam_step(params, grads, OptState.for_params(params, 1e-3))

    def test_bitwise_deterministic_trajectory(self):
        def run():
            params = tiny_net(seed=3)
            opt = OptState.for_params(params, lr=1e-2)
            rng = np.random.default_rng(9)
            for _ in range(5):
                g = Grads.zeros_like(params)
                for gw, gb in g.layers:
                    gw += rng.normal(size=gw.shape)
                    gb += rng.normal(size=gb.shape)
                adam_step(params, g, opt, max_grad_norm=1.0)
            return params.flat()

        assert np.array_equal(run(), run())


class TestNormalizer:
    def test_frozen_identity_with_unit_stats(self):
        norm = Normalizer(dim=3, count=1.0, mean=np.zeros(3), var=np.ones(3),
                          frozen=True)
        x = np.random.default_rng(0).normal(size=(8, 3))
        out = norm_update_apply(norm, x)
        np.testing.assert_allclose(out, x, atol=1e-3)

    def test_constant_batch(self):
        norm = Normalizer(dim=2)
        x = np.full((16, 2), 3.5)
        out = norm_update_apply(norm, x)
        assert np.allclose(norm.var, 0.0)
        assert np.allclose(out, 0.0)

    def test_split_vs_concat_stats(self):
        # two sequential batches == one concatenated batch, and both match a
        # two-pass mean/var oracle
        rng = np.random.default_rng(4)
        a = rng.normal(2.0, 3.0, size=(100, 4))
        b = rng.normal(-1.0, 0.5, size=(57, 4))
        split = Normalizer(dim=4)
        split.update(a)
        split.update(b)
        whole = Normalizer(dim=4)
        both = np.concatenate([a, b])
        whole.update(both)
        np.testing.assert_allclose(split.mean, whole.mean, atol=1e-10)
        np.testing.assert_allclose(split.var, whole.var, atol=1e-10)
        np.testing.assert_allclose(split.mean, both.mean(axis=0), atol=1e-10)
        np.testing.assert_allclose(split.var, both.var(axis=0), atol=1e-10)

    @given(st.integers(1, 5), st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_order_independence_across_splits(self, n_splits, seed):
        rng = np.random.default_rng(seed)
        data = rng.normal(size=(60, 3))
        cuts = sorted(rng.integers(1, 59, size=n_splits - 1).tolist()) if n_splits > 1 else []
        parts = np.split(data, cuts) if cuts else [data]
        norm = Normalizer(dim=3)
        for p in parts:
            if len(p):
                norm.update(p)
        np.testing.assert_allclose(norm.mean, data.mean(axis=0), atol=1e-10)
        np.testing.assert_allclose(norm.var, data.var(axis=0), atol=1e-10)

    def test_apply_unapply_roundtrip(self):
        norm = Normalizer(dim=3)
        rng = np.random.default_rng(5)
        norm.update(rng.normal(1.0, 2.0, size=(200, 3)))
        x = rng.normal(1.0, 2.0, size=(16, 3))
        back = norm.unapply(norm.apply(x))
        np.testing.assert_allclose(back, x, atol=1e-5)

    def test_frozen_stops_updates(self):
        norm = Normalizer(dim=2)
        norm.update(np.ones((4, 2)))
        norm.frozen = True
        mean_before = norm.mean.copy()
        norm_update_apply(norm, np.full((4, 2), 100.0))
        assert np.array_equal(norm.mean, mean_before)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        params = tiny_net(seed=11)
        params.version = 42
        norm = Normalizer(dim=3)
        norm.update(np.random.default_rng(0).normal(size=(50, 3)))
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, params, norm)
        loaded, loaded_norm = load_checkpoint(path)
        assert loaded.version == 42
        assert np.array_equal(loaded.flat(), params.flat())
        assert loaded.arch == params.arch
        np.testing.assert_allclose(loaded_norm.mean, norm.mean)
        np.testing.assert_allclose(loaded_norm.var, norm.var)
        assert loaded_norm.count == norm.count

    def test_roundtrip_without_normalizer(self, tmp_path):
        params = tiny_net(seed=12)
        path = tmp_path / "ckpt.npz"
        save_checkpoint(path, params)
        loaded, loaded_norm = load_checkpoint(path)
        assert loaded_norm is None
        assert np.array_equal(loaded.flat(), params.flat())


class TestValueForward:
    def test_squeeze(self):
        params = init_params(Arch(4, (8,), 1), seed=0, dtype=np.float64)
        v, _ = value_forward(params, np.zeros((6, 4)))
        assert v.shape == (6,)
