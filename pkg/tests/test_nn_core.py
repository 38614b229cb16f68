"""Dense-network substrate: forward/backward correctness, Adam, checkpoints."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dafs.nn import (
    MLP,
    Activation,
    Adam,
    ParamVector,
    backend_name,
    glorot_uniform,
    grad_check,
    load_snapshot,
    save_snapshot,
)
from dafs.nn import backend


def single_layer(in_dim, out_dim, activation):
    net = MLP([in_dim, out_dim], [activation])
    return net


class TestForward:
    def test_identity_layer_passes_input_through(self):
        net = single_layer(2, 2, Activation.IDENTITY)
        net.layers[0].W[:] = np.eye(2)
        out = net.forward(np.array([3.0, -1.0]))
        assert np.array_equal(out, [3.0, -1.0])

    def test_zero_weights_give_activated_bias(self):
        net = single_layer(3, 2, Activation.TANH)
        net.layers[0].b[:] = 0.5
        for x in ([0.0, 0.0, 0.0], [1.0, -2.0, 3.0], [9.9, 9.9, 9.9]):
            out = net.forward(np.array(x))
            assert np.allclose(out, np.tanh(0.5))

    def test_hand_computed_matrix_multiply(self):
        net = single_layer(2, 2, Activation.IDENTITY)
        net.layers[0].W[:] = [[1.0, 2.0], [3.0, 4.0]]
        out = net.forward(np.array([1.0, 1.0]))
        assert np.array_equal(out, [4.0, 6.0])

    def test_batch_output_has_batch_rows(self):
        rng = np.random.default_rng(0)
        net = MLP([3, 5, 2], [Activation.TANH, Activation.IDENTITY], rng=rng)
        out = net.forward(rng.normal(size=(7, 3)))
        assert out.shape == (7, 2)

    def test_dimension_mismatch_reports_expected_and_actual(self):
        net = single_layer(3, 2, Activation.IDENTITY)
        with pytest.raises(ValueError, match=r"4.*expected.*3"):
            net.forward(np.zeros(4))

    def test_forward_is_bitwise_deterministic(self):
        rng = np.random.default_rng(42)
        net = MLP([4, 16, 3], [Activation.TANH, Activation.SOFTPLUS], rng=rng)
        x = rng.normal(size=(9, 4))
        a = net.forward(x).copy()
        b = net.forward(x).copy()
        assert np.array_equal(a, b)


class TestBackward:
    def test_single_identity_layer_gradients(self):
        # loss = y[0] so dL/dW = x outer e0, dL/db = e0
        net = single_layer(1, 1, Activation.IDENTITY)
        net.layers[0].W[:] = [[1.0]]
        net.forward(np.array([1.0]))
        net.backward(np.array([1.0]))
        assert np.array_equal(net.layers[0].gW, [[1.0]])
        assert np.array_equal(net.layers[0].gb, [1.0])

    def test_input_gradient_for_quadratic_loss(self):
        # loss = sum(y^2) with y = x: dL/dx = 2x
        net = single_layer(2, 2, Activation.IDENTITY)
        net.layers[0].W[:] = np.eye(2)
        y = net.forward(np.array([1.0, 2.0]))
        d_x = net.backward(2.0 * y)
        assert np.array_equal(d_x, [2.0, 4.0])

    def test_backward_without_forward_raises(self):
        net = single_layer(2, 2, Activation.IDENTITY)
        with pytest.raises(RuntimeError, match="cached forward"):
            net.backward(np.zeros(2))

    def test_gradients_accumulate_until_zeroed(self):
        net = single_layer(1, 1, Activation.IDENTITY)
        net.forward(np.array([1.0]))
        net.backward(np.array([1.0]))
        net.forward(np.array([1.0]))
        net.backward(np.array([1.0]))
        assert np.array_equal(net.layers[0].gb, [2.0])
        net.pv.zero_grad()
        assert np.array_equal(net.layers[0].gb, [0.0])

    def test_batch_mean_loss_gives_mean_of_per_sample_gradients(self):
        # Repo-wide convention: losses average over the batch, so parameter
        # gradients equal the mean of single-sample gradients.
        rng = np.random.default_rng(3)
        net = MLP([3, 6, 2], [Activation.TANH, Activation.IDENTITY], rng=rng)
        xs = rng.normal(size=(5, 3))
        targets = rng.normal(size=(5, 2))

        out = net.forward(xs)
        net.backward(2.0 * (out - targets) / xs.shape[0])
        batch_grad = net.pv.grad.copy()
        net.pv.zero_grad()

        acc = np.zeros_like(batch_grad)
        for i in range(xs.shape[0]):
            y = net.forward(xs[i])
            net.backward(2.0 * (y - targets[i]))
            acc += net.pv.grad
            net.pv.zero_grad()
        assert np.allclose(batch_grad, acc / xs.shape[0], rtol=1e-12, atol=1e-15)


class TestGradCheck:
    def quadratic_loss(self, net, x, target):
        def loss():
            out = net.forward(x)
            diff = out - target
            net.backward(2.0 * diff / diff.size)
            return float(np.mean(diff**2))

        return loss

    def test_linear_net_quadratic_loss_is_nearly_exact(self):
        rng = np.random.default_rng(1)
        net = MLP([4, 3], [Activation.IDENTITY], rng=rng)
        x = rng.normal(size=(6, 4))
        target = rng.normal(size=(6, 3))
        assert grad_check(self.quadratic_loss(net, x, target), net.pv) < 1e-7

    def test_tanh_mlp(self):
        rng = np.random.default_rng(2)
        net = MLP([4, 8, 1], [Activation.TANH, Activation.IDENTITY], rng=rng)
        x = rng.normal(size=(5, 4))
        target = rng.normal(size=(5, 1))
        assert grad_check(self.quadratic_loss(net, x, target), net.pv) < 1e-4

    def test_softplus_head(self):
        rng = np.random.default_rng(4)
        net = MLP([3, 8, 2], [Activation.TANH, Activation.SOFTPLUS], rng=rng)
        x = rng.normal(size=(5, 3))
        target = rng.uniform(0.1, 2.0, size=(5, 2))
        assert grad_check(self.quadratic_loss(net, x, target), net.pv) < 1e-4

    def test_relu_hidden_layer(self):
        rng = np.random.default_rng(5)
        net = MLP([4, 16, 2], [Activation.RELU, Activation.IDENTITY], rng=rng)
        x = rng.normal(size=(5, 4))
        target = rng.normal(size=(5, 2))
        assert grad_check(self.quadratic_loss(net, x, target), net.pv) < 1e-4

    def test_deep_stack_used_by_value_networks(self):
        # Same shape family as the value/Q networks, with sampled coordinates
        # so the finite-difference sweep stays fast.
        rng = np.random.default_rng(6)
        net = MLP(
            [6, 64, 64, 1],
            [Activation.TANH, Activation.TANH, Activation.IDENTITY],
            rng=rng,
        )
        x = rng.normal(size=(4, 6))
        target = rng.normal(size=(4, 1))
        err = grad_check(
            self.quadratic_loss(net, x, target), net.pv, sample=200, rng=rng
        )
        assert err < 1e-4


class TestAdam:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        rng = np.random.default_rng(7)
        net = MLP([3, 3], [Activation.IDENTITY], rng=rng)
        before = net.pv.data.copy()
        Adam(net.pv, lr=0.1).step()
        assert np.array_equal(net.pv.data, before)
        assert net.pv.step == 1

    def test_first_step_magnitude_is_learning_rate(self):
        # Bias correction makes m_hat/sqrt(v_hat) = g/|g| up to eps, so the
        # first update is -lr * sign(g).
        pv = ParamVector([("w", (1,))])
        pv.view("w")[:] = 2.0
        pv.grad[:] = 0.3
        Adam(pv, lr=0.01).step()
        assert np.isclose(pv.view("w")[0] - 2.0, -0.01, rtol=1e-6)

    def test_repeated_positive_gradient_shrinks_parameter(self):
        pv = ParamVector([("w", (1,))])
        pv.view("w")[:] = 1.0
        opt = Adam(pv, lr=0.01)
        seen = [1.0]
        for _ in range(3):
            pv.grad[:] = 0.5
            opt.step()
            seen.append(float(pv.view("w")[0]))
        assert all(b < a for a, b in zip(seen, seen[1:]))

    def test_gradients_are_zeroed_after_step(self):
        pv = ParamVector([("w", (4,))])
        pv.grad[:] = 1.0
        Adam(pv, lr=0.01).step()
        assert np.array_equal(pv.grad, np.zeros(4))

    def test_non_finite_gradient_names_parameter_block(self):
        pv = ParamVector([("layer0.W", (2, 2)), ("layer0.b", (2,))])
        pv.grad_view("layer0.b")[0] = np.nan
        with pytest.raises(FloatingPointError, match="layer0.b"):
            Adam(pv, lr=0.01).step()

    def test_moments_start_at_zero(self):
        pv = ParamVector([("w", (8,))])
        assert not np.any(pv.m) and not np.any(pv.v)
        assert pv.grad.size == pv.data.size


class TestParamVector:
    def test_views_alias_flat_buffer(self):
        pv = ParamVector([("a", (2, 3)), ("b", (3,))])
        pv.view("a")[1, 2] = 5.0
        assert pv.data[5] == 5.0

    def test_duplicate_block_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ParamVector([("a", (2,)), ("a", (3,))])

    def test_clone_is_independent(self):
        pv = ParamVector([("a", (3,))])
        pv.data[:] = 1.0
        other = pv.clone()
        other.data[:] = 2.0
        assert np.array_equal(pv.data, [1.0, 1.0, 1.0])

    def test_block_at_maps_flat_index_to_name(self):
        pv = ParamVector([("first", (2,)), ("second", (3,))])
        assert pv.block_at(0) == "first"
        assert pv.block_at(1) == "first"
        assert pv.block_at(2) == "second"
        assert pv.block_at(4) == "second"


class TestSnapshots:
    def build(self, seed):
        rng = np.random.default_rng(seed)
        net = MLP([3, 4, 2], [Activation.TANH, Activation.IDENTITY], rng=rng)
        return net

    def test_roundtrip_preserves_params_and_optimizer_state(self, tmp_path):
        net = self.build(11)
        opt = Adam(net.pv, lr=0.01)
        x = np.random.default_rng(0).normal(size=(4, 3))
        for _ in range(3):
            out = net.forward(x)
            net.backward(out / out.size)
            opt.step()
        save_snapshot(tmp_path, {"actor": (net.pv, net.arch_meta())}, extra={"k": 1})
        nets, extra = load_snapshot(tmp_path)
        restored = nets["actor"]["pv"]
        assert np.array_equal(restored.data, net.pv.data)
        assert np.array_equal(restored.m, net.pv.m)
        assert np.array_equal(restored.v, net.pv.v)
        assert restored.step == 3
        assert extra == {"k": 1}
        rebuilt = MLP.from_meta(nets["actor"]["meta"])
        rebuilt.pv.copy_data_from(restored)
        assert np.array_equal(rebuilt.forward(x), net.forward(x))

    def test_corrupt_manifest_raises_value_error(self, tmp_path):
        net = self.build(12)
        save_snapshot(tmp_path, {"actor": (net.pv, net.arch_meta())})
        (tmp_path / "params.json").write_text("{not json")
        with pytest.raises(ValueError, match="params.json"):
            load_snapshot(tmp_path)

    def test_truncated_binary_raises_value_error(self, tmp_path):
        net = self.build(13)
        save_snapshot(tmp_path, {"actor": (net.pv, net.arch_meta())})
        blob = (tmp_path / "params.bin").read_bytes()
        (tmp_path / "params.bin").write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ValueError, match="truncated"):
            load_snapshot(tmp_path)


@settings(max_examples=50, deadline=None)
@given(
    x=st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    seed=st.integers(0, 2**31 - 1),
)
def test_property_forward_deterministic(x, seed):
    rng = np.random.default_rng(seed)
    net = MLP([3, 5, 2], [Activation.TANH, Activation.IDENTITY], rng=rng)
    xa = np.array(x)
    assert np.array_equal(net.forward(xa), net.forward(xa))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_property_adam_zero_grad_identity(seed):
    rng = np.random.default_rng(seed)
    pv = ParamVector([("w", (6,))])
    pv.data[:] = rng.normal(size=6)
    before = pv.data.copy()
    Adam(pv, lr=0.05).step()
    assert np.array_equal(pv.data, before)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_property_grad_check_at_random_points(seed):
    rng = np.random.default_rng(seed)
    net = MLP([3, 6, 2], [Activation.TANH, Activation.IDENTITY], rng=rng)
    x = rng.normal(size=(4, 3))
    target = rng.normal(size=(4, 2))

    def loss():
        out = net.forward(x)
        diff = out - target
        net.backward(2.0 * diff / diff.size)
        return float(np.mean(diff**2))

    assert grad_check(loss, net.pv) < 1e-4


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    batch=st.integers(1, 8),
)
def test_property_glorot_bounds(seed, batch):
    rng = np.random.default_rng(seed)
    w = glorot_uniform(rng, batch, 5)
    limit = np.sqrt(6.0 / (batch + 5))
    assert np.all(np.abs(w) <= limit)


needs_compiled = pytest.mark.skipif(
    "compiled" not in backend.available(), reason="compiled backend not built"
)


@needs_compiled
class TestBackendParity:
    def run_steps(self, which, steps=25):
        with backend.use(which):
            rng = np.random.default_rng(99)
            net = MLP(
                [5, 32, 16, 2],
                [Activation.TANH, Activation.SOFTPLUS, Activation.IDENTITY],
                rng=rng,
            )
            opt = Adam(net.pv, lr=1e-3)
            x = rng.normal(size=(16, 5))
            target = rng.normal(size=(16, 2))
            for _ in range(steps):
                out = net.forward(x)
                net.backward(2.0 * (out - target) / target.size)
                opt.step()
            final_out = net.forward(x)
        return net.pv.data.copy(), final_out.copy()

    def test_training_trajectories_agree_across_backends(self):
        data_py, out_py = self.run_steps("python")
        data_c, out_c = self.run_steps("compiled")
        assert np.allclose(data_py, data_c, rtol=1e-10, atol=1e-12)
        assert np.allclose(out_py, out_c, rtol=1e-10, atol=1e-12)

    def test_each_backend_is_bitwise_reproducible(self):
        for which in ("python", "compiled"):
            a = self.run_steps(which)
            b = self.run_steps(which)
            assert np.array_equal(a[0], b[0]), which
            assert np.array_equal(a[1], b[1]), which

    def test_gradient_parity_single_pass(self):
        rng = np.random.default_rng(123)
        net = MLP([4, 8, 3], [Activation.RELU, Activation.IDENTITY], rng=rng)
        x = rng.normal(size=(6, 4))
        grads = {}
        for which in ("python", "compiled"):
            with backend.use(which):
                out = net.forward(x)
                net.backward(np.ones_like(out) / out.size)
                grads[which] = net.pv.grad.copy()
                net.pv.zero_grad()
        assert np.allclose(grads["python"], grads["compiled"], rtol=1e-12, atol=1e-15)


def test_backend_name_reports_active_module():
    assert backend_name() in ("python", "compiled")
