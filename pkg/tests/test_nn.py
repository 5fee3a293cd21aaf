import numpy as np
import pytest

from oracles import finite_difference_grads, naive_forward
from rlcfr.nn import (DEFAULT_DIMS, CheckpointError, NetworkParams, NetworkSpec, TrainingError, backward,
                      copy_params, forward, init_params, mse_loss, params_from_lines, params_to_lines, sgd_step)

SMALL = (18, 12, 12, 12, 7)


def analytic_flat(params, x, a, y):
    _, gw, gb = backward(params, x, a, y)
    return [g for pair in zip(gw, gb) for g in pair]


def check_gradients(params, x, a, y, coords=None):
    grads = analytic_flat(params, x, a, y)
    fd = finite_difference_grads(params, x, a, y, coords=coords)
    worst = 0.0
    for (i, j), num in fd.items():
        ana = grads[i].reshape(-1)[j]
        if abs(ana) > 1e-8:
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num)))
    return worst


def test_default_network_has_four_weight_layers():
    spec = NetworkSpec()
    assert spec.layer_dims == DEFAULT_DIMS
    assert spec.n_layers == 4
    assert spec.layer_dims[0] == 18 and spec.layer_dims[-1] == 7


class TestInit:
    def test_deterministic(self):
        a, b = init_params(NetworkSpec(seed=3)), init_params(NetworkSpec(seed=3))
        assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))
        c = init_params(NetworkSpec(seed=4))
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_zero_biases(self):
        assert all(not b.any() for b in init_params(NetworkSpec()).biases)

    def test_weight_statistics(self):
        spec = NetworkSpec((100, 100, 100), seed=1)
        w = np.concatenate([m.ravel() for m in init_params(spec).weights])
        assert w.size >= 10000
        sd = np.sqrt(2 / 100)
        assert abs(w.mean()) < 3 * sd / np.sqrt(w.size)
        assert w.std() == pytest.approx(sd, rel=0.03)

    def test_shapes_chain(self):
        p = init_params(NetworkSpec())
        for w, b, (i, o) in zip(p.weights, p.biases, zip(DEFAULT_DIMS[:-1], DEFAULT_DIMS[1:])):
            assert w.shape == (o, i) and b.shape == (o,)

    @pytest.mark.parametrize("dims", [(18,), (18, 0, 7)])
    def test_bad_spec(self, dims):
        with pytest.raises(ValueError):
            NetworkSpec(dims)


class TestForward:
    def test_zero_params(self):
        p = init_params(NetworkSpec())
        for a in p.arrays():
            a[...] = 0
        assert not forward(p, np.random.default_rng(0).normal(size=18)).any()

    def test_identity_configuration(self):
        p = NetworkParams(NetworkSpec((4, 4)), [np.eye(4)], [np.zeros(4)])
        x = np.array([1.0, -2.0, 0.5, 3.0])
        assert np.array_equal(forward(p, x), x)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_arithmetic(self, seed):
        rng = np.random.default_rng(seed)
        p = init_params(NetworkSpec(seed=seed))
        for b in p.biases:
            b[...] = rng.normal(size=b.shape)
        x = rng.normal(size=18)
        np.testing.assert_allclose(forward(p, x), naive_forward(p.weights, p.biases, x), rtol=1e-12, atol=1e-12)

    def test_batch_equals_rows(self):
        p = init_params(NetworkSpec(seed=2))
        xs = np.random.default_rng(1).normal(size=(5, 18))
        batch = forward(p, xs)
        for x, row in zip(xs, batch):
            np.testing.assert_allclose(forward(p, x), row, rtol=1e-13, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward(init_params(NetworkSpec()), np.zeros(17))

    def test_finite_for_bounded_inputs(self):
        p = init_params(NetworkSpec(seed=0))
        xs = np.random.default_rng(0).uniform(-1e3, 1e3, size=(200, 18))
        q = forward(p, xs)
        assert np.all(np.isfinite(q))
        _, gw, gb = backward(p, xs, np.zeros(200, dtype=int), np.zeros(200))
        assert all(np.all(np.isfinite(g)) for g in gw + gb)


class TestLoss:
    def test_exact_fit(self):
        assert mse_loss(np.array([0, 0, 2.0]), 2, 2.0)[0] == 0

    def test_arithmetic(self):
        loss, grad = mse_loss(np.array([1.0, 5.0]), 0, 3.0)
        assert loss == 4.0
        assert grad.tolist() == [-4.0, 0.0]

    def test_batch_mean(self):
        rng = np.random.default_rng(0)
        pred = rng.normal(size=(32, 7))
        act = rng.integers(0, 7, 32)
        tgt = rng.normal(size=32)
        loss, _ = mse_loss(pred, act, tgt)
        assert loss == pytest.approx(np.mean([mse_loss(p, a, t)[0] for p, a, t in zip(pred, act, tgt)]))

    def test_action_out_of_range(self):
        with pytest.raises(ValueError):
            mse_loss(np.zeros(7), 7, 0.0)


class TestBackward:
    @pytest.mark.parametrize("seed", range(20))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        p = init_params(NetworkSpec(SMALL, seed=seed))
        for b in p.biases:
            b[...] = rng.normal(scale=0.1, size=b.shape)
        x = rng.normal(size=18)
        assert check_gradients(p, x, int(rng.integers(7)), float(rng.normal())) < 1e-4

    def test_finite_differences_default_width(self):
        rng = np.random.default_rng(99)
        p = init_params(NetworkSpec(seed=99))
        arrays = p.arrays()
        coords = [(i, int(rng.integers(arrays[i].size))) for i in rng.integers(0, len(arrays), 300)]
        assert check_gradients(p, rng.normal(size=18), 3, 1.5, coords) < 1e-4

    def test_zero_loss_point(self):
        p = init_params(NetworkSpec(seed=0))
        x = np.ones(18)
        loss, gw, gb = backward(p, x, 2, forward(p, x)[2])
        assert loss == 0
        assert all(not g.any() for g in gw + gb)

    def test_masking(self):
        p = init_params(NetworkSpec(seed=0))
        _, gw, gb = backward(p, np.ones(18), 2, 10.0)
        rows = [r for r in range(7) if r != 2]
        assert not gw[-1][rows].any() and not gb[-1][rows].any()
        assert gw[-1][2].any()


class TestSgd:
    def _grads(self, p):
        return backward(p, np.ones(18), 0, 1.0)[1:]

    def test_lr_zero(self):
        p = init_params(NetworkSpec(seed=0))
        before = p.copy()
        sgd_step(p, *self._grads(p), 0.0)
        assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), before.arrays()))

    def test_lr_one(self):
        p = init_params(NetworkSpec(seed=0))
        before = p.copy()
        gw, gb = self._grads(p)
        sgd_step(p, gw, gb, 1.0)
        for a, b, g in zip(p.arrays(), before.arrays(), [x for pair in zip(gw, gb) for x in pair]):
            np.testing.assert_array_equal(a, b - g)

    def test_non_finite(self):
        p = init_params(NetworkSpec(seed=0))
        gw, gb = self._grads(p)
        gw[0][0, 0] = np.nan
        with pytest.raises(TrainingError):
            sgd_step(p, gw, gb, 0.1)

    def test_negative_lr(self):
        p = init_params(NetworkSpec(seed=0))
        with pytest.raises(ValueError):
            sgd_step(p, *self._grads(p), -1.0)

    def test_monotone_descent(self):
        rng = np.random.default_rng(0)
        p = init_params(NetworkSpec(SMALL, seed=0))
        xs = rng.normal(size=(16, 18))
        act = rng.integers(0, 7, 16)
        tgt = rng.normal(size=16)
        losses = []
        for _ in range(200):
            loss, gw, gb = backward(p, xs, act, tgt)
            losses.append(loss)
            sgd_step(p, gw, gb, 1e-3)
        assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))
        assert losses[-1] < losses[0]

    def test_deterministic_trajectory(self):
        def run():
            rng = np.random.default_rng(5)
            p = init_params(NetworkSpec(seed=5))
            out = []
            for _ in range(20):
                x = rng.normal(size=(8, 18))
                loss, gw, gb = backward(p, x, rng.integers(0, 7, 8), rng.normal(size=8))
                sgd_step(p, gw, gb, 1e-2)
                out.append(loss)
            return out
        assert run() == run()


class TestCopyAndText:
    def test_copy_value_semantics(self):
        src = init_params(NetworkSpec(seed=0))
        dst = copy_params(src)
        x = np.random.default_rng(0).normal(size=18)
        assert np.array_equal(forward(src, x), forward(dst, x))
        src.weights[0] += 1
        assert not np.array_equal(forward(src, x), forward(dst, x))

    def test_copy_into_existing_is_idempotent(self):
        src = init_params(NetworkSpec(seed=0))
        dst = init_params(NetworkSpec(seed=1))
        copy_params(src, dst)
        copy_params(src, dst)
        assert all(np.array_equal(a, b) for a, b in zip(src.arrays(), dst.arrays()))

    def test_round_trip(self):
        p = init_params(NetworkSpec(seed=4))
        q, end = params_from_lines(params_to_lines(p))
        assert end == len(params_to_lines(p))
        xs = np.random.default_rng(0).normal(size=(10, 18))
        assert np.max(np.abs(forward(p, xs) - forward(q, xs))) <= 1e-12
        assert q.spec == p.spec

    def test_truncated(self):
        lines = params_to_lines(init_params(NetworkSpec(seed=4)))
        with pytest.raises(CheckpointError):
            params_from_lines(lines[:-3])
