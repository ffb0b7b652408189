"""Analytic gradients against central finite differences."""

import numpy as np
import pytest

from app.lib.common.exceptions import TrainingDivergedError
from app.lib.mimo.channel import ChannelModel, sample_batch
from app.lib.mimo.constellation import make_constellation
from app.lib.networks.detnet import detnet_forward, detnet_gradient, detnet_loss
from app.lib.networks.fullycon import fullycon_forward, fullycon_gradient, fullycon_loss
from app.lib.networks.gradients import gradient
from app.lib.networks.params import detnet_spec, fullycon_spec, init_params

STEP = 1e-5


def _close(analytic: float, numeric: float) -> bool:
    return abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-7


def _randomize_biases(params, rng):
    for name, value in params.arrays.items():
        if name.startswith("b"):
            params.arrays[name] = 0.1 * rng.standard_normal(value.shape)
    return params


def _check(params, analytic, loss_of):
    for name, grad in analytic.items():
        value = params.arrays[name]
        flat = value.reshape(-1).copy()
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            for sign in (1.0, -1.0):
                shifted = flat.copy()
                shifted[i] += sign * STEP
                params.arrays[name] = shifted.reshape(value.shape)
                numeric[i] += sign * loss_of(params)
            params.arrays[name] = value
        numeric /= 2 * STEP
        for a, n in zip(np.asarray(grad).reshape(-1), numeric):
            assert _close(float(a), float(n)), f"{name}: analytic {a} vs numeric {n}"


@pytest.mark.unit
class TestDetNetGradient:
    """Reverse mode through all layers, step sizes included."""

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("weighting", ["log", "uniform"])
    def test_matches_finite_differences(self, seed, weighting):
        rng = np.random.default_rng(seed)
        c = make_constellation("bpsk")
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        batch = sample_batch(model, c, 5.0, 10.0, rng, 3)
        spec = detnet_spec("bpsk", K=3, N=5, is_complex=False, layers=3, z_width=16, v_width=4,
                           loss_weighting=weighting)
        params = _randomize_biases(init_params(spec, rng), rng)
        for k in range(1, 4):
            params.arrays[f"delta1_{k}"] = np.array(0.1 * rng.standard_normal())
            params.arrays[f"delta2_{k}"] = np.array(0.1 * rng.standard_normal())

        def loss_of(p):
            return float(np.mean(detnet_loss(batch.x_oh, detnet_forward(p, batch.H, batch.y), weighting)))

        loss, grads, losses = detnet_gradient(params, batch.H, batch.y, batch.x_oh)
        assert loss == pytest.approx(loss_of(params))
        assert losses.shape == (3,)
        assert list(grads) == params.names()
        _check(params, grads, loss_of)

    def test_first_step_size_reaches_later_layers(self, rng):
        c = make_constellation("bpsk")
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        batch = sample_batch(model, c, 5.0, 5.0, rng, 4)
        spec = detnet_spec("bpsk", K=3, N=5, is_complex=False, layers=3)
        params = init_params(spec, rng)
        _, grads, _ = detnet_gradient(params, batch.H, batch.y, batch.x_oh)
        assert float(grads["delta1_1"]) != 0.0

    def test_complex_constellation(self):
        rng = np.random.default_rng(5)
        c = make_constellation("qam16")
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=1, N=2, is_complex=True)
        batch = sample_batch(model, c, 15.0, 15.0, rng, 2)
        spec = detnet_spec("qam16", K=1, N=2, is_complex=True, layers=2, z_width=10, v_width=2)
        params = _randomize_biases(init_params(spec, rng), rng)

        def loss_of(p):
            return float(np.mean(detnet_loss(batch.x_oh, detnet_forward(p, batch.H, batch.y))))

        _, grads, _ = detnet_gradient(params, batch.H, batch.y, batch.x_oh)
        _check(params, grads, loss_of)

    def test_non_finite_loss_names_sample(self, rng):
        c = make_constellation("bpsk")
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=2, N=3)
        batch = sample_batch(model, c, 5.0, 5.0, rng, 3)
        params = init_params(detnet_spec("bpsk", K=2, N=3, is_complex=False, layers=2), rng)
        y = batch.y.copy()
        y[1, 0] = np.inf
        with pytest.raises(TrainingDivergedError) as exc_info:
            detnet_gradient(params, batch.H, y, batch.x_oh)
        assert exc_info.value.sample_index == 1


@pytest.mark.unit
class TestFullyConGradient:
    """Backpropagation through the affine-relu stack."""

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        c = make_constellation("bpsk")
        model = ChannelModel(regime="fc", distribution="alpha_toeplitz", K=3, N=5, alpha=0.55)
        batch = sample_batch(model, c, 5.0, 10.0, rng, 4)
        spec = fullycon_spec("bpsk", K=3, N=5, is_complex=False, layers=3, hidden_widths=[8, 6])
        params = _randomize_biases(init_params(spec, rng), rng)

        def loss_of(p):
            return float(np.mean(fullycon_loss(batch.x_oh, fullycon_forward(p, batch.y))))

        loss, grads, _ = fullycon_gradient(params, batch.y, batch.x_oh)
        assert loss == pytest.approx(loss_of(params))
        _check(params, grads, loss_of)

    def test_dispatch_by_architecture(self, rng):
        c = make_constellation("bpsk")
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=2, N=3)
        batch = sample_batch(model, c, 5.0, 5.0, rng, 2)
        params = init_params(fullycon_spec("bpsk", K=2, N=3, is_complex=False, layers=2), rng)
        loss, grads, _ = gradient(params, batch)
        expected, _, _ = fullycon_gradient(params, batch.y, batch.x_oh)
        assert loss == pytest.approx(expected)
        assert set(grads) == {"W1", "b1", "W2", "b2"}
