"""Lagged-network forward pass, gradients and standardization."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from garnn import (DataError, DomainError, NetSpec, NetWeights, net_forward,
                   net_gradients, standardize)

TWO_TANH_HALF = 0.9242343145200195  # 2*tanh(1/2), mpmath at 50 digits


class TestStandardize:
    def test_simple(self):
        std, z = standardize([1.0, 2.0, 3.0])
        assert std.mean == 2.0
        assert std.sd == 1.0
        assert_allclose(z, [-1.0, 0.0, 1.0])

    def test_output_moments(self):
        rng = np.random.default_rng(1)
        y = rng.gamma(2.0, 3.0, 500)
        _, z = standardize(y)
        assert abs(np.mean(z)) < 1e-12
        assert abs(np.std(z, ddof=1) - 1.0) < 1e-12

    def test_constant_rejected(self):
        with pytest.raises(DataError):
            standardize([5.0, 5.0, 5.0])

    def test_too_short(self):
        with pytest.raises(DataError):
            standardize([1.0])


class TestForward:
    def test_zero_input_weights_tanh(self):
        spec = NetSpec(2, 3)
        w = NetWeights(np.zeros((3, 2)), np.array([1.0, -2.0, 0.5]))
        assert net_forward(spec, w, [0.3, -0.4]) == 0.0

    def test_zero_output_weights(self):
        spec = NetSpec(2, 3)
        rng = np.random.default_rng(0)
        w = NetWeights(rng.normal(size=(3, 2)), np.zeros(3))
        assert net_forward(spec, w, [0.3, -0.4]) == 0.0

    def test_single_node_derived(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 50
        assert float(2 * mp.tanh(mp.mpf(1) / 2)) == pytest.approx(TWO_TANH_HALF,
                                                                  abs=1e-16)
        spec = NetSpec(1, 1)
        w = NetWeights(np.array([[1.0]]), np.array([2.0]))
        assert net_forward(spec, w, [0.5]) == pytest.approx(TWO_TANH_HALF, abs=1e-12)

    def test_no_nodes_is_pure_glm(self):
        spec = NetSpec(3, 0)
        w = NetWeights(np.zeros((0, 3)), np.zeros(0))
        assert net_forward(spec, w, [1.0, -2.0, 0.3]) == 0.0
        d_rho, d_omega = net_gradients(spec, w, [1.0, -2.0, 0.3])
        assert d_rho.shape == (0,)
        assert d_omega.shape == (0, 3)

    def test_boundedness(self):
        rng = np.random.default_rng(5)
        for activation in ("tanh", "logistic"):
            spec = NetSpec(2, 4, activation)
            w = NetWeights(rng.normal(scale=5.0, size=(4, 2)),
                           rng.normal(scale=3.0, size=4))
            bound = np.sum(np.abs(w.output_weights))
            for _ in range(50):
                z = rng.normal(scale=10.0, size=2)
                assert abs(net_forward(spec, w, z)) <= bound + 1e-12

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(9)
        spec = NetSpec(3, 4)
        iw = rng.normal(size=(4, 3))
        ow = rng.normal(size=4)
        z = rng.normal(size=3)
        base = net_forward(spec, NetWeights(iw, ow), z)
        perm = rng.permutation(4)
        assert net_forward(spec, NetWeights(iw[perm], ow[perm]), z) == pytest.approx(
            base, rel=1e-15)

    def test_dimension_mismatch(self):
        spec = NetSpec(2, 2)
        w = NetWeights(np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(DomainError):
            net_forward(spec, w, [0.1])
        with pytest.raises(DomainError):
            net_forward(NetSpec(2, 3), w, [0.1, 0.2])


class TestGradients:
    def test_zero_input_weights(self):
        # h(0) = 0 and h'(0) = 1 for tanh
        spec = NetSpec(2, 3)
        rho = np.array([1.5, -0.5, 2.0])
        w = NetWeights(np.zeros((3, 2)), rho)
        z = np.array([0.7, -0.2])
        d_rho, d_omega = net_gradients(spec, w, z)
        assert_allclose(d_rho, np.zeros(3))
        assert_allclose(d_omega, rho[:, None] * z[None, :])

    def test_zero_output_weights(self):
        spec = NetSpec(2, 2)
        iw = np.array([[0.3, -0.1], [0.2, 0.4]])
        z = np.array([0.5, 1.0])
        d_rho_a, d_omega_a = net_gradients(spec, NetWeights(iw, np.zeros(2)), z)
        d_rho_b, _ = net_gradients(spec, NetWeights(iw, np.array([3.0, -1.0])), z)
        assert_allclose(d_omega_a, np.zeros((2, 2)))
        assert_allclose(d_rho_a, d_rho_b)  # activations do not depend on rho

    @pytest.mark.parametrize("activation", ["tanh", "logistic"])
    def test_matches_finite_differences(self, activation):
        rng = np.random.default_rng(42)
        step = 1e-6
        for _ in range(50):
            lags = int(rng.integers(1, 4))
            nodes = int(rng.integers(1, 5))
            spec = NetSpec(lags, nodes, activation)
            iw = rng.uniform(-1.5, 1.5, (nodes, lags))
            ow = rng.uniform(-1.5, 1.5, nodes)
            z = rng.uniform(-2.0, 2.0, lags)
            d_rho, d_omega = net_gradients(spec, NetWeights(iw, ow), z)

            num_rho = np.empty(nodes)
            for i in range(nodes):
                bump = np.zeros(nodes)
                bump[i] = step
                up = net_forward(spec, NetWeights(iw, ow + bump), z)
                dn = net_forward(spec, NetWeights(iw, ow - bump), z)
                num_rho[i] = (up - dn) / (2 * step)
            num_omega = np.empty((nodes, lags))
            for i in range(nodes):
                for j in range(lags):
                    bump = np.zeros((nodes, lags))
                    bump[i, j] = step
                    up = net_forward(spec, NetWeights(iw + bump, ow), z)
                    dn = net_forward(spec, NetWeights(iw - bump, ow), z)
                    num_omega[i, j] = (up - dn) / (2 * step)

            scale = max(1.0, np.max(np.abs(d_rho)), np.max(np.abs(d_omega)))
            assert np.max(np.abs(d_rho - num_rho)) / scale < 1e-6
            assert np.max(np.abs(d_omega - num_omega)) / scale < 1e-6


class TestSpecValidation:
    def test_bad_spec(self):
        with pytest.raises(DomainError):
            NetSpec(0, 1)
        with pytest.raises(DomainError):
            NetSpec(1, -1)
        with pytest.raises(DomainError):
            NetSpec(1, 1, "relu")  # unbounded activations are excluded

    def test_weight_shape_mismatch(self):
        with pytest.raises(DomainError):
            NetWeights(np.zeros((2, 3)), np.zeros(3))
        w = NetWeights(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(DomainError):
            w.validate_for(NetSpec(2, 2))
