import math

import numpy as np
import pytest

from agsr import autodiff as ad
from agsr.autodiff import Tensor, grad_check
from agsr.exceptions import DegenerateProjection, ShapeError
from agsr.graph import eigendecompose, graph_laplacian, normalized_adjacency, selection_matrix
from agsr.layers import (GCNLayer, GSRLayer, PoolLayer, UnpoolLayer, gcn_forward, gsr_forward,
                         pool_forward, pooled_sizes, top_k_indices, unpool_forward)

from conftest import random_graph

SIG3_X3 = 2.8577223804673  # 3 * 1/(1+e^-3)
SIG2_X2 = 1.7615941559557646  # 2 * 1/(1+e^-2)


class TestGCN:
    def test_identity_weights_return_a_norm(self, rng):
        a = normalized_adjacency(random_graph(rng, 5))
        out = gcn_forward(GCNLayer(Tensor(np.eye(5))), a, np.eye(5), "none")
        np.testing.assert_array_equal(out.value, a)

    def test_relu(self):
        out = gcn_forward(GCNLayer(Tensor(np.eye(2))), np.eye(1), [[-1.0, 2.0]], "relu")
        np.testing.assert_array_equal(out.value, [[0, 2]])

    def test_two_node_graph(self):
        a = normalized_adjacency(np.array([[0, 1.0], [1.0, 0]]))
        out = gcn_forward(GCNLayer(Tensor(np.eye(2))), a, np.eye(2), "none")
        np.testing.assert_allclose(out.value, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_exact_product(self, rng):
        a = normalized_adjacency(random_graph(rng, 4))
        x = rng.standard_normal((4, 3))
        out = gcn_forward(GCNLayer(Tensor(np.eye(3))), a, x, "none")
        np.testing.assert_array_equal(out.value, a @ x)

    def test_errors(self):
        layer = GCNLayer(Tensor(np.eye(2)))
        with pytest.raises(ShapeError):
            layer(np.eye(3), np.eye(3))
        with pytest.raises(ValueError):
            layer(np.eye(2), np.eye(2), "tanh")

    def test_grad_check(self, rng):
        a = normalized_adjacency(random_graph(rng, 5))
        x = rng.uniform(-1, 1, (5, 3))
        layer = GCNLayer(Tensor(rng.uniform(-1, 1, (3, 4)), requires_grad=True))
        assert grad_check(lambda: ad.total(ad.mul(layer(a, x, "none"), layer(a, x, "none"))),
                          layer.weight).passed


class TestPool:
    def test_hand_example(self):
        layer = PoolLayer(Tensor([[1.0]]), keep=2)
        res = pool_forward(layer, np.arange(9.0).reshape(3, 3), [[1.0], [3.0], [2.0]])
        np.testing.assert_array_equal(res.indices, [1, 2])
        np.testing.assert_allclose(res.x.value[:, 0], [SIG3_X3, SIG2_X2], rtol=1e-13)
        np.testing.assert_array_equal(res.adj, [[4, 5], [7, 8]])

    def test_full_retention(self, rng):
        a = random_graph(rng, 4)
        res = pool_forward(PoolLayer(Tensor([[1.0]]), 4), a, [[1.0], [2.0], [3.0], [4.0]])
        np.testing.assert_array_equal(res.adj, a)
        np.testing.assert_array_equal(res.indices, np.arange(4))

    def test_tie_rule(self):
        np.testing.assert_array_equal(top_k_indices(np.array([5.0, 5.0, 1.0]), 1), [0])
        np.testing.assert_array_equal(top_k_indices(np.array([1.0, 5.0, 5.0, 5.0]), 2), [1, 2])

    def test_projection_normalized(self):
        small = pool_forward(PoolLayer(Tensor([[1.0]]), 1), np.zeros((2, 2)), [[1.0], [2.0]])
        big = pool_forward(PoolLayer(Tensor([[100.0]]), 1), np.zeros((2, 2)), [[1.0], [2.0]])
        np.testing.assert_array_equal(small.x.value, big.x.value)

    def test_degenerate(self):
        with pytest.raises(DegenerateProjection):
            pool_forward(PoolLayer(Tensor([[0.0]]), 1), np.zeros((2, 2)), [[1.0], [2.0]])

    def test_keep_out_of_range(self):
        with pytest.raises(ShapeError):
            pool_forward(PoolLayer(Tensor([[1.0]]), 3), np.zeros((2, 2)), [[1.0], [2.0]])

    def test_gradients_reach_projection_and_input(self, rng):
        layer = PoolLayer(Tensor(rng.uniform(-1, 1, (3, 1)), requires_grad=True), 2)
        x = Tensor(rng.uniform(-1, 1, (5, 3)), requires_grad=True)
        adj = random_graph(rng, 5)
        scores = x.value @ layer.projection.value[:, 0] / np.linalg.norm(layer.projection.value)
        s = np.sort(scores)[::-1]
        assert s[1] - s[2] > 1e-6  # ranking is stable under the perturbation

        def f():
            return ad.total(ad.mul(pool_forward(layer, adj, x).x, pool_forward(layer, adj, x).x))

        assert grad_check(f, [layer.projection, x]).passed


class TestUnpool:
    def test_relocate(self):
        out = unpool_forward(UnpoolLayer(np.array([1, 2]), 3), [[7.0], [9.0]])
        np.testing.assert_array_equal(out.value, [[0], [7], [9]])

    def test_identity(self, rng):
        x = rng.standard_normal((3, 2))
        np.testing.assert_array_equal(unpool_forward(UnpoolLayer(np.arange(3), 3), x).value, x)

    def test_index_error(self):
        with pytest.raises(IndexError):
            unpool_forward(UnpoolLayer(np.array([0, 3]), 3), np.ones((2, 1)))

    def test_round_trip(self):
        x = np.array([[1.0], [3.0], [2.0]])
        res = pool_forward(PoolLayer(Tensor([[1.0]]), 2), np.zeros((3, 3)), x)
        out = unpool_forward(UnpoolLayer(res.indices, 3), res.x)
        np.testing.assert_allclose(out.value[:, 0], [0.0, SIG3_X3, SIG2_X2], rtol=1e-13)

    def test_gradient_routing(self):
        x = Tensor([[1.0], [2.0]], requires_grad=True)
        ad.backward(ad.total(ad.mul(unpool_forward(UnpoolLayer(np.array([0, 2]), 3), x),
                                    Tensor([[10.0], [20.0], [30.0]]))))
        np.testing.assert_array_equal(x.grad, [[10], [30]])


class TestGSR:
    def test_identity_case(self, rng):
        u0 = eigendecompose(graph_laplacian(random_graph(rng, 4))).eigenvectors
        a_h, x_h = gsr_forward(GSRLayer(Tensor(np.eye(4))), u0, u0, np.eye(4))
        np.testing.assert_allclose(a_h.value, np.eye(4), atol=1e-14)
        np.testing.assert_allclose(x_h.value, np.eye(4), atol=1e-14)

    def test_hand_example(self):
        z = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        a_h, x_h = gsr_forward(GSRLayer(Tensor(np.eye(4))), z, np.eye(2), selection_matrix(2, 2))
        raw = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]], float)
        expected = np.array([[1, 0, 0.5, 0], [0, 1, 0, 0.5], [0.5, 0, 0, 0], [0, 0.5, 0, 0]])
        np.testing.assert_array_equal(a_h.value, (raw + raw.T) / 2)
        np.testing.assert_array_equal(a_h.value, expected)
        np.testing.assert_allclose(x_h.value, expected @ expected.T, atol=1e-15)

    def test_symmetric_outputs(self, rng):
        u0 = eigendecompose(graph_laplacian(random_graph(rng, 3))).eigenvectors
        layer = GSRLayer(Tensor(rng.standard_normal((6, 6))))
        a_h, x_h = gsr_forward(layer, rng.standard_normal((3, 6)), u0, selection_matrix(3, 2))
        assert np.max(np.abs(a_h.value - a_h.value.T)) <= 1e-12
        assert np.max(np.abs(x_h.value - x_h.value.T)) <= 1e-12

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            gsr_forward(GSRLayer(Tensor(np.eye(4))), np.ones((2, 3)), np.eye(2), selection_matrix(2, 2))

    def test_grad_check(self, rng):
        u0 = eigendecompose(graph_laplacian(random_graph(rng, 3))).eigenvectors
        s_d = selection_matrix(3, 2)
        layer = GSRLayer(Tensor(rng.uniform(-1, 1, (6, 6)), requires_grad=True))
        z = Tensor(rng.uniform(-1, 1, (3, 6)), requires_grad=True)

        def f():
            a_h, x_h = gsr_forward(layer, z, u0, s_d)
            return ad.total(ad.add(ad.mul(a_h, a_h), x_h))

        assert grad_check(f, [layer.weight, z]).passed


@pytest.mark.parametrize("n, sizes", [(20, [10, 5]), (4, [2, 1]), (7, [4, 2]), (1, [1, 1])])
def test_pooled_sizes(n, sizes):
    assert pooled_sizes(n) == sizes
    assert sizes[0] == math.ceil(n / 2)
