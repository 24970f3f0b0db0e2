"""Generator building blocks: GCN, top-k graph pooling, unpooling, GSR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import DegenerateProjection, ShapeError


def uniform_init(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = np.sqrt(1.0 / rows)
    return rng.uniform(-bound, bound, size=(rows, cols))


class GCNLayer:
    """``activation(A_norm @ X @ W)``."""

    def __init__(self, weight: Tensor):
        self.weight = weight

    @classmethod
    def init(cls, rng, n_in: int, n_out: int) -> "GCNLayer":
        return cls(Tensor(uniform_init(rng, n_in, n_out), requires_grad=True))

    def __call__(self, a_norm, x, activation: str = "relu") -> Tensor:
        return gcn_forward(self, a_norm, x, activation)


def gcn_forward(layer: GCNLayer, a_norm, x, activation: str = "relu") -> Tensor:
    x = ad.as_tensor(x)
    if x.cols != layer.weight.rows:
        raise ShapeError(f"GCN expects {layer.weight.rows} input features, got {x.cols}")
    out = ad.matmul(ad.matmul(a_norm, x), layer.weight)
    if activation == "relu":
        return ad.relu(out)
    if activation == "none":
        return out
    raise ValueError(f"unknown activation {activation!r}")


@dataclass
class PoolResult:
    adj: np.ndarray
    x: Tensor
    indices: np.ndarray
    scores: np.ndarray


def top_k_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores, ties to the lower index, sorted ascending."""
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


class PoolLayer:
    """Graph pooling by scalar projection onto a trainable vector.

    Node ranking is a hard selection; gradients reach the projection vector
    only through the sigmoid gates of the kept nodes.
    """

    def __init__(self, projection: Tensor, keep: int):
        self.projection = projection
        self.keep = keep

    @classmethod
    def init(cls, rng, n_features: int, keep: int) -> "PoolLayer":
        return cls(Tensor(uniform_init(rng, n_features, 1), requires_grad=True), keep)

    def __call__(self, adj: np.ndarray, x: Tensor) -> PoolResult:
        return pool_forward(self, adj, x)


def pool_forward(layer: PoolLayer, adj, x) -> PoolResult:
    x = ad.as_tensor(x)
    adj = np.asarray(adj, dtype=np.float64)
    n = x.rows
    if not 1 <= layer.keep <= n:
        raise ShapeError(f"cannot keep {layer.keep} of {n} nodes")
    if np.linalg.norm(layer.projection.value) < 1e-12:
        raise DegenerateProjection("pooling projection vector has (near) zero norm")
    scores = ad.matmul(x, ad.unit(layer.projection))
    indices = top_k_indices(scores.value[:, 0], layer.keep)
    gates = ad.sigmoid(ad.take_rows(scores, indices))
    pooled = ad.scale_rows(ad.take_rows(x, indices), gates)
    return PoolResult(adj[np.ix_(indices, indices)], pooled, indices, scores.value[:, 0].copy())


@dataclass
class UnpoolLayer:
    indices: np.ndarray
    n_nodes: int

    def __call__(self, x_small) -> Tensor:
        return unpool_forward(self, x_small)


def unpool_forward(layer: UnpoolLayer, x_small) -> Tensor:
    return ad.scatter_rows(x_small, layer.indices, layer.n_nodes)


class GSRLayer:
    """Spectral super-resolution: ``A = sym(W S_d U0^T Z)``, ``X = sym(A A^T)``."""

    def __init__(self, weight: Tensor):
        self.weight = weight

    @classmethod
    def init(cls, rng, size: int) -> "GSRLayer":
        return cls(Tensor(uniform_init(rng, size, size), requires_grad=True))

    def __call__(self, z, u0, s_d):
        return gsr_forward(self, z, u0, s_d)


def gsr_forward(layer: GSRLayer, z, u0, s_d) -> tuple[Tensor, Tensor]:
    z = ad.as_tensor(z)
    u0 = np.asarray(u0, dtype=np.float64)
    s_d = np.asarray(s_d, dtype=np.float64)
    size = layer.weight.rows
    if s_d.shape != (size, u0.shape[0]) or z.shape != (u0.shape[0], size):
        raise ShapeError(
            f"GSR shapes inconsistent: W {layer.weight.shape}, S_d {s_d.shape}, "
            f"U0 {u0.shape}, Z {z.shape}")
    lifted = ad.matmul(s_d @ u0.T, z)
    a_h = ad.symmetrize(ad.matmul(layer.weight, lifted))
    x_h = ad.symmetrize(ad.matmul(a_h, ad.transpose(a_h)))
    return a_h, x_h


def pooled_sizes(n: int, blocks: int = 2) -> list[int]:
    """Node counts kept by successive halving pools: ``n -> ceil(n/2) -> ...``."""
    sizes = []
    for _ in range(blocks):
        n = -(-n // 2)
        sizes.append(n)
    return sizes


__all__ = [
    "GCNLayer", "PoolLayer", "UnpoolLayer", "GSRLayer", "PoolResult",
    "gcn_forward", "pool_forward", "unpool_forward", "gsr_forward",
    "top_k_indices", "pooled_sizes", "uniform_init",
]
