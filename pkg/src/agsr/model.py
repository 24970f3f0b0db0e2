"""Super-resolution generator, MLP discriminator and the loss terms.

Five generator variants share one class:

``agsr-net``   initial GCN, two-level graph U-autoencoder, GSR layer, two GCNs;
               trained with the adversarial term.
``gsr-net``    the same architecture trained without the discriminator.
``gsr-ae``     ``agsr-net`` without the two GCNs after the GSR layer.
``deep-gsr``   two GCNs, GSR layer, two GCNs, inner-product decoder.
``gsr-layer``  the GSR layer alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import graph
from .autodiff import Tensor
from .exceptions import ConfigError, ShapeError
from .layers import (GCNLayer, GSRLayer, PoolLayer, UnpoolLayer, pooled_sizes,
                     uniform_init)

VARIANTS = ("gsr-layer", "deep-gsr", "gsr-ae", "gsr-net", "agsr-net")
ADVERSARIAL_VARIANTS = frozenset({"gsr-ae", "agsr-net"})

# canonical parameter order; also the checkpoint naming scheme
GENERATOR_PARAMS = {
    "agsr-net": ("gcn0.w", "enc1.u", "enc1.w", "enc2.u", "enc2.w",
                 "dec1.w", "dec2.w", "gsr.w", "post1.w", "post2.w"),
    "gsr-net": ("gcn0.w", "enc1.u", "enc1.w", "enc2.u", "enc2.w",
                "dec1.w", "dec2.w", "gsr.w", "post1.w", "post2.w"),
    "gsr-ae": ("gcn0.w", "enc1.u", "enc1.w", "enc2.u", "enc2.w",
               "dec1.w", "dec2.w", "gsr.w"),
    "deep-gsr": ("pre1.w", "pre2.w", "gsr.w", "post1.w", "post2.w"),
    "gsr-layer": ("gsr.w",),
}
DISCRIMINATOR_PARAMS = ("disc.w1", "disc.b1", "disc.w2", "disc.b2")


def check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    return variant


def default_factor(n_lr: int, n_hr: int) -> int:
    """Smallest integer ``k`` with ``n_lr * k >= n_hr``."""
    return max(1, -(-n_hr // n_lr))


@dataclass
class SampleTargets:
    """Per-sample constants: LR adjacency, its spectrum, and HR targets."""

    a_l: np.ndarray
    a_l_norm: np.ndarray
    u0: np.ndarray
    hr: np.ndarray | None = None
    u1: np.ndarray | None = None


def prepare_sample(a_l, a_h=None, *, k: int) -> SampleTargets:
    """Precompute the eigenvectors and normalization a sample needs.

    ``u1`` comes from the Laplacian of the HR graph padded to ``N*k`` nodes,
    matching the shape of the GSR weight it supervises.
    """
    a_l = np.asarray(a_l, dtype=np.float64)
    u0 = graph.eigendecompose(graph.graph_laplacian(a_l)).eigenvectors
    hr = u1 = None
    if a_h is not None:
        hr = np.asarray(a_h, dtype=np.float64)
        padded = graph.pad_isotropic(hr, a_l.shape[0] * k)
        u1 = graph.eigendecompose(graph.graph_laplacian(padded)).eigenvectors
    return SampleTargets(a_l, graph.normalized_adjacency(a_l), u0, hr, u1)


@dataclass
class GeneratorOutput:
    z0: Tensor | None
    z_l: Tensor | None
    a_h_tilde: Tensor
    x_h_tilde: Tensor
    z_h_padded: Tensor
    z_h: Tensor


class Generator:
    """Super-resolution generator mapping an ``N``-node graph to ``N_h`` nodes."""

    def __init__(self, n_lr: int, n_hr: int, k: int, variant: str = "agsr-net",
                 rng: np.random.Generator | None = None):
        check_variant(variant)
        if n_lr < 1 or k < 1:
            raise ConfigError("node count and factor must be positive")
        if n_lr * k < n_hr:
            raise ConfigError(f"N*K = {n_lr * k} cannot hold an HR graph of {n_hr} nodes")
        if n_hr <= n_lr:
            raise ConfigError(f"HR node count {n_hr} must exceed LR node count {n_lr}")
        self.n_lr, self.n_hr, self.k, self.variant = n_lr, n_hr, k, variant
        self.size = n_lr * k
        self.keep = pooled_sizes(n_lr)
        self.s_d = graph.selection_matrix(n_lr, k)
        rng = np.random.default_rng(0) if rng is None else rng
        self.params = {}
        for name in GENERATOR_PARAMS[variant]:
            rows, cols = self._param_shape(name)
            self.params[name] = Tensor(uniform_init(rng, rows, cols), requires_grad=True)

    def _param_shape(self, name: str) -> tuple[int, int]:
        if name in ("gcn0.w", "pre1.w"):
            return self.n_lr, self.size
        if name.endswith(".u"):
            return self.size, 1
        return self.size, self.size

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def _gcn(self, name: str) -> GCNLayer:
        return GCNLayer(self.params[name])

    def _u_autoencoder(self, sample: SampleTargets) -> tuple[Tensor, Tensor]:
        z0 = self._gcn("gcn0.w")(sample.a_l_norm, np.eye(self.n_lr), "relu")
        pool1 = PoolLayer(self.params["enc1.u"], self.keep[0])(sample.a_l, z0)
        h1 = self._gcn("enc1.w")(graph.normalized_adjacency(pool1.adj), pool1.x, "relu")
        pool2 = PoolLayer(self.params["enc2.u"], self.keep[1])(pool1.adj, h1)
        h2 = self._gcn("enc2.w")(graph.normalized_adjacency(pool2.adj), pool2.x, "relu")
        up1 = UnpoolLayer(pool2.indices, pool1.adj.shape[0])(h2)
        h3 = self._gcn("dec1.w")(graph.normalized_adjacency(pool1.adj), up1, "relu")
        up2 = UnpoolLayer(pool1.indices, self.n_lr)(h3)
        z_l = self._gcn("dec2.w")(sample.a_l_norm, up2, "relu")
        return z0, z_l

    def _finish(self, z_h_padded: Tensor) -> Tensor:
        lo = graph.padding_border(self.size, self.n_hr)
        hi = lo + self.n_hr
        return ad.symmetrize(ad.block(z_h_padded, lo, hi, lo, hi))

    def forward(self, sample: SampleTargets) -> GeneratorOutput:
        if sample.a_l.shape != (self.n_lr, self.n_lr):
            raise ShapeError(f"expected a {self.n_lr}-node LR graph, got {sample.a_l.shape}")
        gsr = GSRLayer(self.params["gsr.w"])
        z0 = z_l = None
        if self.variant == "gsr-layer":
            features = sample.a_l @ self.s_d.T
            a_h, x_h = gsr(features, sample.u0, self.s_d)
            z_h_padded = a_h
        elif self.variant == "deep-gsr":
            h = self._gcn("pre1.w")(sample.a_l_norm, np.eye(self.n_lr), "relu")
            features = self._gcn("pre2.w")(sample.a_l_norm, h, "relu")
            a_h, x_h = gsr(features, sample.u0, self.s_d)
            a_norm = ad.normalize_adjacency(a_h)
            z = self._gcn("post1.w")(a_norm, x_h, "relu")
            z = self._gcn("post2.w")(a_norm, z, "none")
            z_h_padded = ad.matmul(z, ad.transpose(z))
        else:
            z0, z_l = self._u_autoencoder(sample)
            a_h, x_h = gsr(z_l, sample.u0, self.s_d)
            if self.variant == "gsr-ae":
                z_h_padded = a_h
            else:
                a_norm = ad.normalize_adjacency(a_h)
                z = self._gcn("post1.w")(a_norm, x_h, "relu")
                z_h_padded = self._gcn("post2.w")(a_norm, z, "none")
        return GeneratorOutput(z0, z_l, a_h, x_h, z_h_padded, self._finish(z_h_padded))

    def predict(self, sample: SampleTargets) -> np.ndarray:
        return self.forward(sample).z_h.value.copy()


class Discriminator:
    """Two dense layers (relu hidden) and a sigmoid output over a flattened matrix."""

    def __init__(self, n_hr: int, hidden: int = 256, rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.n_hr, self.hidden = n_hr, hidden
        n_in = n_hr * n_hr
        self.params = {
            "disc.w1": Tensor(uniform_init(rng, n_in, hidden), requires_grad=True),
            "disc.b1": Tensor(np.zeros((1, hidden)), requires_grad=True),
            "disc.w2": Tensor(uniform_init(rng, hidden, 1), requires_grad=True),
            "disc.b2": Tensor(np.zeros((1, 1)), requires_grad=True),
        }

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def forward(self, m) -> Tensor:
        m = ad.as_tensor(m)
        if m.shape != (self.n_hr, self.n_hr):
            raise ShapeError(f"discriminator expects {self.n_hr}x{self.n_hr}, got {m.shape}")
        p = self.params
        hidden = ad.relu(ad.add(ad.matmul(ad.flatten(m), p["disc.w1"]), p["disc.b1"]))
        return ad.sigmoid(ad.add(ad.matmul(hidden, p["disc.w2"]), p["disc.b2"]))


# --- losses -----------------------------------------------------------------

def row_mse(a, b) -> Tensor:
    """``(1/rows) * sum_i ||a_i - b_i||^2``."""
    a, b = ad.as_tensor(a), ad.as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"shapes {a.shape} and {b.shape} differ")
    return ad.scale(ad.mse(a, b), a.cols)


def loss_rec(z0, z_l) -> Tensor:
    return row_mse(z0, z_l)


def loss_eig(w, u1) -> Tensor:
    return row_mse(w, u1)


def loss_hr(z_h, a_h) -> Tensor:
    return row_mse(z_h, a_h)


@dataclass
class GeneratorLoss:
    total: Tensor
    hr: float
    eig: float
    rec: float


def loss_g(gen: Generator, out: GeneratorOutput, sample: SampleTargets, lam: float = 0.1) -> GeneratorLoss:
    """Generator loss for the configured variant.

    Full-architecture variants use ``L_hr + L_eig + lam * L_rec``; ``gsr-layer``
    drops the reconstruction term (there is no autoencoder) and ``deep-gsr``
    uses the row-wise MSE against the target only.
    """
    hr = loss_hr(out.z_h, sample.hr)
    terms = [hr]
    eig_value = rec_value = 0.0
    if gen.variant != "deep-gsr":
        eig = loss_eig(gen.params["gsr.w"], sample.u1)
        eig_value = eig.item()
        terms.append(eig)
    if out.z0 is not None and lam != 0:
        rec = loss_rec(out.z0, out.z_l)
        rec_value = rec.item()
        terms.append(ad.scale(rec, lam))
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return GeneratorLoss(total, hr.item(), eig_value, rec_value)


def loss_d(d_real, d_fake) -> Tensor:
    """``-1/2 log D(real) - 1/2 log(1 - D(fake))`` with clamped logs."""
    d_real, d_fake = ad.as_tensor(d_real), ad.as_tensor(d_fake)
    real_term = ad.log_clamped(d_real)
    fake_term = ad.log_clamped(ad.sub(np.ones(d_fake.shape), d_fake))
    return ad.scale(ad.add(real_term, fake_term), -0.5)


def loss_g_adv(d_fake) -> Tensor:
    """Non-saturating generator term ``-log D(fake)``."""
    return ad.scale(ad.log_clamped(d_fake), -1.0)
