"""scikit-learn style estimator wrapping the training loop."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from . import checkpoint
from .exceptions import ShapeError
from .training import TrainConfig, prepare_samples, train


def check_graph_batch(X, name: str = "X", atol: float = 1e-9) -> np.ndarray:
    """Validate a stack of adjacency matrices, shape ``(n_samples, n, n)``.

    Accepts a single ``(n, n)`` matrix as a batch of one. Matrices that are
    asymmetric by at most ``atol`` are symmetrized; larger asymmetry raises.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ShapeError(f"{name} must have shape (n_samples, n, n), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    asym = np.max(np.abs(arr - arr.transpose(0, 2, 1)))
    if asym > atol:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    return (arr + arr.transpose(0, 2, 1)) / 2


class AGSRNet(RegressorMixin, BaseEstimator):
    """Adversarial graph super-resolution regressor.

    Learns a map from LR adjacency matrices ``(n, n)`` to HR adjacency
    matrices ``(n_h, n_h)``.

    Parameters
    ----------
    variant : str
        One of ``gsr-layer``, ``deep-gsr``, ``gsr-ae``, ``gsr-net``, ``agsr-net``.
    k : int or None
        Super-resolution factor; ``None`` picks the smallest ``k`` with
        ``n * k >= n_h``.
    epochs : int
        Passes over the training pairs.
    lr_g, lr_d : float
        Adam learning rates of the generator and discriminator.
    lam : float
        Weight of the self-reconstruction term.
    disc_hidden : int
        Width of the discriminator hidden layer.
    random_state : int
        Seed for initialization and per-epoch shuffling.
    """

    def __init__(self, variant="agsr-net", k=None, epochs=200, lr_g=1e-4, lr_d=1e-4,
                 lam=0.1, disc_hidden=256, random_state=0):
        self.variant = variant
        self.k = k
        self.epochs = epochs
        self.lr_g = lr_g
        self.lr_d = lr_d
        self.lam = lam
        self.disc_hidden = disc_hidden
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, lr_g=self.lr_g, lr_d=self.lr_d, lam=self.lam,
                           k=self.k, seed=self.random_state, variant=self.variant,
                           disc_hidden=self.disc_hidden)

    def fit(self, X, y):
        """Train on LR graphs ``X`` and their HR counterparts ``y``.

        Returns
        -------
        self : AGSRNet
        """
        X = check_graph_batch(X, "X")
        y = check_graph_batch(y, "y")
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} samples but y has {y.shape[0]}")
        self._set_state(train(self._config(), zip(X, y)))
        return self

    def _set_state(self, state):
        self.state_ = state
        self.generator_ = state.generator
        self.discriminator_ = state.discriminator
        self.history_ = state.history
        self.n_lr_ = state.generator.n_lr
        self.n_hr_ = state.generator.n_hr
        self.k_ = state.generator.k

    def _check_fitted(self):
        if not hasattr(self, "state_"):
            raise NotFittedError("AGSRNet is not fitted yet; call fit first")

    def predict(self, X) -> np.ndarray:
        """Predicted HR adjacency matrices, shape ``(n_samples, n_h, n_h)``."""
        self._check_fitted()
        X = check_graph_batch(X, "X")
        if X.shape[1] != self.n_lr_:
            raise ShapeError(f"model expects {self.n_lr_}-node graphs, got {X.shape[1]}")
        samples = prepare_samples(((x, None) for x in X), self.k_)
        return np.stack([self.generator_.predict(s) for s in samples])

    def score(self, X, y, sample_weight=None) -> float:
        """Negative mean squared error (higher is better)."""
        y = check_graph_batch(y, "y")
        err = ((self.predict(X) - y) ** 2).mean(axis=(1, 2))
        return -float(np.average(err, weights=sample_weight))

    def save(self, path) -> None:
        self._check_fitted()
        checkpoint.save_checkpoint(self.state_, path)

    @classmethod
    def load(cls, path) -> "AGSRNet":
        state = checkpoint.load_checkpoint(path)
        cfg = state.config
        est = cls(variant=cfg.variant, k=cfg.k, epochs=cfg.epochs, lr_g=cfg.lr_g, lr_d=cfg.lr_d,
                  lam=cfg.lam, disc_hidden=cfg.disc_hidden, random_state=cfg.seed)
        est._set_state(state)
        return est


__all__ = ["AGSRNet", "check_graph_batch"]
