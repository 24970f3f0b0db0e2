"""Adam, the alternating generator/discriminator loop, and training runs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import autodiff as ad
from . import model as m
from .exceptions import ConfigError, NumericalError

log = logging.getLogger(__name__)


class Adam:
    """Adam with bias correction over a name -> Tensor parameter dict."""

    def __init__(self, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ConfigError("learning rate must be positive")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict) -> None:
        grads = {}
        for name, p in params.items():
            g = p.grad if p.grad is not None else np.zeros(p.shape)
            if not np.all(np.isfinite(g)):
                raise NumericalError(f"non-finite gradient for {name}")
            grads[name] = g
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros(p.shape)
                self.v[name] = np.zeros(p.shape)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    epochs: int = 200
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    lam: float = 0.1
    k: int | None = None
    seed: int = 0
    variant: str = "agsr-net"
    adversarial: bool | None = None
    disc_hidden: int = 256

    def __post_init__(self):
        m.check_variant(self.variant)
        if self.adversarial is None:
            self.adversarial = self.variant in m.ADVERSARIAL_VARIANTS
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ConfigError("learning rates must be positive")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if self.k is not None and self.k < 1:
            raise ConfigError("K must be at least 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")


HISTORY_COLUMNS = ("epoch", "loss_g", "loss_hr", "loss_eig", "loss_rec", "loss_d", "loss_g_adv")


@dataclass
class EpochMetrics:
    epoch: int
    loss_g: float
    loss_hr: float
    loss_eig: float
    loss_rec: float
    loss_d: float = math.nan
    loss_g_adv: float = math.nan

    def as_row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


@dataclass
class TrainState:
    config: TrainConfig
    generator: m.Generator
    discriminator: m.Discriminator | None
    opt_g: Adam
    opt_d: Adam | None
    epoch: int = 0
    history: list = field(default_factory=list)


def init_state(config: TrainConfig, n_lr: int, n_hr: int) -> TrainState:
    k = config.k if config.k is not None else m.default_factor(n_lr, n_hr)
    config.k = k
    rng = np.random.default_rng(config.seed)
    gen = m.Generator(n_lr, n_hr, k, config.variant, rng)
    disc = opt_d = None
    if config.adversarial:
        disc = m.Discriminator(n_hr, config.disc_hidden, rng)
        opt_d = Adam(config.lr_d)
    return TrainState(config, gen, disc, Adam(config.lr_g), opt_d)


def prepare_samples(pairs, k: int) -> list:
    """Spectral targets for every ``(lr, hr)`` pair, computed once up front."""
    return [m.prepare_sample(lr, hr, k=k) for lr, hr in pairs]


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    # seeded per epoch so a resumed run replays the same order
    return np.random.default_rng([seed, epoch]).permutation(n)


def discriminator_step(state: TrainState, sample: m.SampleTargets) -> float:
    disc, gen = state.discriminator, state.generator
    fake = gen.forward(sample).z_h.detach()
    disc.zero_grad()
    loss = m.loss_d(disc.forward(sample.hr), disc.forward(fake))
    ad.backward(loss)
    state.opt_d.step(disc.params)
    disc.zero_grad()
    return loss.item()


def generator_step(state: TrainState, sample: m.SampleTargets):
    gen, disc = state.generator, state.discriminator
    gen.zero_grad()
    out = gen.forward(sample)
    terms = m.loss_g(gen, out, sample, state.config.lam)
    total = terms.total
    adv = math.nan
    if state.config.adversarial:
        adv_term = m.loss_g_adv(disc.forward(out.z_h))
        adv = adv_term.item()
        total = ad.add(total, adv_term)
    ad.backward(total)
    state.opt_g.step(gen.params)
    gen.zero_grad()
    if disc is not None:
        disc.zero_grad()
    return terms, adv


def train_epoch(state: TrainState, samples: list) -> EpochMetrics:
    """One pass over ``samples``: a discriminator step then a generator step each."""
    if not samples:
        raise ConfigError("cannot train on an empty dataset")
    sums = dict.fromkeys(("g", "hr", "eig", "rec", "d", "adv"), 0.0)
    for count, idx in enumerate(epoch_order(state.config.seed, state.epoch, len(samples)), 1):
        sample = samples[idx]
        try:
            if state.config.adversarial:
                sums["d"] += discriminator_step(state, sample)
            terms, adv = generator_step(state, sample)
        except NumericalError as exc:
            raise NumericalError(
                f"epoch {state.epoch + 1}, sample {idx} (step {count}): {exc}") from exc
        sums["g"] += terms.total.item()
        sums["hr"] += terms.hr
        sums["eig"] += terms.eig
        sums["rec"] += terms.rec
        sums["adv"] += 0.0 if math.isnan(adv) else adv
    n = len(samples)
    state.epoch += 1
    adversarial = state.config.adversarial
    metrics = EpochMetrics(
        state.epoch, sums["g"] / n, sums["hr"] / n, sums["eig"] / n, sums["rec"] / n,
        sums["d"] / n if adversarial else math.nan,
        sums["adv"] / n if adversarial else math.nan)
    state.history.append(metrics)
    return metrics


def train(config: TrainConfig, pairs, *, state: TrainState | None = None,
          samples: list | None = None) -> TrainState:
    """Train until ``config.epochs`` epochs have run in total.

    ``pairs`` is a sequence of ``(lr_adjacency, hr_adjacency)``. Passing a
    ``state`` (e.g. from a checkpoint) resumes it instead of initializing.
    """
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("cannot train on an empty dataset")
    n_lr, n_hr = pairs[0][0].shape[0], pairs[0][1].shape[0]
    for lr, hr in pairs:
        if lr.shape != (n_lr, n_lr) or hr.shape != (n_hr, n_hr):
            raise ConfigError("all samples must share the same LR and HR node counts")
    if state is None:
        state = init_state(config, n_lr, n_hr)
    elif (state.generator.n_lr, state.generator.n_hr) != (n_lr, n_hr):
        raise ConfigError("checkpoint node counts do not match the dataset")
    if samples is None:
        samples = prepare_samples(pairs, state.generator.k)
    while state.epoch < config.epochs:
        metrics = train_epoch(state, samples)
        log.info("epoch %d: loss_g=%.6f loss_hr=%.6f", metrics.epoch, metrics.loss_g, metrics.loss_hr)
    return state


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(HISTORY_COLUMNS) + "\n")
        for row in history:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row.as_row()) + "\n")
