import numpy as np
import pytest


def random_graph(rng, n, low=-1.0, high=1.0):
    upper = np.triu(rng.uniform(low, high, size=(n, n)), 1)
    return upper + upper.T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pool_margins(gen, sample):
    """Smallest score gap at the keep boundary of every pooling step in one forward."""
    from agsr import layers

    margins = []
    original = layers.pool_forward

    def recorder(layer, adj, x):
        res = original(layer, adj, x)
        s = np.sort(res.scores)[::-1]
        if layer.keep < s.size:
            margins.append(s[layer.keep - 1] - s[layer.keep])
        return res

    layers.pool_forward = recorder
    try:
        gen.forward(sample)
    finally:
        layers.pool_forward = original
    return margins


def unit_scale_instance(variant, seed, n=4, k=2, n_h=6):
    """Small generator with weights drawn from [-1, 1] plus a prepared sample.

    Unit-scale weights keep every intermediate signal well above roundoff so
    central differences are meaningful.
    """
    from agsr.model import Generator, prepare_sample

    rng = np.random.default_rng(seed)
    gen = Generator(n, n_h, k, variant, rng)
    for p in gen.params.values():
        p.value[:] = rng.uniform(-1, 1, p.shape)
    a_h = random_graph(rng, n_h)
    sample = prepare_sample(random_graph(rng, n), a_h, k=k)
    return gen, sample


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
