import math

import numpy as np
import pytest

from agsr.autodiff import grad_check
from agsr.exceptions import ConfigError, ShapeError
from agsr.graph import eigendecompose, graph_laplacian, pad_isotropic
from agsr.model import (ADVERSARIAL_VARIANTS, DISCRIMINATOR_PARAMS, GENERATOR_PARAMS, VARIANTS,
                        Discriminator, Generator, default_factor, loss_d, loss_eig, loss_g,
                        loss_g_adv, loss_hr, loss_rec, prepare_sample)

from conftest import pool_margins, random_graph, unit_scale_instance


def make(variant="agsr-net", n=4, n_h=6, k=2, seed=0):
    rng = np.random.default_rng(seed)
    gen = Generator(n, n_h, k, variant, rng)
    sample = prepare_sample(random_graph(rng, n), random_graph(rng, n_h), k=k)
    return gen, sample


class TestGenerator:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_shapes(self, variant):
        gen, sample = make(variant)
        out = gen.forward(sample)
        assert out.z_h.shape == (6, 6)
        assert out.z_h_padded.shape == (8, 8)
        assert out.a_h_tilde.shape == out.x_h_tilde.shape == (8, 8)
        np.testing.assert_array_equal(out.z_h.value, out.z_h.value.T)
        assert tuple(gen.params) == GENERATOR_PARAMS[variant]

    def test_large_scale_shapes(self):
        gen = Generator(160, 268, 2, "agsr-net")
        assert gen.params["gsr.w"].shape == (320, 320)
        assert gen.params["gcn0.w"].shape == (160, 320)

    def test_u_autoencoder_shapes(self):
        out = make()[0].forward(make()[1])
        assert out.z0.shape == out.z_l.shape == (4, 8)

    def test_zero_weights_give_zero_output(self):
        gen, sample = make()
        for p in gen.params.values():
            p.value[:] = 0.0
        # the pooling vectors must stay non-degenerate
        gen.params["enc1.u"].value[:] = 1.0
        gen.params["enc2.u"].value[:] = 1.0
        np.testing.assert_array_equal(gen.forward(sample).z_h.value, np.zeros((6, 6)))

    def test_deterministic(self):
        gen, sample = make()
        assert gen.predict(sample).tobytes() == gen.predict(sample).tobytes()

    def test_seeded_init(self):
        a, b = make(seed=3)[0], make(seed=3)[0]
        for name in a.params:
            assert a.params[name].value.tobytes() == b.params[name].value.tobytes()

    def test_init_range(self):
        gen = Generator(20, 34, 2, "agsr-net", np.random.default_rng(0))
        for name, p in gen.params.items():
            bound = math.sqrt(1.0 / p.rows)
            assert np.all(np.abs(p.value) <= bound), name

    @pytest.mark.parametrize("n, n_h, k", [(4, 9, 2), (6, 6, 2), (6, 5, 1), (0, 4, 2)])
    def test_config_errors(self, n, n_h, k):
        with pytest.raises(ConfigError):
            Generator(n, n_h, k)

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            Generator(4, 6, 2, "gan")

    def test_wrong_input_size(self):
        gen, _ = make()
        with pytest.raises(ShapeError):
            gen.forward(prepare_sample(random_graph(np.random.default_rng(0), 5), k=2))

    @pytest.mark.parametrize("seed", range(5))
    def test_symmetric_for_any_params(self, seed):
        gen, sample = unit_scale_instance("agsr-net", seed)
        z = gen.forward(sample).z_h.value
        assert np.max(np.abs(z - z.T)) <= 1e-9


class TestPrepareSample:
    def test_u1_from_padded_target(self, rng):
        a_h = random_graph(rng, 6)
        s = prepare_sample(random_graph(rng, 4), a_h, k=2)
        expected = eigendecompose(graph_laplacian(pad_isotropic(a_h, 8))).eigenvectors
        np.testing.assert_array_equal(s.u1, expected)
        assert s.u0.shape == (4, 4)

    def test_without_target(self, rng):
        s = prepare_sample(random_graph(rng, 4), k=2)
        assert s.hr is None and s.u1 is None


@pytest.mark.parametrize("n, n_h, k", [(20, 34, 2), (160, 268, 2), (160, 400, 3), (4, 6, 2)])
def test_default_factor(n, n_h, k):
    assert default_factor(n, n_h) == k


class TestDiscriminator:
    def test_zero_weights(self):
        d = Discriminator(3, hidden=4)
        for p in d.params.values():
            p.value[:] = 0.0
        assert d.forward(np.ones((3, 3))).item() == 0.5

    def test_bias_monotone(self, rng):
        d = Discriminator(3, hidden=4, rng=rng)
        m = random_graph(rng, 3)
        before = d.forward(m).item()
        d.params["disc.b2"].value += 0.5
        assert d.forward(m).item() > before

    def test_range_and_names(self, rng):
        d = Discriminator(5, rng=rng)
        assert tuple(d.params) == DISCRIMINATOR_PARAMS
        assert d.params["disc.w1"].shape == (25, 256)
        for _ in range(10):
            p = d.forward(rng.uniform(-5, 5, (5, 5))).item()
            assert 0.0 < p < 1.0

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            Discriminator(3).forward(np.eye(4))

    def test_grad_check(self):
        rng = np.random.default_rng(11)
        d = Discriminator(4, hidden=6, rng=rng)
        for p in d.params.values():
            p.value[:] = rng.uniform(-1, 1, p.shape)
        real, fake = random_graph(rng, 4), random_graph(rng, 4)
        report = grad_check(lambda: loss_d(d.forward(real), d.forward(fake)), list(d.params.values()))
        assert report.passed, report


class TestLosses:
    def test_rec(self):
        z = np.arange(8.0).reshape(2, 4)
        assert loss_rec(z, z).item() == 0
        assert loss_rec(z + 1, z).item() == 4
        assert loss_rec(z + 2, z).item() == 16
        with pytest.raises(ShapeError):
            loss_rec(np.ones((2, 4)), np.ones((2, 3)))

    def test_eig(self, rng):
        u1 = eigendecompose(graph_laplacian(random_graph(rng, 6))).eigenvectors
        assert loss_eig(u1, u1).item() == 0
        assert loss_eig(u1 + 1, u1).item() == pytest.approx(6, rel=1e-12)
        assert loss_eig(np.zeros((6, 6)), u1).item() == pytest.approx(1, rel=1e-12)

    def test_hr(self, rng):
        a = random_graph(rng, 5)
        b = random_graph(rng, 5)
        assert loss_hr(a, a).item() == 0
        assert loss_hr(a + 1, a).item() == pytest.approx(5, rel=1e-12)
        assert loss_hr(a, b).item() == loss_hr(b, a).item()

    def test_d(self):
        eps = 1e-12
        assert loss_d(1 - eps, eps).item() == pytest.approx(0, abs=1e-10)
        assert loss_d(0.5, 0.5).item() == pytest.approx(math.log(2), rel=1e-14)
        assert loss_d(0.5, 1.0).item() == pytest.approx(-0.5 * math.log(0.5) - 0.5 * math.log(1e-12), rel=1e-6)

    def test_g_adv(self):
        assert loss_g_adv(0.5).item() == pytest.approx(math.log(2), rel=1e-14)
        assert loss_g_adv(1 - 1e-12).item() == pytest.approx(0, abs=1e-10)
        vals = [loss_g_adv(p).item() for p in (0.1, 0.3, 0.6, 0.9)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_loss_g_components(self):
        gen, sample = unit_scale_instance("agsr-net", 0)
        out = gen.forward(sample)
        full = loss_g(gen, out, sample, 0.1)
        assert full.total.item() == pytest.approx(full.hr + full.eig + 0.1 * full.rec, rel=1e-14)
        no_rec = loss_g(gen, out, sample, 0.0)
        assert no_rec.total.item() == pytest.approx(full.hr + full.eig, rel=1e-14)
        assert full.total.item() >= 0

    def test_loss_g_zero_at_perfect_prediction(self):
        gen, sample = unit_scale_instance("agsr-net", 0)
        gen.params["gsr.w"].value[:] = sample.u1
        out = gen.forward(sample)
        sample.hr = out.z_h.value  # the prediction itself becomes the target
        res = loss_g(gen, out, sample, 0.0)
        assert res.total.item() == 0.0

    def test_deep_gsr_uses_hr_only(self):
        gen, sample = unit_scale_instance("deep-gsr", 0)
        res = loss_g(gen, gen.forward(sample), sample, 0.1)
        assert res.total.item() == res.hr and res.eig == 0 and res.rec == 0


def test_adversarial_variants():
    assert ADVERSARIAL_VARIANTS == {"gsr-ae", "agsr-net"}


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("seed", [1, 2])
def test_generator_grad_check(variant, seed):
    gen, sample = unit_scale_instance(variant, seed)
    if variant in ("gsr-ae", "gsr-net", "agsr-net"):
        assert min(pool_margins(gen, sample)) > 1e-6
    report = grad_check(lambda: loss_g(gen, gen.forward(sample), sample, 0.1).total,
                        list(gen.params.values()))
    assert report.passed, dict(zip(gen.params, report.per_tensor))
