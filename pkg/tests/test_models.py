import math

import pytest
import torch

from sarcasmkit.encoder import TinyEncoder, Vocabulary
from sarcasmkit.errors import BadCategory, ShapeMismatch
from sarcasmkit.models import (
    ClassifierHead,
    Discriminator,
    GanClassifier,
    Generator,
    SarcasmClassifier,
    discriminator_forward,
    generator_forward,
    model1_forward,
    model2_forward,
    sample_noise,
    taskB_discriminator_forward,
)


def zero_head(in_dim, units):
    head = ClassifierHead(in_dim, in_dim, units).eval()
    with torch.no_grad():
        head.output.weight.zero_()
        head.output.bias.zero_()
    return head


class TestModel1:
    def test_shape(self):
        out = model1_forward(torch.randn(16, 64), ClassifierHead(64, 64, 1).eval())
        assert out.logits.shape == (16, 1)

    def test_zero_head_gives_half(self):
        out = model1_forward(torch.randn(5, 64), zero_head(64, 1))
        assert torch.equal(out.probabilities, torch.full((5, 1), 0.5))
        assert out.predictions.tolist() == [1] * 5

    def test_wrong_width(self):
        with pytest.raises(ShapeMismatch):
            model1_forward(torch.randn(2, 64), ClassifierHead(64, 64, 2))
        with pytest.raises(ShapeMismatch):
            model1_forward(torch.randn(2, 32), ClassifierHead(64, 64, 1))


class TestModel2:
    def _head_with_bias(self, bias):
        head = zero_head(4, 2).double()
        with torch.no_grad():
            head.output.bias.copy_(torch.tensor(bias, dtype=torch.float64))
        return head

    def test_equal_logits(self):
        out = model2_forward(torch.randn(3, 4).double(), self._head_with_bias([0.7, 0.7]))
        assert torch.allclose(out.probabilities, torch.full((3, 2), 0.5, dtype=torch.float64))

    def test_ln3(self):
        out = model2_forward(torch.randn(1, 4).double(), self._head_with_bias([0.0, math.log(3)]))
        assert out.probabilities[0].tolist() == pytest.approx([0.25, 0.75], abs=1e-12)
        assert out.predictions.tolist() == [1]

    def test_shift_invariance(self):
        head = ClassifierHead(4, 4, 2).eval()
        x = torch.randn(20, 4)
        before = model2_forward(x, head)
        with torch.no_grad():
            head.output.bias += 5.0
        after = model2_forward(x, head)
        assert torch.equal(before.predictions, after.predictions)
        assert torch.allclose(before.probabilities, after.probabilities, atol=1e-6)


class TestNoise:
    def test_seeded(self):
        assert torch.equal(sample_noise(4, 100, seed=0), sample_noise(4, 100, seed=0))
        assert sample_noise(4, 100, seed=0).shape == (4, 100)

    def test_mean_near_zero(self):
        assert abs(sample_noise(1000, 100, seed=1).mean(dim=1).mean().item()) < 0.15

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_noise(0)


class TestGenerator:
    def test_shape(self):
        gen = Generator(64, 2).eval()
        assert generator_forward(sample_noise(8, seed=0), 1, gen).shape == (8, 64)

    def test_eval_deterministic(self):
        gen = Generator(64, 2).eval()
        z = sample_noise(8, seed=0)
        assert torch.equal(gen(z, 0), gen(z, 0))

    def test_zero_output_layer(self):
        gen = Generator(64, 2).eval()
        with torch.no_grad():
            gen.output.weight.zero_()
            gen.output.bias.zero_()
        assert not gen(sample_noise(3, seed=0), 1).any()

    def test_conditioning_path_is_live(self):
        gen = Generator(64, 2).eval()
        gen(sample_noise(4, seed=0), torch.tensor([0, 1, 0, 1])).sum().backward()
        assert gen.category.weight.grad.abs().sum() > 0

    def test_bad_category(self):
        gen = Generator(64, 2)
        with pytest.raises(BadCategory):
            gen(sample_noise(2, seed=0), 2)
        with pytest.raises(BadCategory):
            gen(sample_noise(2, seed=0), torch.tensor([0, -1]))


class TestDiscriminator:
    def test_k_plus_one(self):
        disc = Discriminator(64, 2).eval()
        assert discriminator_forward(torch.randn(5, 64), disc).shape == (5, 3)

    def test_equal_logits_fake_third(self):
        disc = Discriminator(8, 2).eval()
        with torch.no_grad():
            disc.output.weight.zero_()
            disc.output.bias.zero_()
        p = torch.softmax(disc(torch.randn(2, 8)), dim=-1)
        assert p[:, 2].tolist() == pytest.approx([1 / 3, 1 / 3])
        real = p[:, :2] / (1 - p[:, 2:])
        assert real.sum(1).tolist() == pytest.approx([1.0, 1.0])

    def test_task_b_split(self):
        disc = Discriminator(8, 6, multilabel=True).eval()
        cats, fake = taskB_discriminator_forward(torch.randn(4, 8), disc)
        assert cats.shape == (4, 6) and fake.shape == (4, 1)

    def test_task_b_zero_and_saturated(self):
        disc = Discriminator(8, 6, multilabel=True).eval()
        with torch.no_grad():
            disc.output.weight.zero_()
            disc.output.bias.zero_()
        cats, _ = taskB_discriminator_forward(torch.randn(4, 8), disc)
        assert torch.equal(torch.sigmoid(cats), torch.full((4, 6), 0.5))
        with torch.no_grad():
            disc.output.bias[:6] = 1e4
        cats, _ = taskB_discriminator_forward(torch.randn(4, 8), disc)
        assert bool((torch.sigmoid(cats) >= 0.5).all())

    def test_width_check(self):
        with pytest.raises(ShapeMismatch):
            Discriminator(8, 2)(torch.randn(2, 6))


class TestComposite:
    @pytest.fixture
    def encoder(self):
        vocab = Vocabulary.build(["a b c", "d e"])
        return TinyEncoder(vocab, dim=8, heads=2, max_len=16)

    def test_classifier_kinds(self, encoder):
        batch = encoder.tokenize(["a b", "e"], pad_to_max=False)
        assert SarcasmClassifier(encoder, "m1").eval()(batch).logits.shape == (2, 1)
        assert SarcasmClassifier(encoder, "m2").eval()(batch).logits.shape == (2, 2)
        with pytest.raises(ValueError):
            SarcasmClassifier(encoder, "m3")

    def test_gan_widths(self, encoder):
        model = GanClassifier(encoder).eval()
        assert model.generator.out_dim == model.discriminator.in_dim == 16
        batch = encoder.tokenize(["a b"], pad_to_max=False)
        out = model(batch)
        assert out.logits.shape == (1, 2)
        assert out.probabilities.sum().item() == pytest.approx(1.0)

    def test_gan_real_parameters_exclude_generator(self, encoder):
        model = GanClassifier(encoder)
        gen = {id(p) for p in model.generator.parameters()}
        real = model.real_parameters()
        assert not any(id(p) in gen for p in real)
        assert len(real) + len(gen) == len(list(model.parameters()))

    def test_gan_task_b(self, encoder):
        model = GanClassifier(encoder, num_real=6, multilabel=True).eval()
        out = model(encoder.tokenize(["a", "b c"], pad_to_max=False))
        assert out.logits.shape == (2, 6)
        assert bool(((out.probabilities > 0) & (out.probabilities < 1)).all())
