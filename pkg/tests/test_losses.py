import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sarcasmkit import losses
from sarcasmkit.losses import BatchStats, LossConfig, class_weights
from suites import gradient_errors, loss_oracle_errors, multilabel_oracle_errors

LN2 = math.log(2)
f64 = torch.float64


def t(x):
    return torch.tensor(x, dtype=f64)


class TestClassWeights:
    def test_quarter_positive(self):
        pos, neg = class_weights(BatchStats(16, 4, 12))
        assert pos == pytest.approx(3.0, rel=1e-8)
        assert neg == pytest.approx(4 / 12, rel=1e-8)

    def test_exact_without_epsilon_effect(self):
        pos, _ = class_weights(BatchStats(16, 4, 12), epsilon=1e-300)
        assert pos == 3.0

    def test_zero_positives_hit_cap(self):
        pos, neg = class_weights(BatchStats(16, 0, 16))
        assert pos == 16.0
        assert neg == pytest.approx(0.0)

    def test_explicit_cap(self):
        assert class_weights(BatchStats(16, 0, 16), cap=5.0)[0] == 5.0

    def test_matches_oracle(self):
        for n in range(1, 20):
            for p in range(n + 1):
                got = class_weights(BatchStats(n, p, n - p))
                ref = oracles.weights(n, p, 1e-8)
                assert got == pytest.approx(tuple(float(r) for r in ref), rel=1e-12, abs=1e-12)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            class_weights(BatchStats(0, 0, 0))


class TestExamples:
    def test_bce_zero_logit(self):
        assert losses.bce(t([0.0]), t([1.0])).item() == pytest.approx(LN2, abs=1e-12)

    def test_bce_confident(self):
        assert losses.bce(t([10.0]), t([1.0])).item() == pytest.approx(math.log1p(math.exp(-10)), rel=1e-10)
        assert losses.bce(t([10.0]), t([1.0])).item() == pytest.approx(4.54e-5, rel=1e-3)

    def test_bce_duplicate_batch(self):
        l, y = t([0.3, -2.0, 4.0]), t([1.0, 0, 1])
        assert losses.bce(l.repeat(2), y.repeat(2)).item() == pytest.approx(losses.bce(l, y).item(), abs=1e-15)

    def test_wbce_single_positive(self):
        assert losses.weighted_bce(t([0.0]), t([1.0]), pos_weight=3.0).item() == pytest.approx(3 * LN2, abs=1e-12)

    def test_wbce_pos_and_neg(self):
        got = losses.weighted_bce(t([0.0, 0.0]), t([1.0, 0.0]), pos_weight=3.0).item()
        assert got == pytest.approx(2 * LN2, abs=1e-12)

    def test_focal_easy_positive(self):
        logit = math.log(0.9 / 0.1)
        got = losses.binary_focal(t([logit]), t([1.0]), LossConfig("bfl")).item()
        assert got == pytest.approx(0.2 * 0.01 * -math.log(0.9), rel=1e-9)
        assert got == pytest.approx(2.107e-4, rel=1e-3)

    def test_focal_limit(self):
        assert losses.binary_focal(t([40.0]), t([1.0])).item() < 1e-30

    def test_ce_equal_logits(self):
        for y in (0, 1):
            assert losses.ce(t([[1.5, 1.5]]), torch.tensor([y])).item() == pytest.approx(LN2, abs=1e-12)

    def test_ce_ln3(self):
        got = losses.ce(t([[0.0, math.log(3)]]), torch.tensor([1])).item()
        assert got == pytest.approx(-math.log(0.75), abs=1e-12)

    def test_multilabel_uniform(self):
        assert losses.multilabel_loss(torch.zeros(3, 6, dtype=f64), torch.zeros(3, 6, dtype=f64)).item() == pytest.approx(LN2, abs=1e-12)

    def test_discriminator_symmetric(self):
        # p_fake = 0.5 everywhere: real-class logits sum to the fake mass
        row = [0.0, 0.0, math.log(2)]
        real, fake = t([row, row]), t([row])
        _, log_not_fake = losses.fake_log_probs(real)
        assert math.exp(log_not_fake[0].item()) == pytest.approx(0.5)
        total = losses.discriminator_loss(real, torch.tensor([0, 1]), fake).item()
        assert total - LN2 == pytest.approx(2 * LN2, abs=1e-12)

    def test_discriminator_supervised_term(self):
        real = t([[0.0, 0.0, 0.0]])
        total = losses.discriminator_loss(real, torch.tensor([0]), real).item()
        unsup = -math.log(2 / 3) - math.log(1 / 3)
        assert total - unsup == pytest.approx(LN2, abs=1e-12)

    def test_discriminator_perfect_detection(self):
        real = t([[30.0, 0.0, -30.0]])
        fake = t([[-30.0, -30.0, 30.0]])
        assert losses.discriminator_loss(real, torch.tensor([0]), fake).item() < 1e-10

    def test_generator_examples(self):
        row = t([[0.0, 0.0, math.log(2)]])
        same = t([[1.0, 2.0]])
        assert losses.generator_loss(row, same, same).item() == pytest.approx(LN2, abs=1e-12)
        assert losses.feature_matching(t([[1.0, 0.0]]), t([[0.0, 1.0]])).item() == 2.0


logit_batches = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-20, 20), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


class TestReductions:
    @settings(max_examples=100, deadline=None)
    @given(logit_batches)
    def test_focal_gamma_zero_is_scaled_bce(self, batch):
        l, y = t(batch[0]), t(batch[1])
        cfg = LossConfig("bfl", gamma=0.0, alpha_neg=0.5)
        assert losses.binary_focal(l, y, cfg).item() == pytest.approx(0.5 * losses.bce(l, y).item(), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(logit_batches)
    def test_two_class_focal_gamma_zero_is_scaled_ce(self, batch):
        l = torch.stack([t(batch[0]), -t(batch[0]) / 2], dim=1)
        y = torch.tensor(batch[1])
        cfg = LossConfig("fl", gamma=0.0, alpha_neg=0.5)
        assert losses.focal(l, y, cfg).item() == pytest.approx(0.5 * losses.ce(l, y).item(), abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(logit_batches)
    def test_unit_weights(self, batch):
        l, y = t(batch[0]), t(batch[1])
        assert losses.weighted_bce(l, y, pos_weight=1.0).item() == pytest.approx(losses.bce(l, y).item(), abs=1e-9)
        l2 = torch.stack([t(batch[0]), torch.zeros(len(batch[0]), dtype=f64)], dim=1)
        y2 = torch.tensor(batch[1])
        assert losses.weighted_ce(l2, y2, weights=(1.0, 1.0)).item() == pytest.approx(losses.ce(l2, y2).item(), abs=1e-9)

    def test_multilabel_wbce_with_unit_weights(self):
        # half positives in each column of a 2-row batch gives pos_weight 1
        l = torch.randn(2, 6, dtype=f64)
        y = t([[1] * 6, [0] * 6])
        a = losses.multilabel_loss(l, y, LossConfig("wbce")).item()
        b = losses.multilabel_loss(l, y, LossConfig("bce")).item()
        assert a == pytest.approx(b, abs=1e-7)

    @settings(max_examples=100, deadline=None)
    @given(logit_batches)
    def test_nonnegative_and_finite(self, batch):
        l, y = t(batch[0]), t(batch[1])
        l2 = torch.stack([l, -l], dim=1)
        y2 = torch.tensor(batch[1])
        for value in (losses.bce(l, y), losses.weighted_bce(l, y), losses.binary_focal(l, y), losses.ce(l2, y2), losses.weighted_ce(l2, y2), losses.focal(l2, y2)):
            assert math.isfinite(value.item()) and value.item() >= 0


def test_focal_monotone_in_target_probability():
    p = torch.linspace(0.01, 0.99, 99, dtype=f64)
    logits = torch.stack([torch.zeros_like(p), torch.log(p / (1 - p))], dim=1)
    per = [losses.focal(logits[i : i + 1], torch.tensor([1])).item() for i in range(len(p))]
    assert all(a > b for a, b in zip(per, per[1:]))


def test_supervised_dispatch_follows_width():
    y = torch.tensor([1, 0])
    two = t([[0.0, 1.0], [2.0, -1.0]])
    assert losses.supervised_loss(two, y, LossConfig("bce")).item() == pytest.approx(losses.ce(two, y).item())
    one = t([[0.5], [-0.5]])
    assert losses.supervised_loss(one, y, LossConfig("fl")).item() == pytest.approx(losses.binary_focal(one, y).item())


def test_shape_mismatch():
    from sarcasmkit.errors import ShapeMismatch

    with pytest.raises(ShapeMismatch):
        losses.bce(t([0.0, 1.0]), t([1.0]))
    with pytest.raises(ShapeMismatch):
        losses.multilabel_loss(torch.zeros(2, 6), torch.zeros(2, 5))


def test_config_validation():
    assert LossConfig().alpha_pos == pytest.approx(0.2)
    with pytest.raises(ValueError):
        LossConfig("mse")
    with pytest.raises(ValueError):
        LossConfig(gamma=float("inf"))
    assert LossConfig("wce").binary().kind == "wbce"
    assert LossConfig("bfl").multiclass().kind == "fl"


def test_oracle_agreement_sample():
    for name, err in loss_oracle_errors(instances=100, seed=1).items():
        assert err < 1e-6, name
    for kind, err in multilabel_oracle_errors(instances=100, seed=1).items():
        assert err < 1e-6, kind


def test_loss_gradients_match_finite_differences():
    for name, err in gradient_errors(seed=3).items():
        assert err < 1e-4, name
