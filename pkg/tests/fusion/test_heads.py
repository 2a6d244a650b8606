"""Tests for the five fusion heads."""

import pytest
import torch

from dualstream.fusion import (
    AttentionFusion,
    ConcatFusion,
    FusionKind,
    GatedFusion,
    HeadsMismatch,
    LateFusion,
    WeightedFusion,
    build_head,
)
from dualstream.tensor import ShapeMismatch, float64_mode, gradcheck_module
from tests.fusion.reference import REFERENCES

DIM = 8
CLASSES = 5


def features(batch: int = 3, dim: int = DIM, seed: int = 0, dtype=torch.float32):
    generator = torch.Generator().manual_seed(seed)
    return (
        torch.randn(batch, dim, generator=generator, dtype=dtype),
        torch.randn(batch, dim, generator=generator, dtype=dtype),
    )


def head(kind: FusionKind, dim: int = DIM, classes: int = CLASSES):
    torch.manual_seed(0)
    return build_head(kind, dim, classes, attention_heads=2).eval()


class TestInterface:
    """Tests shared by every head."""

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_output_shape(self, kind):
        """Test that every head maps (B, d) pairs to (B, C)."""
        h_rgb, h_flow = features()
        assert head(kind)(h_rgb, h_flow).shape == (3, CLASSES)

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_shape_mismatch(self, kind):
        """Test that wrong feature widths raise ShapeMismatch."""
        with pytest.raises(ShapeMismatch):
            head(kind)(torch.zeros(2, DIM), torch.zeros(2, DIM + 1))
        with pytest.raises(ShapeMismatch):
            head(kind)(torch.zeros(2, DIM), torch.zeros(3, DIM))

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_rejects_sequence_features(self, kind):
        """Test that heads take one feature vector per sample, not a sequence."""
        with pytest.raises(ShapeMismatch, match="expects shape"):
            head(kind)(torch.zeros(2, 1, DIM), torch.zeros(2, 1, DIM))

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_gradcheck(self, kind):
        """Test analytic gradients against finite differences in 64-bit."""
        with float64_mode():
            module = head(kind)
            h_rgb, h_flow = (t.requires_grad_(True) for t in features(dtype=torch.float64))
            report = gradcheck_module(
                module, lambda: module(h_rgb, h_flow), extra_inputs=[h_rgb, h_flow]
            )
        assert report.passed, str(report)

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_scalar_reference(self, kind):
        """Test every head against a scalar-loop implementation for d = 4, C = 3."""
        with float64_mode():
            module = head(kind, dim=4, classes=3)
            h_rgb, h_flow = features(batch=2, dim=4, seed=5, dtype=torch.float64)
            with torch.no_grad():
                if kind is FusionKind.WEIGHTED:
                    module.stream_weights.copy_(torch.tensor([0.3, -0.2]))
                output = module(h_rgb, h_flow)
        reference = REFERENCES[kind.value]
        for row in range(2):
            expected = reference(module, h_rgb[row].tolist(), h_flow[row].tolist())
            assert output[row].tolist() == pytest.approx(expected, abs=1e-6)

    def test_build_head_types(self):
        """Test that build_head returns the matching class."""
        expected = {
            FusionKind.LATE: LateFusion,
            FusionKind.CONCAT: ConcatFusion,
            FusionKind.ATTENTION: AttentionFusion,
            FusionKind.WEIGHTED: WeightedFusion,
            FusionKind.GATED: GatedFusion,
        }
        for kind, cls in expected.items():
            assert type(build_head(kind.value, DIM, CLASSES, attention_heads=2)) is cls


class TestLateFusion:
    """Tests for late fusion."""

    def test_probabilities(self):
        """Test that outputs are distributions."""
        out = head(FusionKind.LATE)(*features())
        assert torch.all((out > 0) & (out < 1))
        torch.testing.assert_close(out.sum(-1), torch.ones(3), atol=1e-6, rtol=0)

    def test_identical_streams(self):
        """Test that identical logits give the single softmax."""
        module = head(FusionKind.LATE)
        module.flow_classifier.load_state_dict(module.rgb_classifier.state_dict())
        h, _ = features()
        torch.testing.assert_close(module(h, h), torch.softmax(module.rgb_classifier(h), -1))

    def test_confident_disagreement(self):
        """Test that certain, disagreeing streams split the mass evenly."""
        module = LateFusion(2, 3)
        with torch.no_grad():
            module.rgb_classifier.weight.zero_()
            module.flow_classifier.weight.zero_()
            module.rgb_classifier.bias.copy_(torch.tensor([100.0, 0.0, 0.0]))
            module.flow_classifier.bias.copy_(torch.tensor([0.0, 100.0, 0.0]))
        out = module(torch.zeros(1, 2), torch.zeros(1, 2))
        torch.testing.assert_close(out, torch.tensor([[0.5, 0.5, 0.0]]))

    def test_logit_shift_invariance(self):
        """Test that adding a constant to one stream's logits changes nothing."""
        module = head(FusionKind.LATE)
        h_rgb, h_flow = features()
        before = module(h_rgb, h_flow)
        with torch.no_grad():
            module.rgb_classifier.bias.add_(7.0)
        torch.testing.assert_close(module(h_rgb, h_flow), before)


class TestConcatFusion:
    """Tests for concatenation fusion."""

    def test_zero_first_layer(self):
        """Test that zero W_1 makes the output independent of the inputs."""
        module = head(FusionKind.CONCAT)
        with torch.no_grad():
            module.hidden.weight.zero_()
        a = module(*features(seed=1))
        b = module(*features(seed=2))
        torch.testing.assert_close(a, b)
        expected = module.classifier(torch.relu(module.hidden.bias)).expand(3, -1)
        torch.testing.assert_close(a, expected)

    def test_zero_inputs_zero_biases(self):
        """Test that zero inputs with zero biases give zero logits."""
        module = head(FusionKind.CONCAT)
        with torch.no_grad():
            module.hidden.bias.zero_()
            module.classifier.bias.zero_()
        assert torch.count_nonzero(module(torch.zeros(2, DIM), torch.zeros(2, DIM))) == 0

    def test_dropout_train_only(self):
        """Test that dropout acts in training mode only."""
        module = head(FusionKind.CONCAT)
        h = features()
        torch.testing.assert_close(module(*h), module(*h))
        module.train()
        assert not torch.equal(module(*h), module(*h))


class TestAttentionFusion:
    """Tests for cross-attention fusion."""

    def test_single_key_weights(self):
        """Test that one key gets weight exactly 1 in every head."""
        module = head(FusionKind.ATTENTION)
        _, weights = module.attend(*features())
        assert weights.shape == (3, 2, 1, 1)
        assert torch.all(weights == 1.0)

    def test_zero_output_projection_isolates_flow(self):
        """Test that a zero output projection removes the flow stream's influence."""
        module = head(FusionKind.ATTENTION)
        with torch.no_grad():
            module.attention.out_proj.weight.zero_()
            module.attention.out_proj.bias.zero_()
        h_rgb, h_flow = features()
        torch.testing.assert_close(module.cross_features(h_rgb, h_flow), module.norm(h_rgb))
        torch.testing.assert_close(module(h_rgb, h_flow), module(h_rgb, torch.randn(3, DIM)))

    def test_heads_must_divide(self):
        """Test that d must be divisible by the head count."""
        with pytest.raises(HeadsMismatch):
            AttentionFusion(6, 3, heads=4)


class TestWeightedFusion:
    """Tests for weighted fusion."""

    def test_equal_start(self):
        """Test that the stream weights start at 0.5 each."""
        assert WeightedFusion(DIM, CLASSES).alphas() == (0.5, 0.5)

    def test_convex(self):
        """Test that alphas stay in (0, 1) and sum to one."""
        module = WeightedFusion(DIM, CLASSES)
        with torch.no_grad():
            module.stream_weights.copy_(torch.tensor([2.0, -1.0]))
        a_rgb, a_flow = module.alphas()
        assert 0 < a_flow < a_rgb < 1
        assert a_rgb + a_flow == pytest.approx(1.0, abs=1e-7)

    def test_saturation(self):
        """Test that a dominant RGB weight reduces to classifier(h_rgb)."""
        module = head(FusionKind.WEIGHTED)
        with torch.no_grad():
            module.stream_weights.copy_(torch.tensor([50.0, -50.0]))
        h_rgb, h_flow = features()
        torch.testing.assert_close(module(h_rgb, h_flow), module.classifier(h_rgb))


class TestGatedFusion:
    """Tests for gated fusion."""

    def set_gate(self, module: GatedFusion, bias: float) -> None:
        with torch.no_grad():
            module.gate.weight.zero_()
            module.gate.bias.fill_(bias)

    def test_half_gate(self):
        """Test that a zero gate layer averages the streams."""
        module = head(FusionKind.GATED)
        self.set_gate(module, 0.0)
        h_rgb, h_flow = features()
        torch.testing.assert_close(module.blend(h_rgb, h_flow), 0.5 * (h_rgb + h_flow))

    def test_saturated_gate(self):
        """Test that a large gate bias selects the RGB stream."""
        module = head(FusionKind.GATED)
        self.set_gate(module, 40.0)
        h_rgb, h_flow = features()
        torch.testing.assert_close(module.blend(h_rgb, h_flow), h_rgb)

    def test_blend_between_streams(self):
        """Test that gates lie in (0, 1) and the blend lies between the streams."""
        module = head(FusionKind.GATED)
        h_rgb, h_flow = features()
        gate = module.gate_values(h_rgb, h_flow)
        assert torch.all((gate > 0) & (gate < 1))
        blend = module.blend(h_rgb, h_flow)
        assert torch.all(blend >= torch.minimum(h_rgb, h_flow) - 1e-6)
        assert torch.all(blend <= torch.maximum(h_rgb, h_flow) + 1e-6)


def random_instance(kind: FusionKind, seed: int, max_dim: int, max_classes: int):
    """A freshly initialised float64 head plus a random feature batch drawn from one seed."""
    generator = torch.Generator().manual_seed(seed)
    dim = int(torch.randint(1, max_dim + 1, (1,), generator=generator))
    if kind is FusionKind.ATTENTION:
        heads = max(h for h in (1, 2, 4) if dim % h == 0)
    else:
        heads = 1
    classes = int(torch.randint(2, max_classes + 1, (1,), generator=generator))
    batch = int(torch.randint(1, 6, (1,), generator=generator))
    torch.manual_seed(seed)
    module = build_head(kind, dim, classes, attention_heads=heads).double().eval()
    if kind is FusionKind.WEIGHTED:
        with torch.no_grad():
            module.stream_weights.copy_(torch.randn(2, generator=generator, dtype=torch.float64))
    scale = float(torch.rand(1, generator=generator, dtype=torch.float64)) * 5 + 0.1
    h_rgb = torch.randn(batch, dim, generator=generator, dtype=torch.float64) * scale
    h_flow = torch.randn(batch, dim, generator=generator, dtype=torch.float64) * scale
    return module, h_rgb, h_flow


INVARIANT_INSTANCES = 1000
REFERENCE_INSTANCES = 100


class TestRandomInstances:
    """Algebraic invariants and the scalar reference over many random heads."""

    def test_late_fusion_distribution_and_shift(self):
        """Test that late fusion sums to one and ignores a constant logit shift."""
        for seed in range(INVARIANT_INSTANCES):
            module, h_rgb, h_flow = random_instance(FusionKind.LATE, seed, 16, 6)
            with torch.no_grad():
                out = module(h_rgb, h_flow)
                assert torch.all((out.sum(-1) - 1).abs() <= 1e-6), seed
                module.flow_classifier.bias.add_(float(seed % 7) - 3.0)
                torch.testing.assert_close(module(h_rgb, h_flow), out, atol=1e-9, rtol=0)

    def test_weighted_alphas_convex(self):
        """Test that the learned stream weights always form a convex pair."""
        assert WeightedFusion(DIM, CLASSES).alphas() == (0.5, 0.5)
        for seed in range(INVARIANT_INSTANCES):
            module, _, _ = random_instance(FusionKind.WEIGHTED, seed, 16, 6)
            a_rgb, a_flow = module.alphas()
            assert 0 < a_rgb < 1 and 0 < a_flow < 1
            assert a_rgb + a_flow == pytest.approx(1.0, abs=1e-12), seed

    def test_gated_blend_bounded(self):
        """Test that the gated blend stays between the two streams elementwise."""
        for seed in range(INVARIANT_INSTANCES):
            module, h_rgb, h_flow = random_instance(FusionKind.GATED, seed, 16, 6)
            with torch.no_grad():
                blend = module.blend(h_rgb, h_flow)
            assert torch.all(blend >= torch.minimum(h_rgb, h_flow) - 1e-12), seed
            assert torch.all(blend <= torch.maximum(h_rgb, h_flow) + 1e-12), seed

    def test_attention_without_output_projection(self):
        """Test that a zero output projection leaves LayerNorm(h_rgb)."""
        for seed in range(INVARIANT_INSTANCES):
            module, h_rgb, h_flow = random_instance(FusionKind.ATTENTION, seed, 16, 6)
            with torch.no_grad():
                module.attention.out_proj.weight.zero_()
                module.attention.out_proj.bias.zero_()
                cross = module.cross_features(h_rgb, h_flow)
                torch.testing.assert_close(cross, module.norm(h_rgb), atol=1e-9, rtol=0)

    @pytest.mark.parametrize("kind", list(FusionKind))
    def test_scalar_reference(self, kind):
        """Test every head against the scalar-loop version for d <= 4 and C <= 3."""
        reference = REFERENCES[kind.value]
        for seed in range(REFERENCE_INSTANCES):
            module, h_rgb, h_flow = random_instance(kind, seed, 4, 3)
            with torch.no_grad():
                output = module(h_rgb, h_flow)
            for row in range(h_rgb.shape[0]):
                expected = reference(module, h_rgb[row].tolist(), h_flow[row].tolist())
                assert output[row].tolist() == pytest.approx(expected, abs=1e-6), (seed, row)
