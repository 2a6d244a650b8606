"""Tests for the component gradient checks."""

import pytest

from dualstream.fusion import ATTENTION_HEADS, component_checks, run_gradchecks
from dualstream.fusion.checks import CHECK_DIM


class TestGradchecks:
    """Tests for run_gradchecks."""

    def test_component_names(self):
        """Test that the five heads, the projection and both encoder blocks are covered."""
        assert list(component_checks()) == [
            "head/late",
            "head/concat",
            "head/attention",
            "head/weighted",
            "head/gated",
            "projection",
            "transformer_block",
            "inverted_residual",
        ]

    @pytest.mark.slow
    def test_all_pass(self):
        """Test that every component passes at the default tolerance."""
        reports = run_gradchecks(tol=1e-4, seed=0)
        failed = {name: str(r) for name, r in reports.items() if not r.passed}
        assert not failed
        assert all(r.checked > 0 for r in reports.values())

    def test_impossible_tolerance_fails(self):
        """Test that a zero tolerance reports failure instead of raising."""
        report = component_checks(seed=1)["head/weighted"](0.0)
        assert not report.passed
        assert report.checked > 0

    def test_attention_head_checked_at_production_width(self):
        """Test that the attention check uses the default head count and passes."""
        assert CHECK_DIM % ATTENTION_HEADS == 0
        assert ATTENTION_HEADS == 4
        report = component_checks(seed=3)["head/attention"](1e-4)
        assert report.passed, str(report)
