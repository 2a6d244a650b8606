"""Tests for tensor helpers, gradient checks and checkpoints."""
