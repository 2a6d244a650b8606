"""Tests for metrics and report emission."""
