"""Tests for projection, fusion heads and model assembly."""
