"""Tests for the appearance and motion encoders."""
