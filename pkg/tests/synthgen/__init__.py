"""Tests for the synthetic dataset generator."""
