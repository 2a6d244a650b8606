"""Tests for optical flow estimation, stacking and caching."""
