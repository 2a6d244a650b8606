"""Tests for splitting, augmentation, datasets and the training loop."""
