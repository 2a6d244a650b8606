"""Test suite for DualStream."""
