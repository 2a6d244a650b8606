"""Tests for clip ingestion, sampling and manifests."""
