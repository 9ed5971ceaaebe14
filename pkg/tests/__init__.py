"""Tests for cluster-search."""
