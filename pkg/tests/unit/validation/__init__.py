"""Tests for validation modules."""
