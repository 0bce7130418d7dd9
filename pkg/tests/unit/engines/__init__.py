"""Unit tests for engines."""
