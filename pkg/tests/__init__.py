"""Test suite for mcn-seg."""
