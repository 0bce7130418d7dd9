"""Command-line interface."""

from mcn_seg.api.cli import create_parser, main

__all__ = ["create_parser", "main"]
