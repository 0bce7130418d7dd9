"""Main entry point for mcn_seg when run as a module."""

from mcn_seg.api.cli import main

if __name__ == "__main__":
    main()
