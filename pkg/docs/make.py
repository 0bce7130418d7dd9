"""
docs/make.py: API reference builder for mcn-seg.

Renders the ``mcn_seg`` package docstrings (Google style) to static HTML
with pdoc.

Usage:
    python docs/make.py                   # build -> docs/site/
    python docs/make.py --serve           # live server (localhost:8080)
    python docs/make.py -o /tmp/mcn-docs  # custom output directory
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

DOCS_DIR = Path(__file__).parent
REPO_ROOT = DOCS_DIR.parent
PACKAGE = "mcn_seg"
DEFAULT_OUT = DOCS_DIR / "site"


def _configure() -> None:
    root = str(REPO_ROOT)
    if root not in sys.path:
        sys.path.insert(0, root)

    import pdoc.render

    pdoc.render.configure(docformat="google", show_source=True, math=True)


def build(output_dir: Path) -> None:
    """Write the HTML reference for every ``mcn_seg`` module."""
    _configure()
    import pdoc

    output_dir.mkdir(parents=True, exist_ok=True)
    pdoc.pdoc(PACKAGE, output_directory=output_dir)


def serve(host: str = "localhost", port: int = 8080) -> None:
    _configure()
    import pdoc.web

    server = pdoc.web.DocServer((host, port), [PACKAGE])
    print(f"  Serving {PACKAGE} docs at http://{host}:{port}/ (Ctrl+C stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("\n  Server stopped.")


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Build the mcn-seg API reference with pdoc.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument(
        "--output-dir", "-o", type=Path, default=DEFAULT_OUT, metavar="DIR"
    )
    parser.add_argument("--serve", action="store_true", help="Run pdoc's server")
    parser.add_argument("--port", type=int, default=8080)
    args = parser.parse_args()

    try:
        import pdoc  # noqa: F401
    except ImportError:
        sys.exit("ERROR: pdoc not found; install the dev dependency group.")

    if args.serve:
        serve(port=args.port)
        return
    build(args.output_dir)
    print(f"  API reference: {args.output_dir / PACKAGE}.html")


if __name__ == "__main__":
    main()
