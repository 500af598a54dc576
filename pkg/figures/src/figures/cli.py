"""Command line entry: figures --spec PATH --out DIR."""

from __future__ import annotations

import argparse
import sys

from .render import MissingInput, SchemaMismatch, load_spec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("--spec", required=True, help="figure spec TOML")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        written = render(load_spec(args.spec), args.out)
    except (MissingInput, SchemaMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("\n".join(str(p) for p in written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
