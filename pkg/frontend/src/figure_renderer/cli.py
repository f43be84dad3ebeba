"""Command line wrapper: ``render --kind sweep --in data.csv --out fig.png``.

A figure can also be described by a JSON spec file (``render --spec
fig.json``) whose keys mirror the FigureSpec fields; direct flags override
spec-file values. Exit status 0 on success, 2 for any spec or schema
violation, 1 for other runtime failures.
"""

import argparse
import json
import sys
from pathlib import Path

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError

__all__ = ["build_parser", "main"]

_SPEC_KEYS = ("input_csv", "kind", "output_path", "xlabel", "ylabel", "title", "group_by")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="render",
        description="render experiment CSV artifacts as figures",
    )
    parser.add_argument("--spec", type=Path, help="JSON file with FigureSpec fields")
    parser.add_argument("--kind", choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="input_csv", type=Path, help="input CSV path")
    parser.add_argument("--out", dest="output_path", type=Path, help="output image path")
    parser.add_argument("--xlabel", help="x axis label")
    parser.add_argument("--ylabel", help="y axis label")
    parser.add_argument("--title", help="figure title")
    parser.add_argument("--group-by", dest="group_by", help="series grouping column (default: scheme)")
    return parser


def _load_spec_file(path):
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read spec file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise SchemaError(f"spec file {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(_SPEC_KEYS))
    if unknown:
        raise SchemaError(f"spec file {path}: unknown keys {unknown}; expected {list(_SPEC_KEYS)}")
    return raw

def _resolve_spec(args):
    fields = _load_spec_file(args.spec) if args.spec else {}
    for key in _SPEC_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    missing = [k for k in ("input_csv", "kind", "output_path") if not fields.get(k)]
    if missing:
        raise SchemaError(f"missing required fields {missing}; pass flags or a --spec file")
    return FigureSpec(**fields)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        spec = _resolve_spec(args)
        out = render(spec)
    except SchemaError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
