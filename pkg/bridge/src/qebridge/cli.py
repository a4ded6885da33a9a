"""Command-line entry point.

Takes the same flags as the scoring toolkit's ``export-embeddings``
subcommand, including ``--config FILE`` with JSON defaults that explicit
flags override.  Exit codes: 0 on success, 2 on any input or encoder
problem.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import QEBridgeError
from .export import DEFAULT_UNK, ExportRequest, export_embeddings

_REQUIRED = object()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qebridge",
        description="Export pretrained-encoder hidden states to QEEMB1 files.",
    )
    parser.add_argument("--config", help="JSON file with defaults for any flag")
    parser.add_argument("--input")
    parser.add_argument("--encoder")
    parser.add_argument("--layers", help="comma-separated layer list")
    parser.add_argument("--out-prefix")
    parser.add_argument("--vocab",
                        help="replace out-of-vocabulary words before encoding")
    parser.add_argument("--unk-symbol")
    parser.add_argument("--batch-size", type=int)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    defaults = {
        "input": _REQUIRED, "encoder": _REQUIRED, "layers": _REQUIRED,
        "out_prefix": _REQUIRED, "vocab": None,
        "unk_symbol": DEFAULT_UNK, "batch_size": 8,
    }
    file_cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            file_cfg = json.load(f)
        if not isinstance(file_cfg, dict):
            raise QEBridgeError(f"{args.config}: config file must hold a JSON object")
    merged = {}
    missing = []
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        if value is _REQUIRED:
            missing.append(key)
            continue
        merged[key] = value
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise QEBridgeError(f"missing required value(s): {flags}")
    return merged


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        request = ExportRequest(
            input_path=cfg["input"],
            encoder=cfg["encoder"],
            layers=[int(x) for x in str(cfg["layers"]).split(",") if x != ""],
            out_prefix=cfg["out_prefix"],
            vocab_path=cfg["vocab"],
            unk_symbol=cfg["unk_symbol"],
            batch_size=int(cfg["batch_size"]),
        )
        for path in export_embeddings(request):
            print(path)
    except QEBridgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
