"""Server entry point.

Mock mode needs no model artifacts:

    victimserve --mock --port 9000

Transformer mode serves a local checkpoint, with the label order and the
permutation that puts the benign label at wire index 0:

    victimserve --model /path/ckpt --task multiclass \
        --labels benign,offensive,hate --permutation 1,0,2 \
        [--mlm /path/mlm] [--encoder /path/encoder]
"""

from __future__ import annotations

import argparse
import sys

from .app import create_app
from .backends import mock_model, transformer_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="victimserve")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--mock", action="store_true",
                        help="serve the deterministic rule-based classifier")
    parser.add_argument("--rule-file", default=None,
                        help="mock rule JSON (default: repo protocol/mock_rule.json)")
    parser.add_argument("--model", default=None,
                        help="sequence-classification checkpoint path")
    parser.add_argument("--task", choices=["binary", "multiclass", "multilabel"],
                        default="multiclass")
    parser.add_argument("--labels", default=None,
                        help="comma-separated wire label order, benign first")
    parser.add_argument("--permutation", default=None,
                        help="comma-separated model-output column per wire label")
    parser.add_argument("--mlm", default=None, help="fill-mask checkpoint path")
    parser.add_argument("--encoder", default=None,
                        help="sentence-encoder checkpoint path")
    parser.add_argument("--max-concurrency", type=int, default=64)
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    if args.mock == (args.model is not None):
        print("error: exactly one of --mock and --model is required",
              file=sys.stderr)
        raise SystemExit(2)
    if args.mock:
        model = mock_model(args.rule_file)
    else:
        if not args.labels:
            print("error: --labels is required with --model", file=sys.stderr)
            raise SystemExit(2)
        labels = [x.strip() for x in args.labels.split(",") if x.strip()]
        permutation = ([int(x) for x in args.permutation.split(",")]
                       if args.permutation else None)
        model = transformer_model(args.model, args.task, labels, permutation,
                                  mlm_path=args.mlm, encoder_path=args.encoder)

    import uvicorn

    uvicorn.run(create_app(model, args.max_concurrency), host=args.host,
                port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
