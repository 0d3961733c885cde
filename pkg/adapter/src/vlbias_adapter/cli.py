"""Command-line interface for the encoder bridge.

Subcommands:

    encode-images    image dir + attribute CSV -> EMB1 + metadata CSV
    encode-texts     caption manifest -> EMB1 + manifest echo + sidecar
    encode-baseline  word list -> EMB1 + sidecar

Exit codes follow the engine: 0 success, 2 bad input, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from vlbias.errors import VlbiasError

from . import __version__
from .encoder import CheckpointEncoder, EncoderSpec
from .errors import AdapterError
from .export import encode_baseline, encode_images, encode_texts

log = logging.getLogger("vlbias_adapter")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _spec(args) -> EncoderSpec:
    return EncoderSpec(model=args.model, device=args.device,
                       batch_size=args.batch_size)


def cmd_encode_images(args) -> int:
    encoder = CheckpointEncoder(_spec(args))
    result = encode_images(args.images, args.attributes, encoder,
                           args.out_embeddings, args.out_metadata)
    log.info("encoded %d images (%d skipped)", result.encoded,
             len(result.skipped))
    print(result.embeddings_path)
    print(result.metadata_path)
    return EXIT_OK


def cmd_encode_texts(args) -> int:
    encoder = CheckpointEncoder(_spec(args))
    result = encode_texts(args.manifest, encoder, args.out)
    log.info("encoded %d captions", result.count)
    print(result.embeddings_path)
    print(result.manifest_path)
    return EXIT_OK


def cmd_encode_baseline(args) -> int:
    encoder = CheckpointEncoder(_spec(args))
    result = encode_baseline(args.words, encoder, args.out)
    log.info("encoded %d words (%d duplicates dropped)", result.count,
             result.dropped_duplicates)
    print(result.embeddings_path)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vlbias-adapter",
        description="Encode images and captions into audit-ready files.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def add_spec_flags(p):
        p.add_argument("--model", required=True,
                       help="alias (OAICLIP, OpenCLIP), hub id, or local path")
        p.add_argument("--batch-size", type=_positive_int, default=32)
        p.add_argument("--device", default="cpu",
                       help="torch device string (default cpu)")

    p_images = sub.add_parser("encode-images",
                              help="encode an attributed image directory")
    add_spec_flags(p_images)
    p_images.add_argument("--images", required=True, help="image root directory")
    p_images.add_argument("--attributes", required=True,
                          help="FairFace-style attribute CSV")
    p_images.add_argument("--out-embeddings", required=True)
    p_images.add_argument("--out-metadata", required=True)
    p_images.set_defaults(func=cmd_encode_images)

    p_texts = sub.add_parser("encode-texts",
                             help="encode a rendered caption manifest")
    add_spec_flags(p_texts)
    p_texts.add_argument("--manifest", required=True,
                         help="caption manifest JSON from the engine")
    p_texts.add_argument("--out", required=True, help="EMB1 output path")
    p_texts.set_defaults(func=cmd_encode_texts)

    p_baseline = sub.add_parser("encode-baseline",
                                help="encode a frequency word list")
    add_spec_flags(p_baseline)
    p_baseline.add_argument("--words", required=True,
                            help="text file, one word per line")
    p_baseline.add_argument("--out", required=True, help="EMB1 output path")
    p_baseline.set_defaults(func=cmd_encode_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except AdapterError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except VlbiasError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
