"""Command-line interface.

Subcommands:

    audit            run a full taxonomy audit and write report + figures
    render-captions  write the caption list and its manifest for encoding
    scan             count word/pronoun co-occurrence in a caption corpus
    compare          line up mean entropies across model reports
    inspect          validate and describe data files

Exit codes: 0 success, 2 bad input or configuration, 3 a computation
could not be carried out, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import (
    AXES,
    compare_models,
    load_report,
    run_audit,
    write_report_csv,
    write_report_json,
)
from .corpus import (
    DEFAULT_LEXICON,
    load_lexicon,
    proportions,
    scan_paths,
    write_proportions_csv,
    write_stats_json,
)
from .errors import (
    COMPUTE_ERRORS,
    INPUT_ERRORS,
    AlignmentError,
    FormatError,
    SchemaError,
)
from .metrics import mean_topk_similarity, similarity_vector
from .store import (
    MAGIC,
    load_labeled,
    load_metadata,
    read_embeddings,
)
from .taxonomy import (
    default_taxonomy_path,
    load_taxonomy,
    render_all,
    word_count,
)

log = logging.getLogger("vlbias")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 64."""

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


def _axes_list(text: str) -> list[str]:
    axes = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in axes if a not in AXES]
    if bad or not axes:
        raise argparse.ArgumentTypeError(
            f"axes must be a comma-separated subset of {', '.join(AXES)}"
        )
    return axes


def _require_files(*paths: Path) -> None:
    for path in paths:
        if not path.is_file():
            raise FormatError(f"input file not found: {path}")


def manifest_path_for(path: Path) -> Path:
    """captions.txt -> captions.manifest.json (same stem, fixed suffix)."""
    return path.with_name(path.stem + ".manifest.json")


def _load_manifest(path: Path) -> list[dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("captions"), list):
        raise SchemaError(f"{path}: expected an object with a captions array")
    for entry in doc["captions"]:
        if not isinstance(entry, dict) or "caption" not in entry:
            raise SchemaError(f"{path}: every manifest entry needs a caption")
    return doc["captions"]


def _find_manifest(caption_vectors: Path, explicit: str | None) -> Path:
    if explicit:
        path = Path(explicit)
        _require_files(path)
        return path
    candidates = [
        Path(str(caption_vectors) + ".manifest.json"),
        manifest_path_for(caption_vectors),
    ]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise FormatError(
        f"no caption manifest found next to {caption_vectors}; "
        f"tried {', '.join(str(c) for c in candidates)} (pass --manifest)"
    )


def _verify_caption_alignment(taxonomy, captions_set, manifest_path: Path) -> None:
    """The caption vector rows must be the rendered taxonomy, in order."""
    rendered = [c.text for c in render_all(taxonomy)]
    manifest = [entry["caption"] for entry in _load_manifest(manifest_path)]
    if len(manifest) != len(rendered):
        raise AlignmentError(
            f"taxonomy renders {len(rendered)} captions but the manifest "
            f"lists {len(manifest)}"
        )
    for i, (want, got) in enumerate(zip(rendered, manifest)):
        if want != got:
            raise AlignmentError(
                f"caption mismatch at row {i}: taxonomy renders {want!r}, "
                f"manifest has {got!r}"
            )
    if captions_set.count != len(rendered):
        raise AlignmentError(
            f"caption vector file has {captions_set.count} rows but the "
            f"taxonomy renders {len(rendered)} captions"
        )


def _verify_sidecar(caption_vectors: Path, manifest_path: Path) -> None:
    """If the encoder left a sidecar, its manifest hash must match."""
    sidecar = Path(str(caption_vectors) + ".sidecar.json")
    if not sidecar.is_file():
        return
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{sidecar}: not valid JSON: {exc}") from exc
    recorded = doc.get("source_manifest_sha256")
    if not recorded:
        return
    actual = hashlib.sha256(manifest_path.read_bytes()).hexdigest()
    if actual != recorded:
        raise AlignmentError(
            f"{sidecar} was produced from a different manifest "
            f"(hash {recorded[:12]}.. != {actual[:12]}..)"
        )


def _load_baseline_means(path: Path, data, k: int) -> list[float]:
    """Baseline file: either an embedding set (means are computed here at
    the audit's k) or a text file with one precomputed mean per line."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        baseline = read_embeddings(path)
        if not baseline.normalized:
            raise FormatError(f"{path}: baseline vectors are not normalized")
        log.info("computing %d baseline means at k=%d", baseline.count, k)
        means = []
        for i in range(baseline.count):
            sims = similarity_vector(
                baseline.vectors[i].astype(np.float64), data.embeddings
            )
            means.append(mean_topk_similarity(sims, k))
        return means
    try:
        text = path.read_text(encoding="utf-8")
        means = [float(line) for line in text.splitlines() if line.strip()]
    except (UnicodeDecodeError, ValueError) as exc:
        raise FormatError(f"{path}: expected floats, one per line: {exc}") from exc
    if not means:
        raise FormatError(f"{path}: baseline file is empty")
    return means


# ---------------------------------------------------------------------------
# Subcommands


def cmd_audit(args) -> int:
    embeddings_path = Path(args.embeddings)
    metadata_path = Path(args.metadata)
    caption_vectors_path = Path(args.caption_vectors)
    _require_files(embeddings_path, metadata_path, caption_vectors_path)

    if args.taxonomy:
        taxonomy_path = Path(args.taxonomy)
        _require_files(taxonomy_path)
    else:
        taxonomy_path = default_taxonomy_path()
    taxonomy = load_taxonomy(taxonomy_path)

    manifest_path = _find_manifest(caption_vectors_path, args.manifest)

    log.info("loading image embeddings from %s", embeddings_path)
    data = load_labeled(embeddings_path, metadata_path)
    if not data.embeddings.normalized:
        raise FormatError(
            f"{embeddings_path}: image embeddings must be normalized "
            "(flag bit 0); re-export them normalized"
        )
    captions_set = read_embeddings(caption_vectors_path)
    if not captions_set.normalized:
        raise FormatError(f"{caption_vectors_path}: caption vectors must be normalized")

    _verify_caption_alignment(taxonomy, captions_set, manifest_path)
    _verify_sidecar(caption_vectors_path, manifest_path)
    log.info("caption manifest verified: %d captions", captions_set.count)

    baseline_means = None
    if args.baseline_means:
        baseline_path = Path(args.baseline_means)
        _require_files(baseline_path)
        baseline_means = _load_baseline_means(baseline_path, data, args.k)

    threads = args.threads or os.cpu_count() or 1
    config = {
        "embeddings": str(embeddings_path),
        "metadata": str(metadata_path),
        "caption_vectors": str(caption_vectors_path),
        "manifest": str(manifest_path),
        "taxonomy": str(taxonomy_path),
        "k": args.k,
        "axes": list(args.axes),
        "baseline_means": args.baseline_means,
        "threads": threads,
        "figures": not args.no_figures,
    }
    report = run_audit(
        taxonomy,
        captions_set.vectors,
        data,
        model_name=args.model,
        dataset_name=args.dataset,
        k=args.k,
        axes=args.axes,
        baseline_means=baseline_means,
        threads=threads,
        config=config,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_json = out_dir / "report.json"
    report_csv = out_dir / "report.csv"
    write_report_json(report, report_json)
    write_report_csv(report, report_csv)
    log.info("wrote %s and %s", report_json, report_csv)
    if not args.no_figures:
        from .figures import render_report_figures

        written = render_report_figures(report, out_dir / "figures")
        log.info("wrote %d figures under %s", len(written), out_dir / "figures")
    print(report_json)
    return EXIT_OK


def cmd_render_captions(args) -> int:
    if args.taxonomy:
        taxonomy_path = Path(args.taxonomy)
        _require_files(taxonomy_path)
    else:
        taxonomy_path = default_taxonomy_path()
    taxonomy = load_taxonomy(taxonomy_path)
    captions = render_all(taxonomy)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for caption in captions:
            fh.write(caption.text + "\n")

    manifest = {
        "engine_version": __version__,
        "taxonomy": str(taxonomy_path),
        "captions": [
            {
                "caption": c.text,
                "word": c.source_word.text,
                "kind": c.source_word.kind.value,
                "category": c.category.value,
            }
            for c in captions
        ],
    }
    manifest_path = manifest_path_for(out_path)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    log.info("wrote %d captions to %s (manifest %s)",
             len(captions), out_path, manifest_path)
    print(out_path)
    print(manifest_path)
    return EXIT_OK


def _load_scan_words(path: Path, categories: list[str]) -> list[str]:
    """A words file is either a taxonomy JSON or a plain word list."""
    head = path.read_text(encoding="utf-8", errors="replace").lstrip()[:1]
    if head == "[":
        taxonomy = load_taxonomy(path)
        if categories:
            wanted = set(categories)
            known = {c.name.value for c in taxonomy}
            missing = wanted - known
            if missing:
                raise SchemaError(
                    f"{path}: no such categories: {', '.join(sorted(missing))}"
                )
            taxonomy = [c for c in taxonomy if c.name.value in wanted]
        return [w.text.lower() for c in taxonomy for w in c.words]
    if categories:
        raise SchemaError("--category only applies to taxonomy JSON word files")
    words = [line.strip().lower() for line in
             path.read_text(encoding="utf-8").splitlines()]
    return [w for w in words if w]


def cmd_scan(args) -> int:
    paths = [Path(p) for p in args.inputs]
    _require_files(*paths)
    words_path = Path(args.words_file)
    _require_files(words_path)
    words = _load_scan_words(words_path, args.category or [])
    if not words:
        raise SchemaError(f"{words_path}: no words to scan for")

    lexicon = DEFAULT_LEXICON
    if args.lexicon:
        lexicon_path = Path(args.lexicon)
        _require_files(lexicon_path)
        lexicon = load_lexicon(lexicon_path)

    workers = args.threads or os.cpu_count() or 1
    stats = scan_paths(
        paths,
        words,
        corpus_format=args.format,
        caption_column=args.caption_column,
        lexicon=lexicon,
        workers=workers,
        clitic_split=not args.no_clitic_split,
    )
    log.info("scanned %d captions (%d lines skipped)",
             stats.captions_scanned, stats.skipped_lines)

    rows = proportions(stats)
    if args.out_stats:
        write_stats_json(stats, args.out_stats)
        log.info("wrote %s", args.out_stats)
    if args.out_table:
        write_proportions_csv(rows, args.out_table)
        log.info("wrote %s", args.out_table)
    if not args.out_stats and not args.out_table:
        print("word,male_pct,female_pct,total_matched")
        for row in rows:
            male = "" if row.male_pct is None else row.male_pct
            female = "" if row.female_pct is None else row.female_pct
            print(f"{row.word},{male},{female},{row.total_matched}")
    return EXIT_OK


def cmd_compare(args) -> int:
    paths = [Path(p) for p in args.reports]
    _require_files(*paths)
    reports = []
    for path in paths:
        try:
            reports.append(load_report(path))
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"{path}: not a valid report: {exc}") from exc
    table = compare_models(reports)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_path)
    log.info("wrote %s", out_path)
    if not args.no_figures:
        from .figures import render_comparison_figures

        written = render_comparison_figures(table, out_path.parent)
        log.info("wrote %d comparison figures", len(written))
    print(out_path)
    return EXIT_OK


def _inspect_one(path: Path) -> None:
    print(f"path: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        embeddings = read_embeddings(path)
        print("format: EMB1 embedding set")
        print("version: 1")
        print(f"dim: {embeddings.dim}")
        print(f"count: {embeddings.count}")
        print(f"normalized: {str(embeddings.normalized).lower()}")
        print(f"payload: {embeddings.count * embeddings.dim * 4} bytes, valid")
        return
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
        if isinstance(doc, list):
            taxonomy = load_taxonomy(path)
            print("format: taxonomy")
            print(f"categories: {len(taxonomy)}")
            print(f"words: {word_count(taxonomy)}")
            for cat in taxonomy:
                print(f"  {cat.name.value}: {len(cat.words)}")
            return
        if isinstance(doc, dict) and "model_name" in doc:
            report = load_report(path)
            words = sum(len(c.word_audits) for c in report.categories)
            print("format: audit report")
            print(f"model: {report.model_name}")
            print(f"dataset: {report.dataset_name}")
            print(f"k: {report.k}")
            print(f"categories: {len(report.categories)} ({words} words)")
            print(f"engine_version: {report.engine_version}")
            return
        if isinstance(doc, dict) and "captions" in doc:
            captions = _load_manifest(path)
            print("format: caption manifest")
            print(f"captions: {len(captions)}")
            return
        raise SchemaError(f"{path}: unrecognized JSON document")
    # fall back to demographic metadata CSV
    records = load_metadata(path)
    print("format: demographic metadata")
    print(f"records: {len(records)}")
    by_race: dict[str, int] = {}
    by_gender: dict[str, int] = {}
    for rec in records:
        by_race[rec.race.value] = by_race.get(rec.race.value, 0) + 1
        by_gender[rec.gender.value] = by_gender.get(rec.gender.value, 0) + 1
    for label, n in by_race.items():
        print(f"  race {label}: {n}")
    for label, n in by_gender.items():
        print(f"  gender {label}: {n}")


def cmd_inspect(args) -> int:
    failures = 0
    for i, path_text in enumerate(args.paths):
        if i:
            print()
        path = Path(path_text)
        try:
            _require_files(path)
            _inspect_one(path)
        except INPUT_ERRORS as exc:
            print(f"path: {path}")
            print(f"invalid: {exc}")
            failures += 1
    return EXIT_INPUT if failures else EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vlbias",
        description="Demographic bias audits for vision-language embeddings.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: machine cores)")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"],
                        help="stderr logging verbosity")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_audit = sub.add_parser("audit", help="audit a model's embedding space")
    p_audit.add_argument("--embeddings", required=True,
                         help="EMB1 file of image embeddings")
    p_audit.add_argument("--metadata", required=True,
                         help="demographic CSV aligned with --embeddings")
    p_audit.add_argument("--caption-vectors", required=True,
                         help="EMB1 file of caption embeddings in taxonomy order")
    p_audit.add_argument("--manifest", default=None,
                         help="caption manifest JSON (default: discovered "
                              "next to --caption-vectors)")
    p_audit.add_argument("--taxonomy", default=None,
                         help="taxonomy JSON (default: bundled)")
    p_audit.add_argument("--k", type=_positive_int, default=100,
                         help="retrieval depth (default 100)")
    p_audit.add_argument("--axes", type=_axes_list,
                         default=list(AXES),
                         help="comma-separated subset of race,gender,race_gender")
    p_audit.add_argument("--baseline-means", default=None,
                         help="baseline for relevance: EMB1 vectors or a "
                              "text file of means")
    p_audit.add_argument("--model", required=True, help="model name for the report")
    p_audit.add_argument("--dataset", required=True,
                         help="dataset name for the report")
    p_audit.add_argument("--out", required=True, help="output directory")
    p_audit.add_argument("--no-figures", action="store_true",
                         help="skip PNG rendering")
    p_audit.set_defaults(func=cmd_audit)

    p_render = sub.add_parser("render-captions",
                              help="render taxonomy captions for encoding")
    p_render.add_argument("--taxonomy", default=None,
                          help="taxonomy JSON (default: bundled)")
    p_render.add_argument("--out", required=True,
                          help="caption list path (manifest lands next to it)")
    p_render.set_defaults(func=cmd_render_captions)

    p_scan = sub.add_parser("scan", help="scan a caption corpus")
    p_scan.add_argument("inputs", nargs="+", help="corpus files (gzip ok)")
    p_scan.add_argument("--format", choices=["lines", "csv"], default="lines")
    p_scan.add_argument("--caption-column", default="caption",
                        help="column name for --format csv")
    p_scan.add_argument("--words-file", required=True,
                        help="plain word list or taxonomy JSON")
    p_scan.add_argument("--category", action="append",
                        help="restrict a taxonomy words file to a category "
                             "(repeatable)")
    p_scan.add_argument("--lexicon", default=None,
                        help="pronoun lexicon JSON (default: built in)")
    p_scan.add_argument("--out-stats", default=None, help="stats JSON path")
    p_scan.add_argument("--out-table", default=None, help="proportions CSV path")
    p_scan.add_argument("--no-clitic-split", action="store_true",
                        help="keep apostrophe clitics attached")
    p_scan.set_defaults(func=cmd_scan)

    p_compare = sub.add_parser("compare", help="compare audit reports")
    p_compare.add_argument("reports", nargs="+", help="report JSON files")
    p_compare.add_argument("--out", required=True, help="comparison CSV path")
    p_compare.add_argument("--no-figures", action="store_true",
                           help="skip PNG rendering")
    p_compare.set_defaults(func=cmd_compare)

    p_inspect = sub.add_parser("inspect", help="validate and describe files")
    p_inspect.add_argument("paths", nargs="+")
    p_inspect.set_defaults(func=cmd_inspect)

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
    except INPUT_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except COMPUTE_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_COMPUTE
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
