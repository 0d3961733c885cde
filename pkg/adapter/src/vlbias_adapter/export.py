"""The three export operations: images, caption manifests, baselines.

Each writes the engine's EMB1 format (plus metadata CSV for images)
atomically: content lands in a temp file in the target directory and is
renamed into place, so a crash never leaves a half-written file behind.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from vlbias.store import DemographicRecord, EmbeddingSet, write_embeddings, write_metadata

from .encoder import CheckpointEncoder
from .errors import InputError
from .labels import AttributeRow, load_attributes

log = logging.getLogger("vlbias_adapter")


def _atomic(path: Path, write: Callable[[Path], None]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(
            f"cannot create output directory {path.parent}: {exc}"
        ) from exc
    tmp = path.with_name(path.name + ".tmp")
    try:
        write(tmp)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _write_embeddings_atomic(matrix: np.ndarray, path: Path) -> None:
    embeddings = EmbeddingSet.from_matrix(matrix, normalized=True)
    _atomic(path, lambda tmp: write_embeddings(embeddings, tmp))


def _write_json_atomic(doc: dict, path: Path) -> None:
    def write(tmp: Path) -> None:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")

    _atomic(path, write)


def _sidecar(encoder: CheckpointEncoder, **extra) -> dict:
    doc = {
        "model": encoder.spec.model,
        "resolved_model": encoder.resolved_model,
        "weight_sha256": encoder.weight_hash(),
    }
    doc.update(extra)
    return doc


@dataclass
class ImageExportResult:
    embeddings_path: Path
    metadata_path: Path
    encoded: int
    skipped: list[str] = field(default_factory=list)


def encode_images(image_dir: Union[str, Path],
                  attribute_csv: Union[str, Path],
                  encoder: CheckpointEncoder,
                  out_embeddings: Union[str, Path],
                  out_metadata: Union[str, Path]) -> ImageExportResult:
    """Encode every readable image named in the attribute CSV, in order.

    Unreadable images are skipped (and logged with their id) from both
    the embedding file and the metadata CSV, so the two stay aligned.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise InputError(f"image directory not found: {image_dir}")
    rows = load_attributes(attribute_csv)

    blocks: list[np.ndarray] = []
    kept: list[AttributeRow] = []
    skipped: list[str] = []
    batch_rows: list[AttributeRow] = []
    batch_images: list[Image.Image] = []

    def flush() -> None:
        if not batch_images:
            return
        blocks.append(encoder.encode_images(batch_images))
        kept.extend(batch_rows)
        for img in batch_images:
            img.close()
        batch_rows.clear()
        batch_images.clear()

    for row in rows:
        path = image_dir / row.file
        try:
            with Image.open(path) as img:
                batch_images.append(img.convert("RGB"))
        except (OSError, UnidentifiedImageError) as exc:
            log.warning("skipping unreadable image %s: %s", row.file, exc)
            skipped.append(row.file)
            continue
        batch_rows.append(row)
        if len(batch_images) >= encoder.spec.batch_size:
            flush()
    flush()

    if not kept:
        raise InputError(
            f"no readable images: all {len(rows)} rows of {attribute_csv} "
            "were skipped"
        )
    if skipped:
        log.warning("skipped %d of %d images", len(skipped), len(rows))

    matrix = np.concatenate(blocks, axis=0)
    metadata = [
        DemographicRecord(record_id=row.file, race=row.race,
                          gender=row.gender, age_band=row.age_band)
        for row in kept
    ]
    out_embeddings = Path(out_embeddings)
    out_metadata = Path(out_metadata)
    _write_embeddings_atomic(matrix, out_embeddings)
    _atomic(out_metadata, lambda tmp: write_metadata(metadata, tmp))
    _write_json_atomic(
        _sidecar(encoder, encoded=len(kept), skipped=skipped),
        Path(str(out_embeddings) + ".sidecar.json"),
    )
    return ImageExportResult(
        embeddings_path=out_embeddings,
        metadata_path=out_metadata,
        encoded=len(kept),
        skipped=skipped,
    )


@dataclass
class TextExportResult:
    embeddings_path: Path
    manifest_path: Path
    sidecar_path: Path
    count: int


def encode_texts(manifest_path: Union[str, Path],
                 encoder: CheckpointEncoder,
                 out_embeddings: Union[str, Path]) -> TextExportResult:
    """Encode a rendered caption manifest, preserving caption order.

    The manifest is echoed next to the output, and its sha256 goes into
    the sidecar, so the engine can verify that the vectors belong to
    exactly this caption list.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest_bytes = manifest_path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {manifest_path}: {exc}") from exc
    try:
        doc = json.loads(manifest_bytes)
    except json.JSONDecodeError as exc:
        raise InputError(f"{manifest_path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("captions"), list):
        raise InputError(
            f"{manifest_path}: expected an object with a captions array"
        )
    captions = []
    for entry in doc["captions"]:
        if not isinstance(entry, dict) or not entry.get("caption"):
            raise InputError(f"{manifest_path}: entry without a caption")
        captions.append(entry["caption"])
    if not captions:
        raise InputError(f"{manifest_path}: manifest lists no captions")

    matrix = encoder.encode_texts(captions)

    out_embeddings = Path(out_embeddings)
    echo_path = Path(str(out_embeddings)).with_name(
        out_embeddings.stem + ".manifest.json"
    )
    sidecar_path = Path(str(out_embeddings) + ".sidecar.json")
    _write_embeddings_atomic(matrix, out_embeddings)
    _atomic(echo_path, lambda tmp: tmp.write_bytes(manifest_bytes))
    _write_json_atomic(
        _sidecar(
            encoder,
            count=len(captions),
            source_manifest_sha256=hashlib.sha256(manifest_bytes).hexdigest(),
        ),
        sidecar_path,
    )
    return TextExportResult(
        embeddings_path=out_embeddings,
        manifest_path=echo_path,
        sidecar_path=sidecar_path,
        count=len(captions),
    )


@dataclass
class BaselineExportResult:
    embeddings_path: Path
    count: int
    dropped_duplicates: int


def encode_baseline(words_file: Union[str, Path],
                    encoder: CheckpointEncoder,
                    out_embeddings: Union[str, Path]) -> BaselineExportResult:
    """Encode a frequency word list (one word per line) as bare captions."""
    words_file = Path(words_file)
    try:
        lines = words_file.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {words_file}: {exc}") from exc
    words = [line.strip() for line in lines if line.strip()]
    if not words:
        raise InputError(f"{words_file}: no words to encode")
    unique = list(dict.fromkeys(words))
    dropped = len(words) - len(unique)
    if dropped:
        log.warning("dropped %d duplicate words from %s", dropped, words_file)

    matrix = encoder.encode_texts(unique)
    out_embeddings = Path(out_embeddings)
    _write_embeddings_atomic(matrix, out_embeddings)
    _write_json_atomic(
        _sidecar(encoder, count=len(unique), dropped_duplicates=dropped),
        Path(str(out_embeddings) + ".sidecar.json"),
    )
    return BaselineExportResult(
        embeddings_path=out_embeddings,
        count=len(unique),
        dropped_duplicates=dropped,
    )
