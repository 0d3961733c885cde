"""Embedding sets, demographic metadata, and their on-disk formats.

Embeddings travel in a small binary container:

    magic   4 bytes   b"EMB1"
    version u16 LE    1
    flags   u16 LE    bit 0 = rows are L2-normalized
    dim     u32 LE
    count   u64 LE
    payload count * dim float32 LE, row-major

Demographic metadata is a UTF-8 CSV with the exact header
``record_id,race,gender,age_band`` and alignment to the embedding file is
positional: row i of the CSV describes row i of the matrix.  Files store
float32; everything numeric in memory runs in float64.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    DegenerateVectorError,
    FormatError,
    IoError,
)

MAGIC = b"EMB1"
FORMAT_VERSION = 1
FLAG_NORMALIZED = 0x0001
_KNOWN_FLAGS = FLAG_NORMALIZED

_HEADER = struct.Struct("<4sHHIQ")
HEADER_SIZE = _HEADER.size  # 20 bytes

METADATA_HEADER = ["record_id", "race", "gender", "age_band"]

# Row norms may drift from 1.0 once a normalized matrix is rounded to
# float32 on disk; this is the widest drift the "normalized" flag accepts.
NORM_TOLERANCE = 1e-5


class Race(str, Enum):
    WHITE = "White"
    BLACK = "Black"
    INDIAN = "Indian"
    EAST_ASIAN = "EastAsian"
    SOUTHEAST_ASIAN = "SoutheastAsian"
    MIDDLE_EASTERN = "MiddleEastern"
    LATINO_HISPANIC = "LatinoHispanic"


class Gender(str, Enum):
    MALE = "Male"
    FEMALE = "Female"


RACES = tuple(Race)
GENDERS = tuple(Gender)


@dataclass(frozen=True)
class DemographicRecord:
    record_id: str
    race: Race
    gender: Gender
    age_band: Optional[str] = None


@dataclass
class EmbeddingSet:
    """A dense matrix of row vectors plus the flags the formats carry."""

    dim: int
    count: int
    vectors: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got ndim={self.vectors.ndim}")
        if self.dim < 1:
            raise DataError(f"dim must be positive, got {self.dim}")
        if self.count < 0:
            raise DataError(f"count must be non-negative, got {self.count}")
        if self.vectors.shape != (self.count, self.dim):
            raise DataError(
                f"matrix shape {self.vectors.shape} does not match "
                f"count={self.count}, dim={self.dim}"
            )
        if self.count and not np.isfinite(self.vectors).all():
            raise DataError("matrix contains non-finite entries")
        if self.normalized and self.count:
            norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
            worst = float(np.abs(norms - 1.0).max())
            if worst > NORM_TOLERANCE:
                raise DataError(
                    f"set is flagged normalized but a row norm is off by {worst:.3e}"
                )

    @classmethod
    def from_matrix(cls, vectors, normalized: bool = False) -> "EmbeddingSet":
        vectors = np.asarray(vectors)
        return cls(dim=vectors.shape[1], count=vectors.shape[0],
                   vectors=vectors, normalized=normalized)


@dataclass
class LabeledEmbeddings:
    """An embedding set plus one demographic record per row."""

    embeddings: EmbeddingSet
    metadata: list[DemographicRecord] = field(default_factory=list)

    def __post_init__(self):
        if len(self.metadata) != self.embeddings.count:
            raise AlignmentError(
                f"{self.embeddings.count} embedding rows but "
                f"{len(self.metadata)} metadata records"
            )
        seen: set[str] = set()
        for rec in self.metadata:
            if rec.record_id in seen:
                raise DataError(f"duplicate record_id {rec.record_id!r}")
            seen.add(rec.record_id)


def read_embeddings(path: Union[str, Path]) -> EmbeddingSet:
    """Load one embedding file, validating header and payload length."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, version, flags, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if flags & ~_KNOWN_FLAGS:
        raise FormatError(f"{path}: unknown flag bits 0x{flags:04x}")
    if dim < 1:
        raise FormatError(f"{path}: dim must be positive, got {dim}")

    expected = count * dim * 4
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, "
            f"header declares {expected} ({count} x {dim} float32)"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    try:
        return EmbeddingSet(dim=dim, count=count, vectors=vectors,
                            normalized=bool(flags & FLAG_NORMALIZED))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_embeddings(embeddings: EmbeddingSet, path: Union[str, Path]) -> None:
    """Write one embedding file; values are stored as float32."""
    path = Path(path)
    flags = FLAG_NORMALIZED if embeddings.normalized else 0
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, flags,
                          embeddings.dim, embeddings.count)
    payload = np.ascontiguousarray(embeddings.vectors, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_metadata(path: Union[str, Path]) -> list[DemographicRecord]:
    """Parse a demographic CSV, enforcing header and enum spellings."""
    path = Path(path)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected a header row") from None
        if header != METADATA_HEADER:
            raise FormatError(
                f"{path}: bad header {header!r}, expected {METADATA_HEADER!r}"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            record_id, race, gender, age_band = row
            try:
                parsed_race = Race(race)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: unknown race {race!r}") from None
            try:
                parsed_gender = Gender(gender)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: unknown gender {gender!r}") from None
            records.append(DemographicRecord(
                record_id=record_id,
                race=parsed_race,
                gender=parsed_gender,
                age_band=age_band or None,
            ))
    return records


def write_metadata(records: list[DemographicRecord], path: Union[str, Path]) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(METADATA_HEADER)
            for rec in records:
                writer.writerow([rec.record_id, rec.race.value,
                                 rec.gender.value, rec.age_band or ""])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_labeled(embedding_path: Union[str, Path],
                 metadata_path: Union[str, Path]) -> LabeledEmbeddings:
    """Load a matrix and its metadata, checking that the two line up.

    Alignment is positional.  When every record_id is a plain integer the
    ids are additionally required to equal the 0-based row positions,
    which catches shuffled or re-sorted metadata.
    """
    embeddings = read_embeddings(embedding_path)
    metadata = load_metadata(metadata_path)
    if len(metadata) != embeddings.count:
        raise AlignmentError(
            f"{embedding_path} has {embeddings.count} rows but "
            f"{metadata_path} has {len(metadata)} records"
        )
    if metadata and all(rec.record_id.isdigit() for rec in metadata):
        for pos, rec in enumerate(metadata):
            if int(rec.record_id) != pos:
                raise AlignmentError(
                    f"{metadata_path}: record_id {rec.record_id} sits at row {pos}"
                )
    return LabeledEmbeddings(embeddings=embeddings, metadata=metadata)


def write_labeled(data: LabeledEmbeddings,
                  embedding_path: Union[str, Path],
                  metadata_path: Union[str, Path]) -> None:
    write_embeddings(data.embeddings, embedding_path)
    write_metadata(data.metadata, metadata_path)


def l2_normalize(embeddings: EmbeddingSet) -> EmbeddingSet:
    """Return a float64 copy whose rows have unit L2 norm."""
    vectors = embeddings.vectors.astype(np.float64)
    if embeddings.count:
        norms = np.linalg.norm(vectors, axis=1)
        bad = np.flatnonzero(norms < 1e-12)
        if bad.size:
            row = int(bad[0])
            raise DegenerateVectorError(row, float(norms[row]))
        vectors = vectors / norms[:, None]
    return EmbeddingSet(dim=embeddings.dim, count=embeddings.count,
                        vectors=vectors, normalized=True)
