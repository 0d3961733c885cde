"""FairFace-style attribute CSV parsing.

FairFace spells its labels differently from the engine enumerations
("East Asian", "Latino_Hispanic"), so the translation table ships as
data next to this module rather than being scattered through code.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from vlbias.store import Gender, Race

from .errors import InputError, LabelError

_DATA_PATH = Path(__file__).parent / "data" / "fairface_labels.json"

with open(_DATA_PATH, "r", encoding="utf-8") as _fh:
    _TABLE = json.load(_fh)

RACE_MAP: dict[str, Race] = {k: Race(v) for k, v in _TABLE["race"].items()}
GENDER_MAP: dict[str, Gender] = {k: Gender(v) for k, v in _TABLE["gender"].items()}


@dataclass(frozen=True)
class AttributeRow:
    """One image: its path relative to the image root plus labels."""

    file: str
    race: Race
    gender: Gender
    age_band: Optional[str] = None


def map_race(label: str) -> Race:
    try:
        return RACE_MAP[label]
    except KeyError:
        raise LabelError(
            f"race label {label!r} is not in the FairFace mapping "
            f"({', '.join(sorted(RACE_MAP))})"
        ) from None


def map_gender(label: str) -> Gender:
    try:
        return GENDER_MAP[label]
    except KeyError:
        raise LabelError(
            f"gender label {label!r} is not in the FairFace mapping "
            f"({', '.join(sorted(GENDER_MAP))})"
        ) from None


def load_attributes(path: Union[str, Path]) -> list[AttributeRow]:
    """Read a FairFace-style attribute CSV.

    Requires file, race, and gender columns; an age column, when
    present, is carried through verbatim as the engine's age band.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise InputError(f"{path}: empty attribute CSV")
            missing = {"file", "race", "gender"} - set(reader.fieldnames)
            if missing:
                raise InputError(
                    f"{path}: attribute CSV lacks columns "
                    f"{', '.join(sorted(missing))}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                file = (row.get("file") or "").strip()
                if not file:
                    raise InputError(f"{path}:{lineno}: empty file cell")
                try:
                    race = map_race((row.get("race") or "").strip())
                    gender = map_gender((row.get("gender") or "").strip())
                except LabelError as exc:
                    raise LabelError(f"{path}:{lineno}: {exc}") from None
                age = (row.get("age") or "").strip() or None
                rows.append(AttributeRow(file=file, race=race, gender=gender,
                                         age_band=age))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: attribute CSV has no data rows")
    return rows
