import csv
from pathlib import Path

import pytest

from adapter_support import (
    FAIRFACE_GENDERS,
    FAIRFACE_RACES,
    build_tiny_checkpoint,
    write_image,
)
from vlbias_adapter import CheckpointEncoder, EncoderSpec


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory) -> Path:
    return build_tiny_checkpoint(tmp_path_factory.mktemp("checkpoint"))


@pytest.fixture(scope="session")
def encoder(checkpoint_dir) -> CheckpointEncoder:
    return CheckpointEncoder(
        EncoderSpec(model=str(checkpoint_dir), batch_size=8)
    )


@pytest.fixture(scope="session")
def balanced_image_root(tmp_path_factory) -> Path:
    """28 toy images, two per race-gender intersection, plus their
    FairFace-style attribute CSV."""
    root = tmp_path_factory.mktemp("images")
    rows = []
    i = 0
    for race in FAIRFACE_RACES:
        for gender in FAIRFACE_GENDERS:
            for _ in range(2):
                name = f"img_{i:03d}.png"
                write_image(root / name, seed=i)
                rows.append({"file": name, "race": race, "gender": gender,
                             "age": "20-29"})
                i += 1
    with open(root / "attributes.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["file", "race", "gender", "age"])
        writer.writeheader()
        writer.writerows(rows)
    return root
