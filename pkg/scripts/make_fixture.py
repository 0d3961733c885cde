"""Generate the synthetic planted-bias fixture used by the test suite.

The fixture is a 2,800-image, 64-dim dataset with 200 images in each of
the 14 race-gender intersections.  A handful of taxonomy words get a
bias planted toward one intersection: those images are shifted along the
word's caption direction before normalization, so the word retrieves and
associates with that group far above chance.  Caption directions are
mutually orthogonal, which keeps every unplanted word's retrieval close
to uniform.

All randomness comes from the single seed below; the engine itself never
draws random numbers.  The script cross-checks the planted structure
with direct numpy arithmetic (not the engine) before writing anything.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from vlbias.store import (
    GENDERS,
    RACES,
    DemographicRecord,
    EmbeddingSet,
    Gender,
    LabeledEmbeddings,
    Race,
    write_embeddings,
    write_labeled,
)
from vlbias.taxonomy import load_taxonomy, render_all

DIM = 64
PER_GROUP = 200
DELTA = 2.0  # planted shift along the caption direction, pre-normalization
BASELINE_WORDS = 50

# word -> (race, gender) receiving the planted association
PLANTED = {
    "homemaker": (Race.INDIAN, Gender.FEMALE),
    "CEO": (Race.WHITE, Gender.MALE),
    "farmer": (Race.INDIAN, Gender.MALE),
    "terrorist": (Race.MIDDLE_EASTERN, Gender.MALE),
    "ambitious": (Race.EAST_ASIAN, Gender.MALE),
}

TAXONOMY = [
    {"category": "Occupation", "words": [
        {"text": "homemaker", "kind": "Noun"},
        {"text": "CEO", "kind": "Noun"},
        {"text": "farmer", "kind": "Noun"},
        {"text": "nurse", "kind": "Noun"},
        {"text": "pilot", "kind": "Noun"},
    ]},
    {"category": "CriminalJustice", "words": [
        {"text": "terrorist", "kind": "Noun"},
        {"text": "thief", "kind": "Noun"},
    ]},
    {"category": "Behavioral", "words": [
        {"text": "ambitious", "kind": "Adjective"},
        {"text": "calm", "kind": "Adjective"},
    ]},
]


def build_fixture(out_dir: Path, seed: int = 7) -> None:
    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    groups = [(race, gender) for race in RACES for gender in GENDERS]
    n = PER_GROUP * len(groups)

    # round-robin group assignment so record order mixes groups
    metadata = []
    group_rows: dict[tuple[Race, Gender], list[int]] = {g: [] for g in groups}
    for i in range(n):
        race, gender = groups[i % len(groups)]
        metadata.append(DemographicRecord(
            record_id=f"img_{i:05d}", race=race, gender=gender, age_band=None,
        ))
        group_rows[(race, gender)].append(i)

    taxonomy_path = out_dir / "taxonomy.json"
    taxonomy_path.write_text(json.dumps(TAXONOMY, indent=1) + "\n",
                             encoding="utf-8")
    taxonomy = load_taxonomy(taxonomy_path)
    captions = render_all(taxonomy)
    words = [c.source_word.text for c in captions]
    assert set(PLANTED) <= set(words)

    # mutually orthonormal caption directions
    basis, _ = np.linalg.qr(rng.standard_normal((DIM, len(captions))))
    caption_vecs = basis.T.copy()

    raw = rng.standard_normal((n, DIM))
    for word, (race, gender) in PLANTED.items():
        direction = caption_vecs[words.index(word)]
        rows = group_rows[(race, gender)]
        raw[rows] += DELTA * direction
    images = raw / np.linalg.norm(raw, axis=1, keepdims=True)

    _check_planted_structure(images, caption_vecs, words, metadata, group_rows)

    write_labeled(
        LabeledEmbeddings(
            embeddings=EmbeddingSet.from_matrix(images, normalized=True),
            metadata=metadata,
        ),
        out_dir / "images.emb",
        out_dir / "images.csv",
    )
    write_embeddings(EmbeddingSet.from_matrix(caption_vecs, normalized=True),
                     out_dir / "captions.emb")

    with open(out_dir / "captions.txt", "w", encoding="utf-8") as fh:
        for caption in captions:
            fh.write(caption.text + "\n")
    manifest = {
        "captions": [
            {"caption": c.text, "word": c.source_word.text,
             "kind": c.source_word.kind.value, "category": c.category.value}
            for c in captions
        ],
    }
    manifest_path = out_dir / "captions.manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n",
                             encoding="utf-8")
    sidecar = {
        "source_manifest_sha256":
            hashlib.sha256(manifest_path.read_bytes()).hexdigest(),
        "model": "synthetic-fixture",
        "count": len(captions),
    }
    (out_dir / "captions.emb.sidecar.json").write_text(
        json.dumps(sidecar, indent=1) + "\n", encoding="utf-8")

    baseline = rng.standard_normal((BASELINE_WORDS, DIM))
    baseline /= np.linalg.norm(baseline, axis=1, keepdims=True)
    write_embeddings(EmbeddingSet.from_matrix(baseline, normalized=True),
                     out_dir / "baseline.emb")

    ground_truth = {
        "seed": seed,
        "delta": DELTA,
        "dim": DIM,
        "per_group": PER_GROUP,
        "planted": {
            word: f"{race.value}{gender.value}"
            for word, (race, gender) in PLANTED.items()
        },
        "unplanted": [w for w in words if w not in PLANTED],
    }
    (out_dir / "planted.json").write_text(
        json.dumps(ground_truth, indent=1) + "\n", encoding="utf-8")
    print(f"fixture written to {out_dir}")


def _check_planted_structure(images, caption_vecs, words, metadata,
                             group_rows) -> None:
    """Verify the planted geometry with direct arithmetic.

    Each planted group must have the highest mean similarity and the
    top-100 plurality for its word, and each planted word's retrieval
    entropy must sit well below every unplanted word's.
    """
    k = 100
    group_of_row = {
        i: f"{rec.race.value}{rec.gender.value}" for i, rec in enumerate(metadata)
    }
    planted_entropies, unplanted_entropies = [], []
    for j, word in enumerate(words):
        sims = images @ caption_vecs[j]
        top = np.argsort(-sims)[:k]
        counts: dict[str, int] = {}
        for row in top:
            label = group_of_row[int(row)]
            counts[label] = counts.get(label, 0) + 1
        entropy = -sum((c / k) * math.log(c / k) for c in counts.values())
        entropy /= math.log(14)
        if word in PLANTED:
            race, gender = PLANTED[word]
            label = f"{race.value}{gender.value}"
            means = {
                f"{r.value}{g.value}": float(np.mean(sims[rows]))
                for (r, g), rows in group_rows.items()
            }
            assert max(means, key=means.get) == label, (word, means)
            assert max(counts, key=counts.get) == label, (word, counts)
            planted_entropies.append(entropy)
        else:
            unplanted_entropies.append(entropy)
    margin = min(unplanted_entropies) - max(planted_entropies)
    assert margin >= 0.2, f"entropy margin {margin:.3f} too thin"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    build_fixture(Path(args.out), seed=args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
