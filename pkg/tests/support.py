"""Helpers shared across test modules.

These live outside conftest.py so tests can import them under a module
name that stays unambiguous when another test root (the adapter's) is
collected in the same run.
"""

import numpy as np

from vlbias.store import (
    GENDERS,
    RACES,
    DemographicRecord,
    EmbeddingSet,
    LabeledEmbeddings,
)

# One line per acceptance criterion, filled in by test_acceptance.py and
# echoed after the run so the verdicts are visible without -s.
ACCEPTANCE_LINES: list[str] = []


def balanced_dataset(rows_per_group: int = 8, dim: int = 16,
                     seed: int = 11) -> LabeledEmbeddings:
    """Small labeled set covering every race-gender intersection."""
    rng = np.random.default_rng(seed)
    groups = [(race, gender) for race in RACES for gender in GENDERS]
    metadata = []
    for i in range(rows_per_group * len(groups)):
        race, gender = groups[i % len(groups)]
        metadata.append(DemographicRecord(
            record_id=f"row_{i:04d}", race=race, gender=gender,
        ))
    vectors = rng.standard_normal((len(metadata), dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return LabeledEmbeddings(
        embeddings=EmbeddingSet.from_matrix(vectors, normalized=True),
        metadata=metadata,
    )
