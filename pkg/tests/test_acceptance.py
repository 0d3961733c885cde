"""Acceptance gate: eight end-to-end criteria, one verdict line each.

Every criterion checks the engine against an oracle coded here from
scratch (plain-Python arithmetic, full sorts, hand counts), so a bug
would have to appear twice, in different code, to slip through.  The
verdict lines are collected in support.ACCEPTANCE_LINES and echoed in
the terminal summary; run with -s to see them inline as well.
"""

import functools
import json
import math
import time

import numpy as np

import support
from vlbias.cli import main
from vlbias.corpus import scan_captions, stats_to_dict
from vlbias.errors import AlignmentError, FormatError
from vlbias.metrics import (
    GroupDistribution,
    GroupMask,
    casc,
    intersection_labels,
    normalized_entropy,
    relevance_score,
    topk,
)
from vlbias.store import (
    EmbeddingSet,
    load_labeled,
    read_embeddings,
    write_embeddings,
    write_metadata,
)

from test_corpus import HAND_CAPTIONS, HAND_EXPECTED, HAND_WORDS


def criterion(cid, title):
    """Run a criterion body; record a PASS/FAIL line either way.

    The body returns a detail string for the PASS line and raises
    (usually AssertionError) to fail.
    """

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
                support.ACCEPTANCE_LINES.append(
                    f"{cid} FAIL: {title} ({reason})"
                )
                raise
            support.ACCEPTANCE_LINES.append(f"{cid} PASS: {title} ({detail})")

        return run

    return wrap


def casc_oracle(sims, members):
    """Effect size recomputed with fsum arithmetic, no numpy."""
    values = [float(v) for v in sims]
    inside = [values[i] for i in members]
    member_set = set(int(i) for i in members)
    outside = [v for i, v in enumerate(values) if i not in member_set]
    mean_in = math.fsum(inside) / len(inside)
    mean_out = math.fsum(outside) / len(outside)
    mean_all = math.fsum(values) / len(values)
    variance = math.fsum((v - mean_all) ** 2 for v in values) / len(values)
    return (mean_in - mean_out) / math.sqrt(variance)


@criterion("A1", "effect size matches a from-scratch oracle on 500 cases")
def test_a1_casc_oracle():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        sims = rng.standard_normal(200)
        size = int(rng.integers(1, 200))
        members = rng.choice(200, size=size, replace=False)
        members.sort()
        rest = np.setdiff1d(np.arange(200), members)
        engine = casc(sims, GroupMask("g", members))
        oracle = casc_oracle(sims, members)
        worst = max(worst, abs(engine - oracle))
        assert abs(engine - oracle) < 1e-9, (
            f"engine {engine!r} vs oracle {oracle!r}"
        )
        mirror = casc(sims, GroupMask("rest", rest))
        assert abs(engine + mirror) < 1e-9, "antisymmetry broken"
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s, budget 5s"
    return f"max diff {worst:.2e}, antisymmetric, {elapsed:.2f}s < 5s"


@criterion("A2", "effect size is invariant under positive affine rescaling")
def test_a2_affine_invariance():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        sims = rng.standard_normal(200)
        size = int(rng.integers(1, 200))
        members = rng.choice(200, size=size, replace=False)
        base = casc(sims, GroupMask("g", members))
        for _ in range(10):
            scale = float(rng.uniform(0.01, 100.0))
            shift = float(rng.uniform(-50.0, 50.0))
            moved = casc(scale * sims + shift, GroupMask("g", members))
            worst = max(worst, abs(moved - base))
            assert abs(moved - base) < 1e-9, (
                f"a={scale} b={shift}: {base!r} became {moved!r}"
            )
    return f"1000 rescalings, max drift {worst:.2e} < 1e-9"


@criterion("A3", "entropy hits its closed-form anchor points")
def test_a3_entropy_suite():
    labels = intersection_labels()
    uniform = GroupDistribution(labels, [1.0 / 14] * 14)
    value = normalized_entropy(uniform)
    assert abs(value - 1.0) <= 1e-12, f"uniform gave {value!r}"

    point = [0.0] * 14
    point[5] = 1.0
    value = normalized_entropy(GroupDistribution(labels, point))
    assert value == 0.0, f"point mass gave {value!r}"

    half = [0.0] * 14
    half[0] = half[1] = 0.5
    value = normalized_entropy(GroupDistribution(labels, half))
    oracle = -(0.5 * math.log(0.5) + 0.5 * math.log(0.5)) / math.log(14)
    assert abs(value - oracle) <= 1e-12, f"{value!r} vs formula {oracle!r}"
    assert abs(oracle - 0.2626) < 1e-4
    return f"uniform=1, point=0, two-group split={value:.6f}"


@criterion("A4", "top-k equals a full sort on 1000 tie-heavy vectors")
def test_a4_topk_oracle():
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    for _ in range(1000):
        # two-decimal quantization plants hundreds of ties per vector
        sims = np.round(rng.standard_normal(1000), 2)
        engine = [i for i, _ in topk(sims, 100)]
        oracle = sorted(range(1000), key=lambda i: (-sims[i], i))[:100]
        assert engine == oracle, "index sequences differ"
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"
    return f"1000 vectors, sequences identical incl. ties, {elapsed:.2f}s < 10s"


@criterion("A5", "planted bias is recovered end-to-end through the CLI")
def test_a5_planted_end_to_end(fixture_dir, tmp_path):
    start = time.perf_counter()
    out_dir = tmp_path / "out"
    code = main([
        "audit",
        "--embeddings", str(fixture_dir / "images.emb"),
        "--metadata", str(fixture_dir / "images.csv"),
        "--caption-vectors", str(fixture_dir / "captions.emb"),
        "--taxonomy", str(fixture_dir / "taxonomy.json"),
        "--model", "planted", "--dataset", "fixture",
        "--k", "100", "--out", str(out_dir), "--no-figures",
    ])
    assert code == 0, f"audit exited {code}"
    report = json.loads((out_dir / "report.json").read_text())
    truth = json.loads((fixture_dir / "planted.json").read_text())

    audits = {
        wa["caption"]["word"]: wa
        for cat in report["categories"]
        for wa in cat["word_audits"]
    }
    labels = intersection_labels()
    for word, group in truth["planted"].items():
        wa = audits[word]
        by_label = {lab: wa["casc_by_group"][lab] for lab in labels}
        argmax = max(by_label, key=by_label.get)
        assert argmax == group, f"{word}: casc argmax {argmax}, planted {group}"
        dist = wa["retrieval_distributions"]["race_gender"]
        plurality = dist["group_labels"][
            int(np.argmax(dist["probabilities"]))
        ]
        assert plurality == group, (
            f"{word}: top-k plurality {plurality}, planted {group}"
        )
    planted_entropies = {
        w: audits[w]["normalized_entropies"]["race_gender"]
        for w in truth["planted"]
    }
    unplanted_entropies = {
        w: audits[w]["normalized_entropies"]["race_gender"]
        for w in truth["unplanted"]
    }
    gap = min(unplanted_entropies.values()) - max(planted_entropies.values())
    assert gap >= 0.1, (
        f"entropy gap {gap:.3f} < 0.1 "
        f"(planted max {max(planted_entropies.values()):.3f}, "
        f"unplanted min {min(unplanted_entropies.values()):.3f})"
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s, budget 30s"
    return (
        f"5/5 words: argmax+plurality correct, entropy gap "
        f"{gap:.2f} >= 0.1, {elapsed:.2f}s < 30s"
    )


@criterion("A6", "corpus scan reproduces hand tallies for any worker count")
def test_a6_corpus_scanner():
    baseline = scan_captions(HAND_CAPTIONS, HAND_WORDS)
    tallies = {
        word: (c.male_count, c.female_count, c.mixed_count)
        for word, c in baseline.per_word.items()
    }
    assert tallies == HAND_EXPECTED, f"tallies {tallies}"

    reversed_stats = scan_captions(list(reversed(HAND_CAPTIONS)), HAND_WORDS)
    assert stats_to_dict(reversed_stats) == stats_to_dict(baseline), (
        "caption order changed the counts"
    )
    for workers in (1, 2, 8):
        run = scan_captions(HAND_CAPTIONS, HAND_WORDS, workers=workers,
                            chunk_size=3)
        assert stats_to_dict(run) == stats_to_dict(baseline), (
            f"{workers} workers changed the counts"
        )

    from vlbias.corpus import proportions

    checked = 0
    for row in proportions(baseline):
        if row.male_pct is None:
            continue
        assert row.male_pct + row.female_pct == 100.0, (
            f"{row.word}: {row.male_pct} + {row.female_pct} != 100.0"
        )
        checked += 1
    assert checked == len(HAND_WORDS)
    return (
        f"12 captions, {len(HAND_WORDS)} words exact; order and 1/2/8 "
        f"workers identical; splits sum to 100.0"
    )


@criterion("A7", "binary sets round-trip bit-exact and bad files are refused")
def test_a7_format_round_trip(tmp_path):
    rng = np.random.default_rng(707)
    for case in range(50):
        count = int(rng.integers(1, 40))
        dim = int(rng.integers(1, 96))
        matrix = rng.standard_normal((count, dim)).astype(np.float32)
        normalized = bool(rng.integers(2))
        if normalized:
            wide = matrix.astype(np.float64)
            matrix = (
                wide / np.linalg.norm(wide, axis=1, keepdims=True)
            ).astype(np.float32)
        original = EmbeddingSet.from_matrix(matrix, normalized=normalized)
        path = tmp_path / f"set_{case}.emb"
        write_embeddings(original, path)
        loaded = read_embeddings(path)
        assert loaded.vectors.tobytes() == matrix.tobytes(), "payload changed"
        assert loaded.normalized == normalized
        assert (loaded.count, loaded.dim) == (count, dim)

    good = tmp_path / "set_0.emb"
    bad_magic = tmp_path / "bad_magic.emb"
    bad_magic.write_bytes(b"XXXX" + good.read_bytes()[4:])
    try:
        read_embeddings(bad_magic)
        raise AssertionError("bad magic was accepted")
    except FormatError:
        pass

    truncated = tmp_path / "truncated.emb"
    truncated.write_bytes(good.read_bytes()[:-3])
    try:
        read_embeddings(truncated)
        raise AssertionError("truncated payload was accepted")
    except FormatError:
        pass

    matrix = rng.standard_normal((4, 8))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    emb_path = tmp_path / "aligned.emb"
    write_embeddings(EmbeddingSet.from_matrix(matrix, normalized=True), emb_path)
    from support import balanced_dataset

    meta_path = tmp_path / "misaligned.csv"
    write_metadata(balanced_dataset(rows_per_group=1).metadata[:3], meta_path)
    try:
        load_labeled(emb_path, meta_path)
        raise AssertionError("misaligned metadata was accepted")
    except AlignmentError:
        pass
    return "50 round trips bit-exact; magic/truncation/misalignment refused"


@criterion("A8", "relevance equals an empirical-CDF counting oracle")
def test_a8_relevance_cdf():
    rng = np.random.default_rng(808)
    for _ in range(100):
        baseline = rng.random(int(rng.integers(1, 300))).tolist()
        probe = float(rng.random())
        engine = relevance_score(probe, baseline)
        oracle = sum(1 for b in baseline if b < probe) / len(baseline)
        assert engine == oracle, f"{engine!r} vs counted {oracle!r}"

    baseline = rng.random(120).tolist()
    probes = sorted(float(v) for v in rng.random(60))
    scores = [relevance_score(p, baseline) for p in probes]
    assert all(a <= b for a, b in zip(scores, scores[1:])), (
        "relevance not monotone in the probe value"
    )
    return "100 baselines exact; monotone over 60 sorted probes"
