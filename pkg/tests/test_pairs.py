import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archrank.errors import DegenerateSplit, MissingMetric, TooFewRecords
from archrank.pairs import Direction, build_pairs, load_pairs, save_pairs, split_by_architecture
from archrank.seeding import substream
from archrank.space import arch_hash, preset_synthetic_small

from conftest import sample_records


def distinct_records(space, n, seed=0):
    """Records whose quality values are all distinct, so no pair is dropped."""
    records = sample_records(space, n, seed=seed)
    return [dataclasses.replace(r, quality_loss=float(i)) for i, r in enumerate(records)]


def test_pair_count_without_ties(small_space):
    records = distinct_records(small_space, 20)
    assert len(build_pairs(records)) == 2 * (20 * 19 // 2)


def test_both_directions_present_with_flipped_labels(small_space):
    records = distinct_records(small_space, 8)
    seen = {(p.left, p.right): p.label for p in build_pairs(records)}
    assert len(seen) == 8 * 7
    for (l, r), label in seen.items():
        assert seen[(r, l)] == 1 - label


def test_label_matches_metric_order(small_space):
    records = distinct_records(small_space, 6)
    for p in build_pairs(records):
        better = records[p.left].quality_loss < records[p.right].quality_loss
        assert p.label == (1 if better else 0)


def test_direction_flips_labels(small_space):
    records = distinct_records(small_space, 6)
    lower = {(p.left, p.right): p.label for p in build_pairs(records)}
    higher = {(p.left, p.right): p.label
              for p in build_pairs(records, direction=Direction.HIGHER_IS_BETTER)}
    assert set(lower) == set(higher)
    assert all(higher[k] == 1 - lower[k] for k in lower)


def test_ties_are_dropped(small_space):
    records = distinct_records(small_space, 5)
    records[1] = dataclasses.replace(records[1], quality_loss=records[0].quality_loss)
    pairs = build_pairs(records)
    assert len(pairs) == 2 * (5 * 4 // 2 - 1)
    assert all({p.left, p.right} != {0, 1} for p in pairs)


def test_latency_metric_pairs(small_space):
    records = sample_records(small_space, 10, seed=3)
    pairs = build_pairs(records, metric="latency_ms")
    for p in pairs[:10]:
        faster = records[p.left].latency_ms < records[p.right].latency_ms
        assert p.label == (1 if faster else 0)


def test_missing_metric_raises(small_space):
    records = distinct_records(small_space, 4)
    with pytest.raises(MissingMetric):
        build_pairs(records, metric="bleu")


def test_too_few_records(small_space):
    records = distinct_records(small_space, 1)
    with pytest.raises(TooFewRecords):
        build_pairs(records)


def test_max_pairs_subsamples_deterministically(small_space):
    # max_pairs counts unordered comparisons; each yields both orientations
    records = distinct_records(small_space, 15)
    a = build_pairs(records, max_pairs=40, rng=substream(9, "pair-sampling"))
    b = build_pairs(records, max_pairs=40, rng=substream(9, "pair-sampling"))
    assert len(a) == 80
    assert a == b
    mirrors = {(p.left, p.right): p.label for p in a}
    assert all(mirrors[(r, l)] == 1 - lab for (l, r), lab in mirrors.items())
    c = build_pairs(records, max_pairs=40, rng=substream(10, "pair-sampling"))
    assert a != c


def test_max_pairs_larger_than_population_keeps_everything(small_space):
    records = distinct_records(small_space, 6)
    assert len(build_pairs(records, max_pairs=10_000, rng=substream(0, "x"))) == 30


@given(st.integers(min_value=2, max_value=9))
@settings(max_examples=10, deadline=None)
def test_pair_label_antisymmetry_property(n):
    records = distinct_records(preset_synthetic_small(), n, seed=n)
    seen = {(p.left, p.right): p.label for p in build_pairs(records)}
    assert all(seen[(r, l)] == 1 - lab for (l, r), lab in seen.items())


# --- splitting ----------------------------------------------------------------

def test_split_is_disjoint_and_complete(small_space):
    records = sample_records(small_space, 50, seed=4)
    train, val = split_by_architecture(records, 0.2, substream(4, "split"))
    assert len(train) + len(val) == 50
    train_hashes = {arch_hash(r.arch) for r in train}
    val_hashes = {arch_hash(r.arch) for r in val}
    assert not (train_hashes & val_hashes)


def test_split_groups_repeated_measurements(small_space):
    records = sample_records(small_space, 20, seed=5)
    doubled = records + [dataclasses.replace(r, quality_loss=r.quality_loss + 0.5)
                         for r in records]
    train, val = split_by_architecture(doubled, 0.25, substream(5, "split"))
    train_hashes = {arch_hash(r.arch) for r in train}
    val_hashes = {arch_hash(r.arch) for r in val}
    assert not (train_hashes & val_hashes)


def test_split_fraction_roughly_respected(small_space):
    records = sample_records(small_space, 100, seed=6)
    train, val = split_by_architecture(records, 0.2, substream(6, "split"))
    assert 10 <= len(val) <= 30


def test_split_is_deterministic(small_space):
    records = sample_records(small_space, 30, seed=7)
    a = split_by_architecture(records, 0.2, substream(7, "split"))
    b = split_by_architecture(records, 0.2, substream(7, "split"))
    assert a == b


def test_split_needs_two_architectures(small_space):
    records = sample_records(small_space, 1, seed=8)
    with pytest.raises(DegenerateSplit):
        split_by_architecture(records * 4, 0.25, substream(8, "split"))


# --- pair file round trip -------------------------------------------------------

def test_pair_file_round_trip(tmp_path, small_space):
    records = distinct_records(small_space, 10)
    pairs = build_pairs(records, max_pairs=25, rng=substream(2, "pair-sampling"))
    path = str(tmp_path / "pairs.jsonl")
    save_pairs(path, pairs, records)
    assert load_pairs(path, records) == pairs
