import pytest

from archrank.oracle import SyntheticOracle, default_synthetic_config
from archrank.seeding import substream
from archrank.space import (
    FeatureDef,
    Kind,
    Scope,
    SearchSpace,
    arch_hash,
    preset_synthetic_small,
    sample_uniform,
    validate_space,
)


@pytest.fixture
def small_space():
    return preset_synthetic_small()


@pytest.fixture
def tiny_space():
    """Three global features, 24 architectures total. Cheap to enumerate."""
    space = SearchSpace(
        features=(
            FeatureDef("Dec Layer Num", Scope.GLOBAL, Kind.ORDINAL, (1, 2)),
            FeatureDef("Dec Emb Dim", Scope.GLOBAL, Kind.ORDINAL, (64, 128, 256)),
            FeatureDef("Dec FFN Dim", Scope.GLOBAL, Kind.ORDINAL, (128, 256)),
            FeatureDef("Dec Norm Type", Scope.GLOBAL, Kind.CATEGORICAL, ("pre_norm", "post_norm")),
        ),
        max_encoder_layers=0,
        max_decoder_layers=2,
    )
    validate_space(space)
    return space


@pytest.fixture
def layered_space():
    """Per-layer decoder features with variable depth."""
    space = SearchSpace(
        features=(
            FeatureDef("Dec Layer Num", Scope.GLOBAL, Kind.ORDINAL, (1, 2, 3)),
            FeatureDef("Dec Emb Dim", Scope.GLOBAL, Kind.ORDINAL, (64, 128)),
            FeatureDef("Dec FFN Dim", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (128, 256)),
            FeatureDef("Dec Head Num", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (2, 4)),
        ),
        max_encoder_layers=0,
        max_decoder_layers=3,
    )
    validate_space(space)
    return space


def sample_records(space, n, seed, noise_sigma=0.0):
    """Evaluate n distinct uniform samples with the default synthetic oracle."""
    oracle = SyntheticOracle(default_synthetic_config(space, seed=seed, noise_sigma=noise_sigma))
    rng = substream(seed, "sampling")
    seen = set()
    archs = []
    while len(archs) < n:
        arch = sample_uniform(space, rng)
        if arch_hash(arch) not in seen:
            seen.add(arch_hash(arch))
            archs.append(arch)
    return oracle.batch(archs)


@pytest.fixture
def small_records(small_space):
    return sample_records(small_space, 80, seed=0, noise_sigma=0.05)
