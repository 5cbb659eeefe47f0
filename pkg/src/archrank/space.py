"""Search space model.

A space declares named features (global or per-layer), each with a finite
ordered domain. Architectures are full assignments of those features, and
every architecture maps to a fixed-shape numeric matrix so that models never
see variable-length input. Depth is elastic: the reserved global features
``Enc Layer Num`` and ``Dec Layer Num``, when present, control how many
layer slots are active.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import (
    BadDepthDomain,
    DuplicateDomainValue,
    DuplicateFeature,
    EmptyDomain,
    FixedValueOutOfDomain,
    IncompleteAssignment,
    SpaceError,
    UnknownFeature,
    UnorderedOrdinalDomain,
    ValueOutOfDomain,
)

Value = Union[int, str]
SlotKey = tuple[str, Union[int, None]]

ENCODER_DEPTH_FEATURE = "Enc Layer Num"
DECODER_DEPTH_FEATURE = "Dec Layer Num"


class Scope(str, Enum):
    GLOBAL = "global"
    PER_ENCODER_LAYER = "per_encoder_layer"
    PER_DECODER_LAYER = "per_decoder_layer"


class Kind(str, Enum):
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureDef:
    """One searchable feature: a name, where it applies, and its domain.

    Ordinal domains hold increasing positive numbers and are encoded by raw
    value; categorical domains hold arbitrary tokens encoded by 1-based
    domain position. Zero is reserved as the inactive-slot sentinel.
    """

    name: str
    scope: Scope
    kind: Kind
    domain: tuple[Value, ...]

    def domain_index(self, value: Value) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise ValueOutOfDomain(
                f"value {value!r} not in domain of feature {self.name!r}"
            ) from None


@dataclass(frozen=True)
class SearchSpace:
    """An immutable feature declaration plus optional fixed assignments.

    ``fixed`` maps (feature name, slot) to a pinned value; slot is None for
    global features and a 0-based layer index otherwise. Operations that
    narrow a space return a new instance.
    """

    features: tuple[FeatureDef, ...]
    max_encoder_layers: int
    max_decoder_layers: int
    fixed: Mapping[SlotKey, Value] = field(default_factory=dict)

    def feature(self, name: str) -> FeatureDef:
        for fd in self.features:
            if fd.name == name:
                return fd
        raise UnknownFeature(f"no feature named {name!r}")

    def feature_row(self, name: str) -> int:
        for i, fd in enumerate(self.features):
            if fd.name == name:
                return i
        raise UnknownFeature(f"no feature named {name!r}")

    def has_feature(self, name: str) -> bool:
        return any(fd.name == name for fd in self.features)

    @property
    def encoding_width(self) -> int:
        # at least one column so global features always have a home
        return max(1, self.max_encoder_layers, self.max_decoder_layers)

    @property
    def encoding_shape(self) -> tuple[int, int]:
        return (len(self.features), self.encoding_width)

    def max_layers_for(self, scope: Scope) -> int:
        if scope == Scope.PER_ENCODER_LAYER:
            return self.max_encoder_layers
        if scope == Scope.PER_DECODER_LAYER:
            return self.max_decoder_layers
        raise SpaceError("global features have no layer dimension")

    def slot_choices(self, fd: FeatureDef, slot: int | None) -> tuple[Value, ...]:
        """Values a slot may take, honouring any fixed pin."""
        pinned = self.fixed.get((fd.name, slot))
        if pinned is not None:
            return (pinned,)
        return fd.domain

    def depth_options(self, scope: Scope) -> list[int]:
        """Possible active layer counts for one stack, in domain order."""
        name = (
            ENCODER_DEPTH_FEATURE
            if scope == Scope.PER_ENCODER_LAYER
            else DECODER_DEPTH_FEATURE
        )
        if not self.has_feature(name):
            return [self.max_layers_for(scope)]
        pinned = self.fixed.get((name, None))
        if pinned is not None:
            return [int(pinned)]
        return [int(v) for v in self.feature(name).domain]


@dataclass(frozen=True)
class Architecture:
    """A complete assignment of one space's features.

    Per-layer features are assigned for exactly the active slots of their
    stack; globals use slot None.
    """

    space: SearchSpace
    assignment: Mapping[SlotKey, Value]

    @property
    def encoder_layers(self) -> int:
        if self.space.has_feature(ENCODER_DEPTH_FEATURE):
            return int(self.assignment[(ENCODER_DEPTH_FEATURE, None)])
        return self.space.max_encoder_layers

    @property
    def decoder_layers(self) -> int:
        if self.space.has_feature(DECODER_DEPTH_FEATURE):
            return int(self.assignment[(DECODER_DEPTH_FEATURE, None)])
        return self.space.max_decoder_layers

    def active_layers(self, scope: Scope) -> int:
        return (
            self.encoder_layers
            if scope == Scope.PER_ENCODER_LAYER
            else self.decoder_layers
        )

    def value(self, name: str, slot: int | None = None) -> Value:
        return self.assignment[(name, slot)]

    def values_for(self, name: str) -> list[Value]:
        """All assigned values of one feature (one element for globals)."""
        fd = self.space.feature(name)
        if fd.scope == Scope.GLOBAL:
            return [self.assignment[(name, None)]]
        return [
            self.assignment[(name, s)] for s in range(self.active_layers(fd.scope))
        ]


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    """Fixed-shape numeric view of an architecture, rows in feature order."""

    data: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


# --- validation ---------------------------------------------------------------


def validate_space(space: SearchSpace) -> None:
    """Check structural invariants, raising on the first violation found."""
    if space.max_encoder_layers < 0 or space.max_decoder_layers < 0:
        raise SpaceError("layer bounds must be non-negative")

    seen: set[str] = set()
    for fd in space.features:
        if fd.name in seen:
            raise DuplicateFeature(f"feature {fd.name!r} declared twice")
        seen.add(fd.name)

        if len(fd.domain) == 0:
            raise EmptyDomain(f"feature {fd.name!r} has an empty domain")
        if len(set(fd.domain)) != len(fd.domain):
            raise DuplicateDomainValue(f"feature {fd.name!r} repeats a domain value")
        if fd.kind == Kind.ORDINAL:
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in fd.domain):
                raise UnorderedOrdinalDomain(
                    f"ordinal feature {fd.name!r} must have numeric values"
                )
            if any(v <= 0 for v in fd.domain):  # zero is the inactive sentinel
                raise UnorderedOrdinalDomain(
                    f"ordinal feature {fd.name!r} must have positive values"
                )
            if list(fd.domain) != sorted(fd.domain):
                raise UnorderedOrdinalDomain(
                    f"ordinal feature {fd.name!r} must be strictly increasing"
                )

        if fd.scope != Scope.GLOBAL and space.max_layers_for(fd.scope) < 1:
            raise SpaceError(
                f"per-layer feature {fd.name!r} declared but its stack has no layers"
            )

    for name, bound in (
        (ENCODER_DEPTH_FEATURE, space.max_encoder_layers),
        (DECODER_DEPTH_FEATURE, space.max_decoder_layers),
    ):
        if space.has_feature(name):
            fd = space.feature(name)
            if fd.scope != Scope.GLOBAL or fd.kind != Kind.ORDINAL:
                raise BadDepthDomain(f"{name!r} must be a global ordinal feature")
            if any(not (1 <= int(v) <= bound) for v in fd.domain):
                raise BadDepthDomain(
                    f"{name!r} domain must lie within [1, {bound}]"
                )

    for (name, slot), value in space.fixed.items():
        fd = space.feature(name)  # raises UnknownFeature
        if fd.scope == Scope.GLOBAL:
            if slot is not None:
                raise UnknownFeature(
                    f"global feature {name!r} fixed with a layer index"
                )
        else:
            if slot is None or not (0 <= slot < space.max_layers_for(fd.scope)):
                raise UnknownFeature(
                    f"fixed slot {slot!r} out of range for feature {name!r}"
                )
        if value not in fd.domain:
            raise FixedValueOutOfDomain(
                f"fixed value {value!r} not in domain of feature {name!r}"
            )


# --- construction and sampling -------------------------------------------------


def _slot_layout(space: SearchSpace, enc_depth: int, dec_depth: int) -> list[tuple[SlotKey, FeatureDef]]:
    """Every assignable slot for the given depths, in canonical order."""
    out: list[tuple[SlotKey, FeatureDef]] = []
    for fd in space.features:
        if fd.name in (ENCODER_DEPTH_FEATURE, DECODER_DEPTH_FEATURE):
            continue
        if fd.scope == Scope.GLOBAL:
            out.append(((fd.name, None), fd))
        else:
            depth = enc_depth if fd.scope == Scope.PER_ENCODER_LAYER else dec_depth
            for s in range(depth):
                out.append(((fd.name, s), fd))
    return out


def build_architecture(space: SearchSpace, assignment: Mapping[SlotKey, Value]) -> Architecture:
    """Validate an assignment against the space and wrap it.

    Raises IncompleteAssignment for missing or extraneous slots,
    ValueOutOfDomain for bad values, and FixedValueOutOfDomain when a pinned
    slot is contradicted.
    """
    resolved: dict[SlotKey, Value] = {}
    depths: dict[Scope, int] = {}
    for scope, name in (
        (Scope.PER_ENCODER_LAYER, ENCODER_DEPTH_FEATURE),
        (Scope.PER_DECODER_LAYER, DECODER_DEPTH_FEATURE),
    ):
        if space.has_feature(name):
            if (name, None) not in assignment:
                raise IncompleteAssignment(f"missing value for {name!r}")
            fd = space.feature(name)
            v = assignment[(name, None)]
            fd.domain_index(v)
            resolved[(name, None)] = v
            depths[scope] = int(v)
        else:
            depths[scope] = space.max_layers_for(scope)

    layout = _slot_layout(
        space, depths[Scope.PER_ENCODER_LAYER], depths[Scope.PER_DECODER_LAYER]
    )
    for key, fd in layout:
        if key not in assignment:
            raise IncompleteAssignment(f"missing value for slot {key!r}")
        v = assignment[key]
        fd.domain_index(v)
        resolved[key] = v

    extra = set(assignment) - set(resolved)
    if extra:
        raise IncompleteAssignment(f"unexpected slots in assignment: {sorted(extra)!r}")

    for key, v in resolved.items():
        pinned = space.fixed.get(key)
        if pinned is not None and pinned != v:
            raise FixedValueOutOfDomain(
                f"slot {key!r} must stay fixed at {pinned!r}, got {v!r}"
            )
    return Architecture(space=space, assignment=resolved)


def random_value(fd: FeatureDef, rng: np.random.Generator) -> Value:
    return fd.domain[int(rng.integers(len(fd.domain)))]


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Architecture:
    """Draw one architecture uniformly over each free slot.

    Depths are drawn first so the set of active per-layer slots is known;
    fixed slots take their pinned value and consume no randomness.
    """
    assignment: dict[SlotKey, Value] = {}
    depths: dict[Scope, int] = {}
    for scope, name in (
        (Scope.PER_ENCODER_LAYER, ENCODER_DEPTH_FEATURE),
        (Scope.PER_DECODER_LAYER, DECODER_DEPTH_FEATURE),
    ):
        if space.has_feature(name):
            fd = space.feature(name)
            choices = space.slot_choices(fd, None)
            v = choices[0] if len(choices) == 1 else choices[int(rng.integers(len(choices)))]
            assignment[(name, None)] = v
            depths[scope] = int(v)
        else:
            depths[scope] = space.max_layers_for(scope)

    for key, fd in _slot_layout(
        space, depths[Scope.PER_ENCODER_LAYER], depths[Scope.PER_DECODER_LAYER]
    ):
        choices = space.slot_choices(fd, key[1])
        if len(choices) == 1:
            assignment[key] = choices[0]
        else:
            assignment[key] = choices[int(rng.integers(len(choices)))]
    return Architecture(space=space, assignment=assignment)


def enumerate_architectures(space: SearchSpace) -> Iterator[Architecture]:
    """Walk every architecture in the space, in a stable canonical order."""
    enc_opts = space.depth_options(Scope.PER_ENCODER_LAYER)
    dec_opts = space.depth_options(Scope.PER_DECODER_LAYER)
    for enc_d in enc_opts:
        for dec_d in dec_opts:
            base: dict[SlotKey, Value] = {}
            if space.has_feature(ENCODER_DEPTH_FEATURE):
                base[(ENCODER_DEPTH_FEATURE, None)] = enc_d
            if space.has_feature(DECODER_DEPTH_FEATURE):
                base[(DECODER_DEPTH_FEATURE, None)] = dec_d
            layout = _slot_layout(space, enc_d, dec_d)
            keys = [key for key, _ in layout]
            pools = [space.slot_choices(fd, key[1]) for key, fd in layout]
            for combo in itertools.product(*pools):
                assignment = dict(base)
                assignment.update(zip(keys, combo))
                yield Architecture(space=space, assignment=assignment)


def cardinality(space: SearchSpace) -> int:
    """Exact architecture count, summing over elastic depth choices."""
    total = 1
    for fd in space.features:
        if fd.scope == Scope.GLOBAL and fd.name not in (
            ENCODER_DEPTH_FEATURE,
            DECODER_DEPTH_FEATURE,
        ):
            total *= len(space.slot_choices(fd, None))

    for scope in (Scope.PER_ENCODER_LAYER, Scope.PER_DECODER_LAYER):
        per_layer = [fd for fd in space.features if fd.scope == scope]
        stack_total = 0
        for depth in space.depth_options(scope):
            term = 1
            for fd in per_layer:
                for slot in range(depth):
                    term *= len(space.slot_choices(fd, slot))
            stack_total += term
        total *= stack_total
    return total


def fix_feature(
    space: SearchSpace,
    feature: str,
    value: Value,
    layer: int | None = None,
) -> SearchSpace:
    """Pin a feature to one value, returning the narrowed space.

    For per-layer features, ``layer=None`` pins every slot to the same
    value; pass a layer index to pin a single slot.
    """
    fd = space.feature(feature)
    if value not in fd.domain:
        raise FixedValueOutOfDomain(
            f"cannot fix {feature!r} to {value!r}: not in domain"
        )
    fixed = dict(space.fixed)
    if fd.scope == Scope.GLOBAL:
        if layer is not None:
            raise UnknownFeature(f"global feature {feature!r} takes no layer index")
        fixed[(feature, None)] = value
    elif layer is None:
        for slot in range(space.max_layers_for(fd.scope)):
            fixed[(feature, slot)] = value
    else:
        if not (0 <= layer < space.max_layers_for(fd.scope)):
            raise UnknownFeature(f"layer {layer} out of range for {feature!r}")
        fixed[(feature, layer)] = value
    return SearchSpace(
        features=space.features,
        max_encoder_layers=space.max_encoder_layers,
        max_decoder_layers=space.max_decoder_layers,
        fixed=fixed,
    )


def fix_slots(space: SearchSpace, pins: Mapping[SlotKey, Value]) -> SearchSpace:
    """Pin many slots at once (validated the same way as fix_feature)."""
    out = space
    for (name, slot), value in pins.items():
        out = fix_feature(out, name, value, layer=slot)
    return out


# --- encoding -------------------------------------------------------------------


def encoded_value(fd: FeatureDef, value: Value) -> float:
    if fd.kind == Kind.ORDINAL:
        return float(value)  # type: ignore[arg-type]
    return 1.0 + fd.domain_index(value)


def encode(space: SearchSpace, arch: Architecture) -> EncodedMatrix:
    """Encode one architecture as a (features x layer-slots) float matrix.

    Global features sit in column 0; per-layer features occupy one column
    per active layer. Inactive cells stay at the 0 sentinel, which cannot
    collide with encoded values.
    """
    rows, width = space.encoding_shape
    mat = np.zeros((rows, width), dtype=np.float64)
    for i, fd in enumerate(space.features):
        if fd.scope == Scope.GLOBAL:
            mat[i, 0] = encoded_value(fd, arch.assignment[(fd.name, None)])
        else:
            for slot in range(arch.active_layers(fd.scope)):
                mat[i, slot] = encoded_value(fd, arch.assignment[(fd.name, slot)])
    mat.setflags(write=False)
    return EncodedMatrix(data=mat)


def encode_batch(space: SearchSpace, archs: Sequence[Architecture]) -> np.ndarray:
    """Stack encodings into an (n, features, slots) array."""
    rows, width = space.encoding_shape
    out = np.zeros((len(archs), rows, width), dtype=np.float64)
    for k, arch in enumerate(archs):
        out[k] = encode(space, arch).data
    return out


def decode(space: SearchSpace, matrix: EncodedMatrix) -> Architecture:
    """Invert encode() by domain lookup."""
    data = matrix.data
    assignment: dict[SlotKey, Value] = {}
    depths: dict[Scope, int] = {}
    for scope, name in (
        (Scope.PER_ENCODER_LAYER, ENCODER_DEPTH_FEATURE),
        (Scope.PER_DECODER_LAYER, DECODER_DEPTH_FEATURE),
    ):
        if space.has_feature(name):
            fd = space.feature(name)
            row = space.feature_row(name)
            v = _decode_cell(fd, data[row, 0])
            assignment[(name, None)] = v
            depths[scope] = int(v)
        else:
            depths[scope] = space.max_layers_for(scope)

    for key, fd in _slot_layout(
        space, depths[Scope.PER_ENCODER_LAYER], depths[Scope.PER_DECODER_LAYER]
    ):
        row = space.feature_row(fd.name)
        col = 0 if key[1] is None else key[1]
        assignment[key] = _decode_cell(fd, data[row, col])
    return build_architecture(space, assignment)


def _decode_cell(fd: FeatureDef, cell: float) -> Value:
    if fd.kind == Kind.ORDINAL:
        for v in fd.domain:
            if float(v) == cell:  # type: ignore[arg-type]
                return v
        raise ValueOutOfDomain(f"cell value {cell!r} not in domain of {fd.name!r}")
    idx = int(cell) - 1
    if not (0 <= idx < len(fd.domain)) or float(idx + 1) != cell:
        raise ValueOutOfDomain(f"cell value {cell!r} not in domain of {fd.name!r}")
    return fd.domain[idx]


# --- serialization ----------------------------------------------------------------


def space_to_json(space: SearchSpace) -> dict:
    fixed: dict[str, object] = {}
    for fd in space.features:
        if fd.scope == Scope.GLOBAL:
            if (fd.name, None) in space.fixed:
                fixed[fd.name] = space.fixed[(fd.name, None)]
            continue
        slots = {
            str(slot): space.fixed[(fd.name, slot)]
            for slot in range(space.max_layers_for(fd.scope))
            if (fd.name, slot) in space.fixed
        }
        if not slots:
            continue
        values = set(slots.values())
        if len(slots) == space.max_layers_for(fd.scope) and len(values) == 1:
            fixed[fd.name] = values.pop()  # uniform pin, scalar shorthand
        else:
            fixed[fd.name] = slots
    return {
        "features": [
            {
                "name": fd.name,
                "scope": fd.scope.value,
                "kind": fd.kind.value,
                "domain": list(fd.domain),
            }
            for fd in space.features
        ],
        "max_encoder_layers": space.max_encoder_layers,
        "max_decoder_layers": space.max_decoder_layers,
        "fixed": fixed,
    }


def space_from_json(obj: Mapping) -> SearchSpace:
    try:
        features = tuple(
            FeatureDef(
                name=f["name"],
                scope=Scope(f["scope"]),
                kind=Kind(f["kind"]),
                domain=tuple(f["domain"]),
            )
            for f in obj["features"]
        )
        max_enc = int(obj["max_encoder_layers"])
        max_dec = int(obj["max_decoder_layers"])
        fixed_json = obj.get("fixed", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise SpaceError(f"malformed space definition: {exc}") from exc

    space = SearchSpace(
        features=features, max_encoder_layers=max_enc, max_decoder_layers=max_dec
    )
    validate_space(space)

    pins: dict[SlotKey, Value] = {}
    for name, spec in fixed_json.items():
        fd = space.feature(name)
        if isinstance(spec, dict):
            if fd.scope == Scope.GLOBAL:
                raise SpaceError(f"global feature {name!r} fixed with a slot map")
            for slot_str, value in spec.items():
                pins[(name, int(slot_str))] = value
        elif fd.scope == Scope.GLOBAL:
            pins[(name, None)] = spec
        else:
            for slot in range(space.max_layers_for(fd.scope)):
                pins[(name, slot)] = spec
    space = SearchSpace(
        features=features,
        max_encoder_layers=max_enc,
        max_decoder_layers=max_dec,
        fixed=pins,
    )
    validate_space(space)
    return space


def assignment_to_json(arch: Architecture) -> dict:
    """Plain name-to-value object; per-layer features become lists."""
    out: dict[str, object] = {}
    for fd in arch.space.features:
        if fd.scope == Scope.GLOBAL:
            out[fd.name] = arch.assignment[(fd.name, None)]
        else:
            out[fd.name] = [
                arch.assignment[(fd.name, s)]
                for s in range(arch.active_layers(fd.scope))
            ]
    return out


def architecture_from_json(space: SearchSpace, obj: Mapping) -> Architecture:
    assignment: dict[SlotKey, Value] = {}
    for name, value in obj.items():
        fd = space.feature(name)
        if fd.scope == Scope.GLOBAL:
            assignment[(name, None)] = value
        else:
            if not isinstance(value, (list, tuple)):
                raise IncompleteAssignment(
                    f"per-layer feature {name!r} needs a list of values"
                )
            for slot, v in enumerate(value):
                assignment[(name, slot)] = v
    return build_architecture(space, assignment)


def arch_hash(arch: Architecture) -> str:
    """Stable content hash of an architecture's canonical JSON form."""
    payload = json.dumps(assignment_to_json(arch), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=16).hexdigest()


# --- presets ----------------------------------------------------------------------


def _translation_space(emb: list[int], ffn: list[int], heads: list[int]) -> SearchSpace:
    rpr = [8, 12, 16]
    norm = ["pre_norm", "post_norm"]
    features = (
        FeatureDef("Enc Layer Num", Scope.GLOBAL, Kind.ORDINAL, (6,)),
        FeatureDef("Enc Emb Dim", Scope.GLOBAL, Kind.ORDINAL, tuple(emb)),
        FeatureDef("Enc FFN Dim", Scope.PER_ENCODER_LAYER, Kind.ORDINAL, tuple(ffn)),
        FeatureDef("Enc Head Num", Scope.PER_ENCODER_LAYER, Kind.ORDINAL, tuple(heads)),
        FeatureDef("Enc RPR Len", Scope.PER_ENCODER_LAYER, Kind.ORDINAL, tuple(rpr)),
        FeatureDef("Enc Norm Type", Scope.GLOBAL, Kind.CATEGORICAL, tuple(norm)),
        FeatureDef("Dec Layer Num", Scope.GLOBAL, Kind.ORDINAL, (1, 2, 3, 4, 5, 6)),
        FeatureDef("Dec Emb Dim", Scope.GLOBAL, Kind.ORDINAL, tuple(emb)),
        FeatureDef("Dec FFN Dim", Scope.PER_DECODER_LAYER, Kind.ORDINAL, tuple(ffn)),
        FeatureDef("Dec Head Num", Scope.PER_DECODER_LAYER, Kind.ORDINAL, tuple(heads)),
        FeatureDef("Dec RPR Len", Scope.PER_DECODER_LAYER, Kind.ORDINAL, tuple(rpr)),
        FeatureDef("Dec Norm Type", Scope.GLOBAL, Kind.CATEGORICAL, tuple(norm)),
        FeatureDef("Enc-Dec Attn", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (1, 2, 3)),
    )
    return SearchSpace(features=features, max_encoder_layers=6, max_decoder_layers=6)


def preset_iwslt_high_acc() -> SearchSpace:
    """Encoder-decoder space sized for IWSLT-scale translation models."""
    return _translation_space(
        emb=[512, 640, 768], ffn=[768, 1024, 1536, 2048], heads=[2, 4, 8]
    )


def preset_wmt_high_acc() -> SearchSpace:
    """Encoder-decoder space sized for WMT-scale translation models."""
    return _translation_space(
        emb=[640, 768, 1024], ffn=[2048, 3072, 4096, 5120], heads=[4, 8, 16]
    )


def preset_lm() -> SearchSpace:
    """Decoder-only language model space."""
    features = (
        FeatureDef("Dec Layer Num", Scope.GLOBAL, Kind.ORDINAL, (10, 12, 14)),
        FeatureDef("Dec Emb Dim", Scope.GLOBAL, Kind.ORDINAL, (768, 1024)),
        FeatureDef(
            "Dec FFN Dim", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (3072, 4096, 5120)
        ),
        FeatureDef("Dec Head Num", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (8, 12, 16)),
    )
    return SearchSpace(features=features, max_encoder_layers=0, max_decoder_layers=14)


def preset_synthetic_small() -> SearchSpace:
    """Small decoder-only space (3096 architectures) meant for exhaustive tests."""
    features = (
        FeatureDef("Dec Layer Num", Scope.GLOBAL, Kind.ORDINAL, (1, 2, 3)),
        FeatureDef("Dec Emb Dim", Scope.GLOBAL, Kind.ORDINAL, (128, 192, 256)),
        FeatureDef(
            "Dec FFN Dim", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (256, 384, 512)
        ),
        FeatureDef("Dec Head Num", Scope.PER_DECODER_LAYER, Kind.ORDINAL, (2, 4)),
        FeatureDef("Dec Norm Type", Scope.GLOBAL, Kind.CATEGORICAL, ("pre_norm", "post_norm")),
        FeatureDef("Dec RPR Len", Scope.GLOBAL, Kind.ORDINAL, (4, 8)),
    )
    return SearchSpace(features=features, max_encoder_layers=0, max_decoder_layers=3)


PRESETS = {
    "iwslt-high-acc": preset_iwslt_high_acc,
    "wmt-high-acc": preset_wmt_high_acc,
    "lm": preset_lm,
    "synthetic-small": preset_synthetic_small,
}


def resolve_space(name_or_json: str | Mapping) -> SearchSpace:
    """Resolve a preset name or a parsed JSON definition to a space."""
    if isinstance(name_or_json, str):
        try:
            return PRESETS[name_or_json]()
        except KeyError:
            raise UnknownFeature(
                f"unknown preset {name_or_json!r}; expected one of {sorted(PRESETS)}"
            ) from None
    return space_from_json(name_or_json)
