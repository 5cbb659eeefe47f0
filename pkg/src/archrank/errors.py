"""Exception types shared across the package.

Every error carries a ``category`` used by the CLI to pick its exit code,
so failures surface the same way whether a command runs against the
in-process service or a remote one.
"""

from __future__ import annotations


class ArchRankError(Exception):
    """Base class for all errors raised by this package."""

    category = "config"


# --- search space -----------------------------------------------------------

class SpaceError(ArchRankError):
    category = "config"


class EmptyDomain(SpaceError):
    pass


class DuplicateFeature(SpaceError):
    pass


class DuplicateDomainValue(SpaceError):
    pass


class UnorderedOrdinalDomain(SpaceError):
    pass


class BadDepthDomain(SpaceError):
    pass


class UnknownFeature(SpaceError):
    pass


class FixedValueOutOfDomain(SpaceError):
    pass


class IncompleteAssignment(SpaceError):
    pass


class ValueOutOfDomain(SpaceError):
    pass


# --- oracles ----------------------------------------------------------------

class OracleError(ArchRankError):
    category = "oracle"


class MissingDimensionFeature(OracleError):
    pass


class UnknownProfile(OracleError):
    pass


class EmptyInput(OracleError):
    pass


class BadTrimFraction(OracleError):
    pass


class UnknownWeightedFeature(OracleError):
    pass


class UnknownArchitecture(OracleError):
    """A tabular oracle was asked about an architecture it has no record for."""


# --- pair construction ------------------------------------------------------

class PairError(ArchRankError):
    category = "training"


class TooFewRecords(PairError):
    pass


class MissingMetric(PairError):
    pass


class DegenerateSplit(PairError):
    pass


# --- ranker -----------------------------------------------------------------

class RankerError(ArchRankError):
    category = "training"


class EmptyPairSet(RankerError):
    pass


class ShapeMismatch(RankerError):
    pass


class FormatVersionMismatch(RankerError):
    pass


class ModelKindMismatch(RankerError):
    """A model file of one kind was loaded where another kind was expected."""


# --- importance -------------------------------------------------------------

class ImportanceError(ArchRankError):
    category = "importance"


# --- search -----------------------------------------------------------------

class SearchError(ArchRankError):
    category = "search"


class KExceedsCandidates(SearchError):
    pass


class NoFeasibleCandidate(SearchError):
    pass


# --- metrics ----------------------------------------------------------------

class DegenerateInput(ArchRankError):
    category = "config"


EXIT_CODES = {
    "config": 2,
    "oracle": 3,
    "training": 4,
    "importance": 5,
    "search": 6,
}


def exit_code_for(error_name: str) -> int:
    """Exit code for an error identified by its class name.

    Unknown names fall back to the config code: a client talking to a newer
    server should still fail loudly rather than crash.
    """
    cls = _BY_NAME.get(error_name)
    if cls is None:
        return EXIT_CODES["config"]
    return EXIT_CODES[cls.category]


def _collect(cls):
    yield cls
    for sub in cls.__subclasses__():
        yield from _collect(sub)


_BY_NAME = {c.__name__: c for c in _collect(ArchRankError)}
