"""Exception types shared across the package."""


class EventMapError(Exception):
    """Base class for all package-specific errors."""


class FormatError(EventMapError):
    """Input stream is not decodable or not in the requested format."""


class SchemaError(EventMapError):
    """Input is structurally valid but missing required columns/fields."""


class GazetteerError(EventMapError):
    """Gazetteer file violates its invariants (dup FIPS, bad coords, ...)."""


class UnresolvedLocationError(EventMapError):
    """Event could not be resolved to a county."""

    def __init__(self, event_id: str, message: str | None = None):
        self.event_id = event_id
        super().__init__(message or f"cannot resolve location for event {event_id!r}")


class EmptyVocabularyError(EventMapError):
    """No word survived frequency filtering."""


class VocabularyMismatchError(EventMapError):
    """Document tokens do not index into the model's vocabulary."""


class DegenerateTopicError(EventMapError):
    """Topic has zero total mass; posterior undefined."""


class UnknownTopicError(EventMapError):
    """Named topic not present in the table/model."""


class ConvergenceStallError(EventMapError):
    """Backtracking line search underflowed without improving the objective."""


class MissingRegionError(EventMapError):
    """Layer references FIPS codes absent from the polygon file."""

    def __init__(self, fips: list[str]):
        self.fips = sorted(fips)
        super().__init__("no polygon for fips: " + ", ".join(self.fips))


class StoreError(EventMapError):
    """Event store I/O or consistency failure."""


class FitBusyError(StoreError):
    """Another fit already holds the writer lease."""
