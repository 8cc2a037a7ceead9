"""Exception types shared across the package."""


class SpaceformsError(Exception):
    """Base class for all package errors."""


class DimensionError(SpaceformsError):
    """Array shapes or dimension bookkeeping do not match the product spec."""


class SchemaError(SpaceformsError):
    """A dataset document is structurally malformed."""


class ValidationError(SpaceformsError):
    """A dataset field violates a type invariant.

    Carries the offending field name and, when meaningful, the (iu, iv)
    node index so faults can be located.
    """

    def __init__(self, message, field=None, node=None):
        super().__init__(message)
        self.field = field
        self.node = node


class AlignmentError(SpaceformsError):
    """Point-cloud alignment is degenerate or inconsistent."""


class FixtureError(SpaceformsError):
    """Unknown fixture name or chart incompatible with the fixture."""


class RankError(SpaceformsError):
    """An eigenbundle does not have the dimension required by the rank condition."""
