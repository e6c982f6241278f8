"""Exception hierarchy shared by every crowdmatch module."""


class CrowdMatchError(Exception):
    """Base class; the CLI maps subclasses to the data-error exit code."""


class DegenerateGeometryError(CrowdMatchError, ValueError):
    pass


class InputDomainError(CrowdMatchError, ValueError):
    pass


class EmptyInputError(CrowdMatchError, ValueError):
    pass


class InvalidCostError(CrowdMatchError, ValueError):
    pass


class OracleSizeError(CrowdMatchError, ValueError):
    pass


class ConsistencyError(CrowdMatchError, ValueError):
    pass


class GenerationError(CrowdMatchError, RuntimeError):
    pass


class SchemaError(CrowdMatchError, ValueError):
    """Malformed scene/assignment file. ``where`` names the line or field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class SchemaVersionError(SchemaError):
    pass
