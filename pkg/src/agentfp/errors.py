"""Exception hierarchy.

``ValidationError`` subclasses signal bad input (CLI exit code 1); anything
else deriving from ``AgentFpError`` is a runtime failure (exit code 2).
"""


class AgentFpError(Exception):
    pass


class ValidationError(AgentFpError, ValueError):
    pass


# ingest
class MalformedHeader(ValidationError):
    pass


class TruncatedPacket(ValidationError):
    pass


class UnsupportedLinkType(ValidationError):
    pass


class SchemaError(ValidationError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class OrderError(SchemaError):
    pass


# features
class EmptyTrace(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


# classifier
class ShapeError(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class DivergenceError(AgentFpError):
    pass


class VersionError(ValidationError):
    pass


class CorruptWeights(ValidationError):
    pass


# occupation inference
class DanglingReference(ValidationError):
    pass


class DuplicateCode(ValidationError):
    pass


class UnknownOccupation(ValidationError, KeyError):
    pass


class DegenerateNetwork(ValidationError):
    pass


class DegenerateNetworkWarning(UserWarning):
    pass


class EmptyProfile(ValidationError):
    pass


class DegenerateMatrix(ValidationError):
    pass


class EmptyRanks(ValidationError):
    pass


# simulation / evaluation
class InsufficientAgents(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass
