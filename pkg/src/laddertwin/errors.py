"""Exception types raised across the package."""


class LadderTwinError(ValueError):
    """Base class for all errors raised by laddertwin."""


class DimensionMismatch(LadderTwinError):
    pass


class NonFinite(LadderTwinError):
    pass


class SelfStructuralCausality(LadderTwinError):
    """A structural (instantaneous) factor links a channel to itself."""


class InvalidDimension(LadderTwinError):
    pass


class IncompleteWindow(LadderTwinError):
    pass


class SingularInnovationCovariance(LadderTwinError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (sample {step})")
        self.step = step


class ZeroVarianceChannel(LadderTwinError):
    def __init__(self, channel: str):
        super().__init__(f"channel {channel!r} has zero variance")
        self.channel = channel


class SeriesTooShort(LadderTwinError):
    pass


class RankDeficientRegressors(LadderTwinError):
    pass


class UnstableModel(LadderTwinError):
    def __init__(self, radius: float):
        super().__init__(f"reduced-form spectral radius {radius:.6g} >= 1")
        self.radius = radius


class SingularStructure(LadderTwinError):
    """(I - S0) is not invertible."""


class MalformedLine(LadderTwinError):
    def __init__(self, line: int, content: str, reason: str = "non-numeric token"):
        super().__init__(f"line {line}: {reason}: {content!r}")
        self.line = line
        self.content = content


class InconsistentColumnCount(LadderTwinError):
    def __init__(self, line: int, expected: int, found: int):
        super().__init__(f"line {line}: expected {expected} columns, found {found}")
        self.line = line
        self.expected = expected
        self.found = found


class EmptyFile(LadderTwinError):
    pass


class HeaderMismatch(LadderTwinError):
    pass


class SchemaViolation(LadderTwinError):
    def __init__(self, path: str, reason: str = "missing or invalid"):
        super().__init__(f"{path}: {reason}")
        self.path = path
