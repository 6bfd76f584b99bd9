"""Exception hierarchy shared by every module."""


class BlindDistillError(Exception):
    """Base class; ``code`` is the machine-readable name used in CLI error JSON."""

    @property
    def code(self) -> str:
        return type(self).__name__


class LengthMismatch(BlindDistillError, ValueError):
    pass


class IndexOutOfRange(BlindDistillError, IndexError):
    pass


class EqualIndices(BlindDistillError, ValueError):
    pass


class NotUnitary(BlindDistillError, ValueError):
    pass


class DimensionMismatch(BlindDistillError, ValueError):
    pass


class TooManyQubits(BlindDistillError, ValueError):
    pass


class FidelityOutOfRange(BlindDistillError, ValueError):
    pass


class InvalidDistribution(BlindDistillError, ValueError):
    pass


class MissingDependency(BlindDistillError, KeyError):
    pass


class PatternError(BlindDistillError, ValueError):
    """Raised by :meth:`Pattern.check`; carries the full violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.kind}: {v.message}" for v in self.violations))


class ZeroQuery(BlindDistillError, ValueError):
    pass


class ConfigError(BlindDistillError, ValueError):
    pass


class BelowThreshold(BlindDistillError, ValueError):
    pass


class DecodeAmbiguous(BlindDistillError, RuntimeError):
    pass


class InsufficientPairs(BlindDistillError, RuntimeError):
    pass


class TopologyViolation(BlindDistillError, PermissionError):
    pass


class OrderingViolation(BlindDistillError, RuntimeError):
    pass
