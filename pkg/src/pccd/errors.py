"""Exception types raised across the pipeline."""


class PCCDError(Exception):
    """Base class for all pipeline errors."""


# crystal core
class NonPositiveLength(PCCDError, ValueError):
    pass


class AngleOutOfRange(PCCDError, ValueError):
    pass


class DegenerateCell(PCCDError, ValueError):
    pass


class PoscarSyntaxError(PCCDError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CountMismatch(PoscarSyntaxError):
    pass


class UnknownElementSymbol(PCCDError, ValueError):
    pass


# codec
class NotEncodable(PCCDError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SpeciesNotInSlots(PCCDError, ValueError):
    pass


class NoClusters(PCCDError):
    pass


class DegenerateLattice(PCCDError):
    pass


class TensorFormatError(PCCDError, ValueError):
    pass


# diffusion
class InvalidParams(PCCDError, ValueError):
    pass


class StepOutOfRange(PCCDError, IndexError):
    pass


class ShapeMismatch(PCCDError, ValueError):
    pass


# denoiser
class NonFiniteActivation(PCCDError, FloatingPointError):
    pass


class NonFiniteGradient(PCCDError, FloatingPointError):
    pass


class NonFiniteLoss(PCCDError, FloatingPointError):
    pass


class EmptyDataset(PCCDError, ValueError):
    pass


class CorruptCheckpoint(PCCDError, ValueError):
    pass


class VersionMismatch(CorruptCheckpoint):
    pass


# evaluation
class Unmatched(PCCDError):
    """Structures have different site counts and cannot be paired."""


class EmptySeries(PCCDError, ValueError):
    pass
