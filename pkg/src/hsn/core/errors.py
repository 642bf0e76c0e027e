"""Exception hierarchy.

Every error derives from ``HsnError`` and from the builtin a caller would
naturally catch (mostly ``ValueError``).
"""

from __future__ import annotations


class HsnError(Exception):
    pass


# Formats
class MalformedHeader(HsnError, ValueError):
    pass


class TruncatedData(HsnError, ValueError):
    pass


class InvariantViolation(HsnError, ValueError):
    pass


class MalformedCheckpoint(HsnError, ValueError):
    pass


class ArchMismatch(HsnError, ValueError):
    pass


# Image pipeline
class NegativeInput(HsnError, ValueError):
    pass


class SingularMatrix(HsnError, ValueError):
    pass


class NonPositiveGain(HsnError, ValueError):
    pass


class OddDimensions(HsnError, ValueError):
    pass


class DimensionMismatch(HsnError, ValueError):
    pass


class ImageTooSmall(HsnError, ValueError):
    pass


# Noise synthesis / analysis
class NegativeSignal(HsnError, ValueError):
    pass


class UnknownShutter(HsnError, KeyError):
    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class CropOutOfBounds(HsnError, ValueError):
    pass


class InsufficientData(HsnError, ValueError):
    pass


class NonPositiveSlope(HsnError, ValueError):
    pass


class TooFewFrames(HsnError, ValueError):
    pass


class EmptyInput(HsnError, ValueError):
    pass


class BinMismatch(HsnError, ValueError):
    pass


class ZeroTotalEnergy(HsnError, ValueError):
    pass


# Evaluation
class MissingPair(HsnError, FileNotFoundError):
    pass


# NN engine / training
class ShapeMismatch(HsnError, ValueError):
    pass


class StepOutOfRange(HsnError, ValueError):
    pass


class NonFiniteLoss(HsnError, RuntimeError):
    pass
