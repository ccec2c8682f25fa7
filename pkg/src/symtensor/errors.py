"""Exception types raised across the package."""


class SymTensorError(Exception):
    """Base class for all package errors."""


class UnknownLabel(SymTensorError, ValueError):
    pass


class NoBraidingDefined(SymTensorError, ValueError):
    pass


class ArityMismatch(SymTensorError, ValueError):
    pass


class SectorMismatch(SymTensorError, ValueError):
    pass


class SpaceMismatch(SymTensorError, ValueError):
    pass


class InadmissibleTree(SymTensorError, ValueError):
    pass


class ChargeMismatch(SymTensorError, ValueError):
    pass


class BraidingUnavailable(SymTensorError, ValueError):
    pass


class NotCyclic(SymTensorError, ValueError):
    pass


class InvalidPermutation(SymTensorError, ValueError):
    pass


class NonMatchingTracePair(SymTensorError, ValueError):
    pass


class NoDenseRepresentation(SymTensorError, ValueError):
    pass


class MalformedNetwork(SymTensorError, ValueError):
    pass


class NotSquare(SymTensorError, ValueError):
    pass


class NotHermitian(SymTensorError, ValueError):
    pass


class ConfigError(SymTensorError, ValueError):
    pass
