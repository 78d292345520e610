"""Exception hierarchy shared by all modules."""


class LHDMError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(LHDMError, ValueError):
    pass


class NonFiniteEntry(LHDMError, ValueError):
    pass


class SingularUpdate(LHDMError):
    """A column appended to the factorization is numerically dependent.

    ``position`` is the offset inside the requested block of the first
    offending column; columns before it can be appended safely.
    """

    def __init__(self, position, index, diagonal):
        self.position = position
        self.index = index
        self.diagonal = diagonal
        super().__init__(
            f"column {index} (block position {position}) gives diagonal "
            f"{diagonal:.3e} below the singularity tolerance")


class SingularDiagonal(LHDMError):
    pass


class IndexNotPassive(LHDMError, KeyError):
    pass


class IndexAlreadyPassive(LHDMError, KeyError):
    pass


class TwinAlreadyPassive(LHDMError):
    pass


class NotPositivityTrick(LHDMError, TypeError):
    pass


class NoBlockingIndex(LHDMError, ValueError):
    pass


class InfeasiblePoint(LHDMError, ValueError):
    pass


class ZeroColumn(LHDMError, ValueError):
    pass


class RankDeficientSupport(LHDMError):
    pass


class NonpositiveLambda(LHDMError, ValueError):
    pass


class ErcUnreachable(LHDMError):
    pass


class MatrixFormatError(LHDMError, ValueError):
    pass
