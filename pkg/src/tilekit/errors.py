"""Exception hierarchy. Every error raised on purpose derives from TilekitError."""


class TilekitError(Exception):
    pass


class NonMonicDivisor(TilekitError, ValueError):
    pass


class ZeroConstantTerm(TilekitError, ValueError):
    pass


class ZeroPolynomial(TilekitError, ValueError):
    pass


class IndexOne(TilekitError, ValueError):
    pass


class CardinalityMismatch(TilekitError, ValueError):
    pass


class NotAnchored(TilekitError, ValueError):
    pass


class ForeignPrime(TilekitError, ValueError):
    pass


class NotATreeNode(TilekitError, ValueError):
    pass


class BadPeriod(TilekitError, ValueError):
    pass


class IncompleteResidues(TilekitError, ValueError):
    pass


class UnequalClassSizes(TilekitError, ValueError):
    pass


class NotPrimePowerCardinality(TilekitError, ValueError):
    pass


class NotAnIntegerTile(TilekitError, ValueError):
    pass


class ChainExtractionFailed(TilekitError):
    pass


class PreconditionViolated(TilekitError, ValueError):
    pass


class SearchExhausted(TilekitError):
    pass


class NotAFactorization(TilekitError, ValueError):
    pass


class CollisionInSum(TilekitError, ValueError):
    pass


class OffsetCollision(TilekitError, ValueError):
    pass


class ModulusMismatch(TilekitError, ValueError):
    pass


class LayerNotAFactorization(TilekitError, ValueError):
    pass


class KernelDivisionFailed(TilekitError):
    pass


class ParameterOutOfRange(TilekitError, ValueError):
    pass


class UnsupportedBase(TilekitError, ValueError):
    pass


class BudgetExceeded(TilekitError):
    pass


class ChainFormatError(TilekitError, ValueError):
    pass
