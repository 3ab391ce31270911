"""Exception hierarchy shared by every module of the package."""


class EcEmbedError(Exception):
    """Base class for all errors raised by ecembed."""


class SingularCurve(EcEmbedError, ValueError):
    pass


class BadReduction(EcEmbedError, ValueError):
    pass


class GoodReduction(EcEmbedError, ValueError):
    pass


class InsufficientSeries(EcEmbedError, ValueError):
    pass


class DegenerateSchedule(EcEmbedError, ValueError):
    pass


class AllSamplesDegenerate(EcEmbedError, ValueError):
    pass


class PrecisionTooLow(EcEmbedError, ArithmeticError):
    pass


class NonConvergence(EcEmbedError, ArithmeticError):
    pass


class NotFound(EcEmbedError, LookupError):
    pass


class NetworkUnavailable(EcEmbedError, ConnectionError):
    pass


class SchemaMismatch(EcEmbedError, ValueError):
    pass


class CorruptCache(EcEmbedError):
    pass
