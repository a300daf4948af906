"""Exception types raised across the package."""


class ContQGError(Exception):
    pass


class SpaceMismatch(ContQGError):
    pass


class DivisionByNonMonomial(ContQGError):
    pass


class UnboundGenerator(ContQGError):
    pass


class BudgetExhausted(ContQGError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NotIrreducible(ContQGError):
    def __init__(self, message, pair=None, position=None):
        super().__init__(message)
        self.pair = pair
        self.position = position


class NotARefinement(ContQGError):
    pass


class NotASerrePair(ContQGError):
    pass


class AntipodeRecursionFailure(ContQGError):
    pass


class MixedBorel(ContQGError):
    pass


class GramSingular(ContQGError):
    pass


class ConfigError(ContQGError):
    pass


class ResourceLimit(ContQGError):
    pass


class ParseError(ContQGError):
    pass
