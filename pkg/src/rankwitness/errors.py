"""Exception hierarchy. Every error raised on bad input derives from ``RankWitnessError``."""


class RankWitnessError(ValueError):
    pass


class CycleDetected(RankWitnessError):
    pass


class UnknownVariable(RankWitnessError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class DuplicateName(RankWitnessError):
    pass


class InvalidPath(RankWitnessError):
    pass


class InvalidQuery(RankWitnessError):
    pass


class NegativeEntry(RankWitnessError):
    pass


class NotNormalized(RankWitnessError):
    pass


class ShapeMismatch(RankWitnessError):
    pass


class ZeroConditioningEvent(RankWitnessError):
    pass


class NonBinaryAxis(RankWitnessError):
    pass


class InfeasibleMoments(RankWitnessError):
    pass


class TooLarge(RankWitnessError):
    pass


class NotADistribution(RankWitnessError):
    pass


class OutOfRange(RankWitnessError):
    pass


class NoObservedData(RankWitnessError):
    pass
