"""Exception and warning types raised by ratefix."""


class RatefixError(ValueError):
    """Base class for all input and solver errors."""


class ZeroExposure(RatefixError):
    """An exposure cell (or an adjusted exposure) is zero where it must be positive."""


class LossWithoutExposure(RatefixError):
    """A cell carries loss but no exposure; exposure is a precondition for loss."""


class ZeroBaseSliceLoss(RatefixError):
    """The base slice of some factor has no loss, so relativities are undefined."""


class ZeroSliceLoss(RatefixError):
    """A non-base slice has no loss; its indicated relativity would be 0."""


class ZeroDenominator(RatefixError):
    pass


class UnsupportedDimension(RatefixError):
    """Raised by the certificate routines for anything other than three factors."""


class WeakCompetitionViolated(RatefixError):
    pass


class GrowthNotAboveOne(RatefixError):
    pass


class SingularMatrix(RatefixError):
    """C is singular at the elimination threshold.

    ``rank_consistent`` tells whether ``C x = b - 1`` still has (infinitely
    many) solutions or none at all.
    """

    def __init__(self, message, *, rank, rank_augmented):
        super().__init__(message)
        self.rank = rank
        self.rank_augmented = rank_augmented

    @property
    def rank_consistent(self):
        return self.rank == self.rank_augmented


class ParseError(RatefixError):
    pass


class DimensionMismatch(RatefixError):
    pass


class MissingCell(RatefixError):
    pass


class NonPositiveSolution(UserWarning):
    """The linear equilibrium exists but is not strictly positive."""
