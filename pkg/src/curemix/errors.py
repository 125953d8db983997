"""Exception hierarchy for curemix."""


class CureMixError(Exception):
    """Base class for all curemix errors."""


class InvalidInputError(CureMixError):
    """Input data violates a precondition (empty dataset, bad dimensions, ...)."""


class DegenerateNeighborhoodError(CureMixError):
    """All kernel weights vanish at the evaluation point.

    Signals that the bandwidth is too small or the point lies outside
    the range of the data.
    """


class BandwidthSelectionError(CureMixError):
    """No bandwidth in the candidate grid yields a usable estimate."""


class SingularDesignError(CureMixError):
    """Design matrix is rank deficient on the (trimmed) subsample."""


class CoxDivergenceError(CureMixError):
    """Partial-likelihood maximization produced a non-finite objective."""


class InferenceUnreliableError(CureMixError):
    """Too many bootstrap resamples failed to produce estimates."""
