"""Exception and warning types shared across the package."""


class RandlesError(Exception):
    """Base class for all errors raised by this package."""


class PoleOnAxis(RandlesError):
    """Transfer function evaluated at (or numerically on) one of its poles."""


class NotInImage(RandlesError):
    """Coefficient vector cannot be produced by a Randles circuit of the given order."""


class DuplicateRoots(RandlesError):
    """Two poles coincide within tolerance; the ordering is ill defined."""


class InvalidBand(RandlesError, ValueError):
    pass


class NyquistViolation(RandlesError, ValueError):
    pass


class ZeroSignal(RandlesError, ValueError):
    pass


class TooShortRecord(RandlesError, ValueError):
    pass


class RankDeficient(RandlesError, ValueError):
    """Fewer spectral lines than transfer-function coefficients to identify."""


class SingularSystem(RandlesError):
    pass


class NoAcceptedTrials(RandlesError):
    pass


class Rejected(RandlesError):
    """Estimate discarded by the outlier policy.

    ``reason`` is one of the strings in :data:`REJECT_REASONS`.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


REJECT_REASONS = (
    "ComplexPoles",
    "NegativePoles",
    "CwBound",
    "CiBound",
    "NonPhysical",
    "SingularSystem",
    "NoConvergence",
)


class DuplicatePolesWarning(UserWarning):
    """Poles closer than the tie tolerance; the forward map is still defined."""


class DesignWarning(UserWarning):
    """Sampling rate or record length outside the usual experiment-design rules."""
