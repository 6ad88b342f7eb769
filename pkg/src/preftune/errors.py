"""Exception types shared across the package."""


class PreftuneError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimension(PreftuneError):
    """A dimension specification cannot produce a valid grid."""


class InvalidConfig(PreftuneError):
    """A learner or session configuration failed validation."""


class OutOfBounds(PreftuneError):
    """A raw coordinate lies outside the action-space bounds."""


class OffGrid(PreftuneError):
    """An action does not lie on the discretization grid."""


class DimensionMismatch(PreftuneError):
    """Vector lengths disagree with the space dimensionality."""


class UnknownAction(PreftuneError):
    """A preference references an action absent from the relevant set."""


class PreferenceBetweenIdenticalActions(PreftuneError):
    """A preference names the same action on both sides."""


class IdenticalActions(PreftuneError):
    """The simulated judge was asked to compare an action with itself."""


class SingularPrior(PreftuneError):
    """Prior covariance could not be factorized even after jitter escalation."""


class NonSymmetricCovariance(PreftuneError):
    """A covariance matrix handed to the sampler is not symmetric."""


class PendingProposalExists(PreftuneError):
    """propose() was called while an earlier proposal is still unjudged."""


class NoPendingProposal(PreftuneError):
    """An execution or preference arrived with no outstanding proposal."""


class ProposalMismatch(PreftuneError):
    """Recorded executions do not match the pending proposal."""


class WrongPhase(PreftuneError):
    """A session command is not valid in the session's current phase."""


class UnknownSession(PreftuneError):
    """No session with the requested id exists."""


class StorageFailure(PreftuneError):
    """The session store could not persist or load an event log."""


class MalformedExport(PreftuneError):
    """A session export document is structurally invalid."""
