"""Exception hierarchy used across the package."""


class HamstabError(Exception):
    """Base class for all errors raised by hamstab."""


class DomainError(HamstabError):
    """State outside the domain of a Hamiltonian or integration left the domain.

    ``last_state`` and ``last_time`` carry the last good point when raised
    from an integrator.
    """

    def __init__(self, msg, last_state=None, last_time=None):
        super().__init__(msg)
        self.last_state = last_state
        self.last_time = last_time


class SingularityError(DomainError):
    pass


class ConvergenceError(HamstabError):
    pass


class RankError(HamstabError):
    pass


class PreconditionError(HamstabError, ValueError):
    pass


class ClassificationError(HamstabError):
    pass


class NonSemisimpleError(ClassificationError):
    pass


class ResonanceError(ClassificationError):
    pass


class GainError(PreconditionError):
    pass


class ConstructionError(HamstabError):
    pass


class StiffnessError(HamstabError):
    pass
