"""Exception types raised by the toolkit."""


class CoherentQfiError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(CoherentQfiError, ValueError):
    pass


class InvalidPsfError(CoherentQfiError, ValueError):
    pass


class DegenerateStateError(CoherentQfiError, ValueError):
    """The coherence matrix has (numerically) zero norm."""


class NotAStateError(CoherentQfiError, ValueError):
    """A coefficient matrix does not induce a trace-one positive operator."""


class DivergingLimitError(CoherentQfiError, ArithmeticError):
    """A requested limit is infinite; ``law`` names the limiting behaviour."""

    def __init__(self, message, law=None):
        super().__init__(message)
        self.law = law


class GridCoverageError(CoherentQfiError, ValueError):
    pass


class DegenerateCriterionError(CoherentQfiError, ValueError):
    """The Sparrow criterion is vacuous for the requested configuration."""


class NoRootError(CoherentQfiError, ArithmeticError):
    pass


class EstimationFailedError(CoherentQfiError, ArithmeticError):
    pass
