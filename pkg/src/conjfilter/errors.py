"""Exception hierarchy shared by the filters, oracles and the command line."""


class FilterError(Exception):
    """Base class for every error raised by conjfilter."""


class DegenerateDistributionError(FilterError, ValueError):
    """All log-weights are -inf, so no probability vector can be formed."""


class ImpossibleObservationError(FilterError, ValueError):
    """The predictive density of an observation is exactly zero."""

    def __init__(self, y, message=None):
        self.y = y
        shown = float(y) if isinstance(y, (int, float)) else y
        super().__init__(message or f"observation y={shown!r} has zero predictive density")


class SingularParameterError(FilterError, ValueError):
    """A parameter value makes a closed-form update undefined (e.g. zero gain)."""


class DegeneracyError(FilterError, RuntimeError):
    """Every particle weight collapsed to zero."""


class GridLeakageError(FilterError, RuntimeError):
    """A grid window loses more probability mass than the tolerance allows."""


class ConfigError(FilterError, ValueError):
    """Invalid experiment configuration; ``problems`` lists every violation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
