"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its documented domain."""


class ConnectivityError(RuntimeError):
    """No connected graph was drawn within the resampling budget."""


class UndefinedMixingError(ValueError):
    """Mixing or modularity requested on a graph without edges."""


class StateSpaceTooLargeError(ValueError):
    """Exact Markov-chain solve refused because 2**n states is too many."""
