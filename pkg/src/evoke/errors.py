"""Exception hierarchy shared by all evoke modules."""


class EvokeError(Exception):
    """Base class for recoverable evoke failures.

    Fitness evaluation maps any EvokeError to the worst-possible fitness.
    """


class MalformedGenomeError(EvokeError, ValueError):
    """Chromosome lengths do not match the 4*(I+H) layout."""


class DegenerateLabelsError(EvokeError, ValueError):
    """Classification targets contain a single class."""


class ConvergenceError(EvokeError, ArithmeticError):
    """SMO hit its iteration cap before reaching the KKT tolerance."""


class RunTimeout(EvokeError):
    """An evolutionary run exceeded its wall-clock budget."""
