"""
Exception hierarchy shared by the simulator, planner and CLI.
"""


class RdnaError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RdnaError, ValueError):
    """A scenario config could not be parsed or failed a type check."""

    def __init__(self, message, key=None, section=None, lineno=None):
        self.key = key
        self.section = section
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ScenarioError(ConfigError):
    """A scenario value violates a model invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}", key=field)


class ChainError(RdnaError, ValueError):
    """The Markov chain is malformed or absorption is not certain."""


class PlannerError(RdnaError, ValueError):
    """A redundancy optimizer received an ill-posed problem."""


class SimulationError(RdnaError):
    """A replication failed; carries the seed that reproduces it."""

    def __init__(self, message, seed=None):
        self.seed = seed
        if seed is not None:
            message = f"replication seed={seed}: {message}"
        super().__init__(message)
