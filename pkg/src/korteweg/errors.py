"""Shared exception types, mapped onto CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration or incompatible parameters (exit code 2)."""


class SolverError(RuntimeError):
    """A solver failed to converge or a run aborted (exit code 3)."""


class ContractError(AssertionError):
    """A declared run contract was violated, e.g. a convergence table
    that is not monotone (exit code 4)."""
