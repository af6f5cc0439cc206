"""Exception types shared across the package."""


class SpecError(ValueError):
    """Invalid parameters for an N-function or nonlinearity spec."""


class DomainError(ValueError):
    """Evaluation requested outside an operation's domain of definition."""


class MeshError(ValueError):
    """Degenerate or inconsistent mesh descriptor."""


class ProblemError(ValueError):
    """A problem bundle failed its construction-time condition checks."""


class BracketError(RuntimeError):
    """A monotone bracket search failed to find a sign change."""


class NodalCollapseError(RuntimeError):
    """One signed component of a nodal iterate fell below the norm floor."""


class ConfigError(ValueError):
    """Malformed or inadmissible run configuration."""
