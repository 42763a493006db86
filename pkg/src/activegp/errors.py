"""Exception taxonomy shared across the package.

Exit-code mapping used by the CLI and service lives in
:mod:`activegp.cli`: configuration problems -> 1, numerical problems
(conditioning, saturation, degenerate chains) -> 2, artifact I/O -> 3.
"""


class ActiveGPError(Exception):
    """Base class for all package errors."""


class ConfigError(ActiveGPError):
    """Invalid configuration or precondition on user-facing settings."""


class ConditioningError(ActiveGPError):
    """Kernel matrix factorization failed (or would be meaningless)."""


class NumericalHealthError(ActiveGPError):
    """A computed quantity left its mathematically valid range."""


class SaturationError(ActiveGPError):
    """No candidate point satisfies the minimum-distance constraint."""


class DegenerateChainError(ActiveGPError):
    """An MCMC chain produced samples unusable for the requested purpose."""


class ArtifactError(ActiveGPError):
    """A run artifact is missing, unreadable, or inconsistent."""
