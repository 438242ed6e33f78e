"""Exception types shared across the package.

The CLI maps ConfigurationError to exit code 1 and any
NumericalIntegrityError (including subclasses) to exit code 2.
"""

from __future__ import annotations


class NnlifError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(NnlifError, ValueError):
    """Invalid parameters, grid settings, or run configuration."""


class NumericalIntegrityError(NnlifError, RuntimeError):
    """A computed quantity violated a guaranteed numerical property."""


class SchemeIntegrityError(NumericalIntegrityError):
    """The time stepper produced values a correct scheme cannot produce."""


class InvariantError(NumericalIntegrityError):
    """An a-priori bound (known to hold analytically) failed numerically."""


class OutOfLifespanError(NnlifError, ValueError):
    """A generalized-time query lies outside the reconstructed lifespan."""


class ResolutionError(NnlifError, ValueError):
    """A stored trajectory lacks snapshots near a requested time."""


class HorizonError(NnlifError, RuntimeError):
    """An adaptive horizon could not be shrunk into the contractive range."""
