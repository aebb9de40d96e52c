"""Shared exception types.

ArgumentError covers invalid requests (bad grids, parameters out of their
documented domain). RangeError covers requests that are well formed but not
representable in 64-bit floating point. NumericError covers failures inside
an estimator at run time.
"""


class ArgumentError(ValueError):
    """A sampler or estimator was called with an invalid argument."""


class RangeError(ValueError):
    """A parameter falls outside the numerically representable range."""


class NumericError(RuntimeError):
    """An estimator failed numerically (non-finite values, no convergence)."""
