"""Exception hierarchy shared by all wdist modules."""


class WdistError(Exception):
    """Base class for library errors."""


class InvalidArgument(WdistError, ValueError):
    pass


class DegenerateInput(WdistError, ValueError):
    """Input is well-formed but the requested quantity is undefined for it."""


class NumericalUnderflow(WdistError, FloatingPointError):
    """A scaling update divided by a value too small to be trusted.

    Usually means the regularization is too small for the cost scale; retry
    with ``log_domain=True``.
    """


class Unsupported(WdistError, NotImplementedError):
    pass


class FormatError(WdistError, ValueError):
    """A data file does not match its declared binary or text format."""
