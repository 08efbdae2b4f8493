class PCAError(Exception):
    pass


class NonFinite(PCAError):
    pass


class NoConvergence(PCAError):
    pass


class EmptyResult(PCAError):
    pass


class EmptyInput(PCAError):
    pass


class NotUnit(PCAError):
    pass


class Degenerate(PCAError):
    pass


class ApexOutside(Degenerate):
    """
    The apex of a star decomposition is not strictly inside the body.
    `apex` holds its coordinates when known.
    """

    def __init__(self, message, apex=None):
        super(ApexOutside, self).__init__(message)
        self.apex = apex


class KindMismatch(PCAError):
    pass


class EmptyGrid(EmptyInput):
    pass


class NotPresent(PCAError):
    pass


class IndexOutOfRange(PCAError):
    pass


class FileFormatException(PCAError):
    """
    Raised when an input file can't be parsed. `line` is the 1-based line
    number of the offending row, or None when the problem isn't tied to a
    single line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super(FileFormatException, self).__init__(message)
        self.line = line


class DimensionMismatch(FileFormatException):
    pass
