import math


def finite_float(value):
    """
    Convert any value to a finite float or throw a ValueError if it can't be
    done.
    """
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError("Can't convert %s to a finite float" % value)
    return value


def parse_vector(text, dim=None):
    """
    Parses a comma separated vector such as '0.5,0.5,0.5' into a tuple of
    finite floats, optionally checking its length.

    >>> parse_vector('1, 2,3')
    (1.0, 2.0, 3.0)
    """
    values = tuple(finite_float(v) for v in text.split(',') if v.strip())
    if dim is not None and len(values) != dim:
        raise ValueError(
            'Expected %d coordinates, got %d: %r' % (dim, len(values), text)
        )
    return values
