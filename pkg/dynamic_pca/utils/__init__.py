# Number parsing helpers
from .numbers import finite_float, parse_vector

# List/iterator helpers
from .lists import grouper

# Timing helpers
from .timing import Timer, summarize_timings

__all__ = [
    'finite_float',
    'parse_vector',
    'grouper',
    'Timer',
    'summarize_timings',
]
