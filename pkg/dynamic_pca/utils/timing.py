import time

import numpy as np


class Timer(object):
    """
    Context manager measuring wall time with the monotonic performance
    counter. After the block exits, `interval` holds the elapsed seconds.

    with Timer() as timer:
        run_pipeline()
    print(timer.interval)

    A disabled timer (enabled=False) always reports 0.0, which keeps
    benchmark reports byte-identical between runs.
    """

    def __init__(self, enabled=True):
        self.enabled = enabled
        self.interval = 0.0

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter()
        self.interval = self.end - self.start if self.enabled else 0.0


def summarize_timings(intervals):
    """Returns (mean, median) of a non-empty list of timings."""
    if not len(intervals):
        raise ValueError("Can't summarize an empty list of timings")
    return float(np.mean(intervals)), float(np.median(intervals))
