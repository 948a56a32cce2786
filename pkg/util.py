# ~/bin/env python3
"""
General utility functions for typing and timing.
"""
import functools
import logging
import time

import numpy as np

INT = int | np.integer
FLOAT = float | np.floating
REAL = INT | FLOAT

logger = logging.getLogger(__name__)


def timeIt(_func=None, *, repeat=1, return_time=False, log_time=False):
    """Wrapper to time a function with various return options.

    Args
    ----
    repeat: int
        will average the function runtime by repeating it `repeat` times
    return_time: bool
        returns (ret, time) if True, else just ret
    log_time: bool
        logs the time at DEBUG level if True

    .. note::
        Arguments MUST be given as keyword arguments to a wrapper function, the first arg is always assumed to be the function that is being wrapped.

    Examples
    --------
    .. code-block:: python

        @timeIt(return_time=True)
        def f(*args, **kwargs):
            ...
            return ret

    >>> f(*args, **kwargs)
    (ret, mean_time_in_seconds)
    """

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            total_time = 0.0
            for _ in range(repeat):
                start_time = time.perf_counter()
                ret = func(*args, **kwargs)
                total_time += time.perf_counter() - start_time
            mean_time = total_time / repeat
            if log_time:
                msg = f"{func.__name__} took {mean_time:.4g}s"
                if repeat > 1:
                    msg += f", avg of {repeat} times"
                logger.debug(msg)
            if return_time:
                return ret, mean_time
            return ret

        return wrapper

    if _func is None:
        return decorator
    return decorator(_func)
