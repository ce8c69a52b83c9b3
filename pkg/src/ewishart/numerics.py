"""Signed log-scale arithmetic shared by the series code."""

import math

import numpy as np


def signed_log_sum(signs, logs):
    """Sum of ``sign * exp(log)`` terms, returned as ``(sign, log|sum|)``.

    Terms are rescaled by the largest magnitude and added with
    ``math.fsum`` (exactly rounded, independent of term order).
    """
    signs = np.asarray(signs, dtype=float).ravel()
    logs = np.asarray(logs, dtype=float).ravel()
    live = (signs != 0) & np.isfinite(logs)
    if not live.any():
        return 0.0, -math.inf
    top = logs[live].max()
    total = math.fsum((signs[live] * np.exp(logs[live] - top)).tolist())
    if total == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, total), top + math.log(abs(total))


def signed_exp(sign, logv):
    return 0.0 if sign == 0 else sign * math.exp(logv)


def to_signed_log(x):
    """``(sign, log|x|)`` of a float array or scalar."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(x), np.log(np.abs(x))
