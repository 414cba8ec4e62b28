"""Monte Carlo estimator bookkeeping.

One routine: mean and standard error by a chunked, single-pass Welford
accumulation (chunk moments merged with Chan's pairwise update). Chunking
keeps the inner loop vectorized while preserving the numerical stability of
the streaming form; the fixed chunk size makes results independent of how
callers batch their samples.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TooFewSamples

CHUNK = 4096


def estimate_with_se(samples) -> tuple:
    """Sample mean and standard error (sample std / sqrt(n)).

    Accepts shape (n,) for one estimator or (n, k) for k estimators sharing
    the sample axis; returns floats or length-k arrays accordingly.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim not in (1, 2):
        raise TooFewSamples(f"expected 1-d or 2-d samples, got ndim={x.ndim}")
    n = x.shape[0]
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]

    count = 0
    mean = np.zeros(x.shape[1])
    m2 = np.zeros(x.shape[1])
    for lo in range(0, n, CHUNK):
        chunk = x[lo : lo + CHUNK]
        cn = chunk.shape[0]
        cmean = chunk.mean(axis=0)
        cm2 = np.sum((chunk - cmean) ** 2, axis=0)
        delta = cmean - mean
        total = count + cn
        mean = mean + delta * (cn / total)
        m2 = m2 + cm2 + delta**2 * (count * cn / total)
        count = total
    var = m2 / (count - 1)
    se = np.sqrt(var / count)
    if squeeze:
        return float(mean[0]), float(se[0])
    return mean, se


def combine_se(*ses: float) -> float:
    """Standard error of a sum/difference of independent estimators."""
    return math.sqrt(sum(float(s) ** 2 for s in ses))
