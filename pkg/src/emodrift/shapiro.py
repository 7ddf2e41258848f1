"""Shapiro-Wilk normality test, Royston's 1995 approximation (AS R94).

Hand-rolled so the test suite can validate it against an independent
reference implementation; valid for sample sizes 3 <= n <= 5000.
"""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

_NORMAL = NormalDist()

# polynomial corrections for the two largest weights, in u = 1/sqrt(n)
_C1 = (-2.706056, 4.434685, -2.071190, -0.147981, 0.221157, 0.0)
_C2 = (-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0)


class DegenerateSampleError(ValueError):
    """All sample values identical; W is undefined."""


def _weights(n: int) -> np.ndarray:
    if n == 3:
        r = math.sqrt(0.5)
        return np.array([-r, 0.0, r])
    m = np.array([_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    ssq = float(np.dot(m, m))
    rs = math.sqrt(ssq)
    u = 1.0 / math.sqrt(n)
    a = m / rs
    a_n = float(np.polyval(_C1, u)) + m[-1] / rs
    if n > 5:
        a_n1 = float(np.polyval(_C2, u)) + m[-2] / rs
        phi = (ssq - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
        a = m / math.sqrt(phi)
        a[-2], a[1] = a_n1, -a_n1
    else:
        phi = (ssq - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        a = m / math.sqrt(phi)
    a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(sample) -> tuple[float, float]:
    """W statistic and approximate upper-tail p-value for the given sample.

    Raises DegenerateSampleError when the sample is constant, ValueError
    when n < 3.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n < 3:
        raise ValueError(f"Shapiro-Wilk needs at least 3 values, got {n}")
    ssd = float(np.sum((x - x.mean()) ** 2))
    if ssd <= 0.0 or x[0] == x[-1]:
        raise DegenerateSampleError("degenerate sample: all values identical")

    a = _weights(n)
    w = float(np.dot(a, x)) ** 2 / ssd
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return w, min(max(p, 0.0), 1.0)

    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if gamma - math.log(1.0 - w) <= 0.0:
            return w, 0.0  # W beyond the approximation's support
        y = -math.log(gamma - math.log(1.0 - w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        ln_n = math.log(n)
        y = math.log(1.0 - w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)

    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return w, min(max(p, 0.0), 1.0)
