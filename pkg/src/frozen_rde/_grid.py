"""Grid helpers shared across modules.

Powers of theta are always produced by repeated multiplication so that the
same grid value is bitwise identical wherever it is computed.
"""

from __future__ import annotations

import math

import numpy as np

# Two grid values are the same atom when they agree to this relative tolerance.
ATOM_RTOL = 1e-12


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < 1.0) or math.isnan(theta):
        raise ValueError(f"theta must lie strictly inside (0, 1), got {theta!r}")
    return theta


def powers(theta: float, n: int) -> np.ndarray:
    """Return ``[theta**0, ..., theta**(n-1)]`` by iterated multiplication."""
    if n <= 0:
        return np.empty(0)
    out = np.empty(n)
    out[0] = 1.0
    if n > 1:
        out[1:] = theta
        np.cumprod(out, out=out)
    return out


def power(theta: float, k: int) -> float:
    """Single grid value ``theta**k`` consistent with :func:`powers`."""
    x = 1.0
    for _ in range(k):
        x *= theta
    return x


def same_atom(a: float, b: float) -> bool:
    return abs(a - b) <= ATOM_RTOL * max(1.0, abs(a))


def default_K(theta: float, budget: float = 1e-10) -> int:
    """Smallest K whose a-priori truncation bound ``2 theta^K/(1+theta)`` is below ``budget``."""
    theta = check_theta(theta)
    return max(2, math.ceil(math.log(budget * (1.0 + theta) / 2.0) / math.log(theta)))
