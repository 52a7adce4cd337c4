"""Root finding for the critical point and the non-diagonal parameter."""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._grid import check_theta
from .errors import BelowCritical, FrozenRDEError, NoBracket, NoSignChange
from .signature import f_infinity, f_infinity_many, f_tilde_limit

THETA_STAR_BRACKET = (0.5, 1.0 - 1e-4)
GATE_TOL = 1e-6
SCAN_LO, SCAN_HI, SCAN_POINTS = 1e-8, 4.0, 400
F_TOL = 1e-13


@dataclass(frozen=True)
class RootResult:
    value: float
    bracket: tuple[float, float]
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {"value": self.value, "bracket": list(self.bracket),
                "residual": self.residual, "iterations": self.iterations}


def g_critical(theta: float) -> float:
    """``f_tilde_theta(inf)``: positive below the critical point, negative above."""
    return f_tilde_limit(theta)[0]


def theta_star(tol: float = 1e-10) -> RootResult:
    if tol < 1e-12:
        raise ValueError("tol must be >= 1e-12")
    lo, hi = THETA_STAR_BRACKET
    g_lo, g_hi = g_critical(lo), g_critical(hi)
    if not (g_lo > 0 > g_hi):
        raise NoSignChange("critical function does not change sign on the bracket",
                           g_lo=g_lo, g_hi=g_hi)
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g_critical(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    mid = 0.5 * (lo + hi)
    return RootResult(mid, (lo, hi), g_critical(mid), it)


@functools.lru_cache(maxsize=1)
def cached_theta_star() -> float:
    return theta_star(GATE_TOL).value


def c_upper_bound(theta: float) -> float:
    return max(0.0, theta * (2.0 * theta - 1.0) / (1.0 + theta) ** 2)


def h_value(theta: float, c: float, tol: float = F_TOL) -> float:
    """``f_{theta,c}(inf) - 1/(1+theta)``."""
    return f_infinity(theta, c, tol)[0] - 1.0 / (1.0 + theta)


def scan_grid(lo: float = SCAN_LO, hi: float = SCAN_HI, points: int = SCAN_POINTS) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def find_c_hat(theta: float, tol: float = 1e-12, f_tol: float = F_TOL) -> RootResult:
    """First downward-to-upward crossing of ``h(c) = f(inf) - 1/(1+theta)`` for ``c > 0``.

    A log-spaced scan over ``[1e-8, 4]`` locates the crossing, then bisection
    narrows it to ``tol``.
    """
    theta = check_theta(theta)
    if theta <= cached_theta_star() + GATE_TOL:
        raise BelowCritical("no positive root at or below the critical point",
                            theta=theta, theta_star=cached_theta_star())
    cs = scan_grid()
    finf, err = f_infinity_many(theta, cs, f_tol)
    h = finf - 1.0 / (1.0 + theta)
    neg = h < -err
    pos = h > err
    idx = np.nonzero(neg[:-1] & pos[1:])[0]
    if idx.size == 0:
        raise NoBracket("no sign change of h on the scan grid", theta=theta,
                        grid=cs.tolist(), h=h.tolist())
    i = int(idx[0])
    lo, hi = float(cs[i]), float(cs[i + 1])
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h_value(theta, mid, f_tol) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    c = 0.5 * (lo + hi)
    return RootResult(c, (lo, hi), h_value(theta, c, f_tol), it)


def _threads() -> int:
    env = os.environ.get("FROZEN_RDE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return os.cpu_count() or 1


def _sweep_point(theta: float) -> tuple[float, float | None, str]:
    if theta <= cached_theta_star() + GATE_TOL:
        return theta, 0.0, "below_critical"
    try:
        r = find_c_hat(theta)
    except FrozenRDEError as exc:
        return theta, None, exc.code
    status = "ok" if r.value <= c_upper_bound(theta) + 1e-9 else "bound_violation"
    return theta, r.value, status


def theta_grid(theta_min: float, theta_max: float, step: float) -> np.ndarray:
    n = int(round((theta_max - theta_min) / step))
    return np.round(theta_min + step * np.arange(n + 1), 12)


def sweep_c_hat(theta_min: float, theta_max: float, step: float,
                workers: int | None = None) -> list[tuple[float, float | None, str]]:
    """Rows ``(theta, c_hat, status)``; ``c_hat`` is 0 at or below the critical point."""
    grid = theta_grid(theta_min, theta_max, step)
    if grid.size and (grid[0] <= 0 or grid[-1] >= 1):
        raise ValueError("theta range must lie inside (0, 1)")
    cached_theta_star()
    workers = _threads() if workers is None else workers
    if workers <= 1 or grid.size < 4:
        return [_sweep_point(float(t)) for t in grid]
    with ProcessPoolExecutor(max_workers=min(workers, grid.size)) as ex:
        return list(ex.map(_sweep_point, grid.tolist()))


def default_c_grid(theta: float, points: int = 401, c_max: float | None = None) -> np.ndarray:
    c_max = c_upper_bound(theta) if c_max is None else c_max
    return np.linspace(0.0, c_max, points)


def profile_f_infinity(theta: float, c_grid=None, tol: float = F_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Table of ``(c, f_inf)`` over ``c_grid`` (default: 401 points on ``[0, c_max]``)."""
    theta = check_theta(theta)
    cs = default_c_grid(theta) if c_grid is None else np.asarray(c_grid, dtype=float)
    vals, _ = f_infinity_many(theta, cs, tol)
    vals = np.where(cs == 0, 1.0 / (1.0 + theta), vals)
    return cs, vals


def count_upcrossings(cs: np.ndarray, finf: np.ndarray, level: float) -> dict:
    """Summary of how the profile moves around ``level`` (the c = 0 point is skipped)."""
    h = finf[cs > 0] - level
    s = np.sign(h)
    up = int(np.sum((s[:-1] < 0) & (s[1:] > 0)))
    down = int(np.sum((s[:-1] > 0) & (s[1:] < 0)))
    return {"dips_below": bool(np.any(h < 0)), "upcrossings": up, "downcrossings": down,
            "min_h": float(h.min()) if h.size else math.nan}
