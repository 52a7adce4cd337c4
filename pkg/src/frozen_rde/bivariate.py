"""Symmetric bivariate laws on the grid ``{theta^k} u {inf}`` squared.

Internally a measure is a ``(K+2) x (K+2)`` table indexed in decreasing value
order: position 0 is infinity, positions ``1..K`` are ``x_0 = 1, ..., x_{K-1}``
and position ``K+1`` is the tail state "at most ``x_K``", which lumps every
atom with index ``>= K``.  The tail row is computed exactly from the
signature, so marginals stay exact and only the location of mass inside
the tail state is lost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._grid import check_theta, powers
from .errors import NotAdmissible, NotScalable, TailTooLoose
from .serialize import to_json
from .signature import Signature, _as_signature, power

CLIP_TOL = 1e-12
FAIL_TOL = 1e-9


@dataclass(frozen=True)
class BivariateGridMeasure:
    theta: float
    K: int
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (self.K + 2, self.K + 2):
            raise ValueError("table shape must be (K+2, K+2)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    # views -------------------------------------------------------------
    @property
    def mass(self) -> np.ndarray:
        """Grid part ``m(k, j)`` for ``k, j in {-1, ..., K-1}`` (index -1 is infinity at position 0)."""
        return self.table[: self.K + 1, : self.K + 1]

    @property
    def interior(self) -> np.ndarray:
        return self.table[1 : self.K + 1, 1 : self.K + 1]

    @property
    def inf_row(self) -> np.ndarray:
        return self.table[0, 1 : self.K + 1]

    @property
    def corner(self) -> float:
        return float(self.table[0, 0])

    @property
    def tail_row(self) -> np.ndarray:
        return self.table[self.K + 1, :]

    @property
    def trunc_mass(self) -> float:
        return float(self.table[-1, :].sum() + self.table[:-1, -1].sum())

    def grid_values(self) -> np.ndarray:
        return grid_values(self.theta, self.K)

    def total(self) -> float:
        return float(self.table.sum())

    def marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def off_diagonal_mass(self) -> float:
        return float(self.table.sum() - np.trace(self.table))

    def asymmetry(self) -> float:
        return float(np.abs(self.table - self.table.T).max())

    def m2_violation(self) -> float:
        """Largest excess of ``P(min(Y, Y') <= x_n)`` over ``x_n`` for ``n <= K``."""
        t = self.table
        K = self.K
        # P(Y > x_n, Y' > x_n): both indices among the first n+1 positions
        G = np.cumsum(np.cumsum(t, axis=0), axis=1)
        upper = np.array([G[n, n] for n in range(K + 1)])
        xs = powers(self.theta, K + 1)
        return float(np.max((1.0 - upper) - xs))

    def to_dict(self) -> dict:
        K = self.K
        inter = self.interior
        atoms = [[k, j, float(inter[k, j])] for k in range(K) for j in range(K) if inter[k, j] != 0.0]
        return {
            "theta": self.theta, "K": K, "atoms": atoms,
            "inf_row": self.inf_row.tolist(), "corner": self.corner,
            "trunc_mass": self.trunc_mass, "tail_row": self.tail_row.tolist(),
        }

    def to_json(self) -> str:
        return to_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "BivariateGridMeasure":
        K = int(d["K"])
        t = np.zeros((K + 2, K + 2))
        for k, j, m in d["atoms"]:
            t[k + 1, j + 1] = m
        t[0, 1 : K + 1] = d["inf_row"]
        t[1 : K + 1, 0] = d["inf_row"]
        t[0, 0] = d["corner"]
        t[K + 1, :] = d["tail_row"]
        t[:, K + 1] = d["tail_row"]
        return cls(float(d["theta"]), K, t)


def grid_values(theta: float, K: int) -> np.ndarray:
    """Representative value per position; the tail state uses its conditional mean under ``rho``."""
    xs = powers(theta, K + 1)
    return np.concatenate([[np.inf], xs[:K], [xs[K] / (1.0 + theta)]])


def _clip(table: np.ndarray) -> np.ndarray:
    worst = float(table.min())
    if worst < -FAIL_TOL:
        i, j = np.unravel_index(int(np.argmin(table)), table.shape)
        raise NotAdmissible("reconstructed mass is negative", mass=worst, position=[int(i), int(j)])
    return np.where(table < 0, np.where(table < -CLIP_TOL, table, 0.0), table)


def from_signature(f: Signature, theta: float | None = None, K: int = 40,
                   check: bool = True) -> BivariateGridMeasure:
    """Rebuild the scale-invariant symmetric measure whose signature is ``f``.

    With ``F(x_k, x_j) = x_min f(|k-j|)`` the interior mass is
    ``x_min * s(|k-j|)`` where ``s(0) = 2f(1) - (1+theta) f(0)`` and
    ``s(n) = theta f(n-1) + f(n+1) - (1+theta) f(n)``: the slacks of the two
    second-order admissibility conditions.
    """
    f = _as_signature(f, theta)
    th = f.theta
    K = int(K)
    if K < 2:
        raise ValueError("K must be >= 2")
    v = f.extended(K + 1)
    xs = powers(th, K + 1)
    s = np.empty(K + 1)
    s[0] = 2.0 * v[1] - (1.0 + th) * v[0]
    s[1:] = th * v[:-2] + v[2:] - (1.0 + th) * v[1:-1]
    t = np.zeros((K + 2, K + 2))
    idx = np.arange(K)
    diff = np.abs(idx[:, None] - idx[None, :])
    xmin = xs[np.minimum(idx[:, None], idx[None, :])]
    t[1 : K + 1, 1 : K + 1] = xmin * s[diff]
    edge = v[:K] - v[1 : K + 1]
    t[0, 1 : K + 1] = edge
    t[1 : K + 1, 0] = edge
    t[0, 0] = 1.0 - v[0]
    # tail state: Y <= x_K
    cK = (1.0 - th) / (1.0 + th)
    j = np.arange(K)
    row = xs[:K] * (cK - v[K - j] + th * v[K - j - 1])
    t[K + 1, 1 : K + 1] = row
    t[1 : K + 1, K + 1] = row
    t[K + 1, 0] = t[0, K + 1] = v[K] - 1.0 / (1.0 + th)
    t[K + 1, K + 1] = xs[K] * (2.0 / (1.0 + th) - v[0])
    if check:
        t = _clip(t)
    return BivariateGridMeasure(th, K, t)


def diagonal_measure(theta: float, K: int) -> BivariateGridMeasure:
    """Law of ``(Y, Y)`` with ``Y`` distributed as the invariant law."""
    th = check_theta(theta)
    xs = powers(th, K + 1)
    d = np.concatenate([[th / (1.0 + th)], (1.0 - th) / (1.0 + th) * xs[:K], [xs[K] / (1.0 + th)]])
    return BivariateGridMeasure(th, K, np.diag(d))


def product_measure(theta: float, K: int) -> BivariateGridMeasure:
    """Law of two independent copies of the invariant law."""
    d = np.diag(diagonal_measure(theta, K).table)
    return BivariateGridMeasure(check_theta(theta), K, np.outer(d, d))


def rho_weights(theta: float, K: int) -> np.ndarray:
    return np.diag(diagonal_measure(theta, K).table).copy()


def signature_of(m: BivariateGridMeasure) -> np.ndarray:
    """``f(n) = P(Y <= x_n or Y' < inf)`` for ``n = 0..K``, by direct summation."""
    col = m.table[: m.K + 1, 0]
    return 1.0 - np.cumsum(col)


def marginal_error(m: BivariateGridMeasure) -> float:
    return float(np.abs(m.marginal() - rho_weights(m.theta, m.K)).max())


def coarsen(m: BivariateGridMeasure, K_new: int) -> BivariateGridMeasure:
    """Merge positions with grid index ``>= K_new`` into the tail state."""
    if K_new > m.K or K_new < 2:
        raise ValueError("K_new must lie in [2, K]")
    n = K_new + 1
    t = m.table
    out = np.zeros((K_new + 2, K_new + 2))
    out[:n, :n] = t[:n, :n]
    out[n, :n] = t[n:, :n].sum(axis=0)
    out[:n, n] = out[n, :n]   # symmetric input; reuse the row sum to keep exact symmetry
    out[n, n] = t[n:, n:].sum()
    return BivariateGridMeasure(m.theta, K_new, out)


def _shift_index(theta: float, t: float) -> int:
    if t > 1.0 + 1e-12:
        raise ValueError("only scale factors theta^l with l >= 0 stay on the grid")
    l = int(round(np.log(t) / np.log(theta)))
    if abs(power(theta, l) - t) > 1e-12 * t:
        raise ValueError("scale factor must be a power of theta")
    return l


def scale_bivariate(m: BivariateGridMeasure, t: float) -> BivariateGridMeasure:
    """Coordinatewise scaling by ``t = theta^l``: the result lives on the grid with ``K - l``.

    Atoms ``x_k`` with ``k >= l`` move to ``x_{k-l}`` with mass scaled by
    ``1/t``; everything above ``t`` is sent to infinity and the infinite
    corner receives the remaining ``1 - 1/t`` plus the pushed mass.
    """
    l = _shift_index(m.theta, t)
    if l == 0:
        return m
    if l > m.K - 2:
        raise ValueError("scale factor too small for this truncation depth")
    viol = m.m2_violation()
    if viol > 1e-12:
        raise NotScalable("joint cumulative bound fails", excess=viol)
    tt = power(m.theta, l)
    K2 = m.K - l
    src = m.table
    # positions 0..l collapse to infinity; positions l+1.. shift down by l
    groups = np.concatenate([np.zeros(l + 1, dtype=int), np.arange(1, K2 + 2)])
    out = np.zeros((K2 + 2, K2 + 2))
    np.add.at(out, (groups[:, None], groups[None, :]), src / tt)
    out[0, 0] += 1.0 - 1.0 / tt
    return BivariateGridMeasure(m.theta, K2, out)


def F_operator_tail(f: Signature, n: int, T: int) -> tuple[float, float, float]:
    """``sum_{t>n} theta^t [f(n) - f(t) - theta^n f(t-n) + theta^t f(0)]`` with certified bracket."""
    th = f.theta
    T = max(T, n + 1)
    v = f.extended(T)
    ts = np.arange(n + 1, T + 1)
    pw = powers(th, 2 * T + 3)
    xn = pw[n]
    head = float(np.sum(pw[ts] * (v[n] - v[ts] - xn * v[ts - n] + pw[ts] * v[0])))
    # t > T: f(t) and f(t-n) lie between the limit and f(T-n)
    w1 = pw[T + 1] / (1.0 - th)
    w2 = pw[2 * T + 2] / (1.0 - th * th)
    lim = f.limit
    lo_lim, hi_v = lim - f.tail_bound, max(v[T - n], lim + f.tail_bound)
    est = head + w1 * (v[n] - lim - xn * lim) + w2 * v[0]
    lo = head + w1 * (v[n] - hi_v - xn * hi_v) + w2 * v[0]
    hi = head + w1 * (v[n] - lo_lim - xn * lo_lim) + w2 * v[0]
    return est, lo, hi


def apply_F_operator(f: Signature, theta: float | None, n: int, T: int | None = None,
                     tol: float = 1e-10) -> float:
    """Signature of the once-mapped measure at index ``n``, from the F-level recursion.

    ``F~(x_n, x_0) = F - F^2/2 + x_n^2/(2(1+theta)^2) + 1/(2(1+theta)^2)
    + (1-theta)/(2 theta) sum_{t>n} theta^t [F(x_n,x_0) - F(x_t,x_0) - F(x_n,x_t) + F(x_t,x_t)]``
    with ``F(x_k, x_j) = x_min f(|k-j|)``.
    """
    f = _as_signature(f, theta)
    th = f.theta
    T = f.N if T is None else T
    est, lo, hi = F_operator_tail(f, n, T)
    k = (1.0 - th) / (2.0 * th)
    if k * (hi - lo) > tol:
        raise TailTooLoose("tail bracket wider than tolerance", width=k * (hi - lo), tol=tol)
    F = f.extended(n)[n]
    xn = power(th, n)
    a = 1.0 / (2.0 * (1.0 + th) ** 2)
    return float(F - 0.5 * F * F + a * xn * xn + a + k * est)
