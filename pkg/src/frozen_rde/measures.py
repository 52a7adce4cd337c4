"""Atomic probability laws on I = [0, 1] plus a point at infinity.

The invariant burning-time law for the geometric freezing grid
``{theta^k}`` has infinitely many atoms; it is represented by its first K
atoms together with an explicitly flagged tail bucket that carries the
remaining mass (and its first moment) below ``theta^K``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._grid import ATOM_RTOL, check_theta, powers, same_atom
from .errors import EmptyXiWarning, NotScalable
from .serialize import to_json

# Slack allowed on the cumulative bound rho([0,t]) <= t.
M1_TOL = 1e-12


@dataclass(frozen=True)
class TailNote:
    """Mass lumped below ``cutoff`` in place of an infinite atom family.

    ``K`` is the index of the first omitted atom, ``lumped`` its total mass and
    ``first_moment`` the integral of ``s`` over the omitted atoms.
    """

    K: int
    lumped: float
    cutoff: float
    first_moment: float


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    values: np.ndarray
    masses: np.ndarray
    inf_mass: float
    tail: TailNote | None = None
    empty_xi: bool = field(default=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        m = np.array(self.masses, dtype=float)
        if v.shape != m.shape or v.ndim != 1:
            raise ValueError("values and masses must be 1-d arrays of equal length")
        if v.size and (np.any(v < 0) or np.any(v > 1)):
            raise ValueError("atom values must lie in [0, 1]")
        if v.size > 1 and np.any(np.diff(v) <= 0):
            raise ValueError("atom values must be strictly increasing")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "inf_mass", float(self.inf_mass))

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (np.array_equal(self.values, other.values)
                and np.array_equal(self.masses, other.masses)
                and self.inf_mass == other.inf_mass and self.tail == other.tail)

    __hash__ = None

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.masses.tolist()))

    @property
    def lumped(self) -> float:
        return self.tail.lumped if self.tail else 0.0

    def total(self) -> float:
        return float(self.masses.sum()) + self.inf_mass + self.lumped

    def cdf(self, t: float) -> float:
        """Mass of ``[0, t]``; the tail bucket counts once ``t`` reaches its cutoff."""
        idx = np.searchsorted(self.values, t * (1 + ATOM_RTOL), side="right")
        out = float(self.masses[:idx].sum())
        if self.tail and t >= self.tail.cutoff * (1 - ATOM_RTOL):
            out += self.tail.lumped
        return out

    def first_moment(self, t: float) -> float:
        """Integral of ``s`` against the measure over ``[0, t]``."""
        idx = np.searchsorted(self.values, t * (1 + ATOM_RTOL), side="right")
        out = float(np.dot(self.values[:idx], self.masses[:idx]))
        if self.tail and t >= self.tail.cutoff * (1 - ATOM_RTOL):
            out += self.tail.first_moment
        return out

    def mass_at(self, value: float) -> float:
        if math.isinf(value):
            return self.inf_mass
        i = np.searchsorted(self.values, value)
        for j in (i - 1, i):
            if 0 <= j < self.values.size and same_atom(self.values[j], value):
                return float(self.masses[j])
        return 0.0

    def support_points(self) -> np.ndarray:
        """Atom locations, plus the tail cutoff when a tail bucket exists."""
        if self.tail:
            return np.concatenate([[self.tail.cutoff], self.values])
        return self.values.copy()

    def m1_violation(self) -> float:
        """Largest excess of ``rho([0,t])`` over ``t`` at the support points (<= 0 when fine)."""
        worst = -math.inf
        for t in self.support_points():
            worst = max(worst, self.cdf(t) - t)
        return worst if worst > -math.inf else 0.0

    def in_m1(self, tol: float = M1_TOL) -> bool:
        return self.m1_violation() <= tol

    def to_dict(self) -> dict:
        tail = {"K": self.tail.K, "lumped": self.tail.lumped, "cutoff": self.tail.cutoff,
                "first_moment": self.tail.first_moment} if self.tail else None
        return {"atoms": [[v, m] for v, m in self.atoms], "inf_mass": self.inf_mass, "tail": tail}

    def to_json(self) -> str:
        return to_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "AtomicMeasure":
        atoms = d.get("atoms", [])
        tail = d.get("tail")
        note = None
        if tail:
            note = TailNote(int(tail["K"]), float(tail["lumped"]), float(tail["cutoff"]),
                            float(tail["first_moment"]))
        return cls(np.array([a[0] for a in atoms], dtype=float),
                   np.array([a[1] for a in atoms], dtype=float),
                   float(d["inf_mass"]), note)


def delta_inf() -> AtomicMeasure:
    return AtomicMeasure(np.empty(0), np.empty(0), 1.0)


def make_rho_theta(theta: float, K: int) -> AtomicMeasure:
    """Invariant law on the grid ``{theta^k}``: atoms ``theta^k`` for ``k < K`` plus tail bucket."""
    theta = check_theta(theta)
    if int(K) != K or K < 2:
        raise ValueError("K must be an integer >= 2")
    K = int(K)
    xs = powers(theta, K + 1)
    masses = (1.0 - theta) / (1.0 + theta) * xs[:K]
    xK = xs[K]
    tail = TailNote(K=K, lumped=float(xK / (1.0 + theta)), cutoff=float(xK),
                    first_moment=float(xK * xK / (1.0 + theta) ** 2))
    return AtomicMeasure(xs[:K][::-1], masses[::-1], theta / (1.0 + theta), tail)


def solve_rde_finite_xi(times: Sequence[float]) -> AtomicMeasure:
    """Unique invariant law concentrated on a finite set of freezing times.

    The cumulative mass obeys ``F(t_k) = max(F(t_{k-1}), t_k - F(t_{k-1}))``
    starting from zero; an empty set yields the point mass at infinity.
    """
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        warnings.warn("empty set of freezing times; returning the point mass at infinity",
                      EmptyXiWarning, stacklevel=2)
        m = delta_inf()
        object.__setattr__(m, "empty_xi", True)
        return m
    if t.ndim != 1 or np.any(t <= 0) or np.any(t > 1):
        raise ValueError("freezing times must lie in (0, 1]")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("freezing times must be strictly increasing")
    F_prev = 0.0
    masses = np.empty(t.size)
    for k, tk in enumerate(t):
        F = max(F_prev, tk - F_prev)
        masses[k] = F - F_prev
        F_prev = F
    keep = masses > 0
    return AtomicMeasure(t[keep], masses[keep], 1.0 - F_prev)


def rde_residual(m: AtomicMeasure, t: float) -> float:
    """``int_[0,t] s rho(ds) - rho([0,t])^2``; zero on the support of a solution."""
    F = m.cdf(t)
    return m.first_moment(t) - F * F


def scale_measure(m: AtomicMeasure, t: float) -> AtomicMeasure:
    """Scaling map: keep atoms ``y <= t`` as ``y/t`` with mass divided by ``t``.

    Everything else goes to infinity, which receives the deficit
    ``1 - rho([0,t])/t``.
    """
    t = float(t)
    if not t > 0:
        raise ValueError("scale factor must be positive")
    viol = m.m1_violation()
    if viol > M1_TOL:
        raise NotScalable("cumulative bound rho([0,t]) <= t fails", excess=viol)
    keep = m.values <= t * (1 + ATOM_RTOL)
    vals = np.minimum(m.values[keep] / t, 1.0)
    masses = m.masses[keep] / t
    tail = None
    if m.tail and m.tail.cutoff <= t * (1 + ATOM_RTOL):
        tail = TailNote(K=int(vals.size), lumped=m.tail.lumped / t,
                        cutoff=m.tail.cutoff / t, first_moment=m.tail.first_moment / (t * t))
    kept = float(masses.sum()) + (tail.lumped if tail else 0.0)
    return AtomicMeasure(vals, masses, 1.0 - kept, tail)


def sup_distance(a: AtomicMeasure, b: AtomicMeasure) -> float:
    """Largest atomwise mass difference, matching atoms within the grid tolerance.

    Tail buckets are compared as one extra atom at their cutoff.
    """
    def items(m):
        out = list(m.atoms)
        if m.tail:
            out.append((m.tail.cutoff, m.tail.lumped))
        return sorted(out)

    ia, ib = items(a), items(b)
    worst = abs(a.inf_mass - b.inf_mass)
    i = j = 0
    while i < len(ia) or j < len(ib):
        if j >= len(ib) or (i < len(ia) and ia[i][0] < ib[j][0] and not same_atom(ia[i][0], ib[j][0])):
            worst = max(worst, abs(ia[i][1]))
            i += 1
        elif i >= len(ia) or (ib[j][0] < ia[i][0] and not same_atom(ia[i][0], ib[j][0])):
            worst = max(worst, abs(ib[j][1]))
            j += 1
        else:
            worst = max(worst, abs(ia[i][1] - ib[j][1]))
            i += 1
            j += 1
    return worst
