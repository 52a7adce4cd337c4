"""The scalar signature recursion and its companions.

``f(0) = (1 + sqrt(1 + 8c(1+theta)^2)) / (2(1+theta))`` and for ``n >= 1``
``f(n) = (theta^(n-1) + sqrt((2f(n-1) - theta^(n-1))^2 - 4c theta^(2n-2)(1-theta^2))) / 2``.

The sequence is computed directly; the rescaled form ``g(n) = f(n)/theta^n``
overflows for long runs and is only used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._grid import check_theta, power, powers
from .errors import IterationCap, OutOfDomain, TailTooLoose

DEFAULT_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class Signature:
    """A non-increasing sequence ``f(0..N)`` with an estimate of its limit.

    ``tail_bound`` bounds ``|f(N) - f(inf)|``.  ``c`` is ``None`` for
    sequences that do not come from the parametric recursion.
    """

    theta: float
    values: np.ndarray
    limit: float
    tail_bound: float
    c: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size - 1

    def __getitem__(self, n):
        return self.values[n]

    def extended(self, n_max: int) -> np.ndarray:
        """Values up to ``n_max``, padded with the limit beyond the stored range."""
        if n_max <= self.N:
            return self.values[: n_max + 1]
        return np.concatenate([self.values, np.full(n_max - self.N, self.limit)])


@dataclass(frozen=True)
class DerivativeSeq:
    theta: float
    values: np.ndarray
    limit: float
    tail_bound: float


@dataclass
class ConditionResult:
    passed: bool
    slack: float
    worst_index: int | None = None


@dataclass
class VerdictReport:
    conditions: dict[str, ConditionResult] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "conditions": {k: {"passed": v.passed, "slack": v.slack, "worst_index": v.worst_index}
                           for k, v in self.conditions.items()},
        }


def psi_map(theta: float, c: float, x: float) -> float:
    """One step of the rescaled recursion ``g(n) = psi(g(n-1))``."""
    theta = check_theta(theta)
    if c == 0:
        return x / theta
    edge = math.sqrt((1.0 - theta * theta) * c) + 0.5
    if not x > edge:
        raise OutOfDomain("argument outside the domain of the rescaled map", x=x, edge=edge)
    disc = (2.0 * x - 1.0) ** 2 - 4.0 * c * (1.0 - theta * theta)
    return (1.0 + math.sqrt(disc)) / (2.0 * theta)


def f_zero(theta: float, c: float) -> float:
    return (1.0 + math.sqrt(1.0 + 8.0 * c * (1.0 + theta) ** 2)) / (2.0 * (1.0 + theta))


def _step(f_prev: float, p: float, c: float, one_m_t2: float) -> float:
    # p = theta^(n-1)
    d = 2.0 * f_prev - p
    disc = d * d - 4.0 * c * p * p * one_m_t2
    return 0.5 * (p + math.sqrt(max(disc, 0.0)))


def certified_tail(theta: float, c: float, n: int) -> float:
    """Bound on ``f(n) - f(inf)`` from summing the per-step decrease bound."""
    return math.sqrt(c * (1.0 - theta * theta)) * power(theta, n) / (1.0 - theta)


def compute_signature(theta: float, c: float, N: int) -> Signature:
    theta = check_theta(theta)
    if c < 0:
        raise ValueError("c must be non-negative")
    if N < 0:
        raise ValueError("N must be non-negative")
    if c == 0:
        return constant_signature(theta, N)
    one_m_t2 = 1.0 - theta * theta
    vals = np.empty(N + 1)
    f = f_zero(theta, c)
    vals[0] = f
    p = 1.0
    for n in range(1, N + 1):
        f = _step(f, p, c, one_m_t2)
        vals[n] = f
        p *= theta
    bound = math.sqrt(c * one_m_t2) * p / (1.0 - theta)
    return Signature(theta, vals, vals[-1] - 0.5 * bound, bound, c=float(c))


def f_infinity(theta: float, c: float, tol: float = 1e-12,
               max_steps: int = DEFAULT_MAX_STEPS) -> tuple[float, float]:
    """Limit of the signature recursion with a certified error.

    Iterates until ``sqrt(c(1-theta^2)) theta^n/(1-theta) < tol`` and returns
    the last value minus half that bound, so the error is at most ``tol/2``.
    """
    theta = check_theta(theta)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if c == 0:
        return 1.0 / (1.0 + theta), 0.0
    one_m_t2 = 1.0 - theta * theta
    scale = math.sqrt(c * one_m_t2) / (1.0 - theta)
    f = f_zero(theta, c)
    p = 1.0
    n = 0
    while scale * p >= tol:
        if n >= max_steps:
            raise IterationCap("step cap reached before the tail bound met tol",
                               steps=n, achieved_bound=scale * p)
        f = _step(f, p, c, one_m_t2)
        p *= theta
        n += 1
    bound = scale * p
    return f - 0.5 * bound, 0.5 * bound


def f_infinity_many(theta: float, cs: np.ndarray, tol: float = 1e-12,
                    max_steps: int = DEFAULT_MAX_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`f_infinity` over an array of ``c`` values."""
    theta = check_theta(theta)
    cs = np.asarray(cs, dtype=float)
    one_m_t2 = 1.0 - theta * theta
    scale = np.sqrt(cs * one_m_t2) / (1.0 - theta)
    f = (1.0 + np.sqrt(1.0 + 8.0 * cs * (1.0 + theta) ** 2)) / (2.0 * (1.0 + theta))
    smax = float(scale.max()) if scale.size else 0.0
    p = 1.0
    n = 0
    while smax * p >= tol:
        if n >= max_steps:
            raise IterationCap("step cap reached before the tail bound met tol",
                               steps=n, achieved_bound=smax * p)
        d = 2.0 * f - p
        f = 0.5 * (p + np.sqrt(np.maximum(d * d - 4.0 * cs * (p * p * one_m_t2), 0.0)))
        p *= theta
        n += 1
    half = 0.5 * scale * p
    return f - half, half


def gamma_n(theta: float, n: int) -> float:
    """Decrement of the derivative sequence at step ``n``.

    Evaluated as ``(1+theta)^2 theta^(2n-2) / w`` with
    ``w = theta^(n-1) + 2 sum_{j<n-1} theta^j``, a sum of positive terms.  For
    ``theta <= 0.9`` the direct form is evaluated too and must agree.
    """
    theta = check_theta(theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    p = 1.0
    geo = 0.0
    for _ in range(n - 1):
        geo += p
        p *= theta
    w = p + 2.0 * geo
    stable = (1.0 + theta) ** 2 * p * p / w
    if theta <= 0.9:
        direct = p * p * (1.0 - theta * theta) / (2.0 / (1.0 + theta) - p)
        if abs(direct - stable) > 1e-12 * max(1.0, abs(stable)):
            raise ArithmeticError(f"gamma_n forms disagree: {direct!r} vs {stable!r}")
    return stable


def _gammas(theta: float, N: int) -> np.ndarray:
    p = powers(theta, N)                       # theta^(n-1) for n = 1..N
    geo = np.concatenate([[0.0], np.cumsum(p[:-1])])
    return (1.0 + theta) ** 2 * p * p / (p + 2.0 * geo)


def f_tilde(theta: float, N: int) -> DerivativeSeq:
    """Derivative of ``f(n)`` in ``c`` at ``c = 0+``.

    Starts at ``2(1+theta)`` and decreases by ``gamma_n`` each step.  The
    limit extrapolates the remaining decrements with their asymptotic ratio
    ``theta^2``; ``tail_bound`` is the crude bound ``(1+theta)^2 theta^N/(1-theta)``.
    """
    theta = check_theta(theta)
    if N < 1:
        raise ValueError("N must be >= 1")
    g = _gammas(theta, N)
    vals = np.empty(N + 1)
    vals[0] = 2.0 * (1.0 + theta)
    vals[1:] = vals[0] - np.cumsum(g)
    bound = (1.0 + theta) ** 2 * power(theta, N) / (1.0 - theta)
    est = g[-1] * theta * theta / (1.0 - theta * theta)
    return DerivativeSeq(theta, vals, float(vals[-1] - min(est, bound)), bound)


def f_tilde_limit(theta: float, tol: float = 1e-14) -> tuple[float, float]:
    """``f_tilde(inf)`` with enough terms that the tail bound is below ``tol``."""
    theta = check_theta(theta)
    N = max(2, math.ceil(math.log(tol * (1.0 - theta) / (1.0 + theta) ** 2) / math.log(theta)))
    d = f_tilde(theta, N)
    return d.limit, d.tail_bound


def linearization_gap(theta: float, c: float, N: int) -> np.ndarray:
    """``f_{theta,c}(n) - f_{theta,0}(n) - c f_tilde(n)`` for exploration of the small-c regime."""
    f = compute_signature(theta, c, N).values
    return f - 1.0 / (1.0 + theta) - c * f_tilde(theta, max(N, 1)).values[: N + 1]


def _as_signature(f, theta=None) -> Signature:
    if isinstance(f, Signature):
        return f
    vals = np.asarray(f, dtype=float)
    if theta is None:
        raise ValueError("theta is required for a bare sequence")
    return Signature(theta, vals, float(vals[-1]), 0.0)


def check_signature_conditions(f: Signature, tol: float = 1e-9) -> VerdictReport:
    """Check the five admissibility conditions of a signature.

    (i) f(0) <= 1; (ii) the limit is 1/(1+theta); (iii) non-increasing;
    (iv) (1+theta) f(0) <= 2 f(1); (v) (1+theta) f(n) <= theta f(n-1) + f(n+1).
    Slack is reported so that positive means satisfied.
    """
    f = _as_signature(f)
    if f.values.size < 3:
        raise ValueError("need at least three values")
    th = f.theta
    v = f.values
    rep = VerdictReport()
    s1 = 1.0 - v[0]
    rep.conditions["i"] = ConditionResult(s1 >= -tol, float(s1), 0)
    s2 = f.tail_bound + tol - abs(f.limit - 1.0 / (1.0 + th))
    rep.conditions["ii"] = ConditionResult(s2 >= 0, float(s2), None)
    d = v[:-1] - v[1:]
    i3 = int(np.argmin(d))
    rep.conditions["iii"] = ConditionResult(bool(d[i3] >= -tol), float(d[i3]), i3 + 1)
    s4 = 2.0 * v[1] - (1.0 + th) * v[0]
    rep.conditions["iv"] = ConditionResult(s4 >= -tol, float(s4), 0)
    s5 = th * v[:-2] + v[2:] - (1.0 + th) * v[1:-1]
    i5 = int(np.argmin(s5))
    rep.conditions["v"] = ConditionResult(bool(s5[i5] >= -tol), float(s5[i5]), i5 + 1)
    return rep


def _tail_sum_bracket(f: Signature, start: int, T: int) -> tuple[float, float, float]:
    """``sum_{t>=start} theta^t f(t+1)`` using stored values up to ``f(T)``.

    Terms with ``t+1 > T`` are replaced by the limit; monotonicity of ``f``
    brackets the omitted part between ``f(inf)`` and ``f(T)``.
    Returns (estimate, lower, upper).
    """
    th = f.theta
    T = min(T, f.N)
    head = 0.0
    if start + 1 <= T:
        idx = np.arange(start, T)                     # t with t+1 <= T
        head = float(np.dot(powers(th, T)[start:], f.values[idx + 1]))
        first_tail = T
    else:
        first_tail = start
    w = power(th, first_tail) / (1.0 - th)
    lo_lim = f.limit - f.tail_bound
    hi_lim = f.limit + f.tail_bound
    est = head + w * f.limit
    lo = head + w * lo_lim
    hi = head + w * max(f.values[T], hi_lim)
    return est, lo, hi


def c_from_signature(f: Signature, theta: float | None = None, T: int | None = None,
                     tol: float = 1e-9) -> float:
    """Recover ``c`` from a signature.

    Uses the telescoped identity
    ``c = f(inf)^2 + theta f(0)/(1+theta) - (1-theta) sum_t theta^t f(t+1)``,
    which equals the familiar ``1/(1+theta)^2 + ...`` form whenever the limit
    is ``1/(1+theta)`` and stays exact for every member of the parametric family.
    """
    f = _as_signature(f, theta)
    th = f.theta
    T = f.N if T is None else T
    est, lo, hi = _tail_sum_bracket(f, 0, T)
    lim2_lo = (f.limit - f.tail_bound) ** 2
    lim2_hi = (f.limit + f.tail_bound) ** 2
    base = th * f.values[0] / (1.0 + th)
    c = f.limit ** 2 + base - (1.0 - th) * est
    width = (lim2_hi - lim2_lo) + (1.0 - th) * (hi - lo)
    if width > tol:
        raise TailTooLoose("tail bracket wider than tolerance", width=width, tol=tol)
    return float(c)


def bivariate_rde_residual_f(f: Signature, theta: float | None, c: float, n: int,
                             T: int | None = None, tol: float = 1e-9) -> float:
    """Left minus right side of the summed signature identity at index ``n``.

    ``f(n)^2 = 1/(1+theta)^2 + theta^n f(n) - (1-theta) sum_{t>=n} theta^t f(t+1) + c theta^(2n)``.
    It vanishes for all ``n`` exactly when the signature solves the bivariate equation.
    """
    f = _as_signature(f, theta)
    th = f.theta
    T = f.N if T is None else T
    if n + 1 > f.N:
        raise ValueError("signature too short for this index")
    est, lo, hi = _tail_sum_bracket(f, n, T)
    if (1.0 - th) * (hi - lo) > tol:
        raise TailTooLoose("tail bracket wider than tolerance", width=(1.0 - th) * (hi - lo), tol=tol)
    xn = power(th, n)
    fn = f.values[n]
    rhs = 1.0 / (1.0 + th) ** 2 + xn * fn - (1.0 - th) * est + c * xn * xn
    return float(fn * fn - rhs)


def constant_signature(theta: float, N: int) -> Signature:
    theta = check_theta(theta)
    return Signature(theta, np.full(N + 1, 1.0 / (1.0 + theta)), 1.0 / (1.0 + theta), 0.0, c=0.0)
