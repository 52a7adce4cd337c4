"""The bivariate map on grid measures and its fixed-point iteration.

One step draws ``(tau, kappa)`` uniformly and applies the same rule to both
coordinates: with ``kappa = 2`` each coordinate is the minimum of the two
children, with ``kappa = 1`` the first child survives iff it exceeds ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._grid import check_theta, default_K
from .bivariate import (BivariateGridMeasure, diagonal_measure, from_signature, grid_values,
                        product_measure, signature_of)
from .serialize import csv_text

DEFAULT_TOL = 1e-9
DEFAULT_MAX_STEPS = 10_000


class T2Operator:
    """Reusable workspace for repeated application of the bivariate map at fixed ``(theta, K)``.

    The kill probabilities use the representative values of
    :meth:`BivariateGridMeasure.grid_values`; for the tail state this is the
    conditional mean under the invariant law, which keeps the marginal map exact.
    """

    def __init__(self, theta: float, K: int):
        self.theta = check_theta(theta)
        self.K = int(K)
        vals = grid_values(self.theta, self.K)
        s = np.where(np.isinf(vals), 1.0, vals)
        self.keep_both = np.minimum.outer(s, s)
        hi = np.maximum.outer(s, s)
        # only the coordinate with the larger value survives; the other goes to infinity
        self.keep_row = (hi - self.keep_both) * np.greater.outer(s, s)
        self.kill = 1.0 - hi
        n = K + 2
        self._G = np.zeros((n + 1, n + 1))

    def __call__(self, m: np.ndarray) -> np.ndarray:
        G = self._G
        inner = G[1:, 1:]
        np.cumsum(m, axis=0, out=inner)
        np.cumsum(inner, axis=1, out=inner)
        G *= G
        out = G[1:, 1:] - G[:-1, 1:]
        out -= G[1:, :-1]
        out += G[:-1, :-1]
        out += m * self.keep_both
        survive = (m * self.keep_row).sum(axis=1)
        out[:, 0] += survive
        out[0, :] += survive
        out[0, 0] += float((m * self.kill).sum())
        out *= 0.5
        # exact arithmetic keeps symmetry and unit mass; rounding drift is
        # amplified by the squaring above, so project back every step
        out += out.T
        out *= 0.5
        out /= out.sum()
        return out


def apply_T2(m: BivariateGridMeasure, op: T2Operator | None = None) -> BivariateGridMeasure:
    op = op or T2Operator(m.theta, m.K)
    return BivariateGridMeasure(m.theta, m.K, op(np.asarray(m.table)))


@dataclass
class IterationTrace:
    steps: np.ndarray
    off_diag: np.ndarray
    tv_prev: np.ndarray
    sig_gap: np.ndarray
    verdict: str
    final: BivariateGridMeasure
    tol: float
    max_steps: int
    meta: dict = field(default_factory=dict)

    def to_csv(self, stride: int = 1, header: dict | None = None) -> str:
        idx = np.arange(0, self.steps.size, max(1, stride))
        if idx.size and idx[-1] != self.steps.size - 1:
            idx = np.append(idx, self.steps.size - 1)
        rows = ((int(self.steps[i]), self.off_diag[i], self.tv_prev[i], self.sig_gap[i]) for i in idx)
        return csv_text(header, ["step", "off_diag", "tv_prev", "sig_gap"], rows)


def classify(off_diag: float, tv: float, tol: float) -> str:
    if off_diag < 10.0 * tol:
        return "converged_diagonal"
    if tv < tol:
        return "converged_nondiagonal"
    return "undecided"


def iterate(m0: BivariateGridMeasure, max_steps: int = DEFAULT_MAX_STEPS, tol: float = DEFAULT_TOL,
            reference: np.ndarray | None = None, record_every: int = 1,
            keep: dict[int, BivariateGridMeasure] | None = None) -> IterationTrace:
    """Apply the map until the total-variation step size drops below ``tol``.

    ``reference`` is an optional signature (indices ``0..K``) whose sup
    distance to the current signature is traced.  Steps listed in ``keep``
    have their measure stored there.
    """
    op = T2Operator(m0.theta, m0.K)
    cur = np.array(m0.table)
    ref = None if reference is None else np.asarray(reference)[: m0.K + 1]
    steps, offs, tvs, gaps = [], [], [], []
    tv = math.inf
    step = 0
    while step < max_steps:
        nxt = op(cur)
        tv = 0.5 * float(np.abs(nxt - cur).sum())
        cur = nxt
        step += 1
        if keep is not None and step in keep:
            keep[step] = BivariateGridMeasure(m0.theta, m0.K, cur)
        done = tv < tol
        if step % record_every == 0 or done or step == max_steps:
            off = float(cur.sum() - np.trace(cur))
            gap = math.nan
            if ref is not None:
                gap = float(np.abs(1.0 - np.cumsum(cur[: m0.K + 1, 0]) - ref[: m0.K + 1]).max())
            steps.append(step)
            offs.append(max(0.0, min(1.0, off)))
            tvs.append(tv)
            gaps.append(gap)
        if done:
            break
    final = BivariateGridMeasure(m0.theta, m0.K, cur)
    verdict = classify(offs[-1] if offs else final.off_diagonal_mass(), tv, tol)
    return IterationTrace(np.array(steps), np.array(offs), np.array(tvs), np.array(gaps),
                          verdict, final, tol, max_steps)


@dataclass
class ProbeResult:
    theta: float
    K: int
    verdict: str
    final_off_diag: float
    signature_gap: float | None
    steps: int
    final_tv: float
    trace: IterationTrace

    def to_dict(self) -> dict:
        return {"theta": self.theta, "K": self.K, "verdict": self.verdict,
                "final_off_diag": self.final_off_diag, "signature_gap": self.signature_gap,
                "steps": self.steps, "final_tv": self.final_tv,
                "tol": self.trace.tol, "max_steps": self.trace.max_steps}


def endogeny_probe(theta: float, K: int | None = None, max_steps: int = DEFAULT_MAX_STEPS,
                   tol: float = DEFAULT_TOL, record_every: int = 1,
                   keep: dict[int, BivariateGridMeasure] | None = None) -> ProbeResult:
    """Iterate from two independent copies of the invariant law and classify the limit.

    Above the critical point the final signature is compared with the
    non-diagonal candidate ``f_{theta, c_hat}`` (reported only).
    """
    from .critical import cached_theta_star, find_c_hat
    from .signature import compute_signature

    theta = check_theta(theta)
    K = default_K(theta) if K is None else int(K)
    ref = None
    if theta > cached_theta_star():
        try:
            c_hat = find_c_hat(theta).value
            ref = compute_signature(theta, c_hat, K).values
        except Exception:  # exploratory comparison only
            ref = None
    tr = iterate(product_measure(theta, K), max_steps, tol, reference=ref,
                 record_every=record_every, keep=keep)
    verdict = tr.verdict
    gap = None
    if verdict == "converged_nondiagonal" and ref is not None:
        gap = float(tr.sig_gap[-1])
    return ProbeResult(theta, K, verdict, float(tr.off_diag[-1]), gap, int(tr.steps[-1]),
                       float(tr.tv_prev[-1]), tr)


__all__ = ["T2Operator", "apply_T2", "iterate", "endogeny_probe", "IterationTrace",
           "ProbeResult", "classify", "diagonal_measure", "product_measure", "from_signature",
           "signature_of"]
