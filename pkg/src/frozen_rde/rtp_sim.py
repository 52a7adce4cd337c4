"""Seeded Monte Carlo on the binary tree.

Randomness is a pure function of ``(seed, sample id, node id, stream)``
through the splitmix64 finalizer, so any node's label can be regenerated
without materializing the tree and two boundary copies can share the same
labels.  Nodes use heap numbering: the root is 1 and node ``i`` has
children ``2i`` (the legal child) and ``2i + 1``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from ._grid import check_theta, powers
from .errors import DepthTooLarge

MAX_DEPTH = 28
MAX_FROZEN_DEPTH = 22
BATCH = 4096

STREAM_OMEGA = 1
STREAM_BOUNDARY = 2  # plus copy index

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 output function (wrapping uint64 arithmetic)."""
    z = z ^ (z >> np.uint64(30))
    z = z * _C1
    z = z ^ (z >> np.uint64(27))
    z = z * _C2
    return z ^ (z >> np.uint64(31))


def hash64(seed: int, *keys) -> np.ndarray:
    """Chain ``(seed, k1, k2, ...)`` through splitmix64; keys may be arrays."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(np.uint64(seed & 0xFFFFFFFFFFFFFFFF)) + _GOLDEN)
        for k in keys:
            h = _mix((h ^ np.asarray(k, dtype=np.uint64)) + _GOLDEN)
    return h


def to_unit(h: np.ndarray) -> np.ndarray:
    """Top 53 bits as a uniform double in ``[0, 1)``."""
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def omega(seed: int, sample, node) -> tuple[np.ndarray, np.ndarray]:
    """Labels ``(tau, kappa)``: tau from the high bits, kappa from the lowest bit."""
    h = hash64(seed, sample, node, STREAM_OMEGA)
    return to_unit(h), (h & np.uint64(1)).astype(np.int8) + 1


def chi(tau: float, kappa: int, x: float, y: float) -> float:
    """One step of the burning-time recursion; infinity compares above every real."""
    if kappa == 2:
        return min(x, y)
    if kappa != 1:
        raise ValueError("kappa must be 1 or 2")
    return x if x > tau else math.inf


def chi_many(tau, kappa, x, y) -> np.ndarray:
    return np.where(kappa == 2, np.minimum(x, y), np.where(x > tau, x, np.inf))


@functools.lru_cache(maxsize=32)
def _power_table(theta: float) -> np.ndarray:
    # uniforms and activation times are multiples of 2^-53, so 2^-60 is deep enough
    kmax = math.ceil(-60.0 * math.log(2.0) / math.log(theta)) + 2
    tab = powers(theta, kmax + 1)
    tab.setflags(write=False)
    return tab


def grid_ceil(theta: float, s: np.ndarray) -> np.ndarray:
    """Smallest grid value ``theta^k >= s`` for ``s`` in ``(0, 1]``.

    Grid values come from the iterated-multiplication table, so results are
    bitwise identical to :func:`frozen_rde._grid.powers`.
    """
    tab = _power_table(theta)
    s = np.maximum(np.asarray(s, dtype=float), _power_table(theta)[-1])
    k = np.floor(np.log(s) / math.log(theta)).astype(np.int64)
    k = np.clip(k, 0, tab.size - 2)
    k = np.where(tab[k] < s, k - 1, k)
    k = np.where(tab[np.minimum(k + 1, tab.size - 1)] >= s, k + 1, k)
    return tab[np.clip(k, 0, tab.size - 1)]


def rho_thresholds(theta: float, m: int) -> np.ndarray:
    """Inverse-transform cut points ``theta^k/(1+theta)``, ``k = 0..m``.

    With ``s = u(1+theta)``, a uniform ``u`` maps to infinity when ``s >= 1``
    and to ``x_k`` when ``theta^(k+1) < s <= theta^k``.
    """
    return powers(theta, m + 1) / (1.0 + theta)


def bucket_probabilities(theta: float, m: int) -> np.ndarray:
    """Probabilities the sampler assigns to ``[inf, x_0, ..., x_{m-1}, rest]``."""
    cuts = rho_thresholds(theta, m)
    return np.concatenate([[1.0 - cuts[0]], cuts[:-1] - cuts[1:], [cuts[-1]]])


def sample_rho_from_uniform(theta: float, u: np.ndarray) -> np.ndarray:
    """Exact inverse-transform sampler of the invariant law from uniforms ``u``."""
    u = np.asarray(u, dtype=float)
    s = u * (1.0 + theta)
    out = np.full(u.shape, np.inf)
    fin = s < 1.0
    # u = 0 (probability 2^-53) lands on the deepest tabulated atom
    out[fin] = grid_ceil(theta, s[fin])
    return out


def _boundary(theta: float, seed: int, sample, node, copy: int) -> np.ndarray:
    return sample_rho_from_uniform(theta, to_unit(hash64(seed, sample, node, STREAM_BOUNDARY + copy)))


def _check_depth(depth: int, cap: int = MAX_DEPTH):
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth > cap:
        raise DepthTooLarge(f"depth {depth} exceeds the cap {cap}", depth=depth, cap=cap)


def _evaluate_batch(theta: float, depth: int, seed: int, sample_ids: np.ndarray,
                    copies: int) -> np.ndarray:
    """Root values for a batch of samples; returns shape ``(copies, n)``.

    The tree is explored top-down, only visiting the children that the
    recursion reads (the illegal child of a ``kappa = 1`` node never matters),
    then folded bottom-up.
    """
    levels = []
    samp = sample_ids.astype(np.uint64)
    node = np.ones(samp.size, dtype=np.uint64)
    for _ in range(depth):
        tau, kap = omega(seed, samp, node)
        two = kap == 2
        n2 = np.flatnonzero(two)
        first = np.arange(samp.size)
        # children layout: all first children, then second children of kappa=2 nodes
        c1 = first
        c2 = np.full(samp.size, -1)
        c2[n2] = samp.size + np.arange(n2.size)
        levels.append((tau, kap, c1, c2))
        samp = np.concatenate([samp, samp[n2]])
        node = np.concatenate([2 * node, 2 * node[n2] + np.uint64(1)])
    vals = [_boundary(theta, seed, samp, node, c) for c in range(copies)]
    for tau, kap, c1, c2 in reversed(levels):
        new = []
        for v in vals:
            x = v[c1]
            y = np.where(c2 >= 0, v[np.maximum(c2, 0)], np.inf)
            new.append(chi_many(tau, kap, x, y))
        vals = new
    return np.stack(vals)


def _evaluate(theta: float, depth: int, n_samples: int, seed: int, copies: int,
              first_id: int = 0) -> np.ndarray:
    theta = check_theta(theta)
    _check_depth(depth)
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    out = np.empty((copies, n_samples))
    for start in range(0, n_samples, BATCH):
        ids = np.arange(first_id + start, first_id + min(n_samples, start + BATCH))
        out[:, start : start + ids.size] = _evaluate_batch(theta, depth, seed, ids, copies)
    return out


def sample_roots(theta: float, depth: int, n_samples: int, seed: int) -> np.ndarray:
    """Root burning times of ``n_samples`` independent trees of the given depth."""
    return _evaluate(theta, depth, n_samples, seed, 1)[0]


def sample_root(theta: float, depth: int, seed: int, sample_id: int = 0) -> float:
    return float(_evaluate(theta, depth, 1, seed, 1, first_id=sample_id)[0, 0])


def sample_bivariate_many(theta: float, depth: int, n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Coupled root pairs: shared labels, independent boundary draws."""
    v = _evaluate(theta, depth, n_samples, seed, 2)
    return v[0], v[1]


def sample_bivariate(theta: float, depth: int, seed: int, sample_id: int = 0) -> tuple[float, float]:
    v = _evaluate(theta, depth, 1, seed, 2, first_id=sample_id)
    return float(v[0, 0]), float(v[1, 0])


@dataclass
class DiffSummary:
    p_diff: float
    ci_95: tuple[float, float]
    std_err: float
    depth: int
    n: int

    def to_dict(self) -> dict:
        return {"p_diff": self.p_diff, "ci_95": list(self.ci_95), "std_err": self.std_err,
                "depth": self.depth, "n": self.n}


def summarize_difference(y: np.ndarray, y2: np.ndarray, depth: int) -> DiffSummary:
    n = y.size
    p = float(np.mean(y != y2)) if n else math.nan
    se = math.sqrt(p * (1.0 - p) / n) if n else math.nan
    return DiffSummary(p, (p - 1.96 * se, p + 1.96 * se), se, depth, n)


# -- frozen-set iteration -------------------------------------------------

@dataclass
class FrozenTree:
    """One labelled tree of the given depth in heap layout (index 0 unused)."""

    theta: float
    depth: int
    seed: int
    tau: np.ndarray
    kappa: np.ndarray

    @classmethod
    def generate(cls, theta: float, depth: int, seed: int) -> "FrozenTree":
        theta = check_theta(theta)
        _check_depth(depth, MAX_FROZEN_DEPTH)
        ids = np.arange(2 ** (depth + 1), dtype=np.uint64)
        tau, kap = omega(seed, 0, ids)
        return cls(theta, depth, seed, tau, kap)

    @property
    def n_nodes(self) -> int:
        return 2 ** (self.depth + 1)

    def internal_mask(self) -> np.ndarray:
        """Nodes with ``kappa = 1`` strictly above the leaf level."""
        m = np.zeros(self.n_nodes, dtype=bool)
        inner = slice(1, 2 ** self.depth)
        m[inner] = self.kappa[inner] == 1
        return m

    def percolation_threshold(self, frozen: np.ndarray) -> np.ndarray:
        """Smallest time at which each node has a legal open path to the leaf level.

        Leaves count as reached at every time (the depth proxy for an infinite
        path).  A path through a non-frozen internal node needs its activation
        time to have passed; frozen internal nodes block forever.
        """
        P = np.zeros(self.n_nodes)
        for d in range(self.depth - 1, -1, -1):
            idx = np.arange(2 ** d, 2 ** (d + 1))
            p1, p2 = P[2 * idx], P[2 * idx + 1]
            branch = self.kappa[idx] == 2
            v = np.where(branch, np.minimum(p1, p2), np.maximum(self.tau[idx], p1))
            P[idx] = np.where(~branch & frozen[idx], np.inf, v)
        return P

    def round_up_to_grid(self, P: np.ndarray) -> np.ndarray:
        """``inf {t in {theta^k} : t >= P}``; 0 when ``P = 0`` and infinity when ``P`` is."""
        out = np.full(P.shape, np.inf)
        fin = np.isfinite(P)
        out[fin & (P <= 0)] = 0.0
        pos = fin & (P > 0)
        out[pos] = grid_ceil(self.theta, P[pos])
        return out

    def next_frozen(self, frozen: np.ndarray) -> np.ndarray:
        Y = self.round_up_to_grid(self.percolation_threshold(frozen))
        out = np.zeros(self.n_nodes, dtype=bool)
        idx = np.arange(1, 2 ** self.depth)
        out[idx] = (self.kappa[idx] == 1) & (Y[2 * idx] <= self.tau[idx])
        return out

    def burning_times(self) -> np.ndarray:
        """Bottom-up burning-time recursion with leaves burning at time 0.

        ``{internal i : Y_{i1} <= tau_i}`` then solves the frozen equation
        on the truncated tree.
        """
        Y = np.zeros(self.n_nodes)
        for d in range(self.depth - 1, -1, -1):
            idx = np.arange(2 ** d, 2 ** (d + 1))
            Y[idx] = chi_many(self.tau[idx], self.kappa[idx], Y[2 * idx], Y[2 * idx + 1])
        return Y

    def recursive_solution(self) -> np.ndarray:
        Y = self.burning_times()
        out = np.zeros(self.n_nodes, dtype=bool)
        idx = np.arange(1, 2 ** self.depth)
        out[idx] = (self.kappa[idx] == 1) & (Y[2 * idx] <= self.tau[idx])
        return out

    def boundary_forced(self) -> np.ndarray:
        """Internal nodes whose legal child reaches the leaves through branching nodes only.

        Such nodes freeze in every round regardless of theta; they are an
        artifact of the depth proxy and vanish from any fixed window as the
        depth grows.
        """
        P = self.percolation_threshold(self.internal_mask())
        out = np.zeros(self.n_nodes, dtype=bool)
        idx = np.arange(1, 2 ** self.depth)
        out[idx] = (self.kappa[idx] == 1) & (P[2 * idx] == 0)
        return out

    def solves_frozen_equation(self, frozen: np.ndarray) -> bool:
        """Check the frozen-percolation equation for a candidate set on this tree."""
        return bool(np.array_equal(self.next_frozen(frozen), frozen))

    def level_of(self) -> np.ndarray:
        lv = np.zeros(self.n_nodes, dtype=int)
        for d in range(self.depth + 1):
            lv[2 ** d : 2 ** (d + 1)] = d
        return lv


def check_inclusions(sets: list[np.ndarray]) -> dict[str, bool]:
    """Monotone sandwich inclusions between consecutive rounds.

    (i) F_2n within F_2n+1, (ii) F_2n+1 contains F_2n+2, (iii) F_2n within
    F_2n+2, (iv) F_2n+1 contains F_2n+3.
    """
    def sub(a, b):
        return not np.any(a & ~b)

    ok = {"i": True, "ii": True, "iii": True, "iv": True}
    r = len(sets) - 1
    for k in range(0, r + 1, 2):
        if k + 1 <= r:
            ok["i"] &= sub(sets[k], sets[k + 1])
        if k + 2 <= r:
            ok["iii"] &= sub(sets[k], sets[k + 2])
    for k in range(1, r + 1, 2):
        if k + 1 <= r:
            ok["ii"] &= sub(sets[k + 1], sets[k])
        if k + 2 <= r:
            ok["iv"] &= sub(sets[k + 2], sets[k])
    return ok


@dataclass
class FrozenResult:
    theta: float
    depth: int
    seed: int
    rounds: int
    frozen_set_sizes: list[int]
    inclusions_ok: dict[str, bool]
    level_counts: np.ndarray          # (rounds+1, depth+1) members per tree level
    boundary_forced: int
    gap_size: int                     # |F_odd \ F_even| for the last pair of rounds
    sandwich_ok: bool
    sets: list[np.ndarray] = field(repr=False, default_factory=list)

    def nonempty_within(self, k: int, window: int) -> bool:
        """Whether round ``k`` has a member in the top ``window`` levels."""
        return bool(self.level_counts[k, :window].sum() > 0)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "depth": self.depth, "seed": self.seed, "rounds": self.rounds,
                "frozen_set_sizes": self.frozen_set_sizes, "inclusions_ok": self.inclusions_ok,
                "boundary_forced": self.boundary_forced, "gap_size": self.gap_size,
                "sandwich_ok": self.sandwich_ok,
                "level_counts": self.level_counts.tolist()}


def frozen_iteration(theta: float, depth: int, seed: int, rounds: int,
                     keep_sets: bool = False) -> FrozenResult:
    """Frozen sets ``F_0 = {} , F_1, ..., F_rounds`` on one labelled tree.

    ``F_k`` holds the internal nodes whose legal child percolates, avoiding
    ``F_{k-1}``, at some freezing time before the node activates.
    """
    if rounds < 2:
        raise ValueError("rounds must be >= 2")
    tree = FrozenTree.generate(theta, depth, seed)
    sets = [np.zeros(tree.n_nodes, dtype=bool)]
    for _ in range(rounds):
        sets.append(tree.next_frozen(sets[-1]))
    lv = tree.level_of()
    counts = np.zeros((rounds + 1, depth + 1), dtype=int)
    for k, s in enumerate(sets):
        counts[k] = np.bincount(lv[s], minlength=depth + 1)[: depth + 1]
    sol = tree.recursive_solution()
    sandwich = True
    for k in range(0, rounds, 2):
        sandwich &= not np.any(sets[k] & ~sol) and not np.any(sol & ~sets[k + 1])
    last_even = rounds if rounds % 2 == 0 else rounds - 1
    last_odd = rounds if rounds % 2 == 1 else rounds - 1
    gap = int(np.sum(sets[last_odd] & ~sets[last_even]))
    return FrozenResult(tree.theta, depth, seed, rounds, [int(s.sum()) for s in sets],
                        check_inclusions(sets), counts, int(tree.boundary_forced().sum()), gap,
                        bool(sandwich), sets if keep_sets else [])
