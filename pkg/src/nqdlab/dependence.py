"""Pairwise NQD path generators and exact oracles on finite joint laws.

Four generator families are provided: independent draws, antithetic pairs
``(Q(u), Q(1-u))`` laid end to end, a Gaussian copula with a banded
nonpositive correlation, and independent copies of a tabulated joint law.
Random streams come from Philox keyed by ``(master_seed, path index)`` so a
path never depends on which worker produced it.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .marginals import Discrete, Marginal
from .scaling import TruncationWindow, g_trunc

KINDS = ("iid", "antithetic_pairs", "gaussian_copula", "discrete_joint")
EXACT_SIZE_CAP = 1_000_000
PMF_TOL = 1e-12


class DependenceError(ValueError):
    pass


class ExactSizeError(DependenceError):
    """The exact oracle would enumerate too many support combinations."""


# ---------------------------------------------------------------------------
# tabulated joint laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Rows of support points ``(x_1..x_m)`` with probabilities."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float).ravel()
        if pts.shape[0] != pr.size or pr.size == 0:
            raise DependenceError("joint table needs one probability per support row")
        if np.any(pr < 0):
            raise DependenceError("joint probabilities must be nonnegative")
        if abs(math.fsum(pr.tolist()) - 1.0) > PMF_TOL:
            raise DependenceError(f"joint probabilities sum to {math.fsum(pr.tolist())!r}, not 1")
        if np.any(pts < 0):
            raise DependenceError("joint support must be nonnegative")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.probs.size

    def marginal(self, j: int) -> Discrete:
        return Discrete(self.points[:, j], self.probs)

    @classmethod
    def from_dict(cls, table: dict) -> "DiscreteJoint":
        keys = sorted(table)
        return cls(np.array(keys, dtype=float), np.array([table[k] for k in keys]))

    @classmethod
    def from_csv(cls, path) -> "DiscreteJoint":
        """Rows ``x_1, ..., x_m, prob``; blank lines, ``#`` comments and a header are skipped."""
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in rec])
                except ValueError:
                    if rows:
                        raise DependenceError(f"non-numeric row in {path}: {rec}") from None
                    continue  # header
        if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
            raise DependenceError(f"{path}: need rows of equal length >= 2 (support..., prob)")
        arr = np.array(rows)
        return cls(arr[:, :-1], arr[:, -1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(self.dim)] + ["prob"])
            for row, p in zip(self.points.tolist(), self.probs.tolist()):
                w.writerow([repr(v) for v in row] + [repr(p)])


def product_joint(marginals: Sequence[Discrete]) -> DiscreteJoint:
    """Independent coupling of discrete marginals."""
    pts, prs = [], []
    for combo in itertools.product(*[list(zip(m.values, m.probs)) for m in marginals]):
        pts.append([v for v, _ in combo])
        prs.append(math.prod(p for _, p in combo))
    return DiscreteJoint(np.array(pts), np.array(prs))


def countermonotone_pair(ma: Discrete, mb: Discrete):
    """Joint pmf of ``(Q_a(U), Q_b(1-U))`` as a list of ``((x, y), prob)``."""
    ca = np.cumsum(ma.probs)
    cb = np.cumsum(mb.probs[::-1])  # b taken in decreasing order
    cuts = np.unique(np.clip(np.concatenate(([0.0], ca, cb)), 0.0, 1.0))
    cuts[-1] = 1.0
    out = []
    vb = mb.values[::-1]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        ia = min(int(np.searchsorted(ca, mid)), ma.values.size - 1)
        ib = min(int(np.searchsorted(cb, mid)), vb.size - 1)
        out.append(((float(ma.values[ia]), float(vb[ib])), hi - lo))
    return out


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _ma_coefficients(rho: Sequence[float]) -> np.ndarray:
    """Moving-average weights ``theta`` with ``sum_i theta_i theta_{i+j} = rho_j``."""
    q = len(rho)
    if q == 0:
        return np.array([1.0])
    if q == 1:
        r = rho[0]
        a, b = math.sqrt(1.0 + 2.0 * r), math.sqrt(max(1.0 - 2.0 * r, 0.0))
        return np.array([(a + b) / 2.0, (a - b) / 2.0])
    # roots of z^q * sum_{|j|<=q} rho_|j| z^j come in pairs (z, 1/z)
    coeffs = np.concatenate((np.asarray(rho, dtype=float)[::-1], [1.0], np.asarray(rho, dtype=float)))
    roots = np.roots(coeffs[::-1])
    roots = roots[np.argsort(-np.abs(roots))][:q]  # outside or on the unit circle
    poly = np.real(np.poly(1.0 / roots))  # ascending coefficients of prod (1 - z / root)
    acov0 = float(np.dot(poly, poly))
    theta = poly / math.sqrt(acov0)
    got = np.array([np.dot(theta[: q + 1 - j], theta[j:]) for j in range(1, q + 1)])
    if not np.allclose(got, rho, atol=1e-9):
        raise DependenceError("spectral factorization of the correlation band failed")
    return theta


def spectral_min(rho: Sequence[float], grid: int = 4097) -> float:
    """Minimum over frequencies of ``1 + 2 sum_j rho_j cos(j w)``."""
    w = np.linspace(0.0, math.pi, grid)
    j = np.arange(1, len(rho) + 1)
    return float(np.min(1.0 + 2.0 * np.cos(np.outer(w, j)) @ np.asarray(rho, dtype=float)))


@dataclass
class DependenceModel:
    """Recipe for NQD sample paths with given marginals.

    ``marginal`` is one marginal or a per-index list (used cyclically).
    ``correlations`` is the band ``rho_1..rho_q`` of the Gaussian copula and
    ``joint`` the table for ``discrete_joint``.
    """

    kind: str
    marginal: Marginal | Sequence[Marginal] | None = None
    correlations: Sequence[float] = ()
    joint: DiscreteJoint | None = None
    _theta: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DependenceError(f"unknown dependence kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "discrete_joint":
            if self.joint is None:
                raise DependenceError("discrete_joint needs a joint table")
            self._marginals = [self.joint.marginal(j) for j in range(self.joint.dim)]
        else:
            if self.marginal is None:
                raise DependenceError(f"{self.kind} needs a marginal")
            ms = [self.marginal] if isinstance(self.marginal, Marginal) else list(self.marginal)
            if not ms:
                raise DependenceError("empty marginal list")
            self._marginals = ms
        self.correlations = tuple(float(r) for r in self.correlations)
        if self.kind == "gaussian_copula":
            if any(r > 0 for r in self.correlations):
                raise DependenceError("copula correlations must be nonpositive")
            if any(r < -1 for r in self.correlations):
                raise DependenceError("copula correlations must be >= -1")
            if spectral_min(self.correlations) < -1e-12:
                raise DependenceError("correlation band is not positive semidefinite")
            self._theta = _ma_coefficients(self.correlations)
        elif self.correlations:
            raise DependenceError("correlations only apply to gaussian_copula")

    def marginal_at(self, i: int) -> Marginal:
        """Law of ``X_{i+1}`` (zero-based index)."""
        return self._marginals[i % len(self._marginals)]

    def marginals(self, n: int | None = None):
        n = len(self._marginals) if n is None else n
        return [self.marginal_at(i) for i in range(n)]

    def means(self, n: int) -> np.ndarray:
        per = np.array([m.mean() for m in self._marginals])
        return per[np.arange(n) % per.size]

    def _transform(self, z_upper_prob, start: int = 0):
        """Apply per-index survival quantiles to upper-tail probabilities."""
        n = z_upper_prob.size
        if len(self._marginals) == 1:
            return np.asarray(self._marginals[0].isf(z_upper_prob), dtype=float)
        out = np.empty(n)
        idx = (np.arange(n) + start) % len(self._marginals)
        for j, m in enumerate(self._marginals):
            sel = idx == j
            out[sel] = m.isf(z_upper_prob[sel])
        return out

    def path(self, master_seed: int, path_index: int, horizon: int) -> np.ndarray:
        """One realization of ``(X_1, ..., X_horizon)``."""
        if horizon < 1:
            raise DependenceError("horizon must be >= 1")
        rng = path_rng(master_seed, path_index)
        if self.kind == "iid" or (self.kind == "gaussian_copula" and not self.correlations):
            z = rng.standard_normal(horizon)
            return self._transform(special.ndtr(-z))
        if self.kind == "gaussian_copula":
            q = len(self.correlations)
            eps = rng.standard_normal(horizon + q)
            z = np.convolve(eps, self._theta, mode="valid")
            return self._transform(special.ndtr(-z))
        if self.kind == "antithetic_pairs":
            m = (horizon + 1) // 2
            u = rng.random(m)
            out = np.empty(2 * m)
            if len(self._marginals) == 1:
                mg = self._marginals[0]
                out[0::2] = mg.quantile(u)
                out[1::2] = mg.isf(u)
            else:
                for i in range(2 * m):
                    mg = self.marginal_at(i)
                    out[i] = mg.quantile(u[i // 2]) if i % 2 == 0 else mg.isf(u[i // 2])
            return out[:horizon]
        # discrete_joint: independent copies of the table, concatenated
        jt = self.joint
        copies = -(-horizon // jt.dim)
        cdf = np.cumsum(jt.probs)
        rows = np.minimum(np.searchsorted(cdf, rng.random(copies) * cdf[-1], side="right"), jt.size - 1)
        return jt.points[rows].ravel()[:horizon]

    def describe(self) -> str:
        if self.kind == "discrete_joint":
            return f"discrete_joint(dim={self.joint.dim}, rows={self.joint.size})"
        ms = ", ".join(m.spec() for m in self._marginals)
        extra = f", correlations={list(self.correlations)}" if self.correlations else ""
        return f"{self.kind}({ms}{extra})"


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class PathBatch:
    master_seed: int
    path_count: int
    horizon: int
    values: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.means.setflags(write=False)


def generate(model: DependenceModel, master_seed: int, path_count: int, horizon: int) -> PathBatch:
    """Materialize ``path_count`` paths; keep it small, the simulator streams instead."""
    if path_count < 1:
        raise DependenceError("path_count must be >= 1")
    vals = np.stack([model.path(master_seed, i, horizon) for i in range(path_count)])
    return PathBatch(int(master_seed), int(path_count), int(horizon), vals, model.means(horizon))


# ---------------------------------------------------------------------------
# exact oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NQDCheck:
    passed: bool
    worst_gap: float
    worst_pair: tuple
    worst_point: tuple


def pair_gap_table(joint: DiscreteJoint, a: int, b: int):
    """``P(X_a <= x, X_b <= y) - P(X_a <= x) P(X_b <= y)`` on the support grid."""
    xa, ia = np.unique(joint.points[:, a], return_inverse=True)
    xb, ib = np.unique(joint.points[:, b], return_inverse=True)
    H = np.zeros((xa.size, xb.size))
    np.add.at(H, (ia, ib), joint.probs)
    C = H.cumsum(axis=0).cumsum(axis=1)
    return xa, xb, C - np.outer(C[:, -1], C[-1, :])


def nqd_check_exact(joint: DiscreteJoint, tol: float = PMF_TOL) -> NQDCheck:
    """Evaluate the pairwise NQD inequality at every support grid point of every pair."""
    if joint.dim < 2:
        return NQDCheck(True, 0.0, (), ())
    worst, pair, point = -math.inf, (), ()
    for a, b in itertools.combinations(range(joint.dim), 2):
        xa, xb, G = pair_gap_table(joint, a, b)
        i, j = np.unravel_index(int(np.argmax(G)), G.shape)
        if G[i, j] > worst:
            worst, pair, point = float(G[i, j]), (a, b), (float(xa[i]), float(xb[j]))
    return NQDCheck(worst <= tol, worst, pair, point)


def _apply(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate ``fn`` elementwise, vectorized when ``fn`` supports arrays."""
    try:
        v = np.asarray(fn(x), dtype=float)
        if v.shape == x.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([fn(float(t)) for t in x], dtype=float)


def _check_monotone(fn: Callable, support: np.ndarray, name: str):
    v = _apply(fn, np.sort(support))
    if np.any(np.diff(v) < 0):
        raise DependenceError(f"transform {name} is not nondecreasing on the support")
    return v


def covariance_sign_oracle(joint: DiscreteJoint, f: Callable, g: Callable, pair=(0, 1)) -> float:
    """Exact ``Cov(f(X_a), g(X_b))``; NQD forces it to be <= 0."""
    a, b = pair
    for name, fn, col in (("f", f, a), ("g", g, b)):
        _check_monotone(fn, np.unique(joint.points[:, col]), name)
    fa = _apply(f, joint.points[:, a])
    gb = _apply(g, joint.points[:, b])
    p = joint.probs
    ef = math.fsum((p * fa).tolist())
    eg = math.fsum((p * gb).tolist())
    return math.fsum((p * (fa - ef) * (gb - eg)).tolist())


def moment_inequality_exact(
    joint: DiscreteJoint,
    window: TruncationWindow,
    blocks: Sequence[int] | None = None,
    eta: int = 0,
):
    """Both sides of the second-moment block inequality with unit constant.

    ``blocks`` holds the bounds ``xi_0 < xi_1 < ... < xi_K`` (default: one
    variable per block); blocks ``eta+1..K`` enter.  Returns ``(lhs, rhs)``
    with ``lhs = E|sum of centered truncated values|^2`` and ``rhs`` the sum
    over blocks of the same quantity block by block.
    """
    if joint.size > EXACT_SIZE_CAP:
        raise ExactSizeError(f"joint has {joint.size} support rows; cap is {EXACT_SIZE_CAP}")
    m = joint.dim
    xi = list(range(m + 1)) if blocks is None else [int(v) for v in blocks]
    if any(b <= a for a, b in zip(xi, xi[1:])) or xi[0] < 0 or xi[-1] > m:
        raise DependenceError("block bounds must increase strictly within the joint's dimension")
    if not 0 <= eta < len(xi) - 1:
        raise DependenceError("offset eta leaves no block")
    p = joint.probs
    Y = g_trunc(joint.points, window)
    Y = Y - (p[:, None] * Y).sum(axis=0)
    block_sums = [Y[:, xi[k - 1] : xi[k]].sum(axis=1) for k in range(eta + 1, len(xi))]
    total = np.sum(block_sums, axis=0)
    lhs = math.fsum((p * total**2).tolist())
    rhs = math.fsum(math.fsum((p * s**2).tolist()) for s in block_sums)
    return lhs, rhs


def antithetic_atoms(n_atoms: int = 100) -> DiscreteJoint:
    """``(U, 1-U)`` with ``U`` on ``n_atoms`` equally weighted, evenly spaced atoms.

    The spacing ``1/sqrt(n^2-1)`` around 1/2 makes ``Var U = 1/12`` exactly,
    matching the continuous uniform.
    """
    if n_atoms < 2:
        raise DependenceError("need at least two atoms")
    h = 1.0 / math.sqrt(n_atoms * n_atoms - 1.0)
    offs = h * (np.arange(n_atoms) - (n_atoms - 1) / 2.0)
    pts = np.column_stack((0.5 + offs, 0.5 - offs))
    return DiscreteJoint(pts, np.full(n_atoms, 1.0 / n_atoms))


# ---------------------------------------------------------------------------
# constructive corpus and empirical checks
# ---------------------------------------------------------------------------


def _random_discrete(rng: np.random.Generator, max_support: int = 4) -> Discrete:
    k = int(rng.integers(2, max_support + 1))
    vals = np.sort(rng.choice(np.arange(0, 10), size=k, replace=False)).astype(float)
    w = rng.dirichlet(np.ones(k))
    w[-1] = 1.0 - w[:-1].sum()
    return Discrete(vals, np.maximum(w, 0.0))


def _pair_component(margs: Sequence[Discrete], a: int, b: int) -> dict:
    """Countermonotone ``(a, b)``, every other coordinate independent."""
    pair = countermonotone_pair(margs[a], margs[b])
    rest = [j for j in range(len(margs)) if j not in (a, b)]
    table: dict = {}
    others = itertools.product(*[list(zip(margs[j].values, margs[j].probs)) for j in rest])
    for combo in others:
        wr = math.prod(w for _, w in combo)
        for (x, y), wp in pair:
            pt = [0.0] * len(margs)
            pt[a], pt[b] = x, y
            for j, (v, _) in zip(rest, combo):
                pt[j] = v
            key = tuple(pt)
            table[key] = table.get(key, 0.0) + wp * wr
    return table


def random_nqd_joint(rng: np.random.Generator, dim: int | None = None) -> DiscreteJoint:
    """NQD by construction: a mixture of couplings that all share the marginals.

    Each component is either the independent coupling or a countermonotone
    pair with the rest independent; every pairwise joint cdf of every
    component lies below the product of marginals, and so does the mixture.
    """
    dim = int(rng.integers(2, 5)) if dim is None else dim
    margs = [_random_discrete(rng) for _ in range(dim)]
    indep = product_joint(margs)
    comps = [dict(zip(map(tuple, indep.points.tolist()), indep.probs.tolist()))]
    for a, b in itertools.combinations(range(dim), 2):
        if rng.random() < 0.6:
            comps.append(_pair_component(margs, a, b))
    w = rng.dirichlet(np.ones(len(comps)))
    table: dict = {}
    for wc, comp in zip(w, comps):
        for key, pr in comp.items():
            table[key] = table.get(key, 0.0) + wc * pr
    tot = math.fsum(table.values())
    return DiscreteJoint.from_dict({k: v / tot for k, v in table.items()})


def nqd_corpus(count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_nqd_joint(rng) for _ in range(count)]


def random_monotone_map(rng: np.random.Generator) -> Callable[[float], float]:
    """A random nondecreasing step-plus-linear map on the reals."""
    cuts = np.sort(rng.uniform(0, 10, size=int(rng.integers(1, 4))))
    jumps = rng.uniform(0, 2, size=cuts.size)
    slope = float(rng.uniform(0, 1))
    shift = float(rng.normal())

    def f(x, cuts=cuts, jumps=jumps):
        x = np.asarray(x, dtype=float)
        return shift + slope * x + (jumps * (x[..., None] > cuts)).sum(axis=-1)

    return f


def empirical_nqd_band(u, v, grid: Sequence[float] | None = None, multiplier: float = 3.0, level: float = 0.05):
    """Largest ``C_n(s, t) - s t - band`` over a grid; <= 0 means the sample looks NQD.

    ``u``, ``v`` are pseudo-observations in (0,1).  The band is
    ``multiplier * sqrt(log(2/level) / (2n))``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.size
    grid = np.arange(1, 10) / 10.0 if grid is None else np.asarray(grid, dtype=float)
    band = multiplier * math.sqrt(math.log(2.0 / level) / (2.0 * n))
    worst = -math.inf
    for s in grid:
        below = u <= s
        for t in grid:
            c = np.count_nonzero(below & (v <= t)) / n
            worst = max(worst, c - s * t - band)
    return worst


__all__ = [
    "DependenceError",
    "DependenceModel",
    "DiscreteJoint",
    "ExactSizeError",
    "KINDS",
    "NQDCheck",
    "PathBatch",
    "antithetic_atoms",
    "countermonotone_pair",
    "covariance_sign_oracle",
    "empirical_nqd_band",
    "generate",
    "moment_inequality_exact",
    "nqd_check_exact",
    "nqd_corpus",
    "pair_gap_table",
    "path_rng",
    "product_joint",
    "random_monotone_map",
    "random_nqd_joint",
    "spectral_min",
]
