"""Norms on grid functions: Lebesgue, Morrey, BMO, grand Lebesgue, and the
generalized grand Morrey norm.

All ball suprema are exact maxima over the realized closed-ball family of
the underlying space.  The epsilon suprema of the grand norms are maxima
over a finite grid; the grid is user-suppliable, defaulting to a geometric
sequence below s_max, and grid refinement can only increase the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .homspace import DiscreteHomSpace

__all__ = [
    "EmptyGrid",
    "TabulatedFunction",
    "GridFunction",
    "GrandParams",
    "NormResult",
    "as_values",
    "lp_norm",
    "morrey_norm",
    "morrey_norm_detail",
    "bmo_norm",
    "grand_lebesgue_norm",
    "grand_lebesgue_norm_detail",
    "phi_functional",
    "grand_morrey_norm",
    "grand_morrey_norm_detail",
    "s_max",
    "default_eps_grid",
]


class EmptyGrid(ValueError):
    """No epsilon grid point lies below the requested endpoint."""


@dataclass(frozen=True)
class TabulatedFunction:
    """Piecewise-linear table on knots 0 < x_1 < ... < x_m.

    Evaluation interpolates linearly, extends from (0, head_value) on the
    left and holds the last value on the right.  head_value is the limit at
    0+ (zero for the vanishing families used here), which gives the table an
    explicit right derivative at 0: (y_1 - head) / x_1.
    """

    xs: np.ndarray
    ys: np.ndarray
    head_value: float = 0.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
            raise ValueError("knots and values must be equal-length 1-D arrays")
        if xs[0] <= 0 or np.any(np.diff(xs) <= 0):
            raise ValueError("knots must be strictly increasing and positive")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __call__(self, x):
        xp = np.concatenate([[0.0], self.xs])
        yp = np.concatenate([[self.head_value], self.ys])
        out = np.interp(x, xp, yp)
        return float(out) if np.isscalar(x) else out

    @property
    def right_derivative0(self) -> float:
        return float((self.ys[0] - self.head_value) / self.xs[0])

    @property
    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.ys) >= 0) and self.ys[0] >= self.head_value)

    def rightmost_below(self, level: float) -> float | None:
        """Largest x in the table domain with value <= level, or None when the
        whole table sits below the level (an unbounded sup)."""
        if self.ys[-1] <= level:
            return None
        xs = np.concatenate([[0.0], self.xs])
        ys = np.concatenate([[self.head_value], self.ys])
        # scan from the right for the last downward crossing of `level`
        for i in range(len(xs) - 1, 0, -1):
            y0, y1 = ys[i - 1], ys[i]
            if y1 <= level:
                return float(xs[i])
            if y0 <= level < y1:
                return float(xs[i - 1] + (level - y0) * (xs[i] - xs[i - 1]) / (y1 - y0))
        return 0.0

    @staticmethod
    def power(theta: float, knots) -> "TabulatedFunction":
        knots = np.asarray(knots, dtype=float)
        return TabulatedFunction(knots, knots**theta)

    @staticmethod
    def linear(slope: float, knots) -> "TabulatedFunction":
        knots = np.asarray(knots, dtype=float)
        return TabulatedFunction(knots, slope * knots)

    @staticmethod
    def zero(knots=(1.0,)) -> "TabulatedFunction":
        knots = np.asarray(knots, dtype=float)
        return TabulatedFunction(knots, np.zeros_like(knots))

    @staticmethod
    def from_callable(fn: Callable, knots) -> "TabulatedFunction":
        knots = np.asarray(knots, dtype=float)
        return TabulatedFunction(knots, np.asarray([fn(x) for x in knots]))


@dataclass(frozen=True)
class GridFunction:
    """A real-valued function on the atoms of a space."""

    space: DiscreteHomSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.n,):
            raise ValueError(f"expected {self.space.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def as_values(space: DiscreteHomSpace, f) -> np.ndarray:
    """Coerce a GridFunction or array-like to a validated value vector."""
    if isinstance(f, GridFunction):
        if f.space is not space and f.space.n != space.n:
            raise ValueError("grid function lives on a different space")
        return f.values
    v = np.asarray(f, dtype=float)
    if v.shape != (space.n,):
        raise ValueError(f"expected {space.n} values, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("grid function values must be finite")
    return v


def default_eps_grid(smax: float, ratio: float = 0.9, floor: float = 1e-6,
                     max_points: int | None = None) -> np.ndarray:
    """Geometric grid smax*ratio^k, k >= 1, truncated at `floor`."""
    if not (0 < ratio < 1):
        raise ValueError("ratio must lie in (0, 1)")
    pts = []
    eps = smax * ratio
    while eps >= floor and (max_points is None or len(pts) < max_points):
        pts.append(eps)
        eps *= ratio
    if not pts:
        pts = [smax * ratio]
    return np.asarray(pts[::-1])


def s_max(p: float, lam: float, A: TabulatedFunction) -> float:
    """min{p-1, sup{x > 0: A(x) <= lam}} computed on the table.

    The sup is the rightmost point of the piecewise-linear graph lying at or
    below lam; a table entirely below lam (in particular A == 0) counts as an
    unbounded sup, giving p - 1.
    """
    if p <= 1:
        raise ValueError("need p > 1")
    if not A.is_nondecreasing:
        raise ValueError("A must be non-decreasing")
    a = A.rightmost_below(lam)
    if a is None:
        return p - 1.0
    return min(p - 1.0, a)


@dataclass(frozen=True)
class GrandParams:
    """Exponent bundle (p, lambda, phi, A, eps grid, s_max) of a grand Morrey norm."""

    p: float
    lam: float
    phi: TabulatedFunction
    A: TabulatedFunction
    eps_grid: np.ndarray
    smax: float

    def __post_init__(self):
        grid = np.asarray(self.eps_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("eps grid must be strictly increasing and non-empty")
        if grid[0] <= 0 or grid[-1] > self.smax * (1 + 1e-12):
            raise ValueError("eps grid must lie in (0, s_max]")
        grid.setflags(write=False)
        object.__setattr__(self, "eps_grid", grid)
        expected = s_max(self.p, self.lam, self.A)
        if self.smax > expected * (1 + 1e-9) + 1e-300:
            raise ValueError(f"s_max={self.smax} exceeds min(p-1, a)={expected}")
        av = self.A(grid)
        if np.any(self.lam - av < -1e-12):
            raise ValueError("lambda - A(eps) must stay non-negative on the grid")
        pv = self.phi(grid)
        if np.any(pv <= 0) or not np.all(np.isfinite(pv)):
            raise ValueError("phi must be positive and bounded on the grid")

    @staticmethod
    def power(p: float, lam: float, theta: float, A: TabulatedFunction | None = None,
              eps_grid=None, ratio: float = 0.9, floor: float = 1e-6,
              max_points: int | None = None) -> "GrandParams":
        """phi(eps) = eps^theta with an optional lambda shift table A."""
        if A is None:
            A = TabulatedFunction.zero()
        sm = s_max(p, lam, A)
        if eps_grid is None:
            eps_grid = default_eps_grid(sm, ratio=ratio, floor=floor,
                                        max_points=max_points)
        eps_grid = np.asarray(eps_grid, dtype=float)
        phi = TabulatedFunction.power(theta, eps_grid)
        return GrandParams(p, lam, phi, A, eps_grid, sm)

    @staticmethod
    def tabulated(p: float, lam: float, phi: TabulatedFunction,
                  A: TabulatedFunction, eps_grid) -> "GrandParams":
        sm = s_max(p, lam, A)
        grid = np.asarray(eps_grid, dtype=float)
        return GrandParams(p, lam, phi, A, grid, sm)


@dataclass(frozen=True)
class NormResult:
    value: float
    eps: float | None = None
    center: int | None = None
    rank: int | None = None


def lp_norm(space: DiscreteHomSpace, f, p: float) -> float:
    """(sum |f|^p weight)^(1/p) for p >= 1."""
    if p < 1:
        raise ValueError("need p >= 1")
    v = as_values(space, f)
    return float((np.abs(v) ** p @ space.weight) ** (1.0 / p))


def _morrey_table(space: DiscreteHomSpace, f, p: float, lam: float) -> np.ndarray:
    """(N, R) table of mu B^(-lam) * sum_B |f|^p w, before the 1/p root."""
    bf = space.balls
    v = as_values(space, f)
    sums = bf.rank_cumsums(np.abs(v) ** p * space.weight)
    return sums / bf.measures**lam


def morrey_norm_detail(space: DiscreteHomSpace, f, p: float, lam: float) -> NormResult:
    if p < 1:
        raise ValueError("need p >= 1")
    if not (0 <= lam < 1):
        raise ValueError("need 0 <= lambda < 1")
    table = _morrey_table(space, f, p, lam)
    flat = int(np.argmax(table))
    c, k = divmod(flat, table.shape[1])
    return NormResult(float(table[c, k] ** (1.0 / p)), center=c, rank=k)


def morrey_norm(space: DiscreteHomSpace, f, p: float, lam: float) -> float:
    """max over realized balls of (mu B^(-lam) int_B |f|^p dmu)^(1/p)."""
    return morrey_norm_detail(space, f, p, lam).value


def _oscillation_table(space: DiscreteHomSpace, f, p: float = 1.0) -> np.ndarray:
    """(N, R) padded table of (avg_B |f - f_B|^p)^(1/p) over balls centered per row."""
    bf = space.balls
    v = as_values(space, f)
    w = space.weight
    n, rmax = bf.measures.shape
    out = np.empty((n, rmax))
    for c in range(n):
        idx = bf.order[c]
        fv, wv = v[idx], w[idx]
        nr = int(bf.n_ranks[c])
        ends = bf.counts[c, :nr] - 1
        mu = bf.measures[c, :nr]
        means = np.cumsum(fv * wv)[ends] / mu
        dev = np.abs(fv[None, :] - means[:, None])
        if p != 1.0:
            dev **= p
        osc = np.cumsum(dev * wv[None, :], axis=1)[np.arange(nr), ends] / mu
        if p != 1.0:
            osc **= 1.0 / p
        out[c, :nr] = osc
        out[c, nr:] = osc[-1]
    return out


def _weighted_median_deviation(values, weights):
    """min over c of weighted mean |values - c|; c = lower weighted median."""
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cw = np.cumsum(w)
    total = cw[-1]
    m = int(np.searchsorted(cw, 0.5 * total, side="left"))
    med = v[m]
    cs = np.cumsum(w * v)
    below_w = cw[m]
    below_s = cs[m]
    dev = med * (2.0 * below_w - total) + cs[-1] - 2.0 * below_s
    return dev / total, float(med)


def bmo_norm(space: DiscreteHomSpace, b, variant: str = "mean",
             p: float | None = None) -> float:
    """Bounded-mean-oscillation norm over the realized ball family.

    variant "mean":  max_B avg_B |b - b_B|
    variant "inf":   max_B min_c avg_B |b - c| (c is the weighted median)
    variant "jn":    max_B (avg_B |b - b_B|^p)^(1/p), 1 < p < infinity
    """
    v = as_values(space, b)
    if variant == "mean":
        return float(_oscillation_table(space, v, 1.0).max())
    if variant == "jn":
        if p is None or not (1 < p < math.inf):
            raise ValueError("variant 'jn' needs 1 < p < infinity")
        return float(_oscillation_table(space, v, p).max())
    if variant != "inf":
        raise ValueError(f"unknown BMO variant {variant!r}")
    bf = space.balls
    w = space.weight
    best = 0.0
    for c in range(space.n):
        idx = bf.order[c]
        fv, wv = v[idx], w[idx]
        for k in range(int(bf.n_ranks[c])):
            m = int(bf.counts[c, k])
            dev, _ = _weighted_median_deviation(fv[:m], wv[:m])
            best = max(best, float(dev))
    return best


def grand_lebesgue_norm_detail(space: DiscreteHomSpace, f, p: float, theta: float,
                               eps_grid) -> NormResult:
    if p <= 1:
        raise ValueError("need p > 1")
    if theta <= 0:
        raise ValueError("need theta > 0")
    grid = np.asarray(eps_grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("empty epsilon grid")
    if np.any(grid <= 0) or np.any(grid >= p - 1):
        raise ValueError("epsilon grid must lie inside (0, p-1)")
    vals = np.array([eps ** (theta / (p - eps)) * lp_norm(space, f, p - eps)
                     for eps in grid])
    k = int(np.argmax(vals))
    return NormResult(float(vals[k]), eps=float(grid[k]))


def grand_lebesgue_norm(space: DiscreteHomSpace, f, p: float, theta: float,
                        eps_grid) -> float:
    """max over the grid of eps^(theta/(p-eps)) ||f||_{L^{p-eps}}."""
    return grand_lebesgue_norm_detail(space, f, p, theta, eps_grid).value


def phi_functional_detail(space: DiscreteHomSpace, f, params: GrandParams,
                          s: float) -> NormResult:
    if not (0 < s <= params.smax * (1 + 1e-12)):
        raise ValueError("need 0 < s <= s_max")
    grid = params.eps_grid[params.eps_grid < s]
    if grid.size == 0:
        raise EmptyGrid(f"no grid point below s={s}")
    v = as_values(space, f)
    best = NormResult(-1.0)
    for eps in grid:
        pe = params.p - eps
        le = max(params.lam - params.A(eps), 0.0)
        detail = morrey_norm_detail(space, v, pe, le)
        val = params.phi(eps) ** (1.0 / pe) * detail.value
        if val > best.value:
            best = NormResult(val, eps=float(eps), center=detail.center,
                              rank=detail.rank)
    return best


def phi_functional(space: DiscreteHomSpace, f, params: GrandParams, s: float) -> float:
    """sup over grid eps < s of phi(eps)^(1/(p-eps)) ||f||_{L^{p-eps, lam-A(eps)}}."""
    return phi_functional_detail(space, f, params, s).value


def grand_morrey_norm_detail(space: DiscreteHomSpace, f, params: GrandParams) -> NormResult:
    return phi_functional_detail(space, f, params, params.smax)


def grand_morrey_norm(space: DiscreteHomSpace, f, params: GrandParams) -> float:
    """The generalized grand Morrey norm: the phi functional at s_max."""
    return grand_morrey_norm_detail(space, f, params).value


class GrandNormEvaluator:
    """Batched grand Morrey norms for one (space, params) pair.

    Precomputes the per-(eps, center, rank) measure normalizations so that
    evaluating a corpus costs one gather/cumsum pass per function instead of
    one Morrey call per grid point.  Matches grand_morrey_norm to roundoff.
    Instances hold scratch buffers and must not be shared across threads.
    """

    def __init__(self, space: DiscreteHomSpace, params: GrandParams):
        self.space = space
        self.params = params
        bf = space.balls
        grid = params.eps_grid[params.eps_grid < params.smax]
        if grid.size == 0:
            raise EmptyGrid("no grid point below s_max")
        self.grid = grid
        self.pe = params.p - grid
        lam_eff = np.maximum(params.lam - params.A(grid), 0.0)
        # mu^(-lam_eff), laid out (N, R, E) so the eps axis is contiguous
        self.mu_pow = np.ascontiguousarray(
            bf.measures[:, :, None] ** (-lam_eff[None, None, :]))
        self.phi_pow = params.phi(grid) ** (1.0 / self.pe)
        self.order = bf.order
        n, e = space.n, grid.size
        # flat row indices of the rank boundaries inside the cumsum table
        self.flat_ends = (np.arange(n)[:, None] * n + bf.counts - 1).ravel()
        self._work = np.empty((n, n, e))
        self._sums = np.empty((n * self.mu_pow.shape[1], e))

    def morrey_vector(self, f) -> np.ndarray:
        """Per-grid-point Morrey norms ||f||_{p-eps, lam-A(eps)}, shape (E,)."""
        v = as_values(self.space, f)
        powers = np.abs(v)[:, None] ** self.pe[None, :] * self.space.weight[:, None]
        np.take(powers, self.order, axis=0, out=self._work)
        cs = np.cumsum(self._work, axis=1, out=self._work)
        np.take(cs.reshape(-1, self.pe.size), self.flat_ends, axis=0,
                out=self._sums)
        sums = self._sums.reshape(self.mu_pow.shape)
        sums *= self.mu_pow
        peak = sums.max(axis=(0, 1))
        return peak ** (1.0 / self.pe)

    def weighted_vector(self, f) -> np.ndarray:
        """phi(eps)^(1/(p-eps)) ||f||_{p-eps, lam-A(eps)} over the grid."""
        return self.phi_pow * self.morrey_vector(f)

    def __call__(self, f) -> float:
        return float(self.weighted_vector(f).max())
