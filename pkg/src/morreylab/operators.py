"""Maximal, singular-integral, and potential operators on grid functions.

All operators act through the realized ball family of the space.  Principal
values on an atomic space mean exactly that the diagonal term is excluded:
the singular atom carries positive mass, so excising it is the discrete
limit of the truncated integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .funcnorm import TabulatedFunction, as_values
from .homspace import DiscreteHomSpace

__all__ = [
    "KernelSizeViolation",
    "DivergenceSuspected",
    "KernelSpec",
    "DiniResult",
    "maximal",
    "maximal_s",
    "sharp_maximal",
    "conjugate_kernel",
    "hilbert_kernel",
    "kernel_from_matrix",
    "validate_kernel",
    "cz_apply",
    "CZOperator",
    "potential_apply",
    "PotentialOperator",
    "commutator",
    "dini_integral",
    "kernel_l2_report",
    "kernel_smoothness_report",
]


class KernelSizeViolation(ValueError):
    """|K(x,y)| exceeds C / mu B(x, d(x,y)) at some stored pair."""

    def __init__(self, i, j, lhs, rhs):
        super().__init__(
            f"kernel size condition failed at ({i},{j}): |K|={lhs:.6g} > bound={rhs:.6g}")
        self.witness = (i, j)


class DivergenceSuspected(RuntimeError):
    """Partial sums of w(2^-k) fail the Cauchy test at table resolution."""


def _ball_means(space: DiscreteHomSpace, v: np.ndarray) -> np.ndarray:
    """(N, R) table of avg_B v over balls centered per row."""
    bf = space.balls
    return bf.rank_cumsums(v * space.weight) / bf.measures


def maximal(space: DiscreteHomSpace, f) -> np.ndarray:
    """Hardy-Littlewood maximal function: max ball average of |f| per center."""
    v = np.abs(as_values(space, f))
    return _ball_means(space, v).max(axis=1)


def maximal_s(space: DiscreteHomSpace, f, s: float) -> np.ndarray:
    """(M |f|^s)^(1/s) for s >= 1."""
    if s < 1:
        raise ValueError("need s >= 1")
    v = np.abs(as_values(space, f))
    return maximal(space, v**s) ** (1.0 / s)


def sharp_maximal(space: DiscreteHomSpace, f) -> np.ndarray:
    """f#(x): max over balls centered at x of avg_B |f - f_B|."""
    bf = space.balls
    v = as_values(space, f)
    w = space.weight
    out = np.empty(space.n)
    for c in range(space.n):
        idx = bf.order[c]
        fv, wv = v[idx], w[idx]
        nr = int(bf.n_ranks[c])
        ends = bf.counts[c, :nr] - 1
        mu = bf.measures[c, :nr]
        means = np.cumsum(fv * wv)[ends] / mu
        dev = np.abs(fv[None, :] - means[:, None]) * wv[None, :]
        out[c] = (np.cumsum(dev, axis=1)[np.arange(nr), ends] / mu).max()
    return out


@dataclass(frozen=True)
class KernelSpec:
    """A singular kernel on one space: dense off-diagonal table plus the
    size constant, smoothness modulus, and its Dini integral."""

    matrix: np.ndarray
    size_constant: float
    modulus: TabulatedFunction
    delta2_constant: float
    dini_value: float
    name: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).copy()
        np.fill_diagonal(m, 0.0)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def _default_modulus() -> TabulatedFunction:
    # Lipschitz-type modulus w(t) = t; Delta_2 constant 2, Dini integral 1.
    return TabulatedFunction.power(1.0, np.geomspace(1e-8, 1.0, 65))


def kernel_from_matrix(space: DiscreteHomSpace, matrix, name: str = "custom",
                       modulus: TabulatedFunction | None = None,
                       size_constant: float | None = None) -> KernelSpec:
    """Wrap a dense kernel table; the size constant defaults to the smallest
    C satisfying |K(x,y)| <= C / mu{z: d(x,z) < d(x,y)} on the stored pairs."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (space.n, space.n):
        raise ValueError("kernel table shape does not match the space")
    modulus = modulus or _default_modulus()
    open_mu = space.balls.open_measure
    off = ~np.eye(space.n, dtype=bool)
    empirical = float((np.abs(m) * open_mu)[off].max()) if space.n > 1 else 0.0
    c = empirical if size_constant is None else float(size_constant)
    d2 = float(np.max(modulus(2.0 * modulus.xs) / modulus(modulus.xs)))
    dini = dini_integral(modulus).integral
    return KernelSpec(m, c, modulus, d2, dini, name=name)


def conjugate_kernel(space: DiscreteHomSpace) -> KernelSpec:
    """Conjugate-function kernel on the uniform circle.

    Against the unit-mass atomic measure (atoms 1/N) the classical kernel
    cot((x-y)/2) dphi/(2 pi) becomes K(x,y) = cot((theta_x-theta_y)/2), so the
    discrete operator reproduces the conjugate function (cos -> sin).
    """
    if space.labels is None or space.labels.shape[1] != 1:
        raise ValueError("conjugate kernel needs circle angles in space.labels")
    theta = space.labels[:, 0]
    diff = theta[:, None] - theta[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 1.0 / np.tan(diff / 2.0)
    np.fill_diagonal(k, 0.0)
    return kernel_from_matrix(space, k, name="circle-conjugate")


def hilbert_kernel(space: DiscreteHomSpace) -> KernelSpec:
    """Finite Hilbert transform kernel 1/(pi (x - y)) on an interval grid."""
    if space.labels is None or space.labels.shape[1] != 1:
        raise ValueError("hilbert kernel needs 1-D coordinates in space.labels")
    x = space.labels[:, 0]
    diff = x[:, None] - x[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 1.0 / (math.pi * diff)
    np.fill_diagonal(k, 0.0)
    return kernel_from_matrix(space, k, name="interval-hilbert")


def validate_kernel(space: DiscreteHomSpace, kernel: KernelSpec) -> None:
    """Check the size condition |K(x,y)| <= C / mu B(x,d(x,y)) pairwise."""
    open_mu = space.balls.open_measure
    lhs = np.abs(kernel.matrix) * open_mu
    bad = lhs > kernel.size_constant * (1.0 + 1e-12) + 1e-300
    np.fill_diagonal(bad, False)
    if np.any(bad):
        i, j = map(int, np.argwhere(bad)[0])
        raise KernelSizeViolation(i, j, float(np.abs(kernel.matrix[i, j])),
                                  kernel.size_constant / open_mu[i, j])


class CZOperator:
    """Tf(x) = sum_{y != x} K(x,y) f(y) w(y); the kernel is validated once."""

    def __init__(self, space: DiscreteHomSpace, kernel: KernelSpec):
        validate_kernel(space, kernel)
        self.space = space
        self.kernel = kernel
        self._mat = kernel.matrix * space.weight[None, :]

    def __call__(self, f) -> np.ndarray:
        return self._mat @ as_values(self.space, f)


def cz_apply(space: DiscreteHomSpace, kernel: KernelSpec, f) -> np.ndarray:
    """One-shot principal-value application; see CZOperator for batch use."""
    return CZOperator(space, kernel)(f)


class PotentialOperator:
    """I^a f(x) = sum_y f(y) w(y) / mu B(x, d(x,y))^(1-a), 0 < a < 1.

    The denominator measures the open ball at the pair distance; at y = x it
    degenerates to the atom's own weight, the smallest ball containing x.
    """

    def __init__(self, space: DiscreteHomSpace, alpha: float):
        if not (0.0 < alpha < 1.0):
            raise ValueError("need 0 < alpha < 1")
        self.space = space
        self.alpha = alpha
        open_mu = space.balls.open_measure
        self._mat = open_mu ** (alpha - 1.0) * space.weight[None, :]

    def __call__(self, f) -> np.ndarray:
        return self._mat @ as_values(self.space, f)


def potential_apply(space: DiscreteHomSpace, f, alpha: float) -> np.ndarray:
    return PotentialOperator(space, alpha)(f)


def commutator(b, op: Callable[[np.ndarray], np.ndarray], f) -> np.ndarray:
    """[b, op] f = b * op(f) - op(b * f) for a linear operator handle."""
    b = np.asarray(b, dtype=float)
    f = np.asarray(f, dtype=float)
    return b * np.asarray(op(f)) - np.asarray(op(b * f))


@dataclass(frozen=True)
class DiniResult:
    integral: float
    series: float
    n_terms: int


def dini_integral(w: TabulatedFunction, max_terms: int = 200,
                  divergence_tol: float = 0.05) -> DiniResult:
    """Trapezoid value of int_0^1 w(t)/t dt plus the partial sum of w(2^-k).

    The head (0, x_1] uses the table's linear segment through the origin, so
    w(t)/t is constant there and w(t) = t integrates to exactly 1.  Raises
    DivergenceSuspected when the dyadic partial sums keep growing at the
    table's resolution (Cauchy test on the last half of the terms).
    """
    x1 = float(w.xs[0])
    if x1 >= 1.0:
        raise ValueError("modulus table must start below t = 1")
    knots = np.unique(np.concatenate([w.xs[w.xs < 1.0], [1.0]]))
    knots = knots[knots >= x1]
    vals = w(knots) / knots
    integral = float(np.trapezoid(vals, knots)) + float(w(x1))
    n_terms = min(max_terms, max(int(math.floor(math.log2(1.0 / x1))), 1))
    terms = w(0.5 ** np.arange(1, n_terms + 1))
    series = float(terms.sum())
    if n_terms >= 16:
        tail = float(terms[n_terms // 2:].sum())
        if series > 0 and tail / series > divergence_tol:
            raise DivergenceSuspected(
                f"partial sums still growing: last-half share {tail / series:.3f} "
                f"over {n_terms} terms")
    return DiniResult(integral, series, n_terms)


def kernel_l2_report(space: DiscreteHomSpace, kernel: KernelSpec,
                     samples: np.ndarray) -> dict:
    """Largest ||Tf||_2 / ||f||_2 over a sample corpus, recorded per kernel."""
    op = CZOperator(space, kernel)
    w = space.weight
    best, arg = 0.0, None
    for i, f in enumerate(samples):
        den = math.sqrt(float(f**2 @ w))
        if den <= 0:
            continue
        num = math.sqrt(float(op(f) ** 2 @ w))
        if num / den > best:
            best, arg = num / den, i
    return {"kernel": kernel.name, "l2_ratio": best, "argmax_sample": arg,
            "corpus_size": int(len(samples))}


def kernel_smoothness_report(space: DiscreteHomSpace, kernel: KernelSpec,
                             separation: float = 2.0,
                             max_triples: int = 200_000) -> dict:
    """Estimate the best constant in the smoothness condition
    |K(x1,y)-K(x2,y)| + |K(y,x1)-K(y,x2)| <= C w(d(x2,x1)/d(x2,y)) / mu B(x2,d(x2,y))
    over pairs with d(x2,y) >= separation * d(x1,x2).

    The multiplicative separation constant is not pinned down by the kernel
    conditions, so this reports the envelope instead of asserting a value.
    """
    d = space.dist
    n = space.n
    open_mu = space.balls.open_measure
    k = kernel.matrix
    rng = np.random.default_rng(0)
    triples = []
    for x2 in range(n):
        others = [x1 for x1 in range(n) if x1 != x2]
        for x1 in others:
            ys = np.flatnonzero(d[x2] >= separation * d[x2, x1])
            ys = ys[(ys != x1) & (ys != x2)]
            for y in ys:
                triples.append((x1, x2, y))
        if len(triples) > max_triples:
            break
    if len(triples) > max_triples:
        sel = rng.choice(len(triples), size=max_triples, replace=False)
        triples = [triples[i] for i in sorted(sel)]
    best = 0.0
    for x1, x2, y in triples:
        num = abs(k[x1, y] - k[x2, y]) + abs(k[y, x1] - k[y, x2])
        ratio = d[x2, x1] / d[x2, y]
        wv = kernel.modulus(ratio)
        if wv <= 0:
            continue
        best = max(best, num * open_mu[x2, y] / wv)
    return {"kernel": kernel.name, "separation": separation,
            "best_constant": best, "n_triples": len(triples)}
