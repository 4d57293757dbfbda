"""Seeded random test-function corpora.

The families span the behaviors the inequality checks are sensitive to:
ball indicators (concentration for Morrey norms), single-atom spikes,
low-order trigonometric polynomials on circles (smooth oscillation), signed
mixtures of those, and a BMO family of step and log profiles.  Identical
(space, family, size, seed) always reproduces the same samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homspace import DiscreteHomSpace

__all__ = ["Corpus", "make_corpus", "FAMILIES"]


@dataclass(frozen=True)
class Corpus:
    samples: np.ndarray  # (size, N)
    descriptor: str
    seed: int

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __iter__(self):
        return iter(self.samples)


def _step(space: DiscreteHomSpace, rng: np.random.Generator) -> np.ndarray:
    bf = space.balls
    c = int(rng.integers(space.n))
    k = int(rng.integers(bf.n_ranks[c]))
    out = np.full(space.n, float(rng.normal(0.0, 0.2)))
    out[bf.members(c, k)] = float(rng.normal(0.0, 2.0))
    return out


def _spike(space: DiscreteHomSpace, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros(space.n)
    out[int(rng.integers(space.n))] = float(rng.normal(0.0, 3.0))
    return out


def _trig(space: DiscreteHomSpace, rng: np.random.Generator) -> np.ndarray:
    if space.labels is None:
        raise ValueError("trig family needs coordinates in space.labels")
    theta = 2.0 * np.pi * space.labels[:, 0] if space.labels[:, 0].max() <= 1.0 \
        else space.labels[:, 0]
    out = np.zeros(space.n)
    for k in range(1, int(rng.integers(2, 6))):
        out += rng.normal() * np.cos(k * theta) + rng.normal() * np.sin(k * theta)
    return out


def _mixture(space: DiscreteHomSpace, rng: np.random.Generator) -> np.ndarray:
    parts = [_step, _spike]
    if space.labels is not None and space.labels.shape[1] == 1:
        parts.append(_trig)
    out = np.zeros(space.n)
    for _ in range(int(rng.integers(1, 4))):
        out += parts[int(rng.integers(len(parts)))](space, rng)
    return out


def _bmo_profile(space: DiscreteHomSpace, rng: np.random.Generator) -> np.ndarray:
    """Oscillation family: ball steps and clipped log-distance profiles."""
    if rng.random() < 0.5:
        bf = space.balls
        c = int(rng.integers(space.n))
        k = int(rng.integers(bf.n_ranks[c]))
        out = np.zeros(space.n)
        out[bf.members(c, k)] = float(rng.choice([-1.0, 1.0]))
        return out
    anchor = int(rng.integers(space.n))
    d = space.dist[anchor].copy()
    floor = d[d > 0].min() if space.n > 1 else 1.0
    return -np.log(np.maximum(d, floor))


_FAMILY_FNS = {
    "steps": _step,
    "spikes": _spike,
    "trig": _trig,
    "mixed": _mixture,
    "bmo": _bmo_profile,
}

FAMILIES = tuple(sorted(_FAMILY_FNS) + ["mean_zero_mixed"])


def make_corpus(space: DiscreteHomSpace, family: str, size: int, seed: int) -> Corpus:
    """Draw `size` samples of the named family with an explicit seed."""
    mean_zero = family == "mean_zero_mixed"
    fn = _FAMILY_FNS["mixed" if mean_zero else family] if mean_zero or family in _FAMILY_FNS \
        else None
    if fn is None:
        raise ValueError(f"unknown corpus family {family!r}; choose from {FAMILIES}")
    rng = np.random.default_rng(seed)
    rows = np.empty((size, space.n))
    mu = space.total_measure
    for i in range(size):
        row = fn(space, rng)
        if mean_zero:
            row = row - float(row @ space.weight) / mu
        rows[i] = row
    rows.setflags(write=False)
    return Corpus(rows, f"{family}:n={space.n}:size={size}:seed={seed}", seed)
