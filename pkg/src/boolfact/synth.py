"""
Planted low-rank Boolean matrices with exact-count noise.

Randomness comes from numpy's PCG64 generator (``numpy.random.default_rng``),
so a seed reproduces the same instance on every platform.  Factor sampling
and noise draw from two independent child streams of the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .boolmat import BooleanMatrix, Factorization, boolean_product


@dataclass(frozen=True)
class SynthConfig:
    n: int
    m: int
    kappa: int
    mu: float = 0.0
    seed: int = 0
    target_density: float = 0.5
    density_correction: bool = True

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 1 <= self.kappa <= min(self.n, self.m):
            raise ValueError(f"kappa must lie in [1, min(n, m)] = [1, {min(self.n, self.m)}]")
        if not 0 <= self.mu <= 100:
            raise ValueError(f"noise percentage must lie in [0, 100], got {self.mu}")
        if not 0 < self.target_density < 1:
            raise ValueError("target density must lie strictly between 0 and 1")


class SyntheticInstance(NamedTuple):
    X: BooleanMatrix
    planted: Factorization
    flipped: tuple  # (row, col) pairs complemented by the noise step


def factor_density(target_density: float, kappa: int) -> float:
    """
    Bernoulli parameter p of the factor entries giving P(x_ij = 1) = target.

    An entry of the product is 0 iff each of the kappa products c*r is 0,
    so P(x = 1) = 1 - (1 - p^2)^kappa; solving for p gives the formula below.
    """
    return math.sqrt(1.0 - (1.0 - target_density) ** (1.0 / kappa))


def flip_count(mu: float, n: int, m: int) -> int:
    """``round(mu/100 * n*m)`` with halves rounded up, computed exactly in rationals."""
    return math.floor(Fraction(mu) * n * m / 100 + Fraction(1, 2))


def _flip(X: BooleanMatrix, mu: float, rng: np.random.Generator):
    if not 0 <= mu <= 100:
        raise ValueError(f"noise percentage must lie in [0, 100], got {mu}")
    n, m = X.shape
    count = flip_count(mu, n, m)
    cells = np.sort(rng.choice(n * m, size=count, replace=False))
    out = np.array(X.array)
    rows, cols = np.divmod(cells, m)
    out[rows, cols] ^= 1
    return BooleanMatrix(out), tuple(zip(rows.tolist(), cols.tolist()))


def flip_noise(X: BooleanMatrix, mu: float, seed: int) -> BooleanMatrix:
    """Complement exactly ``round(mu% * n*m)`` distinct uniformly chosen entries."""
    return _flip(X, mu, np.random.default_rng(seed))[0]


def generate(cfg: SynthConfig) -> SyntheticInstance:
    """
    Sample i.i.d. Bernoulli factors C (n x kappa) and R (kappa x m), form
    their Boolean product and flip an exact share ``mu`` percent of entries.
    """
    factor_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(factor_seq)
    p = factor_density(cfg.target_density, cfg.kappa) if cfg.density_correction else 0.5
    C = BooleanMatrix(rng.random((cfg.n, cfg.kappa)) < p)
    R = BooleanMatrix(rng.random((cfg.kappa, cfg.m)) < p)
    clean = boolean_product(C, R)
    X, flipped = _flip(clean, cfg.mu, np.random.default_rng(noise_seq))
    return SyntheticInstance(X, Factorization(C, R), flipped)


def sidecar_json(cfg: SynthConfig, inst: SyntheticInstance) -> str:
    """Planted factors, flip positions and the generating config as JSON."""
    payload = {
        "config": asdict(cfg),
        "generator": "numpy PCG64",
        "C": inst.planted.C.tolist(),
        "R": inst.planted.R.tolist(),
        "flipped": [list(cell) for cell in inst.flipped],
    }
    return json.dumps(payload, indent=1) + "\n"
