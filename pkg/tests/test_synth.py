import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boolfact.boolmat import BooleanMatrix, approximation_error, boolean_product
from boolfact.synth import SynthConfig, factor_density, flip_count, flip_noise, generate, sidecar_json


def hamming(a, b):
    return int(np.sum(a.array != b.array))


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=0, m=3, kappa=1),
            dict(n=3, m=3, kappa=4),
            dict(n=3, m=3, kappa=0),
            dict(n=3, m=3, kappa=1, mu=101),
            dict(n=3, m=3, kappa=1, mu=-1),
            dict(n=3, m=3, kappa=1, target_density=1.0),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SynthConfig(**kwargs)


class TestFactorDensity:
    def test_rank_one(self):
        assert factor_density(0.5, 1) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    @pytest.mark.parametrize("kappa", [1, 2, 5])
    def test_inverts_product_density(self, kappa):
        p = factor_density(0.5, kappa)
        assert 1 - (1 - p * p) ** kappa == pytest.approx(0.5, abs=1e-12)

    def test_empirical_density(self):
        dens = [generate(SynthConfig(n=100, m=100, kappa=1, seed=s)).X.array.mean() for s in range(10)]
        assert abs(np.mean(dens) - 0.5) <= 0.02


class TestNoise:
    def test_flip_count_rounding(self):
        assert flip_count(0, 10, 10) == 0
        assert flip_count(5, 10, 10) == 5
        assert flip_count(50, 3, 3) == 5  # 4.5 rounds up
        assert flip_count(100, 4, 7) == 28
        assert flip_count(29.0, 6, 25) == 44  # 43.5 exactly, though 0.29 * 150 < 43.5 in floats

    def test_zero_noise_is_planted_product(self):
        inst = generate(SynthConfig(n=10, m=12, kappa=3, seed=1))
        assert inst.X == boolean_product(inst.planted.C, inst.planted.R)
        assert inst.flipped == ()

    def test_full_noise_is_complement(self):
        inst = generate(SynthConfig(n=6, m=5, kappa=2, mu=100, seed=2))
        assert inst.X == boolean_product(inst.planted.C, inst.planted.R).complement()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 15), st.integers(1, 15), st.floats(0, 100), st.integers(0, 2**32))
    def test_exact_hamming_distance(self, n, m, mu, seed):
        X = BooleanMatrix(np.random.default_rng(seed).integers(0, 2, (n, m)))
        Y = flip_noise(X, mu, seed)
        assert hamming(X, Y) == flip_count(mu, n, m)
        assert flip_noise(X, mu, seed) == Y

    def test_planted_error_bound(self):
        for seed in range(5):
            cfg = SynthConfig(n=10, m=10, kappa=2, mu=10, seed=seed)
            inst = generate(cfg)
            Z = boolean_product(inst.planted.C, inst.planted.R)
            assert approximation_error(inst.X, Z) == flip_count(10, 10, 10)

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            flip_noise(BooleanMatrix([[1]]), 150, 0)


class TestDeterminism:
    def test_same_seed_same_instance(self):
        cfg = SynthConfig(n=8, m=9, kappa=3, mu=20, seed=42)
        a, b = generate(cfg), generate(cfg)
        assert a.X == b.X and a.planted == b.planted and a.flipped == b.flipped

    def test_different_seed(self):
        a = generate(SynthConfig(n=20, m=20, kappa=3, seed=1))
        b = generate(SynthConfig(n=20, m=20, kappa=3, seed=2))
        assert a.X != b.X

    def test_noise_does_not_change_factors(self):
        a = generate(SynthConfig(n=8, m=8, kappa=2, mu=0, seed=5))
        b = generate(SynthConfig(n=8, m=8, kappa=2, mu=30, seed=5))
        assert a.planted == b.planted

    def test_sidecar(self):
        cfg = SynthConfig(n=4, m=5, kappa=2, mu=25, seed=3)
        inst = generate(cfg)
        data = json.loads(sidecar_json(cfg, inst))
        assert data["config"]["seed"] == 3
        assert data["C"] == inst.planted.C.tolist()
        assert len(data["flipped"]) == flip_count(25, 4, 5)
