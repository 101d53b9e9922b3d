"""Monte Carlo and weighted-sample inequality measure tests."""

import math

import numpy as np
import pytest

from gb2fit.distributions import FamilySpec, gini_closed
from gb2fit.exceptions import DomainError, ExistenceError, ValidationError
from gb2fit.measures import (
    McConfig,
    Microdata,
    atkinson_exists,
    atkinson_mc,
    gini_mc,
    sample_measures,
    weighted_atkinson,
    weighted_gini,
)


def brute_force_gini(values):
    """Mean absolute difference over 2 * mean, O(n^2)."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    mad = np.abs(x[:, None] - x[None, :]).sum() / (n * n)
    return mad / (2.0 * x.mean())


class TestMicrodata:
    def test_valid(self):
        m = Microdata(values=np.array([1.0, 2.0]))
        assert np.all(m.weights == 1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            Microdata(values=np.array([1.0, 0.0]))
        with pytest.raises(ValidationError):
            Microdata(values=np.array([1.0]), weights=np.array([-2.0]))

    def test_rejects_misaligned(self):
        with pytest.raises(ValidationError):
            Microdata(values=np.array([1.0, 2.0]), weights=np.array([1.0]))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            Microdata(values=np.array([]))


class TestMcConfig:
    def test_minimum_n(self):
        with pytest.raises(DomainError):
            McConfig(n=10)


class TestWeightedGini:
    def test_equality(self):
        assert weighted_gini(np.full(100, 3.0)) == 0.0

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            x = rng.lognormal(0.0, 1.0, size=200)
            assert weighted_gini(x) == pytest.approx(brute_force_gini(x), abs=1e-10)

    def test_two_point_limit(self):
        # incomes (delta, 1): gini -> 0.5 as delta -> 0
        assert weighted_gini(np.array([1e-12, 1.0])) == pytest.approx(0.5, abs=1e-9)

    def test_weight_duplication_semantics(self):
        x = np.array([1.0, 2.0, 5.0])
        w = np.array([2.0, 1.0, 3.0])
        expanded = np.array([1.0, 1.0, 2.0, 5.0, 5.0, 5.0])
        assert weighted_gini(x, w) == pytest.approx(weighted_gini(expanded), abs=1e-12)

    def test_scale_invariance_exact(self):
        rng = np.random.default_rng(4)
        x = rng.lognormal(0.0, 0.7, size=500)
        w = rng.random(500) + 0.5
        assert weighted_gini(1000.0 * x, w) == pytest.approx(weighted_gini(x, w), abs=1e-12)


class TestWeightedAtkinson:
    def test_eps_zero(self):
        assert weighted_atkinson(np.array([1.0, 9.0]), 0.0) == 0.0

    def test_equality(self):
        for eps in (0.5, 1.0, 1.5):
            assert weighted_atkinson(np.full(50, 2.0), eps) == pytest.approx(0.0, abs=1e-12)

    def test_eps_one_geometric_mean(self):
        x = np.array([1.0, 4.0])
        expected = 1.0 - math.sqrt(1.0 * 4.0) / 2.5
        assert weighted_atkinson(x, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_half_direct_formula(self):
        x = np.array([1.0, 2.0, 3.0])
        mu = 2.0
        m = np.mean((x / mu) ** 0.5)
        assert weighted_atkinson(x, 0.5) == pytest.approx(1.0 - m**2, abs=1e-12)

    def test_weight_duplication_semantics(self):
        x = np.array([1.0, 3.0])
        w = np.array([2.0, 1.0])
        expanded = np.array([1.0, 1.0, 3.0])
        for eps in (0.5, 1.0, 1.5):
            assert weighted_atkinson(x, eps, w) == pytest.approx(
                weighted_atkinson(expanded, eps), abs=1e-12
            )

    def test_negative_eps_rejected(self):
        with pytest.raises(DomainError):
            weighted_atkinson(np.array([1.0]), -0.5)


class TestGiniMc:
    def test_matches_closed_form_within_4se(self):
        specs = [
            FamilySpec.lognormal(0.0, 1.0),
            FamilySpec.sm(2.0, 1.0, 1.5),
            FamilySpec.weibull(1.5, 1.0),
            FamilySpec.fisk(2.5, 1.0),
            FamilySpec.b2(1.0, 2.0, 4.0),
            FamilySpec.dagum(3.0, 1.0, 0.9),
        ]
        cfg = McConfig(n=200_000, seed=11)
        for spec in specs:
            mc = gini_mc(spec, cfg)
            closed = gini_closed(spec).value
            assert abs(mc.value - closed) < 4 * mc.mc_std_error + 1e-4, spec.family

    def test_near_degenerate_fisk(self):
        mc = gini_mc(FamilySpec.fisk(50.0, 1.0), McConfig(n=200_000, seed=2))
        assert abs(mc.value - 0.02) < 3 * mc.mc_std_error + 1e-4

    def test_lognormal_within_0003(self):
        mc = gini_mc(FamilySpec.lognormal(0.0, 1.0), McConfig(n=1_000_000, seed=0))
        assert abs(mc.value - 0.5205) < 0.003

    def test_deterministic(self):
        cfg = McConfig(n=10_000, seed=42)
        a = gini_mc(FamilySpec.weibull(1.3, 2.0), cfg)
        b = gini_mc(FamilySpec.weibull(1.3, 2.0), cfg)
        assert a.value == b.value and a.mc_std_error == b.mc_std_error

    def test_existence_error(self):
        with pytest.raises(ExistenceError):
            gini_mc(FamilySpec.fisk(0.9, 1.0))

    def test_method_tag(self):
        mc = gini_mc(FamilySpec.fisk(2.0, 1.0), McConfig(n=1_000, seed=0))
        assert mc.method == "monte_carlo" and mc.mc_std_error is not None


class TestAtkinsonMc:
    def test_eps_zero(self):
        assert atkinson_mc(FamilySpec.weibull(1.5, 1.0), 0.0, McConfig(n=1_000, seed=0)) == 0.0

    def test_lognormal_analytic_oracle(self):
        # A_eps = 1 - exp(-eps sigma^2 / 2) for LN(mu, sigma)
        cfg = McConfig(n=400_000, seed=9)
        for sigma in (0.5, 1.0):
            for eps in (0.5, 1.0, 1.5):
                got = atkinson_mc(FamilySpec.lognormal(0.0, sigma), eps, cfg)
                want = 1.0 - math.exp(-eps * sigma**2 / 2.0)
                assert abs(got - want) < 0.003, (sigma, eps)

    def test_near_equal_incomes(self):
        for eps in (0.5, 1.0, 1.5):
            assert atkinson_mc(FamilySpec.fisk(100.0, 1.0), eps, McConfig(n=50_000, seed=1)) < 0.01

    def test_monotone_in_eps(self):
        cfg = McConfig(n=100_000, seed=5)
        spec = FamilySpec.sm(2.0, 1.0, 2.0)
        vals = [atkinson_mc(spec, e, cfg) for e in (0.5, 1.0, 1.5)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_existence(self):
        # GB2-nested: eps > 1 needs p > (eps-1)/a
        assert not atkinson_exists(FamilySpec.sm(2.0, 1.0, 1.5), 4.0)  # p=1, need > 1.5
        assert atkinson_exists(FamilySpec.sm(2.0, 1.0, 1.5), 1.5)
        assert not atkinson_exists(FamilySpec.weibull(0.4, 1.0), 1.5)
        assert atkinson_exists(FamilySpec.lognormal(0.0, 1.0), 5.0)
        with pytest.raises(ExistenceError):
            atkinson_mc(FamilySpec.sm(2.0, 1.0, 1.5), 4.0, McConfig(n=1_000, seed=0))


class TestSampleMeasures:
    def test_equality(self):
        m = Microdata(values=np.full(20, 7.0))
        out = sample_measures(m)
        assert out["gini"] == 0.0
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in out["atkinson"].values())
        assert out["mean"] == pytest.approx(7.0)

    def test_keys(self):
        m = Microdata(values=np.array([1.0, 2.0, 3.0]))
        out = sample_measures(m, epsilons=(0.5, 1.0))
        assert set(out) == {"gini", "atkinson", "mean"}
        assert set(out["atkinson"]) == {0.5, 1.0}

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        x = rng.lognormal(0.0, 1.0, 300)
        w = rng.random(300) + 0.1
        a = sample_measures(Microdata(values=x, weights=w))
        b = sample_measures(Microdata(values=250.0 * x, weights=w))
        assert a["gini"] == pytest.approx(b["gini"], abs=1e-12)
        for eps in a["atkinson"]:
            assert a["atkinson"][eps] == pytest.approx(b["atkinson"][eps], abs=1e-12)
        assert b["mean"] == pytest.approx(250.0 * a["mean"], rel=1e-12)
