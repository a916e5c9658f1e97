from fractions import Fraction

import numpy as np
import pytest

from tvpath import (check_optimality, energy_exact, energy_G, fidelity, fidelity_gradient,
                    make_signal, solve_oracle_pgt1, total_variation)
from tvpath.energy import signed_power

from corpus import GOLDEN_F, golden, random_signal


@pytest.mark.parametrize("v,tv", [((3.7,), 0), (GOLDEN_F, 8), ((0, 1, 0), 2)])
def test_total_variation(v, tv):
    assert total_variation(v) == tv


def test_total_variation_rejects_bad_vectors():
    with pytest.raises(ValueError):
        total_variation(())
    with pytest.raises(ValueError):
        total_variation((0.0, float("nan")))


def test_energy_at_data_is_tv():
    sig = golden()
    for p in (1.0, 1.5, 2.0):
        e = energy_G(sig, sig.values, p, 3.0)
        assert e.fidelity == 0 and e.total == total_variation(sig.values)


def test_energy_hand_example():
    sig = make_signal((1, 1), (0, 1))
    e = energy_G(sig, (0.25, 0.75), 2.0, 2.0)
    assert (e.tv, e.fidelity, e.total) == (0.5, 0.125, 0.75)


def test_energy_constant_golden():
    sig = golden()
    c = 31 / 9
    e = energy_G(sig, (c,) * 6, 2.0, 9 / 122)
    assert e.tv == 0
    assert e.fidelity == pytest.approx(236 / 9, rel=1e-14)
    assert e.total == pytest.approx(118 / 61, rel=1e-14)


def test_energy_exact_rational():
    sig = golden()
    got = energy_exact(sig, (0.5,) * 6, 2, 0.25)
    f = [Fraction(x) for x in GOLDEN_F]
    want = Fraction(1, 4) * sum(L * (x - Fraction(1, 2)) ** 2 for L, x in zip((1, 2, 1, 2, 1, 2), f))
    assert got == want
    with pytest.raises(ValueError):
        energy_exact(sig, (0.5,) * 6, 1.5, 0.25)


def test_energy_rejects_bad_parameters():
    sig = golden()
    with pytest.raises(ValueError):
        energy_G(sig, GOLDEN_F, 2.0, 0.0)
    with pytest.raises(ValueError):
        energy_G(sig, GOLDEN_F, 0.5, 1.0)
    with pytest.raises(ValueError):
        energy_G(sig, GOLDEN_F[:3], 2.0, 1.0)


def test_signed_power():
    assert signed_power(-8.0, 1 / 3) == pytest.approx(-2.0)
    assert signed_power(0.0, 0.5) == 0.0
    assert signed_power(4.0, 0.5) == 2.0


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_convexity(p):
    rng = np.random.default_rng(11)
    for _ in range(200):
        sig = random_signal(rng, 1, 8)
        lam = float(rng.uniform(0.01, 10))
        v = rng.uniform(-6, 6, sig.k)
        w = rng.uniform(-6, 6, sig.k)
        t = float(rng.uniform())
        mid = energy_G(sig, t * v + (1 - t) * w, p, lam).total
        chord = t * energy_G(sig, v, p, lam).total + (1 - t) * energy_G(sig, w, p, lam).total
        assert mid <= chord + 1e-10


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_matches_finite_differences(p):
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(50):
        sig = random_signal(rng, 1, 8)
        lam = float(rng.uniform(0.1, 5))
        # keep clear of the kink at f_i, where the derivative is not smooth for p < 2
        v = np.array(sig.values) + rng.choice([-1, 1], sig.k) * rng.uniform(0.1, 2, sig.k)
        g = fidelity_gradient(sig, v, p, lam)
        for i in range(sig.k):
            vp, vm = v.copy(), v.copy()
            vp[i] += h
            vm[i] -= h
            fd = lam * (fidelity(sig, vp, p) - fidelity(sig, vm, p)) / (2 * h)
            assert fd == pytest.approx(g[i], rel=1e-5, abs=1e-9)


def test_certificate_examples():
    sig = golden()
    assert check_optimality(sig, (1.75, 1.25, 3, 5, 5.5, 4.125), 2.0, 2.0)
    assert check_optimality(sig, (31 / 9,) * 6, 2.0, 0.05)
    for lam in (0.01, 0.5, 2.0, 100.0):
        assert not check_optimality(sig, GOLDEN_F, 2.0, lam)


def test_certificate_report_location():
    sig = golden()
    rep = check_optimality(sig, (31 / 9,) * 6, 2.0, 5.0)
    assert not rep.ok and rep.worst > 1 and 0 <= rep.edge <= 5
    with pytest.raises(ValueError):
        check_optimality(sig, GOLDEN_F, 1.0, 1.0)


def test_certificate_rejects_profitable_split():
    # equal values where splitting the tie lowers G; the aggregated balance alone holds
    sig = make_signal((1, 1, 1), (0, 10, 0))
    v = (10 / 3,) * 3
    assert abs(sum(fidelity_gradient(sig, v, 2.0, 1.0))) < 1e-12
    assert not check_optimality(sig, v, 2.0, 1.0)


def test_certified_point_is_global_minimum():
    rng = np.random.default_rng(8)
    for _ in range(30):
        sig = random_signal(rng, 2, 6)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        lam = float(rng.uniform(0.05, 5))
        u = solve_oracle_pgt1(sig, p, lam).values
        assert check_optimality(sig, u, p, lam)
        e = energy_G(sig, u, p, lam).total
        for _ in range(50):
            w = rng.uniform(sig.fmin - 1, sig.fmax + 1, sig.k)
            assert e <= energy_G(sig, w, p, lam).total + 1e-9
            # small perturbations of one coordinate never help
            i = int(rng.integers(sig.k))
            d = np.array(u)
            d[i] += float(rng.choice([-1, 1])) * 1e-4
            assert e < energy_G(sig, d, p, lam).total
