import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gaussmix.circle import (INCONCLUSIVE, NOT_S_CONTINUOUS, S_CONTINUOUS, AliasingError,
                             CircleMeasure, FourierSequence, MixingFamily, cesaro_abs, classify,
                             classify_sequence, fourier_coeff, pushforward)


def test_dirac_at_one_has_unit_coefficients():
    assert fourier_coeff(CircleMeasure.dirac(0.0), 5) == pytest.approx(1 + 0j, abs=1e-15)


def test_lebesgue_coefficients_vanish():
    assert abs(fourier_coeff(CircleMeasure.lebesgue(), 3)) < 1e-12
    c = CircleMeasure.lebesgue(512).coefficients(257)
    assert c[0] == pytest.approx(1.0)
    assert np.max(np.abs(c[1:])) < 1e-12


def test_one_plus_cos_first_coefficient_matches_quadrature():
    # oracle: adaptive quadrature of (1 + cos t) cos t / 2pi over the circle
    oracle = quad(lambda t: (1 + math.cos(t)) * math.cos(t) / (2 * math.pi), 0, 2 * math.pi)[0]
    assert oracle == pytest.approx(0.5, abs=1e-12)
    for G in (4096, 8192):
        sigma = CircleMeasure.from_density(lambda t: 1 + np.cos(t), G)
        assert fourier_coeff(sigma, 1) == pytest.approx(0.5, abs=1e-12)
        assert sigma.coefficients(2)[1] == pytest.approx(0.5, abs=1e-12)


def test_fft_and_direct_coefficients_agree(rng):
    G = 256
    dens = rng.standard_normal(G) + 1j * rng.standard_normal(G)
    sigma = CircleMeasure.from_density(dens) + CircleMeasure.atoms([0.3, 2.0], [1 + 1j, -0.5])
    fast = sigma.coefficients(100)
    slow = np.array([fourier_coeff(sigma, n) for n in range(100)])
    assert np.max(np.abs(fast - slow)) < 1e-12


def test_aliasing_rejected():
    sigma = CircleMeasure.lebesgue(64)
    with pytest.raises(AliasingError):
        fourier_coeff(sigma, 33)
    with pytest.raises(AliasingError):
        classify(sigma, MixingFamily.strong(), 40, 1e-6)
    # atoms alone have no Nyquist limit
    assert fourier_coeff(CircleMeasure.dirac(1.0), 10 ** 6) == pytest.approx(np.exp(-1j * 10 ** 6))


def test_probability_flag_and_total_variation():
    sigma = CircleMeasure.atoms([0.0], [0.5]) + CircleMeasure.lebesgue(128).scale(0.5)
    assert sigma.is_probability()
    assert sigma.total_variation() == pytest.approx(1.0)
    assert not CircleMeasure.atoms([0.0], [-1.0]).is_probability()


def test_cesaro_examples():
    assert cesaro_abs(np.ones(100), 100) == pytest.approx(1.0)
    a = np.zeros(100)
    a[0] = 1
    assert cesaro_abs(a, 100) == pytest.approx(0.01)
    sigma = CircleMeasure.atoms([0.0], [0.5]) + CircleMeasure.lebesgue(32768).scale(0.5)
    assert cesaro_abs(sigma.coefficients(10000), 10000) == pytest.approx(0.5 + 5e-5, abs=1e-12)
    with pytest.raises(ValueError):
        cesaro_abs(np.ones(10), 11)
    with pytest.raises(ValueError):
        cesaro_abs(np.ones(10), 0)


def test_fourier_sequence_invariants():
    with pytest.raises(ValueError):
        FourierSequence(np.array([]))
    with pytest.raises(ValueError):
        FourierSequence(np.array([np.inf]))
    assert FourierSequence(np.array([1, -3j])).sup_norm() == 3.0


def test_classify_lebesgue_strong():
    v = classify(CircleMeasure.lebesgue(), MixingFamily.strong(), 512, 1e-6)
    assert v.verdict == S_CONTINUOUS


def test_classify_dirac_weak_is_not():
    v = classify(CircleMeasure.dirac(0.0), MixingFamily.weak(), 512, 1e-3)
    assert v.verdict == NOT_S_CONTINUOUS
    assert np.allclose(v.trace, 1.0)


def test_two_atoms_ergodic_and_weak():
    # 1/2 delta_{-1} + 1/2 delta_1 keeps an atom at 1, so the ergodic test sees it
    sigma = CircleMeasure.atoms([math.pi, 0.0], [0.5, 0.5])
    erg = classify(sigma, MixingFamily.ergodic(), 512, 1e-3)
    assert erg.verdict == NOT_S_CONTINUOUS
    assert erg.atom_at_one.real == pytest.approx(0.5, abs=1e-2)
    assert classify(sigma, MixingFamily.weak(), 512, 1e-3).verdict == NOT_S_CONTINUOUS
    # the atom at -1 alone: ergodic-continuous, weak not
    minus = CircleMeasure.atoms([math.pi], [0.5])
    assert classify(minus, MixingFamily.ergodic(), 512, 1e-2).verdict == S_CONTINUOUS
    assert classify(minus, MixingFamily.weak(), 512, 1e-2).verdict == NOT_S_CONTINUOUS


def test_zero_measure_is_flagged():
    v = classify(CircleMeasure.atoms([0.0], [0.0]), MixingFamily.weak(), 64, 1e-6)
    assert v.verdict == S_CONTINUOUS and v.degenerate


def test_slow_decay_is_inconclusive():
    a = 1.0 / np.sqrt(np.arange(1, 401))
    v = classify_sequence(a, MixingFamily.strong(), 1e-2)
    assert v.verdict == INCONCLUSIVE


def test_custom_family():
    fam = MixingFamily("custom", evaluator=lambda a, n: abs(a[n]) / 2, bound=0.5)
    idx, tr = fam.trace(np.ones(8))
    assert np.allclose(tr, 0.5)
    with pytest.raises(ValueError):
        MixingFamily("custom")
    with pytest.raises(ValueError):
        MixingFamily("bogus")


def test_pushforward_roots_of_unity():
    sigma = pushforward(np.full(4, 0.25), 2 * np.pi * np.arange(4) / 4)
    c = sigma.coefficients(16)
    expected = np.array([1.0 if n % 4 == 0 else 0.0 for n in range(16)])
    # oracle: direct summation
    direct = np.array([np.sum(0.25 * np.exp(-1j * n * 2 * np.pi * np.arange(4) / 4)) for n in range(16)])
    assert np.max(np.abs(c - expected)) < 1e-12
    assert np.max(np.abs(c - direct)) < 1e-12


def test_pushforward_single_node_and_merging():
    s = pushforward([1.0], [0.0])
    assert s.atom_angles.tolist() == [0.0] and s.atom_weights.tolist() == [1.0]
    merged = pushforward([0.5, 0.25, 0.25], [1.0, 1.0, 2 * np.pi])
    assert merged.atom_angles.size == 2
    assert sorted(np.abs(merged.atom_weights)) == [0.25, 0.75]
    with pytest.raises(ValueError):
        pushforward([np.nan], [0.0])


def test_pushforward_uniform_nodes():
    M = 2048
    sigma = pushforward(np.full(M, 1 / M), 2 * np.pi * (np.arange(M) + 0.5) / M)
    assert abs(sigma.coefficients(2)[1]) < 1e-3


def test_json_roundtrip_and_csv():
    sigma = CircleMeasure.atoms([0.1], [0.5 - 0.25j]) + CircleMeasure.lebesgue(16).scale(0.5)
    back = CircleMeasure.from_json(sigma.to_json())
    assert np.allclose(back.coefficients(8), sigma.coefficients(8))
    obj = json.loads(sigma.to_json())
    assert set(obj) == {"atoms", "density", "grid"}
    v = classify(sigma, MixingFamily.weak(), 8, 1e-3)
    lines = v.to_csv().splitlines()
    assert lines[0] == "n,phi_n" and len(lines) == 9


small_measures = st.lists(
    st.tuples(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(-2, 2), st.floats(-2, 2)),
    min_size=1, max_size=6)


def _measure(atoms):
    return CircleMeasure.atoms([a[0] for a in atoms], [complex(a[1], a[2]) for a in atoms])


@settings(max_examples=50, deadline=None)
@given(small_measures, small_measures, st.floats(-3, 3), st.floats(-3, 3),
       st.integers(0, 50))
def test_linearity(a1, a2, x, y, n):
    s, t = _measure(a1), _measure(a2)
    combo = s.scale(x) + t.scale(y)
    lhs = fourier_coeff(combo, n)
    rhs = x * fourier_coeff(s, n) + y * fourier_coeff(t, n)
    assert abs(lhs - rhs) <= 1e-12 * (1 + s.total_variation() + t.total_variation()) * 10


@settings(max_examples=50, deadline=None)
@given(small_measures, st.integers(-100, 100))
def test_coefficient_bounded_by_total_variation(atoms, n):
    s = _measure(atoms)
    assert abs(fourier_coeff(s, n)) <= s.total_variation() + 1e-12


bounded_seqs = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                        min_size=2, max_size=40)


@settings(max_examples=60, deadline=None)
@given(bounded_seqs)
def test_builtin_families_bounded_by_sup(a):
    a = np.array(a)
    sup = np.max(np.abs(a))
    for name in ("strong", "weak", "ergodic"):
        _, tr = MixingFamily.named(name).trace(a)
        assert np.all(tr <= sup + 1e-12)


@settings(max_examples=60, deadline=None)
@given(bounded_seqs, st.integers(0, 2 ** 31))
def test_ideal_property_strong_and_weak(a, seed):
    a = np.array(a)
    r = np.random.default_rng(seed)
    u = r.uniform(0, 1, a.size) * np.exp(1j * r.uniform(0, 2 * np.pi, a.size))
    for name in ("strong", "weak"):
        fam = MixingFamily.named(name)
        _, ta = fam.trace(a)
        _, tu = fam.trace(u * a)
        assert np.all(tu <= np.max(np.abs(u)) * ta + 1e-12)
