import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussmix.cantor import (DepthError, DyadicField, ProductSpace, basis_check, cantor_eigenfield,
                             certify_decay, coeffs_to_csv, dq_metric, level_decay, level_sums,
                             max_feasible_depth, product_fact_check, product_fourier, product_space,
                             product_super_lipschitz_constant, top_coordinate, walsh_coeffs)
from gaussmix.operators import ShiftSpec, shift_eigenvectors, shift_lipschitz_constant, weighted_shift


def _eps(depth, coord):
    # epsilon_coord(w) = (-1)^{bit coord-1 of w}
    idx = np.arange(2 ** depth)
    return 1.0 - 2.0 * ((idx >> (coord - 1)) & 1)


def test_constant_field():
    f = DyadicField(4, np.tile([1.0, 2j], (16, 1)))
    c = walsh_coeffs(f)
    assert np.allclose(c[0], [1.0, 2j]) and np.allclose(c[1:], 0)
    cert = certify_decay(c, 1e-6, 2.0)
    assert cert.passed and cert.witness is None


def test_single_character_field():
    v = np.array([1.0, -0.5j])
    f = DyadicField(5, _eps(5, 3)[:, None] * v)
    c = walsh_coeffs(f)
    assert np.allclose(c[1 << 2], v)
    others = np.delete(c, 1 << 2, axis=0)
    assert np.allclose(others, 0)


def test_fast_matches_naive_double_loop(rng):
    d = 6
    vals = rng.standard_normal((2 ** d, 3)) + 1j * rng.standard_normal((2 ** d, 3))
    f = DyadicField(d, vals)
    fast = walsh_coeffs(f, "fast")
    oracle = np.zeros_like(fast)
    for I in range(2 ** d):
        for w in range(2 ** d):
            oracle[I] += (-1) ** bin(I & w).count("1") * vals[w]
    oracle /= 2 ** d
    assert np.max(np.abs(fast - oracle)) < 1e-12
    assert np.max(np.abs(walsh_coeffs(f, "naive") - oracle)) < 1e-12
    with pytest.raises(ValueError):
        walsh_coeffs(DyadicField(17, np.zeros(2 ** 17)))


def test_parseval(rng):
    d = 7
    vals = rng.standard_normal((2 ** d, 2)) + 1j * rng.standard_normal((2 ** d, 2))
    c = walsh_coeffs(DyadicField(d, vals))
    assert np.sum(np.abs(c) ** 2) == pytest.approx(np.sum(np.abs(vals) ** 2) / 2 ** d, rel=1e-10)


def test_top_coordinate():
    assert top_coordinate(np.array([0, 1, 2, 3, 4, 7, 8])).tolist() == [0, 1, 2, 2, 3, 3, 4]


def test_adversarial_field_fails_with_witness():
    # smooth field plus a jump between the two leaves that first differ at the last coordinate
    d = 6
    vals = np.zeros(2 ** d, complex)
    vals[2 ** (d - 1)] = 1.0
    f = DyadicField(d, vals, holder_alpha=2.0)
    C = 1.0
    cert = certify_decay(walsh_coeffs(f), C, 2.0)
    assert not cert.passed
    assert cert.witness is not None and top_coordinate(np.array([cert.witness]))[0] == d
    assert f.measured_holder_constant(2.0) == pytest.approx(2.0 ** (2 * d))


def test_measured_holder_constant_brute_force(rng):
    d = 4
    vals = rng.standard_normal((2 ** d, 2))
    f = DyadicField(d, vals, 1.5)
    dist = f.pair_distances()
    brute = 0.0
    for a, b in itertools.combinations(range(2 ** d), 2):
        brute = max(brute, np.linalg.norm(vals[a] - vals[b]) / dist[a, b] ** 1.5)
    assert f.measured_holder_constant() == pytest.approx(brute)


def _half_circle(depth, alpha=1.5, N=32):
    spec = ShiftSpec.constant(2.0, N)
    return cantor_eigenfield(lambda lam: shift_eigenvectors(spec, lam), 0.0, math.pi,
                             shift_lipschitz_constant(spec), depth, alpha, op=weighted_shift(spec))


def test_cantor_depth_one():
    built = _half_circle(1)
    assert built.angles.size == 2 and built.min_separation > 0
    lo, hi = np.sort(built.angles)
    assert 0 < lo < math.pi / 2 < hi < math.pi


def test_cantor_field_properties():
    built = _half_circle(8)
    L = shift_lipschitz_constant(ShiftSpec.constant(2.0, 32))
    assert np.unique(built.angles).size == 2 ** 8
    assert built.min_separation > 0
    assert np.all((built.angles > 0) & (built.angles < math.pi))
    assert built.eigen_residual < 1e-8
    for k, (a, b) in enumerate(zip(built.arc_lengths, built.arc_lengths[1:])):
        assert b <= a / 2 and L * b <= 2.0 ** (-1.5 * (k + 1)) * (1 + 1e-12)
    C = built.field.measured_holder_constant(1.5)
    coeffs = walsh_coeffs(built.field)
    assert certify_decay(coeffs, C, 1.5).passed
    # level sums obey (C/2) 2^{-(alpha-1) n}
    n = np.arange(1, 9)
    assert np.all(level_sums(coeffs) <= (C / 2) * 2.0 ** (-0.5 * n) * (1 + 1e-9))


def test_depth_error_names_feasible_depth():
    spec = ShiftSpec.constant(2.0, 8)
    feasible = max_feasible_depth(math.pi, 1.5, 2.0)
    with pytest.raises(DepthError) as exc:
        cantor_eigenfield(lambda lam: shift_eigenvectors(spec, lam), 0, math.pi, 2.0, feasible + 1, 1.5)
    assert exc.value.feasible == feasible and str(feasible) in str(exc.value)


def test_level_decay_geometric():
    c = np.zeros(2 ** 6)
    for n in range(1, 7):
        c[2 ** (n - 1)] = 0.5 ** n
    dec = level_decay(c)
    assert dec.max_ratio == pytest.approx(0.5) and dec.fitted_ratio == pytest.approx(0.5)


def test_coeffs_csv():
    lines = coeffs_to_csv(np.array([1.0, 0.0, 0.5, 0.25])).splitlines()
    assert lines[0] == "mask,size,top,norm" and lines[3] == "2,1,2,0.5"


@pytest.mark.parametrize("levels", [((2,), (2,)), ((2, 3),), ((4,),), ((4,), (2, 2)), ((2, 3), (3,))])
def test_basis_check_small(levels):
    assert basis_check(product_space(levels)) <= 1e-12


def test_two_by_two_is_dyadic_group():
    ps = product_space([[2], [2]])
    assert np.allclose(ps.weights(), 0.25)
    E = ps.characters()
    assert np.allclose(np.abs(E), 1)


def test_mixed_block_weights_and_scaling():
    ps = product_space([[2, 3]])
    assert ps.size == 5
    assert np.allclose(ps.weights(), [0.25, 0.25, 1 / 6, 1 / 6, 1 / 6])
    E = ps.characters()
    assert np.abs(E[0, 0]) == pytest.approx(math.sqrt(2)) and E[0, 2] == 0
    # direct Gram summation oracle
    G = np.array([[sum(ps.weights()[k] * E[a, k] * np.conj(E[b, k]) for k in range(5))
                   for b in range(5)] for a in range(5)])
    assert np.allclose(G, np.eye(5), atol=1e-14)


def test_dft_columns():
    ps = product_space([[4]])
    dft = np.exp(2j * np.pi * np.outer(np.arange(4), np.arange(4)) / 4)
    assert np.allclose(ps.characters(), dft)


def test_large_basis_check_uses_factors():
    ps = product_space([[2, 3], [4, 5], [3, 3], [2, 2, 2], [2]])
    assert ps.size > 2048
    assert basis_check(ps) <= 1e-12


def test_size_guard():
    with pytest.raises(ValueError):
        product_space([[50, 50]] * 4)
    with pytest.raises(ValueError):
        product_space([[1]])


def test_dq_metric_examples():
    ps = product_space([[2], [3], [5]])
    w = ((0, 0), (0, 1), (0, 2))
    assert dq_metric(ps, w, ((0, 0), (0, 2), (0, 2))) == pytest.approx(1 / (2 * 3))
    assert dq_metric(ps, w, ((0, 1), (0, 1), (0, 2))) == pytest.approx(1 / 2)
    mixed = product_space([[2], [2, 2]])
    a = ((0, 0), (1, 0))
    assert dq_metric(mixed, a, ((0, 0), (1, 1))) == pytest.approx(1 / (2 * 2 ** 0.25 * 2))
    assert dq_metric(mixed, a, ((0, 0), (0, 0))) is None
    with pytest.raises(ValueError):
        dq_metric(mixed, a, a)


def test_product_fact_bound_holds(rng):
    ps = product_space([[2, 3], [2], [3]])
    # a super-Lipschitz field: values smooth in the nested distance
    pts = ps.points()
    vals = []
    for p in pts:
        v = 0.0
        scale = 1.0
        for n, (s, r) in enumerate(p, start=1):
            scale /= ps.w(n) ** 2
            v += scale * np.exp(2j * math.pi * r / ps.levels[n - 1][s]) * (1 + s)
        vals.append([v, 0.5 * v])
    vals = np.array(vals)
    C = product_super_lipschitz_constant(ps, vals)
    res = product_fact_check(ps, vals, C)
    assert res.passed and res.checked > 0
    coeffs = product_fourier(ps, vals)
    assert coeffs.shape == (ps.size, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.integers(0, 10 ** 6))
def test_parseval_property(d, seed):
    r = np.random.default_rng(seed)
    vals = r.standard_normal(2 ** d) + 1j * r.standard_normal(2 ** d)
    c = walsh_coeffs(DyadicField(d, vals))
    assert np.sum(np.abs(c) ** 2) == pytest.approx(np.mean(np.abs(vals) ** 2), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.lists(st.integers(2, 4), min_size=1, max_size=2), min_size=1, max_size=3))
def test_basis_property(levels):
    ps = ProductSpace(tuple(tuple(lv) for lv in levels))
    assert basis_check(ps) <= 1e-12
    assert ps.weights().sum() == pytest.approx(1.0)
