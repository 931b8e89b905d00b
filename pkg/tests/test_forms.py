import random

import pytest

from hilok import forms, tower
from hilok.errors import DegreeMismatch, SpecMismatch
from hilok.gf import gf_make

F2 = gf_make(2, 1)
F3 = gf_make(3, 1)
F4 = gf_make(2, 2)

K1 = tower.make_tower(F2, 1)
K2 = tower.make_tower(F2, 2)
K1_3 = tower.make_tower(F3, 1)
K2_4 = tower.make_tower(F4, 2)


def dlog_basis(spec, *indices):
    return forms.form_make(spec, len(indices), {tuple(indices): spec.one()})


def random_form(spec, q, rng, **kw):
    coeffs = {}
    import itertools

    for s in itertools.combinations(range(spec.n), q):
        coeffs[s] = tower.random_element(spec, rng, **kw)
    return forms.form_make(spec, q, coeffs)


# -- wedge --


def test_wedge_basis():
    w = forms.wedge(dlog_basis(K2, 0), dlog_basis(K2, 1))
    assert w == forms.form_make(K2, 2, {(0, 1): K2.one()})


def test_wedge_self_is_zero():
    w = forms.wedge(dlog_basis(K2, 0), dlog_basis(K2, 0))
    assert w.is_zero_within_window() and not w.coeffs


def test_wedge_antisymmetry_p3():
    K = tower.make_tower(F3, 2)
    a = forms.form_make(K, 1, {(0,): K.parse("t")})
    b = dlog_basis(K, 1)
    assert forms.wedge(a, b) == forms.wedge(b, a).scale(-1)


def test_wedge_spec_mismatch():
    with pytest.raises(SpecMismatch):
        forms.wedge(dlog_basis(K1, 0), dlog_basis(K2, 0))


# -- exterior derivative --


def test_ext_d_monomial():
    f = forms.form_make(K1, 0, {(): K1.parse("t")})
    assert forms.ext_d(f) == forms.form_make(K1, 1, {(0,): K1.parse("t")})


def test_ext_d_pth_power_monomial():
    f = forms.form_make(K1, 0, {(): K1.parse("t^2")})
    assert forms.ext_d(f).is_zero_within_window()


def test_ext_d_log_basis_closed():
    assert forms.ext_d(dlog_basis(K1, 0)).is_zero_within_window()
    assert forms.ext_d(dlog_basis(K2, 1)).is_zero_within_window()


def test_d_after_d_vanishes():
    rng = random.Random(301)
    for K in (K1, K2, K1_3, K2_4):
        for q in range(K.n):
            for _ in range(40):
                w = random_form(K, q, rng, max_terms=3)
                assert forms.ext_d(forms.ext_d(w)).is_zero_within_window()


# -- Cartier --


def test_cartier_fixes_dlog():
    assert forms.cartier(dlog_basis(K1, 0)) == dlog_basis(K1, 0)


def test_cartier_kills_odd_exponent():
    w = forms.form_make(K1, 1, {(0,): K1.parse("t")})
    assert forms.cartier(w).is_zero_within_window()


def test_cartier_monomial_rule():
    w = forms.form_make(K1, 1, {(0,): K1.parse("t^(-2)")})
    assert forms.cartier(w) == forms.form_make(K1, 1, {(0,): K1.parse("t^(-1)")})


def test_cartier_semilinearity():
    # C(x^p w) = x C(w) for dlog-monomial w
    rng = random.Random(302)
    for K in (K1, K2, K1_3):
        p = K.base.p
        for _ in range(60):
            x = tower.random_element(K, rng, nonzero=True, max_terms=2)
            s = tuple(sorted(rng.sample(range(K.n), rng.randrange(1, K.n + 1))))
            w = forms.form_make(K, len(s), {s: K.one()})
            lhs = forms.cartier(w.scale(x**p))
            rhs = forms.cartier(w).scale(x)
            assert forms.forms_agree(lhs, rhs)


# -- Cartier decomposition --


def test_cartier_decompose_log_form():
    theta1, c = forms.cartier_decompose(forms.top_log_form(K2))
    assert theta1.is_zero_within_window()
    assert c == F2.one


def test_cartier_decompose_t_dlog_t():
    w = forms.form_make(K1, 1, {(0,): K1.parse("t")})
    theta1, c = forms.cartier_decompose(w)
    assert c == F2.zero
    assert theta1 == w


def test_cartier_decompose_two_step():
    w = forms.form_make(K1, 1, {(0,): K1.parse("t^(-2)")})
    theta1, c = forms.cartier_decompose(w)
    assert c == F2.zero
    assert theta1 == forms.form_make(K1, 1, {(0,): K1.parse("t^(-2)+t^(-1)")})
    # verify by applying 1 - C
    recon = theta1 - forms.cartier(theta1)
    assert forms.forms_agree(recon, w)


def test_cartier_decompose_reconstruction():
    rng = random.Random(303)
    for K in (K1, K2, K1_3):
        for _ in range(120):
            w = random_form(K, K.n, rng, max_terms=3)
            theta1, c = forms.cartier_decompose(w)
            recon = (theta1 - forms.cartier(theta1)) + forms.top_log_form(K).scale(c)
            assert forms.forms_agree(recon, w)


def test_cartier_decompose_needs_top_degree():
    with pytest.raises(DegreeMismatch):
        forms.cartier_decompose(dlog_basis(K2, 0))


# -- residue trace --


def test_delta_top_examples():
    assert forms.delta_top(forms.top_log_form(K2)) == 1
    w = forms.form_make(K2, 2, {(0, 1): K2.parse("t")})
    assert forms.delta_top(w) == 0
    # over F_4 the unit constant has trace 0, the generator has trace 1
    assert forms.delta_top(forms.top_log_form(K2_4)) == 0
    assert forms.delta_top(forms.top_log_form(K2_4).scale(F4.gen)) == 1


def test_delta_top_kills_exact_forms():
    rng = random.Random(304)
    for K in (K1, K2, K1_3):
        for _ in range(60):
            w = random_form(K, K.n - 1, rng, max_terms=3)
            assert forms.delta_top(forms.ext_d(w)) == 0


def test_delta_top_kills_one_minus_cartier():
    rng = random.Random(305)
    for K in (K1, K2, K1_3):
        for _ in range(60):
            w = random_form(K, K.n, rng, max_terms=3)
            assert forms.delta_top(w - forms.cartier(w)) == 0


def test_delta_top_kills_artin_schreier_pattern():
    # delta((f^p - f) dlogM) = 0
    rng = random.Random(306)
    for K in (K1, K2, K1_3):
        top = tuple(range(K.n))
        p = K.base.p
        for _ in range(60):
            f = tower.random_element(K, rng, max_terms=3)
            w = forms.form_make(K, K.n, {top: f**p - f})
            assert forms.delta_top(w) == 0


# -- logarithmic forms --


def test_is_logarithmic_examples():
    assert forms.is_logarithmic(dlog_basis(K1, 0))
    assert not forms.is_logarithmic(forms.form_make(K1, 1, {(0,): K1.parse("t")}))
    assert forms.is_logarithmic(forms.dlog_form(K1.parse("1+t")))


def test_dlog_form_of_product():
    rng = random.Random(307)
    for K in (K1, K2):
        for _ in range(40):
            x = tower.random_element(K, rng, nonzero=True, max_terms=2)
            y = tower.random_element(K, rng, nonzero=True, max_terms=2)
            lhs = forms.dlog_form(x * y)
            rhs = forms.dlog_form(x) + forms.dlog_form(y)
            assert forms.forms_agree(lhs, rhs)


def test_dlog_form_is_logarithmic():
    rng = random.Random(308)
    for K in (K1, K1_3):
        for _ in range(40):
            u = K.one() + K.pi() * tower.random_element(K, rng, max_terms=2, exp_lo=0)
            assert forms.is_logarithmic(forms.dlog_form(u))


# -- serialization --


def test_form_json_round_trip():
    w = forms.form_make(K2, 1, {(0,): K2.parse("1/(1+t)"), (1,): K2.parse("t*u")})
    j = forms.form_to_json(w)
    assert j["q"] == 1 and j["terms"][0][0] == [1]
    back = forms.form_from_json(j)
    assert back == w


def test_form_make_validation():
    with pytest.raises(DegreeMismatch):
        forms.form_make(K1, 2, {})
    with pytest.raises(DegreeMismatch):
        forms.form_make(K2, 1, {(3,): K2.one()})
    with pytest.raises(SpecMismatch):
        forms.form_make(K2, 1, {(0,): K1.one()})
