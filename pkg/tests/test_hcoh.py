import json
import random

import pytest

from hilok import forms, hcoh, tower
from hilok.errors import (
    DegreeMismatch,
    NonUnitEntry,
    NotAClass,
    PrecisionExhausted,
)
from hilok.gf import gf_make

F2 = gf_make(2, 1)
F3 = gf_make(3, 1)

K1 = tower.make_tower(F2, 1)
K2 = tower.make_tower(F2, 2)
K1_3 = tower.make_tower(F3, 1)


def h1(text, K=K1):
    return hcoh.h1_class(K.parse(text))


# -- construction --


def test_degree_window():
    with pytest.raises(DegreeMismatch):
        hcoh.as_class(3, forms.form_make(K1, 0, {(): K1.one()}))
    with pytest.raises(DegreeMismatch):
        hcoh.as_class(2, forms.form_make(K2, 0, {(): K2.one()}))
    with pytest.raises(DegreeMismatch):
        hcoh.as_class(0, forms.form_make(K1, 0, {(): K1.one()}))


# -- frozen reductions --


def test_h1_trivial_inputs():
    assert hcoh.is_zero(hcoh.h1_class(K1.zero()))
    # t = p(y) for y = t + t^2 + t^4 + ..., so the class dies
    assert hcoh.is_zero(h1("t"))


def test_h1_unramified_generator():
    w = h1("1")
    assert not hcoh.is_zero(w)
    assert hcoh.t_level(w) == 0


def test_pole_power_reduction():
    w = hcoh.reduce(h1("t^-2"))
    assert w.rep.coeff(()) == K1.parse("t^-1")
    assert hcoh.t_level(w) == 1


def test_integral_tail_absorbed():
    w = hcoh.reduce(h1("t^-1+t"))
    assert w.rep.coeff(()) == K1.parse("t^-1")


def test_zero_reduces_to_zero():
    assert not hcoh.reduce(hcoh.h1_class(K1.zero())).rep.coeffs


def test_exact_log_pole_dies_in_degree_two():
    # t^-1 dlog t = -d(t^-1) is exact; t^-1 dlog u is not
    wa = hcoh.as_class(2, forms.form_make(K2, 1, {(0,): K2.parse("t^-1")}))
    assert hcoh.is_zero(wa)
    wb = hcoh.as_class(2, forms.form_make(K2, 1, {(1,): K2.parse("t^-1")}))
    assert not hcoh.is_zero(wb)


# -- class invariance --


def test_reduce_idempotent_and_artin_schreier_invariant():
    rng = random.Random(431)
    for K in (K1, K2, K1_3):
        for _ in range(25):
            a = tower.random_element(K, rng, max_terms=4, exp_lo=-4, exp_hi=4)
            w = hcoh.reduce(hcoh.h1_class(a))
            assert forms.forms_agree(w.rep, hcoh.reduce(w).rep)
            y = tower.random_element(K, rng, max_terms=3, exp_lo=-2, exp_hi=3)
            wy = hcoh.reduce(hcoh.h1_class(a + (y**K.p - y)))
            assert forms.forms_agree(w.rep, wy.rep)


def test_degree_two_invariance():
    rng = random.Random(432)
    for _ in range(25):
        x = tower.random_element(K2, rng, max_terms=3, exp_lo=-3, exp_hi=3)
        rep = forms.form_make(K2, 1, {(rng.randrange(2),): x})
        w = hcoh.reduce(hcoh.as_class(2, rep))
        y = tower.random_element(K2, rng, max_terms=2, exp_lo=-2, exp_hi=2)
        pert = forms.form_make(K2, 1, {(rng.randrange(2),): y**2 - y})
        assert forms.forms_agree(w.rep, hcoh.reduce(hcoh.as_class(2, rep + pert)).rep)
        z = tower.random_element(K2, rng, max_terms=2, exp_lo=-2, exp_hi=2)
        exact = forms.ext_d(forms.form_make(K2, 0, {(): z}))
        assert forms.forms_agree(w.rep, hcoh.reduce(hcoh.as_class(2, rep + exact)).rep)


def test_top_degree_is_one_dimensional():
    # over F_2((t))((u)) the degree-3 group is Z/2 on eps.dlog t^dlog u
    rng = random.Random(433)
    seen = set()
    for _ in range(40):
        x = tower.random_element(K2, rng, max_terms=3, exp_lo=-3, exp_hi=3)
        w = hcoh.reduce(hcoh.as_class(3, forms.form_make(K2, 2, {(0, 1): x})))
        seen.add(repr(w.rep))
    assert seen <= {"0", "(1)*dlog t^dlog u"}
    assert len(seen) == 2


# -- pole filtration --


def test_t_level_frozen():
    assert hcoh.t_level(h1("t^-1")) == 1
    assert hcoh.t_level(h1("1")) == 0
    assert hcoh.t_level(h1("t^-2")) == 1
    # inner poles sit at outer level 0
    assert hcoh.t_level(h1("t^-1", K2)) == 0


def test_t_level_prime_to_p_pole_order_sticks():
    rng = random.Random(434)
    for K in (K1, K1_3):
        for m in range(1, 12):
            if m % K.p == 0:
                continue
            u = tower.random_element(K, rng, max_terms=2, exp_hi=3, one_unit_level=1)
            w = hcoh.h1_class(K.pi() ** (-m) * u)
            assert hcoh.t_level(w) == m


def test_t_level_monotone_under_addition():
    rng = random.Random(435)
    for _ in range(30):
        a = tower.random_element(K2, rng, max_terms=3, exp_lo=-4, exp_hi=3)
        b = tower.random_element(K2, rng, max_terms=3, exp_lo=-4, exp_hi=3)
        la, lb = hcoh.t_level(hcoh.h1_class(a)), hcoh.t_level(hcoh.h1_class(b))
        assert hcoh.t_level(hcoh.h1_class(a + b)) <= max(la, lb)


# -- standard presentations --


def test_standard_case_i():
    chi = h1("u^-1", K2)
    assert hcoh.validate_standard_presentation(chi, [K2.parse("t")]) == (True, "i")


def test_standard_case_i_pth_power_residue():
    chi = h1("u^-1", K2)
    a = K2.parse("t^2*(1+t)^2")
    assert hcoh.validate_standard_presentation(chi, [a]) == (False, "i")


def test_standard_case_ii():
    # pole order divisible by p with non-p-th-power coefficient: residually
    # inseparable, needs a prime element in the last slot
    chi = h1("t^-1*u^-2", K2)
    assert hcoh.t_level(chi) == 2
    assert hcoh.validate_standard_presentation(chi, [], pi=K2.parse("u")) == (True, "ii")
    assert hcoh.validate_standard_presentation(chi, []) == (False, "ii")


def test_standard_rejects():
    assert hcoh.validate_standard_presentation(h1("1", K2), [K2.parse("t")]) == (False, None)
    with pytest.raises(NotAClass):
        hcoh.validate_standard_presentation(hcoh.h1_class(K2.zero()), [])
    with pytest.raises(NonUnitEntry):
        hcoh.validate_standard_presentation(h1("u^-1", K2), [K2.parse("u")])


# -- precision honesty --


def test_windowed_pole_coefficient_raises():
    # [u^-1/(1+t)]: the canonical pole coefficient is an infinite series,
    # so no window can certify the reduced representative
    x = tower.inv(K2.parse("1+t")) * K2.parse("u^-1")
    with pytest.raises(PrecisionExhausted):
        hcoh.reduce(hcoh.h1_class(x))


def test_windowed_integral_part_is_fine():
    # positive floors: every unknown term is provably absorbable
    x = tower.inv(K2.parse("t^-1+u"))
    assert x.window[0][0] >= 0 and x.window[1][0] >= 0
    assert hcoh.is_zero(hcoh.h1_class(x))


# -- serialization --


def test_json_roundtrip():
    w = hcoh.as_class(2, forms.form_make(K2, 1, {(1,): K2.parse("t^-1+u^-3")}))
    obj = json.loads(json.dumps(hcoh.coh_to_json(w)))
    back = hcoh.coh_from_json(obj)
    assert back.r == w.r
    assert forms.forms_agree(back.rep, w.rep)
    assert hcoh.t_level(back) == hcoh.t_level(w)
