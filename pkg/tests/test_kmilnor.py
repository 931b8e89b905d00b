import json
import random

import pytest

from hilok import forms, kmilnor, tower
from hilok.errors import (
    DomainError,
    LevelCapReached,
    PrecisionExhausted,
    SpecMismatch,
    ZeroEntry,
)
from hilok.gf import gf_make

F2 = gf_make(2, 1)
F3 = gf_make(3, 1)

K1 = tower.make_tower(F2, 1)
K2 = tower.make_tower(F2, 2)
K1_3 = tower.make_tower(F3, 1)
K2_3 = tower.make_tower(F3, 2)

CAP = 6  # level cap well inside the default precision window


def sym(xs):
    return kmilnor.symbol(xs, level_cap=CAP)


def runit(spec, rng):
    return tower.random_element(spec, rng, max_terms=3, exp_lo=-2, exp_hi=2, nonzero=True)


def cdlog(k, c, y):
    # the form c.dlog y over the residue tower
    return forms.wedge(forms.form_make(k, 0, {(): c}), forms.dlog_form(y))


# -- construction --


def test_symbol_rejects_zero_entry():
    with pytest.raises(ZeroEntry):
        sym([K1.parse("t"), K1.zero()])


def test_symbol_rejects_empty():
    with pytest.raises(ZeroEntry):
        sym([])


def test_mixed_degree_addition_rejected():
    with pytest.raises(SpecMismatch):
        sym([K1.parse("t")]) + sym([K1.parse("t"), K1.parse("1+t")])


def test_class_arithmetic_mod_p():
    c = sym([K1.parse("t")])
    # multiplicities normalize per term; like symbols are not collected
    assert not c.scale(2).terms
    assert kmilnor.is_zero(c + c)
    assert c.scale(3).terms == c.terms


# -- frozen examples --


def test_uniformizer_class_nonzero():
    assert not kmilnor.is_zero(sym([K1.parse("t")]))


def test_square_relation():
    # {x, x} = {x, -1}, which dies mod 2 and mod 3 alike
    assert kmilnor.is_zero(sym([K1.parse("t"), K1.parse("t")]))
    assert kmilnor.is_zero(sym([K1_3.parse("t"), K1_3.parse("t")]))


def test_steinberg_at_the_uniformizer():
    assert kmilnor.is_zero(sym([K1.parse("t"), K1.parse("1-t")]))


def test_one_unit_level_one():
    c = sym([K1.parse("1+t")])
    assert not kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 1
    f1, f2 = kmilnor.graded_decompose(c).gr_at(1)
    k = K1.residue_spec()
    assert forms.forms_agree(f1, forms.form_make(k, 0, {(): k.one()}))
    assert f2 is None


def test_frobenius_square_dies():
    # 1+t^2 = (1+t)^2 in characteristic 2: the class is 2.{1+t} = 0, while the
    # presentation still sits at filtration level 2
    c = sym([K1.parse("1+t^2")])
    assert kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 2


def test_two_uniformizers_gr0():
    c = sym([K2.parse("t"), K2.parse("u")])
    assert not kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 0
    g = kmilnor.graded_decompose(c)
    # {t, u} = {t} in the second residue slot, nothing in the first
    assert kmilnor.is_zero(g.gr0[0])
    assert repr(g.gr0[1]) == "{t}"
    assert not kmilnor.is_zero(g.gr0[1])


def test_inner_square_unit():
    c = sym([K2.parse("1+u^2"), K2.parse("t")])
    assert kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 2


def test_expanded_square_matches_monomial_form():
    # (1+u)*(1+u) enters as a dense 1-unit; same class, same level
    w = K2.parse("1+u") * K2.parse("1+u")
    c = sym([w, K2.parse("t")])
    assert kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 2


def test_cross_symbol_cancellation():
    # regression: {x, 1-x} with x = t^-1 + u expands into symbols whose raw
    # per-level data is nonzero; only the sum dies. A slot-by-slot zero test
    # misses this -- the certificate must see the whole class.
    x = K2.parse("t^-1+u")
    assert kmilnor.is_zero(sym([x, K2.one() - x]))


def test_p_kills_everything():
    rng = random.Random(421)
    for K in (K1, K2, K1_3):
        for _ in range(10):
            c = sym([runit(K, rng), runit(K, rng)]).scale(K.p)
            assert kmilnor.is_zero(c)


# -- graded generators --


def test_rho_symbol_shapes():
    assert repr(kmilnor.rho(1, 1, (1, []), spec=K1, level_cap=CAP)) == "{1+t}"
    k = K2.residue_spec()
    r = kmilnor.rho(1, 2, (1, [k.parse("t")]), spec=K2, level_cap=CAP)
    assert repr(r) == "{1+u, t}"


def test_rho_argument_guards():
    with pytest.raises(DomainError):
        kmilnor.rho(0, 1, (1, []), spec=K1, level_cap=CAP)
    with pytest.raises(LevelCapReached):
        kmilnor.rho(CAP, 1, (1, []), spec=K1, level_cap=CAP)
    with pytest.raises(ZeroEntry):
        kmilnor.rho(1, 2, (K2.residue_spec().zero(), []), spec=K2, level_cap=CAP)


def test_rho_roundtrip_prime_to_p():
    # p does not divide i: gr_i is Omega^{q-1} through rho_i, and the
    # decomposition hands the source form straight back
    rng = random.Random(422)
    for K, levels in ((K2, (1, 3, 5)), (K2_3, (1, 2, 4))):
        k = K.residue_spec()
        for i in levels:
            for _ in range(6):
                c = tower.random_element(k, rng, max_terms=2, exp_lo=-2, exp_hi=3, nonzero=True)
                y = tower.random_element(k, rng, max_terms=2, exp_lo=-2, exp_hi=3, nonzero=True)
                cls = kmilnor.rho(i, 2, (c, [y]), spec=K, level_cap=CAP)
                g = kmilnor.graded_decompose(cls)
                f1, f2 = g.gr_at(i)
                assert forms.forms_agree(f1, cdlog(k, c, y))
                assert f2 is None or f2.is_zero_within_window()
                for j in g.gr:
                    if j == i:
                        continue
                    a, b = g.gr[j]
                    assert a is None or a.is_zero_within_window()
                    assert b is None or b.is_zero_within_window()


def test_rho_levels_including_p_dividing_i():
    k = K2.residue_spec()
    for i in (1, 2, 3, 4):
        cls = kmilnor.rho(i, 2, (k.parse("t"), [k.parse("t")]), spec=K2, level_cap=CAP)
        assert kmilnor.u_level(cls) == i


def test_closed_slot_dies_at_p_dividing_i():
    # p | i and t.dlog t = dt exact: {1+t*u^2, t} = -2{1+t*u^2, u} = 0
    k = K2.residue_spec()
    cls = kmilnor.rho(2, 2, (k.parse("t"), [k.parse("t")]), spec=K2, level_cap=CAP)
    assert kmilnor.is_zero(cls)
    assert kmilnor.u_level(cls) == 2


def test_second_slot_survives_at_p_dividing_i():
    # the pi-slot at p | i is cut down to k/k^p: t survives, t^2 does not
    c = sym([K2.parse("1+t*u^2"), K2.parse("u")])
    assert not kmilnor.is_zero(c)
    assert kmilnor.u_level(c) == 2
    assert kmilnor.is_zero(sym([K2.parse("1+t^2*u^2"), K2.parse("u")]))


# -- relations --


def test_multilinearity():
    rng = random.Random(423)
    for K in (K2, K2_3):
        for _ in range(20):
            x, y, z = runit(K, rng), runit(K, rng), runit(K, rng)
            lhs = sym([x * y, z])
            rhs = sym([x, z]) + sym([y, z])
            assert kmilnor.is_zero(lhs - rhs)


def test_antisymmetry():
    rng = random.Random(424)
    for K in (K2, K2_3):
        for _ in range(20):
            x, y = runit(K, rng), runit(K, rng)
            assert kmilnor.is_zero(sym([x, y]) + sym([y, x]))


def test_steinberg_and_negation():
    # the acceptance suite runs this at full volume; keep a smoke-sized sweep
    rng = random.Random(425)
    for K in (K1, K1_3, K2):
        for _ in range(60):
            x = runit(K, rng)
            assert kmilnor.is_zero(sym([x, -x]))
            y = K.one() - x
            if not (y.exact and not y.coeffs):
                assert kmilnor.is_zero(sym([x, y]))


def test_permutation_of_terms_is_invisible():
    rng = random.Random(426)
    for _ in range(8):
        x, y, z, w = (runit(K2, rng) for _ in range(4))
        c1 = sym([x, y]) + sym([z, w])
        c2 = sym([z, w]) + sym([x, y])
        g1, g2 = kmilnor.graded_decompose(c1), kmilnor.graded_decompose(c2)
        assert kmilnor.is_zero(g1.gr0[0] - g2.gr0[0])
        assert kmilnor.is_zero(g1.gr0[1] - g2.gr0[1])
        for i in set(g1.gr) | set(g2.gr):
            a1, b1 = g1.gr_at(i)
            a2, b2 = g2.gr_at(i)
            assert forms.forms_agree(a1, a2)
            assert forms.forms_agree(b1, b2)


# -- filtration --


def test_u_level_subadditive():
    rng = random.Random(427)
    k = K2.residue_spec()
    pool = [
        kmilnor.rho(i, 2, (k.parse("t"), [k.parse("t")]), spec=K2, level_cap=CAP)
        for i in (1, 2, 3)
    ]
    pool.append(sym([K2.parse("t"), K2.parse("u")]))
    pool.append(sym([K2.parse("1+t*u"), K2.parse("t")]))
    for _ in range(30):
        a, b = rng.choice(pool), rng.choice(pool)
        assert kmilnor.u_level(a + b) >= min(kmilnor.u_level(a), kmilnor.u_level(b))


def test_u_level_cap_on_zero_classes():
    c = sym([K1.parse("t"), K1.parse("t")])
    assert kmilnor.u_level(c) == CAP


# -- degree bounds --


def test_degree_above_p_basis_vanishes():
    # Omega^q = 0 for q > n kills K_q/p; over a one-variable tower that is
    # already degree 2
    rng = random.Random(428)
    for K in (K1, K1_3):
        for _ in range(25):
            assert kmilnor.is_zero(sym([runit(K, rng), runit(K, rng)]))
        for _ in range(10):
            xs = [runit(K, rng) for _ in range(3)]
            assert kmilnor.is_zero(kmilnor.symbol(xs, level_cap=CAP))


# -- serialization --


def test_json_roundtrip():
    c = sym([K2.parse("t^-1+u"), K2.parse("1+t")])
    obj = json.loads(json.dumps(kmilnor.kclass_to_json(c)))
    back = kmilnor.kclass_from_json(obj)
    assert back.q == c.q
    assert back.level_cap == c.level_cap
    assert repr(back) == repr(c)
    assert kmilnor.is_zero(back - c)


# -- precision honesty --


def test_windowed_entries_limit_the_certifiable_level():
    Ks = tower.make_tower(F2, 2, ("t", "u"), (16, 4))
    w = tower.inv(Ks.parse("1+t+u"))
    assert not w.exact
    # {w, w} is zero, but with coefficients known only below u^4 the level-6
    # statement is not certifiable
    with pytest.raises(PrecisionExhausted):
        kmilnor.is_zero(kmilnor.symbol([w, w], level_cap=6))
    assert kmilnor.is_zero(kmilnor.symbol([w, w], level_cap=3))
