import pytest

from hilok import gf
from hilok.errors import DomainError, NotPrime, ReducibleModulus

SMALL_FIELDS = [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2), (7, 1), (7, 2)]


def test_make_prime_field():
    F = gf.gf_make(2, 1)
    assert F.order == 2
    assert F.one + F.one == F.zero


def test_make_f4_default_modulus():
    F = gf.gf_make(2, 2)
    # x^2 + x + 1 is the only irreducible quadratic over F_2
    assert F.modulus == (1, 1, 1)
    w = F.gen
    assert w * w == w + 1


def test_make_rejects_nonprime():
    with pytest.raises(NotPrime):
        gf.gf_make(4, 1)


def test_make_rejects_desk_scale_violations():
    with pytest.raises(DomainError):
        gf.gf_make(11, 1)
    with pytest.raises(DomainError):
        gf.gf_make(2, 5)


def test_make_rejects_reducible_modulus():
    with pytest.raises(ReducibleModulus):
        gf.gf_make(2, 2, (1, 0, 1))  # x^2+1 = (x+1)^2


def test_fields_are_interned():
    assert gf.gf_make(3, 2) is gf.gf_make(3, 2)


def test_frobenius_examples():
    F2 = gf.gf_make(2, 1)
    assert gf.frobenius(F2.one) == F2.one
    F4 = gf.gf_make(2, 2)
    w = F4.gen
    assert gf.frobenius(w) == w + 1
    F9 = gf.gf_make(3, 2)
    assert gf.frobenius(F9.zero) == F9.zero


def test_trace_examples():
    F2 = gf.gf_make(2, 1)
    assert gf.trace(F2.one) == 1
    F4 = gf.gf_make(2, 2)
    assert gf.trace(F4.gen) == 1
    assert gf.trace(F4.one) == 0


def test_artin_schreier_examples():
    F2 = gf.gf_make(2, 1)
    assert gf.artin_schreier_solve(F2.zero) == F2.zero
    assert gf.artin_schreier_solve(F2.one) is None
    F4 = gf.gf_make(2, 2)
    assert gf.artin_schreier_solve(F4.one) == F4.gen  # w^2+w = 1, smallest code


@pytest.mark.parametrize("p,f", SMALL_FIELDS)
def test_field_axioms_exhaustive_small(p, f):
    F = gf.gf_make(p, f)
    if F.order > 81:
        els = [F.el(c) for c in range(0, F.order, 7)] + [F.one, F.gen if f > 1 else F.one]
    else:
        els = list(F)
    for a in els:
        assert a ** F.order == a
        if a:
            assert a * (F.one / a) == F.one
        for b in els[:9]:
            assert a * b == b * a
            assert a + b == b + a


@pytest.mark.parametrize("p,f", [(p, f) for p, f in SMALL_FIELDS if p**f <= 81])
def test_trace_properties_exhaustive(p, f):
    F = gf.gf_make(p, f)
    for a in F:
        assert gf.trace(gf.frobenius(a)) == gf.trace(a)
        for b in F:
            assert gf.trace(a + b) == (gf.trace(a) + gf.trace(b)) % p


@pytest.mark.parametrize("p,f", [(p, f) for p, f in SMALL_FIELDS if p**f <= 81])
def test_artin_schreier_iff_trace_zero(p, f):
    F = gf.gf_make(p, f)
    for a in F:
        x = gf.artin_schreier_solve(a)
        if gf.trace(a) == 0:
            assert x is not None
            assert x**p - x == a
            # returned solution is the smallest code among x + c, c in Z/p
            assert all(x.code <= (x + c).code for c in range(p))
        else:
            assert x is None


def test_proot_inverts_frobenius():
    for p, f in SMALL_FIELDS:
        F = gf.gf_make(p, f)
        for c in range(min(F.order, 81)):
            a = F.el(c)
            assert F.el(F.proot((a**p).code)) == a
            assert gf.frobenius(F.el(F.proot(a.code))) == a


@pytest.mark.parametrize("p,f", [(2, 1), (3, 1)])
def test_norm_surjective_quadratic_over_small(p, f):
    # Norm from F_{p^{2f}} onto F_{p^f}, exhaustive for p^f <= 9
    E = gf.gf_make(p, 2 * f)
    sub = {c for c in range(E.order) if E.pow_(c, p**f) == c}
    e = (p ** (2 * f) - 1) // (p**f - 1)
    image = {E.pow_(c, e) for c in range(1, E.order)}
    assert image == sub - {0}


def test_trace_one_code_smallest():
    for p, f in [(2, 1), (2, 2), (3, 2)]:
        F = gf.gf_make(p, f)
        c = F.trace_one_code()
        assert F.trace_code(c) == 1
        assert all(F.trace_code(d) != 1 for d in range(c))


def test_render_and_coeffs():
    F4 = gf.gf_make(2, 2)
    assert repr(F4.gen + 1) == "w+1"
    assert (F4.gen + 1).coeffs == (1, 1)
    F9 = gf.gf_make(3, 2)
    assert repr(F9.el(7)) == "2*w+1"
