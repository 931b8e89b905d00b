"""Mod-p Galois cohomology of tower fields in the differential presentation.

A degree-r class (r >= 1) is carried by an (r-1)-form; two forms give the
same class when they differ by (F-1) of a decomposable form or by an exact
form d(eta), where F(x dlog y_1 ^ ...) = x^p dlog y_1 ^ ....  Degree 1 is
the Artin-Schreier quotient K/pK written as 0-forms, p = Frobenius minus
identity; degrees above n+1 carry nothing and are rejected.

reduce computes a canonical representative monomial by monomial, writing
T^E for t_1^{E_1}...t_n^{E_n} and M for a dlog basis monomial:

  * c.T^{pE}.M  ->  proot(c).T^E.M, the two differ by (F-1)(proot(c).T^E.M);
    repeated until some exponent survives mod p or E reaches 0.
  * c.T^E.M with the outermost nonzero entry of E positive is dropped: the
    series z = -(x + x^p + x^{p^2} + ...) converges in the outer valuation
    and exhibits x = c.T^E as p(z), so the term is (F-1)(z.M).
  * at E = 0 each basis component keeps Tr(c).eps only (F_q/pF_q = F_p on
    the canonical trace-one scalar eps).
  * at E != 0 the coefficient vector over the dlog monomials is reduced
    against the exact forms d(c'.T^E.M') = c'.T^E.(sum_i E_i dlog t_i)^M',
    which are exponent-homogeneous; at all-p-divisible exponents that span
    is zero, so the first rewrite never reopens this one.

The two rewrites together realize the pole filtration: what survives at
outer pole order i generates the level-i graded piece, and the level-0 part
is the image of the residue cohomology.  Reduction needs every kept
monomial certified, so windows that leave room for unknown terms whose
outermost nonzero exponent is <= 0 raise PrecisionExhausted; exact
representatives (the normal case) never do.
"""

from __future__ import annotations

from itertools import combinations

from . import forms
from .errors import (
    DegreeMismatch,
    NonUnitEntry,
    NotAClass,
    PrecisionExhausted,
    SpecMismatch,
)
from .forms import QForm, form_from_json, form_make, form_to_json
from .tower import TowerElement, TowerSpec, parse_field_spec, residue_reduce

__all__ = [
    "CohClass",
    "as_class",
    "h1_class",
    "reduce",
    "is_zero",
    "t_level",
    "validate_standard_presentation",
    "coh_to_json",
    "coh_from_json",
]


class CohClass:
    """A mod-p cohomology class of degree r, carried by an (r-1)-form."""

    __slots__ = ("spec", "r", "rep", "reduced")

    def __init__(self, spec: TowerSpec, r: int, rep: QForm, reduced: bool = False):
        self.spec = spec
        self.r = r
        self.rep = rep
        self.reduced = reduced

    def __repr__(self):
        tag = "reduced " if self.reduced else ""
        return f"<{tag}H^{self.r} class [{self.rep!r}]>"


def as_class(r: int, rep: QForm) -> CohClass:
    spec = rep.spec
    if not 1 <= r <= spec.n + 1:
        raise DegreeMismatch(f"degree {r} outside 1..{spec.n + 1}; higher cohomology vanishes")
    if rep.q != r - 1:
        raise DegreeMismatch(f"a degree-{r} class needs an (r-1)-form, got degree {rep.q}")
    return CohClass(spec, r, rep)


def h1_class(a: TowerElement) -> CohClass:
    """The class of a in K/pK, the Artin-Schreier presentation of H^1."""
    return as_class(1, form_make(a.spec, 0, {(): a}))


def _certify_reduction_window(x: TowerElement) -> None:
    # Unknown terms are harmless only when their outermost nonzero exponent
    # is provably positive (those are dropped regardless).  An unknown region
    # in variable i matters if the variables outer than i can all sit at 0
    # while e_i <= 0, or if some variable outer than i has pole room.
    w = x.window
    n = len(w)
    for i in range(n):
        hi = w[i][1]
        if hi is None:
            continue
        if hi <= 0 and all(w[j][0] <= 0 for j in range(i + 1, n)):
            raise PrecisionExhausted(
                f"window of {x!r} leaves pole or constant terms of variable {i} unknown"
            )
        for j in range(i + 1, n):
            if w[j][0] < 0 and all(w[j2][0] <= 0 for j2 in range(j + 1, n)):
                raise PrecisionExhausted(
                    f"window of {x!r} hides coefficients under the variable-{j} pole"
                )


def _leading_sign(e: tuple) -> int:
    for v in reversed(e):
        if v:
            return 1 if v > 0 else -1
    return 0


def _exact_span_at(spec: TowerSpec, r: int, e: tuple):
    """Exponent-e slices of d(Omega^{r-2}): one vector per (r-2)-subset M'."""
    F = spec.base
    p = F.p
    out = []
    for mp in combinations(range(spec.n), r - 2):
        vec = {}
        for i in range(spec.n):
            if i in mp:
                continue
            c = e[i] % p
            if not c:
                continue
            if sum(1 for m in mp if m < i) % 2:
                c = (p - c) % p
            vec[tuple(sorted(mp + (i,)))] = F.embed_int(c)
        if vec:
            out.append(vec)
    return out


def _axpy(F, v: dict, c: int, b: dict) -> dict:
    out = dict(v)
    for s, bc in b.items():
        out[s] = F.add(out.get(s, 0), F.mul(c, bc))
        if not out[s]:
            del out[s]
    return out


def _eliminate(F, vec: dict, span) -> dict:
    """Canonical residual of vec modulo the span, pivots in subset order."""
    basis = []
    for v in span:
        v = dict(v)
        for piv, b in basis:
            c = v.get(piv, 0)
            if c:
                v = _axpy(F, v, F.neg(c), b)
        nz = [s for s, c in v.items() if c]
        if not nz:
            continue
        piv = min(nz)
        inv = F.inv(v[piv])
        v = {s: F.mul(inv, c) for s, c in v.items() if c}
        basis = [
            (pv, _axpy(F, b, F.neg(b[piv]), v) if b.get(piv, 0) else b) for pv, b in basis
        ]
        basis.append((piv, v))
        basis.sort()
    out = dict(vec)
    for piv, b in basis:
        c = out.get(piv, 0)
        if c:
            out = _axpy(F, out, F.neg(c), b)
    return out


def reduce(w: CohClass) -> CohClass:
    if w.reduced:
        return w
    spec = w.spec
    F = spec.base
    p = F.p
    for c in w.rep.coeffs.values():
        _certify_reduction_window(c)

    kept = {}  # exponent -> {dlog subset -> code}
    const = {}  # dlog subset -> code
    for m, c in w.rep.coeffs.items():
        for e, code in c.coeffs.items():
            e = tuple(e)
            while any(e) and all(v % p == 0 for v in e):
                e = tuple(v // p for v in e)
                code = F.proot(code)
            if not any(e):
                const[m] = F.add(const.get(m, 0), code)
            elif _leading_sign(e) < 0:
                slot = kept.setdefault(e, {})
                slot[m] = F.add(slot.get(m, 0), code)

    out = {}

    def put(m, e, code):
        if code:
            out[m] = out.get(m, spec.zero()) + spec.monomial(e, F.el(code))

    eps = F.trace_one_code()
    for m, code in const.items():
        put(m, (0,) * spec.n, F.mul(F.embed_int(F.trace_code(code)), eps))
    for e, slot in kept.items():
        if w.r >= 2:
            slot = _eliminate(F, slot, _exact_span_at(spec, w.r, e))
        for m, code in slot.items():
            put(m, e, code)

    return CohClass(spec, w.r, form_make(spec, w.r - 1, out), reduced=True)


def is_zero(w: CohClass) -> bool:
    return not reduce(w).rep.coeffs


def t_level(w: CohClass) -> int:
    """Least i >= 0 with every coefficient of the reduced representative of
    outer valuation >= -i; 0 exactly on the unramified part."""
    w = reduce(w)
    lvl = 0
    for c in w.rep.coeffs.values():
        for e in c.coeffs:
            lvl = max(lvl, -e[-1])
    return lvl


def _outer_val(x: TowerElement) -> int:
    if not x.coeffs:
        raise NonUnitEntry("zero entry")
    return min(e[-1] for e in x.coeffs)


def _p_independent(rspec: TowerSpec, residues) -> bool:
    # |k^p(a_1..a_m) : k^p| = p^m, tested as dlog a_1 ^ ... ^ dlog a_m != 0
    if len(residues) > rspec.n:
        return False
    acc = form_make(rspec, 0, {(): rspec.one()})
    for a in residues:
        acc = forms.wedge(acc, forms.dlog_form(a))
    return not acc.is_zero_within_window()


def validate_standard_presentation(chi: CohClass, a_list, pi: TowerElement | None = None):
    """Check the numeric conditions for {chi, a_1, ..} to present a standard
    class: case (i) chi totally ramified of degree p (pole order >= 1 and
    prime to p) with all residues p-independent; case (ii) chi residually
    inseparable (pole order divisible by p, deepest coefficient not a p-th
    power) with a prime element in the last slot and the rest p-independent.
    Returns (ok, tag) with tag "i", "ii", or None."""
    if chi.r != 1:
        raise NotAClass("standard presentations start from a degree-1 class")
    chi = reduce(chi)
    rep = chi.rep.coeff(())
    if not rep.coeffs:
        raise NotAClass("the trivial class presents nothing")
    spec = chi.spec
    rspec = spec.residue_spec()
    residues = []
    for a in a_list:
        if a.spec != spec:
            raise SpecMismatch("unit entries must live in the class's field")
        if not a.coeffs or _outer_val(a) != 0:
            raise NonUnitEntry(f"{a!r} is not a unit of the valuation ring")
        residues.append(residue_reduce(a))

    lvl = t_level(chi)
    if lvl >= 1 and lvl % spec.p:
        return _p_independent(rspec, residues), "i"
    if lvl >= 1:
        # deepest pole coefficient as an element of the residue tower
        deep = {e[:-1]: c for e, c in rep.coeffs.items() if e[-1] == -lvl}
        coeff = rspec.zero()
        for e, c in deep.items():
            coeff = coeff + rspec.monomial(e, spec.base.el(c))
        insep = not all(
            v % spec.p == 0 for e in coeff.coeffs for v in e
        )  # reduction guarantees this; keep the check observable
        ok = (
            insep
            and pi is not None
            and pi.coeffs
            and _outer_val(pi) == 1
            and _p_independent(rspec, residues)
        )
        return ok, "ii"
    return False, None


# -- serialization --


def coh_to_json(w: CohClass) -> dict:
    return {"field": repr(w.spec), "r": w.r, "rep": form_to_json(w.rep), "reduced": w.reduced}


def coh_from_json(obj: dict) -> CohClass:
    spec = parse_field_spec(obj["field"])
    rep = form_from_json(obj["rep"])
    if rep.spec != spec:
        raise SpecMismatch("rep form lives in a different field")
    out = as_class(int(obj["r"]), rep)
    out.reduced = bool(obj.get("reduced", False))
    return out
