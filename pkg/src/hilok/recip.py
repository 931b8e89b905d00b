"""Residue reciprocity: H^r(K) pairs with K_q(K)/p into Z/p when q+r = n+1.

pair composes the module structure {w, x_1, ..., x_q} = rep(w)^dlog x_1^...
^dlog x_q with the residue-trace isomorphism of the top cohomology: the
value is delta_top of the wedge, summed over the terms of the K-class.
Well-definedness in w is inherited from delta_top (Cartier decomposition
kills (F-1)-images and exact forms); the tests exercise it directly.

phi_character tabulates pair(w, .) on a generating family of the finite
quotient K_q/(p, U_N): recursively lifted residue symbols for the level-0
part and one-unit symbols 1 + c.T^E.pi^i against dlog monomials for each
0 < i < N.  Labels are the symbol reprs, so tables diff cleanly and the
family for a larger N extends the smaller one monomial by monomial.

graded_pairing_matrix realizes the level-i slice T_i/T_{i-1} x U_i/U_{i+1}
over monomial bases truncated to an exponent box.  The level-i slot of the
pole filtration on H is spanned by lifted residue forms times pi^{-i}; the
unit side is spanned by rho_i images.  At p | i both sides are quotients by
closed forms, and the matrix uses monomials whose exterior derivatives are
independent; the pairing values themselves are computed end to end by pair,
not from the graded formulas, so Lemma-22-style identities are observed
facts here rather than definitions.
"""

from __future__ import annotations

from itertools import combinations, product

from . import forms, hcoh, kmilnor, tower
from .errors import DimensionMismatch, PrecisionExhausted, SpecMismatch
from .forms import form_make
from .hcoh import CohClass
from .kmilnor import KClass, MilnorSymbol, lift_to
from .tower import TowerSpec

__all__ = [
    "pair",
    "CharacterTable",
    "phi_character",
    "character_to_json",
    "GradedPairing",
    "graded_pairing_matrix",
    "t_generators",
    "u_generators",
    "matrix_rank_mod_p",
]


def _top_value(spec: TowerSpec, x: TowerElement) -> int:
    # residue-trace of x.dlog t_1^...^dlog t_n: the trace of the coefficient
    # of x at exponent zero (iterated residue).  Every monomial at a nonzero
    # exponent is equivalent to zero in top cohomology, so this agrees with
    # delta_top wherever the Cartier iteration converges but needs only the
    # origin coefficient to be inside the window.
    for hi in (h for _, h in x.window):
        if hi is not None and hi <= 0:
            raise PrecisionExhausted(
                f"window of {x!r} does not determine the residue coefficient"
            )
    return spec.base.trace_code(x.coeffs.get((0,) * spec.n, 0))


def pair(w: CohClass, xi: KClass) -> int:
    """Sum of the residue traces of rep(w) ^ dlog x_1 ^ ... ^ dlog x_q over
    the terms of xi, in Z/p."""
    spec = w.spec
    if xi.spec != spec:
        raise SpecMismatch("the pairing needs both sides over one field")
    if w.r + xi.q != spec.n + 1:
        raise DimensionMismatch(
            f"degree {w.r} cohomology pairs with K_{spec.n + 1 - w.r}, got K_{xi.q}"
        )
    total = 0
    for m, sym in xi.terms:
        # wedge the numerators dx_i and divide by prod x_i once at the end:
        # intermediate pole depths stay the sum of the input depths instead
        # of compounding through eagerly truncated geometric series
        f = w.rep
        den = spec.one()
        for x in sym.entries:
            f = forms.wedge(f, forms.d_form(x))
            den = den * x
        top = f.coeff(tuple(range(spec.n)))
        if top.coeffs or not top.exact:
            top = top * tower.inv(den)
        total += m * _top_value(spec, top)
    return total % spec.p


# -- generating families ------------------------------------------------------


def _gf_basis_codes(F):
    # 1, w, ..., w^{f-1}: the polynomial basis, code digits base p
    return [F.p**j for j in range(F.f)]


def _residue_monomials(rspec: TowerSpec, bound: int):
    """Nonzero monomials c.T^E of the residue tower, E in the bound box."""
    F = rspec.base
    out = []
    for codes in _gf_basis_codes(F):
        for e in product(range(-bound, bound + 1), repeat=rspec.n):
            out.append(rspec.monomial(tuple(e), F.el(codes)))
    return out


def _form_monomials(rspec: TowerSpec, s: int, bound: int):
    """Decomposable monomial s-forms over the residue tower as (x, ys)
    pairs, x = c.T^E and ys a strictly increasing list of variables."""
    if s < 0 or s > rspec.n:
        return []
    out = []
    for vs in combinations(range(rspec.n), s):
        for x in _residue_monomials(rspec, bound):
            out.append((x, [rspec.var(rspec.var_names[v]) for v in vs], vs))
    return out


def _rho_symbol(spec: TowerSpec, i: int, x, ys, with_pi: bool, cap: int) -> KClass:
    entries = [spec.one() + lift_to(x, spec).shift((0,) * (spec.n - 1) + (i,))]
    entries += [lift_to(y, spec) for y in ys]
    if with_pi:
        entries.append(spec.pi())
    return KClass(spec, len(entries), [(1, MilnorSymbol(entries))], cap)


def _k_group_generators(spec: TowerSpec, q: int, bound: int, levels: int, cap: int):
    """Generating classes of K_q(spec)/p with unit levels cut at `levels`."""
    if q == 0:
        return [KClass(spec, 0, [(1, MilnorSymbol(()))], cap)]
    if q > spec.n:
        return []
    rspec = spec.residue_spec()
    pi = spec.pi()
    out = []

    def lifted(g: KClass, with_pi: bool) -> KClass:
        terms = []
        for m, sym in g.terms:
            entries = [lift_to(x, spec) for x in sym.entries]
            if with_pi:
                entries.append(pi)
            terms.append((m, MilnorSymbol(entries)))
        return KClass(spec, q, terms, cap)

    for g in _k_group_generators(rspec, q, bound, bound, bound + 1):
        out.append(lifted(g, False))
    for g in _k_group_generators(rspec, q - 1, bound, bound, bound + 1):
        out.append(lifted(g, True))
    for i in range(1, levels):
        for x, ys, _ in _form_monomials(rspec, q - 1, bound):
            out.append(_rho_symbol(spec, i, x, ys, False, cap))
        for x, ys, _ in _form_monomials(rspec, q - 2, bound):
            out.append(_rho_symbol(spec, i, x, ys, True, cap))
    return out


def u_generators(spec: TowerSpec, q: int, i: int, bound: int = 2, level_cap: int | None = None):
    """Labeled generators of the level-i filtration slice of K_q/(p, U_N)."""
    cap = level_cap if level_cap is not None else (spec.prec[-1] if spec.n else 0)
    if q == 0:
        if i > 0:
            return []
        cls = KClass(spec, 0, [(1, MilnorSymbol(()))], cap)
        return [(repr(cls), cls)]
    if q > spec.n:
        return []
    rspec = spec.residue_spec()
    out = []
    if i == 0:
        for g in _k_group_generators(rspec, q, bound, bound, bound + 1):
            terms = [
                (m, MilnorSymbol([lift_to(x, spec) for x in sym.entries]))
                for m, sym in g.terms
            ]
            cls = KClass(spec, q, terms, cap)
            out.append((repr(cls), cls))
        for g in _k_group_generators(rspec, q - 1, bound, bound, bound + 1):
            terms = [
                (m, MilnorSymbol([lift_to(x, spec) for x in sym.entries] + [spec.pi()]))
                for m, sym in g.terms
            ]
            cls = KClass(spec, q, terms, cap)
            out.append((repr(cls), cls))
        return out
    pool = _form_monomials(rspec, q - 1, bound)
    if i % spec.p == 0:
        # closed monomials at p | i are exact p-th powers, hence trivial
        pool = _d_independent(rspec, pool)
    for x, ys, _ in pool:
        cls = _rho_symbol(spec, i, x, ys, False, cap)
        out.append((repr(cls), cls))
    if i % spec.p == 0:
        for x, ys, _ in _d_independent(rspec, _form_monomials(rspec, q - 2, bound)):
            cls = _rho_symbol(spec, i, x, ys, True, cap)
            out.append((repr(cls), cls))
    return out


def _lift_form_class(spec: TowerSpec, r: int, x, vs, pole: int, with_pi: bool) -> CohClass:
    """H-class with representative lift(x).pi^{-pole}.dlogM (^ dlog pi)."""
    coeff = lift_to(x, spec)
    if pole:
        coeff = coeff.shift((0,) * (spec.n - 1) + (-pole,))
    m = tuple(vs) + ((spec.n - 1,) if with_pi else ())
    return hcoh.as_class(r, form_make(spec, r - 1, {m: coeff}))


def t_generators(spec: TowerSpec, r: int, i: int, bound: int = 2):
    """Labeled generators of the level-i slice T_i/T_{i-1} of H^r."""
    rspec = spec.residue_spec()
    out = []
    if i == 0:
        for x, _, vs in _form_monomials(rspec, r - 1, bound):
            w = _lift_form_class(spec, r, x, vs, 0, False)
            out.append((repr(w.rep), w))
        for x, _, vs in _form_monomials(rspec, r - 2, bound):
            w = _lift_form_class(spec, r, x, vs, 0, True)
            out.append((repr(w.rep), w))
        return out
    pool = _form_monomials(rspec, r - 1, bound)
    if i % spec.p == 0:
        pool = _d_independent(rspec, pool)
    for x, _, vs in pool:
        w = _lift_form_class(spec, r, x, vs, i, False)
        out.append((repr(w.rep), w))
    if i % spec.p == 0:
        for x, _, vs in _d_independent(rspec, _form_monomials(rspec, r - 2, bound)):
            w = _lift_form_class(spec, r, x, vs, i, True)
            out.append((repr(w.rep), w))
    return out


def _d_independent(rspec: TowerSpec, monomials):
    """Monomials whose exterior derivatives are F_p-independent: a basis of
    the quotient by closed forms, since closed monomial combinations are
    exactly the kernel of d on the span."""
    F = rspec.base
    p = F.p
    picked = []
    rows = []  # echelon rows: dict (exp, subset, digit) -> 1..p-1, pivot-keyed
    for x, ys, vs in monomials:
        w = form_make(rspec, len(vs), {tuple(vs): x})
        dw = forms.ext_d(w)
        vec = {}
        for s, c in dw.coeffs.items():
            for e, code in c.coeffs.items():
                d = code
                j = 0
                while d:
                    if d % p:
                        vec[(e, s, j)] = d % p
                    d //= p
                    j += 1
        for piv, row in rows:
            c = vec.get(piv, 0)
            if c:
                scale = (p - c) % p
                for k2, v2 in row.items():
                    nv = (vec.get(k2, 0) + scale * v2) % p
                    if nv:
                        vec[k2] = nv
                    elif k2 in vec:
                        del vec[k2]
        if not vec:
            continue
        piv = min(vec)
        inv = pow(vec[piv], p - 2, p) if p > 2 else 1
        rows.append((piv, {k2: (v2 * inv) % p for k2, v2 in vec.items()}))
        rows.sort(key=lambda t: t[0])
        picked.append((x, ys, vs))
    return picked


# -- characters ---------------------------------------------------------------


class CharacterTable:
    """pair(w, .) on the generating family of K_q/(p, U_N), keyed by the
    generator reprs; generators keeps the classes for downstream use."""

    __slots__ = ("w", "level_cap", "values", "generators")

    def __init__(self, w: CohClass, level_cap: int, values: dict, generators: dict):
        self.w = w
        self.level_cap = level_cap
        self.values = values
        self.generators = generators

    def nonzero_labels(self):
        return [lab for lab, v in self.values.items() if v]

    def __repr__(self):
        nz = len(self.nonzero_labels())
        return f"<character table: {len(self.values)} generators, {nz} nonzero>"


def phi_character(w: CohClass, N: int, bound: int = 2) -> CharacterTable:
    spec = w.spec
    q = spec.n + 1 - w.r
    if q < 0:
        raise DimensionMismatch(f"degree {w.r} pairs with nothing over {spec!r}")
    w = hcoh.reduce(w)
    values = {}
    generators = {}
    for i in range(0, N):
        for lab, cls in u_generators(spec, q, i, bound=bound, level_cap=N):
            if lab in values:
                continue
            values[lab] = pair(w, cls)
            generators[lab] = cls
    return CharacterTable(w, N, values, generators)


def character_to_json(tab: CharacterTable) -> dict:
    return {
        "field": repr(tab.w.spec),
        "r": tab.w.r,
        "level_cap": tab.level_cap,
        "values": dict(sorted(tab.values.items())),
    }


# -- graded pairing matrices --------------------------------------------------


class GradedPairing:
    __slots__ = ("level", "row_labels", "col_labels", "entries", "p")

    def __init__(self, level, row_labels, col_labels, entries, p):
        self.level = level
        self.row_labels = row_labels
        self.col_labels = col_labels
        self.entries = entries
        self.p = p

    def rank(self) -> int:
        return matrix_rank_mod_p(self.entries, self.p)

    def __repr__(self):
        return f"<level-{self.level} pairing: {len(self.row_labels)}x{len(self.col_labels)}>"


def graded_pairing_matrix(
    i: int, r: int, q: int, *, spec: TowerSpec, bound: int = 2, level_cap: int | None = None
) -> GradedPairing:
    if r + q != spec.n + 1:
        raise DimensionMismatch(f"need q + r = {spec.n + 1}, got {q + r}")
    if r < 1 or q < 1:
        raise DimensionMismatch("the graded pairing needs q, r >= 1")
    if i < 0:
        raise DimensionMismatch("filtration levels start at 0")
    cap = level_cap if level_cap is not None else spec.prec[-1]
    rows = t_generators(spec, r, i, bound=bound)
    cols = u_generators(spec, q, i, bound=bound, level_cap=cap)
    entries = [[pair(w, cls) for _, cls in cols] for _, w in rows]
    return GradedPairing(i, [lab for lab, _ in rows], [lab for lab, _ in cols], entries, spec.p)


def matrix_rank_mod_p(entries, p: int) -> int:
    rows = [list(r) for r in entries]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    col = 0
    for col in range(ncols):
        piv = next((k for k in range(rank, len(rows)) if rows[k][col] % p), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], p - 2, p) if p > 2 else 1
        rows[rank] = [(v * inv) % p for v in rows[rank]]
        for k in range(len(rows)):
            if k != rank and rows[k][col] % p:
                c = rows[k][col]
                rows[k] = [(a - c * b) % p for a, b in zip(rows[k], rows[rank])]
        rank += 1
    return rank
