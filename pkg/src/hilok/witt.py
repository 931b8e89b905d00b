"""p-typical Witt vectors of length <= 3 over small coefficient rings.

The ring structure comes from the universal addition and multiplication
polynomials, solved once over the integers by inverting the ghost map
symbolically and cached per (p, length, op).  Over a characteristic-p ring
the ghost map itself is meaningless (division by p), so ghost() is reserved
for torsion-free coefficients and exists to test the universal polynomials;
phi_lift is the characteristic-p degenerate of the lifting formula
sum p^i lift(x_i)^{p^(r-i)}, which collapses to lift(x_0)^{p^r}.
"""

from __future__ import annotations

import sympy

from .errors import (
    InternalInconsistency,
    LengthMismatch,
    ResidueMismatch,
    SpecMismatch,
    TorsionRing,
)
from .gf import GFElement
from .tower import TowerElement, TowerSpec

_MAX_LENGTH = 3

_POLY_CACHE: dict[tuple, list] = {}


def _ghost_expr(p, vs, j):
    return sum(p**i * vs[i] ** (p ** (j - i)) for i in range(j + 1))


def _universal_polys(p: int, length: int, op: str) -> list:
    """Term lists [(exponent tuple over x0..,y0.., int coeff)] for each output
    coordinate of Witt addition or multiplication."""
    key = (p, length, op)
    if key in _POLY_CACHE:
        return _POLY_CACHE[key]
    xs = sympy.symbols(f"x0:{length}")
    ys = sympy.symbols(f"y0:{length}")
    zs: list = []
    out = []
    for j in range(length):
        gx = _ghost_expr(p, xs, j)
        gy = _ghost_expr(p, ys, j)
        target = gx + gy if op == "add" else gx * gy
        acc = sympy.expand(target - sum(p**i * zs[i] ** (p ** (j - i)) for i in range(j)))
        zj = sympy.expand(acc / p**j)
        try:
            poly = sympy.Poly(zj, *xs, *ys, domain="ZZ")
        except sympy.CoercionFailed:  # pragma: no cover
            raise InternalInconsistency(f"Witt {op} polynomial z_{j} not integral at p={p}")
        zs.append(zj)
        out.append([(tuple(int(e) for e in mono), int(c)) for mono, c in poly.terms()])
    _POLY_CACHE[key] = out
    return out


def _zero_like(x):
    return x - x


def _eval_terms(terms, vals):
    acc = None
    for exps, c in terms:
        term = None
        for v, e in zip(vals, exps):
            if e:
                f = v**e
                term = f if term is None else term * f
        assert term is not None, "universal Witt polynomials have no constant term"
        contrib = term if c == 1 else c * term
        acc = contrib if acc is None else acc + contrib
    return _zero_like(vals[0]) if acc is None else acc


class WittVector:
    __slots__ = ("p", "entries")

    def __init__(self, p: int, entries):
        entries = tuple(entries)
        if not 1 <= len(entries) <= _MAX_LENGTH:
            raise LengthMismatch(f"Witt length {len(entries)} outside 1..{_MAX_LENGTH}")
        self.p = p
        self.entries = entries

    @property
    def length(self) -> int:
        return len(self.entries)

    def _compat(self, other: "WittVector"):
        if not isinstance(other, WittVector):
            raise LengthMismatch("expected a WittVector")
        if self.p != other.p or self.length != other.length:
            raise LengthMismatch("Witt vectors of different shape")

    def __add__(self, other):
        return witt_add(self, other)

    def __mul__(self, other):
        return witt_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, WittVector):
            return NotImplemented
        return self.p == other.p and all(a == b for a, b in zip(self.entries, other.entries))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"W_{self.p}{self.entries!r}"


def witt_add(w1: WittVector, w2: WittVector) -> WittVector:
    w1._compat(w2)
    polys = _universal_polys(w1.p, w1.length, "add")
    vals = w1.entries + w2.entries
    return WittVector(w1.p, [_eval_terms(t, vals) for t in polys])


def witt_mul(w1: WittVector, w2: WittVector) -> WittVector:
    w1._compat(w2)
    polys = _universal_polys(w1.p, w1.length, "mul")
    vals = w1.entries + w2.entries
    return WittVector(w1.p, [_eval_terms(t, vals) for t in polys])


def ghost(w: WittVector) -> tuple:
    if any(isinstance(x, (GFElement, TowerElement)) for x in w.entries):
        raise TorsionRing("ghost map needs p-torsion-free coefficients")
    return tuple(_ghost_expr(w.p, w.entries, j) for j in range(w.length))


def phi_lift(w: WittVector, target: TowerSpec, r: int):
    """The lifting formula sum p^i lift(x_i)^{p^(r-i)} into the tower ring;
    in characteristic p only the i = 0 term survives."""
    x0 = w.entries[0]
    if isinstance(x0, GFElement):
        if x0.field is not target.base:
            raise ResidueMismatch("Witt coefficient field is not the residue field of the target")
        lifted = target.const(x0)
    elif isinstance(x0, TowerElement):
        try:
            rspec = target.residue_spec()
        except SpecMismatch:
            raise ResidueMismatch("target tower has no residue tower")
        if x0.spec != rspec:
            raise ResidueMismatch("Witt coefficient tower is not the residue tower of the target")
        coeffs = {e + (0,): c for e, c in x0.coeffs.items()}
        window = x0.window + ((0, None),)
        lifted = TowerElement(target, coeffs, window)
    elif isinstance(x0, int):
        lifted = target.const(x0)
    else:
        raise ResidueMismatch(f"cannot lift {type(x0).__name__} into a tower ring")
    return lifted ** (target.p**r)
