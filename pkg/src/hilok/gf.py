"""Exact arithmetic in small finite fields F_{p^f}.

Elements are integer codes 0..p^f-1 whose base-p digits are the coordinates
in the power basis 1, w, ..., w^(f-1), where w is the class of x modulo the
defining polynomial.  Fields carry dense numpy operation tables sized for
desk scale (p <= 7, f <= 4); the windowed convolution kernel indexes the ADD
and MUL tables directly.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import DomainError, NotPrime, ParseError, ReducibleModulus

_MAX_P = 7
_MAX_F = 4

_FIELDS: dict[tuple, "GFField"] = {}


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p**0.5) + 1))


def _poly_rem(num: tuple[int, ...], den: tuple[int, ...], p: int) -> tuple[int, ...]:
    """Remainder of num by monic den, coefficients low degree first."""
    num = list(num)
    dd = len(den) - 1
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i] % p
        if c:
            for j, dj in enumerate(den):
                num[i - dd + j] = (num[i - dd + j] - c * dj) % p
    return tuple(c % p for c in num[:dd])


def _is_irreducible(poly: tuple[int, ...], p: int) -> bool:
    deg = len(poly) - 1
    if deg == 1:
        return True
    if poly[0] == 0:
        return False  # divisible by x
    for m in range(1, deg // 2 + 1):
        for code in range(p**m):
            div = tuple((code // p**j) % p for j in range(m)) + (1,)
            if not any(_poly_rem(poly, div, p)):
                return False
    return True


def _default_modulus(p: int, f: int) -> tuple[int, ...]:
    # smallest integer-encoded monic irreducible; deterministic across runs
    for code in range(p**f):
        poly = tuple((code // p**j) % p for j in range(f)) + (1,)
        if _is_irreducible(poly, p):
            return poly
    raise AssertionError("no irreducible polynomial found")


class GFField:
    """Handle for F_{p^f} with dense operation tables over integer codes."""

    def __init__(self, p: int, f: int, modulus: tuple[int, ...]):
        self.p = p
        self.f = f
        self.order = p**f
        self.modulus = modulus
        self._build_tables()

    # -- construction helpers ------------------------------------------------

    def _polymul(self, a: int, b: int) -> int:
        p, f = self.p, self.f
        prod = [0] * (2 * f - 1)
        for i in range(f):
            ai = (a // p**i) % p
            if ai:
                for j in range(f):
                    bj = (b // p**j) % p
                    if bj:
                        prod[i + j] = (prod[i + j] + ai * bj) % p
        rem = _poly_rem(tuple(prod), self.modulus, p)
        return sum(c * p**j for j, c in enumerate(rem))

    def _pow_slow(self, a: int, e: int) -> int:
        r, b = 1, a
        while e:
            if e & 1:
                r = self._polymul(r, b)
            b = self._polymul(b, b)
            e >>= 1
        return r

    def _find_generator(self) -> int:
        m = self.order - 1
        if m == 1:
            return 1
        qs, mm, d = [], m, 2
        while d * d <= mm:
            if mm % d == 0:
                qs.append(d)
                while mm % d == 0:
                    mm //= d
            d += 1
        if mm > 1:
            qs.append(mm)
        for g in range(2, self.order):
            if all(self._pow_slow(g, m // q) != 1 for q in qs):
                return g
        raise AssertionError("no generator found")

    def _build_tables(self):
        p, f, s = self.p, self.f, self.order
        codes = np.arange(s, dtype=np.int64)

        add = np.zeros((s, s), dtype=np.uint16)
        for j in range(f):
            dj = (codes // p**j) % p
            add += (((dj[:, None] + dj[None, :]) % p) * p**j).astype(np.uint16)
        self.ADD = add

        g = self._find_generator()
        exp = [1]
        for _ in range(s - 2):
            exp.append(self._polymul(exp[-1], g))
        self._EXP = np.array(exp, dtype=np.int64)
        log = np.zeros(s, dtype=np.int64)
        log[self._EXP] = np.arange(s - 1)
        self._LOG = log
        self.gen_code = g

        if s > 1:
            ksum = (log[:, None] + log[None, :]) % (s - 1)
            mul = self._EXP[ksum].astype(np.uint16)
            mul[0, :] = 0
            mul[:, 0] = 0
        else:  # pragma: no cover
            mul = np.zeros((1, 1), dtype=np.uint16)
        self.MUL = mul

        self.NEG = mul[p - 1].copy() if p > 2 else codes.astype(np.uint16)
        inv = np.zeros(s, dtype=np.uint16)
        if s > 2:
            inv[1:] = self._EXP[(s - 1 - log[1:]) % (s - 1)]
        elif s == 2:
            inv[1] = 1
        self.INV = inv

        frob = codes.astype(np.uint16)
        e, base = p, codes.astype(np.uint16)
        res = np.zeros(s, dtype=np.uint16)
        res[:] = 1
        res[0] = 1  # 0^0 handled below
        while e:
            if e & 1:
                res = mul[res, base]
            base = mul[base, base]
            e >>= 1
        res[0] = 0
        self.FROB = res

        proot = codes.astype(np.uint16)
        for _ in range(f - 1):
            proot = self.FROB[proot]
        self.PROOT = proot

        tr = codes.astype(np.uint16)
        y = codes.astype(np.uint16)
        for _ in range(f - 1):
            y = self.FROB[y]
            tr = add[tr, y]
        assert np.all(tr < p), "trace must land in the prime subfield"
        self.TRACE = tr.astype(np.int64)

        key = add[self.FROB, self.NEG[codes]]
        as_min = np.full(s, -1, dtype=np.int64)
        for x in range(s):
            k = int(key[x])
            if as_min[k] < 0:
                as_min[k] = x
        self._AS = as_min

    # -- code-level operations ----------------------------------------------

    def add(self, a: int, b: int) -> int:
        return int(self.ADD[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.ADD[a, self.NEG[b]])

    def neg(self, a: int) -> int:
        return int(self.NEG[a])

    def mul(self, a: int, b: int) -> int:
        return int(self.MUL[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in " + repr(self))
        return int(self.INV[a])

    def pow_(self, a: int, e: int) -> int:
        if a == 0:
            if e > 0:
                return 0
            if e == 0:
                return 1
            raise ZeroDivisionError("0 to a negative power")
        e %= self.order - 1 if self.order > 2 else 1
        if self.order == 2:
            return a
        return int(self._EXP[(int(self._LOG[a]) * e) % (self.order - 1)])

    def frob(self, a: int) -> int:
        return int(self.FROB[a])

    def proot(self, a: int) -> int:
        # exact p-th root; F_{p^f} is perfect
        return int(self.PROOT[a])

    def trace_code(self, a: int) -> int:
        return int(self.TRACE[a])

    def as_solve_code(self, a: int) -> int | None:
        x = int(self._AS[a])
        return None if x < 0 else x

    def trace_one_code(self) -> int:
        # smallest code with trace 1; canonical cohomology generator
        return int(np.argmax(self.TRACE == 1))

    def embed_int(self, c: int) -> int:
        return c % self.p

    # -- element factories ----------------------------------------------------

    def el(self, code: int) -> "GFElement":
        return GFElement(self, code)

    @property
    def zero(self) -> "GFElement":
        return GFElement(self, 0)

    @property
    def one(self) -> "GFElement":
        return GFElement(self, 1)

    @property
    def gen(self) -> "GFElement":
        if self.f == 1:
            raise DomainError("prime field has no w generator")
        return GFElement(self, self.p)

    def __iter__(self):
        return (GFElement(self, c) for c in range(self.order))

    def parse_code(self, text: str) -> int:
        """Inverse of render_code; accepts 'd', 'w', 'w^j', 'd*w^j' terms."""
        text = text.strip()
        if not text:
            raise ParseError("empty field element")
        code = 0
        for term in text.split("+"):
            m = re.fullmatch(r"(\d+)|(?:(\d+)\*)?w(?:\^(\d+))?", term.strip())
            if not m:
                raise ParseError(f"bad field element term {term.strip()!r}")
            if m.group(1) is not None:
                d, j = int(m.group(1)), 0
            else:
                d = int(m.group(2)) if m.group(2) is not None else 1
                j = int(m.group(3)) if m.group(3) is not None else 1
            if j >= self.f:
                raise ParseError(f"w^{j} outside F({self.p}^{self.f})")
            code = self.add(code, (d % self.p) * self.p**j)
        return code

    def render_code(self, code: int) -> str:
        if self.f == 1:
            return str(code)
        terms = []
        for j in range(self.f - 1, -1, -1):
            d = (code // self.p**j) % self.p
            if not d:
                continue
            if j == 0:
                terms.append(str(d))
            else:
                v = "w" if j == 1 else f"w^{j}"
                terms.append(v if d == 1 else f"{d}*{v}")
        return "+".join(terms) if terms else "0"

    def __repr__(self):
        if self.f == 1:
            return f"F({self.p})"
        return f"F({self.p}^{self.f})"


class GFElement:
    __slots__ = ("field", "code")

    def __init__(self, field: GFField, code: int):
        self.field = field
        self.code = code

    def _coerce(self, other) -> int:
        if isinstance(other, GFElement):
            if other.field is not self.field:
                raise DomainError("mixed-field arithmetic")
            return other.code
        if isinstance(other, int):
            return self.field.embed_int(other)
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.add(self.code, c))

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.sub(self.code, c))

    def __rsub__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.sub(c, self.code))

    def __mul__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.mul(self.code, c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.mul(self.code, self.field.inv(c)))

    def __rtruediv__(self, other):
        c = self._coerce(other)
        return c if c is NotImplemented else GFElement(self.field, self.field.mul(c, self.field.inv(self.code)))

    def __neg__(self):
        return GFElement(self.field, self.field.neg(self.code))

    def __pow__(self, e: int):
        return GFElement(self.field, self.field.pow_(self.code, e))

    def __eq__(self, other):
        if isinstance(other, GFElement):
            return self.field is other.field and self.code == other.code
        if isinstance(other, int):
            return self.code == self.field.embed_int(other)
        return NotImplemented

    def __hash__(self):
        return hash((id(self.field), self.code))

    def __bool__(self):
        return self.code != 0

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple((self.code // self.field.p**j) % self.field.p for j in range(self.field.f))

    def __repr__(self):
        return self.field.render_code(self.code)


def gf_make(p: int, f: int, modulus: tuple[int, ...] | None = None) -> GFField:
    """Construct (or fetch the interned) F_{p^f}; default modulus is the
    smallest integer-encoded monic irreducible, so serialized data is stable."""
    if not _is_prime(p):
        raise NotPrime(f"p={p} is not prime")
    if p > _MAX_P:
        raise DomainError(f"p={p} exceeds desk scale (p <= {_MAX_P})")
    if not 1 <= f <= _MAX_F:
        raise DomainError(f"f={f} outside supported range 1..{_MAX_F}")
    if modulus is None:
        modulus = _default_modulus(p, f)
    else:
        modulus = tuple(c % p for c in modulus)
        if len(modulus) != f + 1 or modulus[-1] != 1:
            raise ReducibleModulus("modulus must be monic of degree f")
        if not _is_irreducible(modulus, p):
            raise ReducibleModulus(f"modulus {modulus} is reducible over Z/{p}")
    key = (p, f, modulus)
    if key not in _FIELDS:
        _FIELDS[key] = GFField(p, f, modulus)
    return _FIELDS[key]


def frobenius(a: GFElement) -> GFElement:
    """a^p, the absolute Frobenius; bijective."""
    return GFElement(a.field, a.field.frob(a.code))


def trace(a: GFElement) -> int:
    """Tr_{F_{p^f}/F_p}(a) as an integer in 0..p-1."""
    return a.field.trace_code(a.code)


def artin_schreier_solve(a: GFElement) -> GFElement | None:
    """Smallest-code x with x^p - x = a, or None (exists iff trace(a) = 0)."""
    x = a.field.as_solve_code(a.code)
    return None if x is None else GFElement(a.field, x)
