"""Differential q-forms over tower fields in the dlog basis.

A q-form is stored as a map from strictly increasing q-subsets S of the
variable indices to tower-element coefficients of dlog t_{s1} ^ ... ^
dlog t_{sq}.  The dlog basis keeps the three structure maps monomial
diagonal: d acts by the exponents mod p, the Cartier operator divides
all-p-divisible exponents by p and takes the p-th root of the scalar, and
residue extraction reads the origin coefficient.  Conversion from the dt
basis is exact because dt_i = t_i dlog t_i.

delta_top normalization: delta(dlog t_1 ^ ... ^ dlog t_n) = Tr(1), where Tr
is the absolute trace of the coefficient field.  The decomposition
omega = (1-C)theta1 + c.Omega_log fixes only Tr(c) canonically; theta1 and
c themselves depend on the stopping point of the Cartier iteration (C has a
kernel on scalars), so downstream code must consume Tr(c) only.
"""

from __future__ import annotations

from .errors import DegreeMismatch, NonConvergence, SpecMismatch, WindowTooSmall
from .gf import GFElement
from .tower import (
    TowerElement,
    TowerSpec,
    agree_on_common,
    element_from_json,
    element_to_json,
    inv,
    mul,
    parse_field_spec,
)

__all__ = [
    "QForm",
    "form_make",
    "zero_form",
    "top_log_form",
    "dlog_form",
    "d_form",
    "wedge",
    "ext_d",
    "cartier",
    "cartier_decompose",
    "delta_top",
    "is_logarithmic",
    "forms_agree",
    "form_to_json",
    "form_from_json",
]


class QForm:
    __slots__ = ("spec", "q", "coeffs")

    def __init__(self, spec: TowerSpec, q: int, coeffs: dict):
        # trusted constructor; form_make validates
        self.spec = spec
        self.q = q
        self.coeffs = coeffs

    def coeff(self, subset) -> TowerElement:
        return self.coeffs.get(tuple(subset), self.spec.zero())

    def is_zero_within_window(self) -> bool:
        return all(f.is_zero_within_window() for f in self.coeffs.values())

    def __add__(self, other):
        if not isinstance(other, QForm):
            return NotImplemented
        if other.spec != self.spec or other.q != self.q:
            raise SpecMismatch("form addition needs matching spec and degree")
        out = dict(self.coeffs)
        for s, f in other.coeffs.items():
            out[s] = out[s] + f if s in out else f
        return QForm(self.spec, self.q, _norm(out))

    def __sub__(self, other):
        if not isinstance(other, QForm):
            return NotImplemented
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, x) -> "QForm":
        """Multiply every coefficient by a scalar or tower element."""
        if isinstance(x, (int, GFElement)):
            return QForm(self.spec, self.q, _norm({s: f * x for s, f in self.coeffs.items()}))
        if isinstance(x, TowerElement):
            return QForm(self.spec, self.q, _norm({s: mul(f, x) for s, f in self.coeffs.items()}))
        raise SpecMismatch(f"cannot scale a form by {type(x).__name__}")

    def __eq__(self, other):
        if not isinstance(other, QForm):
            return NotImplemented
        return self.spec == other.spec and self.q == other.q and self.coeffs == other.coeffs

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        if not self.coeffs:
            return "0"
        names = self.spec.var_names
        parts = []
        for s in sorted(self.coeffs):
            basis = "^".join(f"dlog {names[i]}" for i in s) or "1"
            parts.append(f"({self.coeffs[s]!r})*{basis}" if s else f"({self.coeffs[s]!r})")
        return " + ".join(parts)


def _norm(coeffs: dict) -> dict:
    # keep windowed zeros (they carry knowledge limits); drop exact zeros
    return {s: f for s, f in coeffs.items() if f.coeffs or not f.exact}


def form_make(spec: TowerSpec, q: int, coeffs: dict | None = None) -> QForm:
    if not 0 <= q <= spec.n:
        raise DegreeMismatch(f"degree {q} outside 0..{spec.n}")
    out = {}
    for s, f in (coeffs or {}).items():
        s = tuple(s)
        if len(s) != q or list(s) != sorted(set(s)) or not all(0 <= i < spec.n for i in s):
            raise DegreeMismatch(f"subset {s} is not an increasing {q}-subset of the variables")
        if f.spec != spec:
            raise SpecMismatch("coefficient from a different tower")
        out[s] = f
    return QForm(spec, q, _norm(out))


def zero_form(spec: TowerSpec, q: int) -> QForm:
    return form_make(spec, q)


def top_log_form(spec: TowerSpec) -> QForm:
    """dlog t_1 ^ ... ^ dlog t_n."""
    return QForm(spec, spec.n, {tuple(range(spec.n)): spec.one()})


def _merge_sign(s: tuple, t: tuple):
    """Sorted merge of disjoint index tuples with permutation parity."""
    inv_count = 0
    for b in t:
        inv_count += sum(1 for a in s if a > b)
    return tuple(sorted(s + t)), (-1) ** inv_count


def wedge(w: QForm, e: QForm) -> QForm:
    if w.spec != e.spec:
        raise SpecMismatch("wedge of forms over different towers")
    spec = w.spec
    out: dict = {}
    for s, f in w.coeffs.items():
        for t, g in e.coeffs.items():
            if set(s) & set(t):
                continue
            st, sign = _merge_sign(s, t)
            term = mul(f, g)
            if sign < 0:
                term = -term
            out[st] = out[st] + term if st in out else term
    return QForm(spec, w.q + e.q, _norm(out))


def _partial(f: TowerElement, i: int) -> TowerElement:
    """The dlog-basis partial: sum_E (e_i mod p) c_E T^E."""
    F = f.spec.base
    p = F.p
    coeffs = {}
    for e, c in f.coeffs.items():
        m = e[i] % p
        if m:
            coeffs[e] = F.mul(F.embed_int(m), c)
    return TowerElement(f.spec, coeffs, f.window)


def ext_d(w: QForm) -> QForm:
    spec = w.spec
    out: dict = {}
    for s, f in w.coeffs.items():
        sset = set(s)
        for i in range(spec.n):
            if i in sset:
                continue
            df = _partial(f, i)
            if not df.coeffs and df.exact:
                continue
            st, sign = _merge_sign(s, (i,))
            term = -df if sign < 0 else df
            out[st] = out[st] + term if st in out else term
    return QForm(spec, w.q + 1, _norm(out))


def d_form(x: TowerElement) -> QForm:
    """dx as a 1-form on the dlog basis: component i is t_i dx/dt_i."""
    spec = x.spec
    return QForm(spec, 1, _norm({(i,): _partial(x, i) for i in range(spec.n)}))


def dlog_form(x: TowerElement) -> QForm:
    """dlog x = dx/x as a 1-form; x must have a certified leading term."""
    spec = x.spec
    ix = inv(x)
    dx = d_form(x)
    return QForm(spec, 1, _norm({k: mul(c, ix) for k, c in dx.coeffs.items()}))


def _cartier_coeff(f: TowerElement) -> TowerElement:
    spec = f.spec
    F = spec.base
    p = F.p
    coeffs = {}
    for e, c in f.coeffs.items():
        if all(ei % p == 0 for ei in e):
            coeffs[tuple(ei // p for ei in e)] = F.proot(c)
    window = []
    for lo, hi in f.window:
        nlo = -((-lo) // p)  # ceil(lo/p)
        nhi = None if hi is None else -((-hi) // p)
        if nhi is not None and nhi <= nlo:
            raise WindowTooSmall("Cartier image window is empty at this precision")
        window.append((nlo, nhi))
    out = TowerElement(spec, coeffs, tuple(window))
    if out.exact and coeffs:
        out = TowerElement(spec, coeffs, tuple((min(e[i] for e in coeffs), None) for i in range(spec.n)))
    return out


def cartier(w: QForm) -> QForm:
    return QForm(w.spec, w.q, _norm({s: _cartier_coeff(f) for s, f in w.coeffs.items()}))


def _origin_only(w: QForm) -> bool:
    origin = (0,) * w.spec.n
    return all(set(f.coeffs) <= {origin} for f in w.coeffs.values())


def cartier_decompose(w: QForm) -> tuple[QForm, GFElement]:
    """Split a top form as w = (1-C)theta1 + c.dlog t_1^...^dlog t_n.

    Iterates C until only the origin monomial survives (the non-constant
    all-p-divisible exponents strictly shrink, so this is fast), reads off
    the surviving scalar c_hat, and corrects for the k-fold p-th root the
    iteration applied: c = c_hat^(p^K).  theta1 is the geometric sum
    sum_{k<K} C^k(w - c.Omega_log).  Only Tr(c) is canonical.
    """
    spec = w.spec
    F = spec.base
    if w.q != spec.n:
        raise DegreeMismatch(f"cartier_decompose needs top degree {spec.n}, got {w.q}")
    top = tuple(range(spec.n))
    origin = (0,) * spec.n

    cap = F.f + 64
    it = w
    k = 0
    while not _origin_only(it):
        it = cartier(it)
        k += 1
        if k > cap:
            raise NonConvergence("Cartier iteration did not stabilize within the window")
    stab = it.coeff(top)
    if not stab.known(origin):
        raise NonConvergence("residue constant is outside the window")
    c = stab.coeffs.get(origin, 0)
    for _ in range(k % F.f):  # undo the k-fold p-th root; frob^f = id
        c = F.frob(c)
    eta = w - top_log_form(spec).scale(F.el(c))
    theta1 = zero_form(spec, spec.n)
    term = eta
    for j in range(k):
        theta1 = theta1 + term
        if j + 1 < k:
            term = cartier(term)
    return theta1, F.el(c)


def delta_top(w: QForm) -> int:
    """Residue-trace of a top form into Z/p; kills exact forms and the
    image of 1-C."""
    _, c = cartier_decompose(w)
    return c.field.trace_code(c.code)


def is_logarithmic(w: QForm) -> bool:
    """dw = 0 and C(w) = w, both at window precision."""
    if not ext_d(w).is_zero_within_window():
        return False
    cw = cartier(w)
    return forms_agree(cw, w)


def forms_agree(a: QForm, b: QForm) -> bool:
    """Coefficients known to both forms coincide."""
    if a.spec != b.spec or a.q != b.q:
        return False
    for s in set(a.coeffs) | set(b.coeffs):
        if not agree_on_common(a.coeff(s), b.coeff(s)):
            return False
    return True


def form_to_json(w: QForm) -> dict:
    return {
        "spec": repr(w.spec),
        "q": w.q,
        "terms": [[[i + 1 for i in s], element_to_json(f)] for s, f in sorted(w.coeffs.items())],
    }


def form_from_json(obj: dict) -> QForm:
    spec = parse_field_spec(obj["spec"])
    coeffs = {}
    for s, fj in obj["terms"]:
        coeffs[tuple(i - 1 for i in s)] = element_from_json(fj)
    return form_make(spec, int(obj["q"]), coeffs)
