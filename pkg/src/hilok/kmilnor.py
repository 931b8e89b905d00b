"""Milnor K-groups mod p of tower fields at finite filtration level.

A class is a formal integer combination of symbols {x_1,...,x_q}, always
taken modulo p.K_q + U_N K_q where N is the level cap (the outer precision
by default).  graded_decompose rewrites every symbol into the standard
graded pieces:

  gr_0        K_q(k)/p (+) K_{q-1}(k)/p        residue symbols, pi split off
  gr_i, p∤i   Omega_k^{q-1}                    via rho_i
  gr_i, p|i   Omega_k^{q-1} (+) Omega_k^{q-2}  modulo closed forms each

The rewriting engine uses three exact identities, each a direct Steinberg
consequence:

  {x, x}     = {x, -1}
  {1+A, pi-free spectators, pi} = -(1/i).{1+A, spectators, -x}  (A = x.pi^i, p∤i)
  {1+A, 1+B} = {-A, 1+E} + {1+B, 1+E}   with E = AB(1+A)^{-1}

(the last from {z, 1-z} = 0 at z = -A(1+B), since 1-z = (1+A)(1+E); the
companion term {-A, 1+A} vanishes by Steinberg).  The pair identity sends
total filtration level (i, j) to (i, i+j) and (j, i+j), strictly
increasing, so iteration terminates at the level cap.  Symbols containing a
1-unit of level >= N lie in U_N and are dropped; that is the declared
quotient, not an approximation error.

The graded slots are raw leading data, per symbol.  They cannot decide
whether a class is zero: when level-i forms from different symbols cancel
only in the sum, the symbols combine into U_{i+1} with correction terms the
per-symbol slots never see ({1+au^i, y} + {1+bu^i, y} = {(1+au^i)(1+bu^i), y}
carries a level-2i remainder).  is_zero therefore uses the differential
symbol instead: dlog{x_1,...,x_q} = dlog x_1 ^ ... ^ dlog x_q.  For fields
of characteristic p with finite p-degree (these towers: {t_1..t_n} is a
p-basis) the differential symbol embeds K_q/p into Omega^q
(Bloch-Gabber-Kato), it kills every defining relation of Milnor K on the
nose, and U_N corresponds exactly to the forms with all dlog-basis
coefficients of outer valuation >= N.  So the class is zero mod (p, U_N)
iff its certificate form vanishes below outer valuation N, a raw
coefficient test with no quotient bookkeeping; the per-level kernels of
that test reproduce the graded model (p∤i: forms themselves; p|i: closed
forms) slice by slice.

Zero testing of gr0 parts recurses through the residue tower; at the
finite field K_q/p = 0 for q >= 1 and K_0/p = Z/p.
"""

from __future__ import annotations

from functools import reduce

from . import forms
from .errors import (
    DomainError,
    InternalInconsistency,
    LevelCapReached,
    PrecisionExhausted,
    SpecMismatch,
    ZeroEntry,
)
from .tower import (
    TowerElement,
    TowerSpec,
    _unknown_outer_floor,
    inv,
    mul,
    parse_element,
    render_element,
    residue_reduce,
    unit_decompose,
)

__all__ = [
    "MilnorSymbol",
    "KClass",
    "GradedDecomposition",
    "symbol",
    "u_level",
    "graded_decompose",
    "rho",
    "is_zero",
    "lift_to",
    "kclass_to_json",
    "kclass_from_json",
]


def lift_to(x: TowerElement, spec: TowerSpec) -> TowerElement:
    """The canonical inclusion of the residue tower: append exponent 0 in
    the new outermost variable."""
    if x.spec != spec.residue_spec():
        raise SpecMismatch("element does not live in the residue tower of the target")
    coeffs = {e + (0,): c for e, c in x.coeffs.items()}
    window = x.window + ((0, None),)
    return TowerElement(spec, coeffs, window)


class MilnorSymbol:
    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = tuple(entries)
        for x in entries:
            if x.exact and not x.coeffs:
                raise ZeroEntry("symbol entry is zero")
        self.entries = entries

    @property
    def q(self) -> int:
        return len(self.entries)

    def __repr__(self):
        return "{" + ", ".join(render_element(x) for x in self.entries) + "}"


class KClass:
    """Formal combination of symbols, modulo p and U_N."""

    __slots__ = ("spec", "q", "terms", "level_cap", "_graded")

    def __init__(self, spec: TowerSpec, q: int, terms, level_cap: int | None = None):
        self.spec = spec
        self.q = q
        self.terms = []
        p = spec.p
        for m, sym in terms:
            m %= p
            if m == 0:
                continue
            if sym.q != q:
                raise SpecMismatch(f"symbol of degree {sym.q} in a degree-{q} class")
            self.terms.append((m, sym))
        if level_cap is None:
            level_cap = spec.prec[-1] if spec.n else 0
        self.level_cap = level_cap
        self._graded = None

    def __add__(self, other):
        if not isinstance(other, KClass):
            return NotImplemented
        if other.spec != self.spec or other.q != self.q:
            raise SpecMismatch("cannot add classes of different shape")
        cap = min(self.level_cap, other.level_cap)
        return KClass(self.spec, self.q, self.terms + other.terms, cap)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, m: int) -> "KClass":
        return KClass(self.spec, self.q, [(m * c, s) for c, s in self.terms], self.level_cap)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(("" if m == 1 else f"{m}*") + repr(s) for m, s in self.terms)


def symbol(xs, level_cap: int | None = None) -> KClass:
    xs = list(xs)
    if not xs:
        raise ZeroEntry("empty symbol; degree-0 classes arise only internally")
    spec = xs[0].spec
    return KClass(spec, len(xs), [(1, MilnorSymbol(xs))], level_cap)


class GradedDecomposition:
    """gr0: pair of residue KClasses (degrees q, q-1); gr: map from level i
    to [QForm degree q-1, QForm degree q-2] over the residue tower (None
    where the degree is negative)."""

    __slots__ = ("spec", "q", "level_cap", "gr0", "gr")

    def __init__(self, spec, q, level_cap, gr0, gr):
        self.spec = spec
        self.q = q
        self.level_cap = level_cap
        self.gr0 = gr0
        self.gr = gr

    def gr_at(self, i: int):
        rspec = self.spec.residue_spec()
        blank = [
            forms.zero_form(rspec, self.q - 1) if 0 <= self.q - 1 <= rspec.n else None,
            forms.zero_form(rspec, self.q - 2) if 0 <= self.q - 2 <= rspec.n else None,
        ]
        return self.gr.get(i, blank)


# -- the rewriting engine --

# slot states: ("pi",) | ("raw", x) | ("unit", u) | ("lift", u_tilde, u_bar) | ("w", w)


def _certified_level(w: TowerElement, cap: int):
    """Level of a constructed 1-unit: outer valuation of w - 1, certified
    against the outer window only.  None means droppable: level >= cap, or
    w = 1 exactly (the symbol dies either way).

    Inner-unknown strips are ignored on purpose.  Every w reaching this
    point has residue exactly 1 by construction (a unit divided by the lift
    of its residue, or 1 + E from the pair identity), so mass hidden at
    inner exponents beyond the window only ever contributes gr-form
    coefficients that are themselves beyond the residue tower's window;
    the within-window zero tests over k quotient those out regardless.
    The decomposition is exact modulo (p, U_N, declared windows).
    """
    d = w - w.spec.one()
    if d.coeffs:
        v = min(e[-1] for e in d.coeffs)  # < outer hi: _mk drops unknown-region coeffs
        return None if v >= cap else v
    if d.exact:
        return None
    hi_n = d.window[-1][1]
    if hi_n is None or hi_n >= cap:
        return None
    raise PrecisionExhausted("1-unit level is beyond the outer window but below the cap")


def _refloor_outer(x: TowerElement, lo: int) -> TowerElement:
    """Raise the outer window floor of a construction-certified element.

    Used where the algebra guarantees no mass below the floor (modulo inner
    windows) but rectangle bookkeeping cannot see it: the unit part of -A in
    the pair identity, and 1-unit tails shifted down by their level.
    """
    assert all(e[-1] >= lo for e in x.coeffs)
    cur_lo, hi = x.window[-1]
    if cur_lo >= lo:
        return x
    return TowerElement(x.spec, x.coeffs, x.window[:-1] + ((lo, hi),))


def _inv_one_unit(w: TowerElement, lvl: int, cap: int) -> TowerElement:
    """(1+z)^{-1} as the geometric series truncated beyond level cap.

    The general inverter cannot certify rectangular windows for windowed
    tails with inner poles, which engine-built 1-units routinely have; this
    truncation is exact modulo pi^{> cap}, and everything the engine reads
    below the cap is unaffected (slices at or above it are dropped by the
    level quotient anyway).
    """
    one = w.spec.one()
    z = w - one
    out = one
    for _ in range(cap // lvl + 1):
        out = one - mul(z, out)
    return out


def _decompose(kclass: KClass) -> GradedDecomposition:
    spec = kclass.spec
    if spec.n == 0:
        raise DomainError("graded decomposition needs at least one variable")
    p = spec.p
    q = kclass.q
    N = kclass.level_cap
    rspec = spec.residue_spec()
    pi = spec.pi()
    one = spec.one()

    gr0_first: list = []
    gr0_second: list = []
    gr: dict[int, list] = {}

    def gr_blank():
        return [
            forms.zero_form(rspec, q - 1) if 0 <= q - 1 <= rspec.n else None,
            forms.zero_form(rspec, q - 2) if 0 <= q - 2 <= rspec.n else None,
        ]

    def add_form(i, slot, contrib):
        if i >= N:
            return
        if i not in gr:
            gr[i] = gr_blank()
        if gr[i][slot] is None:
            return  # degree out of range: the group is zero
        gr[i][slot] = gr[i][slot] + contrib

    def emit_rho(m, i, x_bar, spectators, has_pi):
        """{1 + lift(x_bar).pi^i, spectators..., pi?} with x_bar in k*."""
        if has_pi and i % p != 0:
            # {1+A, S.., pi} = -(1/i).{1+A, S.., -x}: fold pi into the form slot
            m = (-m * pow(i, -1, p)) % p
            spectators = spectators + [-x_bar]
            has_pi = False
        factors = [forms.dlog_form(s) for s in spectators]
        w = reduce(forms.wedge, factors, forms.form_make(rspec, 0, {(): rspec.one()}))
        contrib = w.scale(x_bar).scale(m)
        add_form(i, 1 if has_pi else 0, contrib)

    work: list[tuple[int, list]] = []
    for m, sym in kclass.terms:
        work.append((m, [("raw", x) for x in sym.entries]))

    guard = 0
    while work:
        guard += 1
        if guard > 200000:  # pragma: no cover
            raise InternalInconsistency("symbol rewriting did not terminate")
        m, slots = work.pop()
        m %= p
        if m == 0:
            continue

        # 1. outer-decompose raw entries
        j = next((k for k, s in enumerate(slots) if s[0] == "raw"), None)
        if j is not None:
            x = slots[j][1]
            a, u = unit_decompose(x)
            if a % p:
                t = list(slots)
                t[j] = ("pi",)
                work.append((m * a, t))
            if not (u.exact and u.coeffs == {(0,) * spec.n: 1}):  # drop unit 1 slots
                t = list(slots)
                t[j] = ("unit", u)
                work.append((m, t))
            continue

        # 2. reduce multiple pi slots: {pi, pi} = {pi, -1}
        pis = [k for k, s in enumerate(slots) if s[0] == "pi"]
        if len(pis) >= 2:
            j, k = pis[0], pis[1]
            sign = -1 if (k - j - 1) % 2 else 1  # slide slot k next to slot j
            t = list(slots)
            t[k] = ("unit", -one)
            work.append((m * sign, t))
            continue
        if pis and pis[0] != len(slots) - 1:  # move the pi slot last
            j = pis[0]
            sign = -1 if (len(slots) - 1 - j) % 2 else 1
            t = slots[:j] + slots[j + 1 :] + [slots[j]]
            work.append((m * sign, t))
            continue

        # 3. split units into lifted residue times 1-unit; the lift's
        # inverse is the lift of the residue-tower inverse
        j = next((k for k, s in enumerate(slots) if s[0] == "unit"), None)
        if j is not None:
            u = slots[j][1]
            u_bar = residue_reduce(u)
            u_tilde = lift_to(u_bar, spec)
            w = mul(u, lift_to(inv(u_bar), spec))
            t = list(slots)
            t[j] = ("lift", u_tilde, u_bar)
            work.append((m, t))
            lvl = _certified_level(w, N)
            if lvl is not None:
                t = list(slots)
                t[j] = ("w", w)
                work.append((m, t))
            continue

        # drop terms with a 1-unit of level >= N (the declared quotient)
        # or an exact 1 entry (the symbol is zero)
        ws = []
        drop = False
        for k, s in enumerate(slots):
            if s[0] != "w":
                continue
            if _certified_level(s[1], N) is None:
                drop = True
                break
            ws.append(k)
        if drop:
            continue

        # 4. two 1-units: {1+A, 1+B} = {-A, 1+E} + {1+B, 1+E}
        # -A is split as pi^i * unit inline: its level i is already
        # certified, and the exact outer-valuation check would balk at the
        # inner-window pessimism of constructed elements.
        if len(ws) >= 2:
            j, k = ws[0], ws[1]
            A = slots[j][1] - one
            B = slots[k][1] - one
            i = _certified_level(slots[j][1], N)  # not None: the scan above kept this slot
            E = mul(mul(A, B), _inv_one_unit(slots[j][1], i, N))
            oneE = one + E
            if i % p:
                t = list(slots)
                t[j] = ("pi",)
                t[k] = ("w", oneE)
                work.append((m * i, t))
            uA = _refloor_outer((-A).shift((0,) * (spec.n - 1) + (-i,)), 0)
            t = list(slots)
            t[j] = ("unit", uA)
            t[k] = ("w", oneE)
            work.append((m, t))
            t = list(slots)
            t[j] = ("w", slots[k][1])
            t[k] = ("w", oneE)
            work.append((m, t))
            continue

        # 5. single 1-unit: peel by levels into rho shapes
        if len(ws) == 1:
            j = ws[0]
            w = slots[j][1]
            sign = -1 if j % 2 else 1  # move the 1-unit to the front
            spect = [s for k, s in enumerate(slots) if k != j]
            has_pi = bool(spect) and spect[-1][0] == "pi"
            if has_pi:
                spect = spect[:-1]
            if any(s[0] == "pi" for s in spect):  # pragma: no cover
                raise InternalInconsistency("interior pi slot survived normalization")
            spect_bars = [s[2] for s in spect]
            mm = (m * sign) % p
            prev = -1
            while True:
                lvl = _certified_level(w, N)
                if lvl is None:
                    break
                if lvl <= prev:  # pragma: no cover
                    raise InternalInconsistency("level peeling failed to make progress")
                prev = lvl
                x = _refloor_outer(w - one, lvl).shift((0,) * (spec.n - 1) + (-lvl,))
                x_bar = residue_reduce(x)
                emit_rho(mm, lvl, x_bar, spect_bars, has_pi)
                f = one + lift_to(x_bar, spec).shift((0,) * (spec.n - 1) + (lvl,))
                w = mul(w, _inv_one_unit(f, lvl, N))
            continue

        # 6. gr0: all slots lifted, at most one trailing pi
        has_pi = bool(slots) and slots[-1][0] == "pi"
        body = slots[:-1] if has_pi else slots
        if any(s[0] != "lift" for s in body):  # pragma: no cover
            raise InternalInconsistency("unnormalized slot reached gr0 emission")
        bars = [s[2] for s in body]
        if has_pi:
            gr0_second.append((m, MilnorSymbol(bars)))
        else:
            gr0_first.append((m, MilnorSymbol(bars)))

    gr0 = (
        KClass(rspec, q, gr0_first) if q >= 0 else None,
        KClass(rspec, q - 1, gr0_second) if q >= 1 else None,
    )
    return GradedDecomposition(spec, q, N, gr0, gr)


def graded_decompose(kclass: KClass) -> GradedDecomposition:
    if kclass._graded is None:
        kclass._graded = _decompose(kclass)
    return kclass._graded


def _dlog_certificate(kclass: KClass):
    """Sum of m.dlog x_1 ^ ... ^ dlog x_q over the terms, in Omega^q."""
    total = forms.zero_form(kclass.spec, kclass.q)
    for m, sym in kclass.terms:
        w = forms.form_make(kclass.spec, 0, {(): kclass.spec.one()})
        for x in sym.entries:
            w = forms.wedge(w, forms.dlog_form(x))
        total = total + w.scale(m)
    return total


def _kclass_is_zero(kclass: KClass) -> bool:
    spec = kclass.spec
    if kclass.q == 0:
        # K_0/p = Z/p on the empty symbol
        return sum(m for m, _ in kclass.terms) % spec.p == 0
    if kclass.q > spec.n:
        # Omega^q = 0 above the p-degree, so K_q/p vanishes; covers the
        # finite-field bottom (n = 0, q >= 1) of the gr0 recursion
        return True
    if not kclass.terms:
        return True
    N = kclass.level_cap
    cert = _dlog_certificate(kclass)
    for c in cert.coeffs.values():
        if any(e[-1] < N for e in c.coeffs):
            return False
        hi = c.window[-1][1]
        if hi is not None and hi < N:
            raise PrecisionExhausted("dlog certificate window ends below the level cap")
    return True


def is_zero(kclass: KClass) -> bool:
    """True iff the class is 0 modulo p.K_q + U_N K_q (and the declared
    coefficient windows), decided by the differential symbol: the dlog
    certificate form vanishes below outer valuation N iff the class does.
    Every dlog factor of a symbol has coefficients of outer valuation >= 0,
    so the test range is the slices 0..N-1."""
    return _kclass_is_zero(kclass)


def u_level(kclass: KClass) -> int:
    """Largest i with the class exhibited inside U_i: the level of the first
    nonzero raw graded component (0 if gr0 is nonzero, level_cap if all
    vanish, reported as ">= cap").

    Reads the decomposition before the case-(3) quotient, so a filtration
    generator like {1+pi^2, y} reports its shape level even when p | 2 makes
    the class itself zero; is_zero is the quotient-correct test.
    """
    if kclass.q == 0 or kclass.spec.n == 0:
        return 0 if not _kclass_is_zero(kclass) else kclass.level_cap
    g = graded_decompose(kclass)
    if not _kclass_is_zero(g.gr0[0]) or (g.gr0[1] is not None and not _kclass_is_zero(g.gr0[1])):
        return 0
    for i in sorted(g.gr):
        f1, f2 = g.gr[i]
        if not (f1 is None or f1.is_zero_within_window()):
            return i
        if not (f2 is None or f2.is_zero_within_window()):
            return i
    return kclass.level_cap


def rho(i: int, q: int, x, y=None, *, spec: TowerSpec, level_cap: int | None = None) -> KClass:
    """rho_i^q: the symbol {1 + lift(c).pi^i, lift(y_1), ..., lift(y_{q-1})}
    for x = (c, [y_1..y_{q-1}]) a decomposable form over the residue tower,
    plus {1 + lift(c').pi^i, lifts.., pi} when y = (c', [z_1..z_{q-2}]) is
    given."""
    if spec.n == 0:
        raise DomainError("rho needs a tower with at least one variable")
    if i < 1:
        raise DomainError("rho is defined for levels i >= 1")
    cap = level_cap if level_cap is not None else spec.prec[-1]
    if i >= cap:
        raise LevelCapReached(f"rho at level {i} lands inside the discarded tail U_{cap}")
    rspec = spec.residue_spec()
    pi = spec.pi()
    terms = []

    def build(data, with_pi):
        c, ys = data
        if isinstance(c, int):
            c = rspec.const(c)
        if c.exact and not c.coeffs:
            raise ZeroEntry("zero coefficient in a rho source")
        entries = [spec.one() + lift_to(c, spec).shift((0,) * (spec.n - 1) + (i,))]
        for yk in ys:
            entries.append(lift_to(yk, spec))
        if with_pi:
            entries.append(pi)
        if len(entries) != q:
            raise SpecMismatch(f"rho source has degree {len(entries)}, expected {q}")
        terms.append((1, MilnorSymbol(entries)))

    build(x, False)
    if y is not None:
        build(y, True)
    return KClass(spec, q, terms, level_cap)


# -- serialization --


def kclass_to_json(kclass: KClass) -> dict:
    return {
        "field": repr(kclass.spec),
        "q": kclass.q,
        "terms": [
            {"coeff": m, "entries": [render_element(x) for x in s.entries]}
            for m, s in kclass.terms
        ],
        "level_cap": kclass.level_cap,
    }


def kclass_from_json(obj: dict) -> KClass:
    from .tower import parse_field_spec

    spec = parse_field_spec(obj["field"])
    terms = []
    for t in obj["terms"]:
        entries = [parse_element(spec, s) for s in t["entries"]]
        terms.append((int(t["coeff"]), MilnorSymbol(entries)))
    return KClass(spec, int(obj["q"]), terms, obj.get("level_cap"))
