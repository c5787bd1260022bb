"""Higher-dimensional field towers and exact truncated series arithmetic.

A tower descriptor is built from four constructors: the finite base fields,
the p-adic base, the Laurent step T -> T((var)), and the curly step
T -> T{{var}} of doubly-infinite series with bounded-below coefficient
valuations and coefficients shrinking as the exponent goes to -infinity.
The curly step requires a complete discretely-valued inner field, so it
never sits directly on a finite base.

Elements are nested sparse coefficient maps with an explicit precision
contract per level:

* Laurent level: all coefficients with exponent < hi are stored (absent
  means exactly zero); exponents >= hi are unknown unless `exact` is set.
* Curly level: coefficients are stored for exponents in [lo, hi); below lo
  the coefficients vanish at the working inner precision; above hi they are
  unknown unless `exact` is set.
* Base level: an FqElem (exact) or a PadicNum with its own precision.

`exact` means the stored finite map is the whole element.  Exactness
survives ring operations but is dropped by genuinely infinite processes
(inversion of non-monomials, Teichmuller coefficients stay inexact inside).

The library never reports digits it cannot certify: valuation, residue and
inversion distinguish "exactly zero" (a domain error) from "zero at working
precision" (a PrecisionError).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coeffs import FqElem, FqField, PadicNum, fq_make, teichmuller
from .errors import HlfError, PrecisionError, TowerMismatchError

NONZERO = "nonzero"
ZERO_PREC = "zero_prec"
ZERO_EXACT = "zero_exact"

DEFAULT_LAURENT_N = 8
DEFAULT_CURLY_WINDOW = (-8, 8)
DEFAULT_PADIC_PREC = 8


# ---------------------------------------------------------------------------
# tower descriptors

@dataclass(frozen=True)
class BaseFq:
    field: FqField

    def __str__(self):
        return f"F_{self.field.q}"


@dataclass(frozen=True)
class BasePadic:
    p: int

    def __str__(self):
        return f"Q_{self.p}"


@dataclass(frozen=True)
class Laurent:
    inner: "TowerDesc"
    var: str

    def __post_init__(self):
        if self.var in variables(self.inner):
            raise HlfError(f"variable {self.var!r} reused in tower")

    def __str__(self):
        return f"{self.inner}(({self.var}))"


@dataclass(frozen=True)
class Curly:
    inner: "TowerDesc"
    var: str

    def __post_init__(self):
        if isinstance(self.inner, BaseFq):
            raise HlfError("curly construction needs a complete discrete valuation field")
        if self.var in variables(self.inner):
            raise HlfError(f"variable {self.var!r} reused in tower")

    def __str__(self):
        return f"{self.inner}{{{{{self.var}}}}}"


TowerDesc = BaseFq | BasePadic | Laurent | Curly


def variables(t: TowerDesc) -> tuple[str, ...]:
    if isinstance(t, (Laurent, Curly)):
        return variables(t.inner) + (t.var,)
    return ()


def cdvdim(t: TowerDesc) -> int:
    """Number of successive residue fields before the tower stops being cdv."""
    if isinstance(t, BaseFq):
        return 0
    if isinstance(t, BasePadic):
        return 1
    return 1 + cdvdim(t.inner)


def residue_tower(t: TowerDesc, i: int = 1) -> TowerDesc:
    """Descriptor of the i-th residue field."""
    if i < 0 or i > cdvdim(t):
        raise HlfError(f"residue index {i} out of range 0..{cdvdim(t)}")
    for _ in range(i):
        if isinstance(t, Laurent):
            t = t.inner
        elif isinstance(t, Curly):
            t = Laurent(residue_tower(t.inner, 1), t.var)
        elif isinstance(t, BasePadic):
            t = BaseFq(fq_make(t.p))
        else:
            raise HlfError("finite field has no residue field")
    return t


def bottom_prime(t: TowerDesc) -> int:
    """Characteristic of the last residue field."""
    while isinstance(t, (Laurent, Curly)):
        t = t.inner
    return t.p if isinstance(t, BasePadic) else t.field.p


def field_char(t: TowerDesc) -> int:
    """Characteristic of the tower field itself."""
    while isinstance(t, (Laurent, Curly)):
        t = t.inner
    return 0 if isinstance(t, BasePadic) else t.field.p


def descriptor(t: TowerDesc) -> str:
    """Canonical variable-free descriptor string."""
    if isinstance(t, BaseFq):
        return f"BaseFq({t.field.p},{t.field.k})" if t.field.k > 1 else f"BaseFq({t.field.p})"
    if isinstance(t, BasePadic):
        return f"BasePadic({t.p})"
    name = "Laurent" if isinstance(t, Laurent) else "Curly"
    return f"{name}({descriptor(t.inner)})"


def laurent_tower(base: TowerDesc, n: int, names=None) -> TowerDesc:
    """Apply n Laurent steps, innermost variable first (t1, ..., tn)."""
    offset = len(variables(base))
    t = base
    for i in range(n):
        var = names[i] if names else _auto_name(offset + i, offset + n)
        t = Laurent(t, var)
    return t


def curly_tower(base: TowerDesc, n: int, names=None) -> TowerDesc:
    offset = len(variables(base))
    t = base
    for i in range(n):
        var = names[i] if names else _auto_name(offset + i, offset + n)
        t = Curly(t, var)
    return t


def _auto_name(i, total):
    return "t" if total == 1 else f"t{i + 1}"


# ---------------------------------------------------------------------------
# precision specs: None | int M | (N, inner) | (lo, hi, inner)

def default_prec(t: TowerDesc, laurent_n=DEFAULT_LAURENT_N,
                 curly=DEFAULT_CURLY_WINDOW, padic_m=DEFAULT_PADIC_PREC):
    if isinstance(t, BaseFq):
        return None
    if isinstance(t, BasePadic):
        return padic_m
    inner = default_prec(t.inner, laurent_n, curly, padic_m)
    if isinstance(t, Laurent):
        return (laurent_n, inner)
    return (curly[0], curly[1], inner)


def _prec_parts(t, prec):
    if prec is None:
        prec = default_prec(t)
    if isinstance(t, Laurent):
        return prec[0], prec[-1]
    if isinstance(t, Curly):
        return (prec[0], prec[1]), prec[-1]
    return prec, None


# ---------------------------------------------------------------------------
# elements


class Element:
    """A field element at a fixed precision contract (see module docstring)."""

    __slots__ = ("tower", "exact", "base", "coeffs", "lo", "hi")

    def __init__(self, tower, exact, base=None, coeffs=None, lo=None, hi=None):
        self.tower = tower
        self.exact = exact
        self.base = base
        self.coeffs = coeffs
        self.lo = lo
        self.hi = hi

    def is_series(self):
        return self.coeffs is not None

    def support(self):
        return sorted(self.coeffs) if self.is_series() else None

    def __repr__(self):
        return render(self)

    def __eq__(self, other):
        if not isinstance(other, Element) or other.tower != self.tower:
            return NotImplemented if not isinstance(other, Element) else False
        if self.is_series():
            return (self.exact == other.exact and self.lo == other.lo
                    and self.hi == other.hi and self.coeffs == other.coeffs)
        return self.base == other.base

    def __add__(self, other):
        return add(self, coerce(self.tower, other))

    __radd__ = __add__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(coerce(self.tower, other)))

    def __rsub__(self, other):
        return add(neg(self), coerce(self.tower, other))

    def __mul__(self, other):
        return mul(self, coerce(self.tower, other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, inv(coerce(self.tower, other)))

    def __pow__(self, e):
        return power(self, e)


def _series(tower, exact, coeffs, lo, hi):
    """Normalise and build a series-level element."""
    clean = {}
    for k, v in coeffs.items():
        st = status(v)
        if st == ZERO_EXACT:
            continue
        clean[k] = v
    if isinstance(tower, Laurent):
        if exact:
            if clean:
                hi = max(hi, max(clean) + 1)
        else:
            clean = {k: v for k, v in clean.items() if k < hi}
        return Element(tower, exact, coeffs=clean, lo=None, hi=hi)
    # curly level
    if exact:
        if clean:
            lo = min(lo, min(clean))
            hi = max(hi, max(clean) + 1)
    else:
        clean = {k: v for k, v in clean.items() if lo <= k < hi}
    if lo >= hi:
        lo, hi = hi, hi
    return Element(tower, exact, coeffs=clean, lo=lo, hi=hi)


def coerce(tower, value, prec=None):
    """Bring ints, Fractions, FqElems, PadicNums or Elements into the tower."""
    if isinstance(value, Element):
        if value.tower != tower:
            raise TowerMismatchError(f"element of {value.tower} used in {tower}")
        return value
    if isinstance(value, int):
        return from_fraction(tower, Fraction(value), prec)
    if isinstance(value, Fraction):
        return from_fraction(tower, value, prec)
    if isinstance(value, (FqElem, PadicNum)):
        if isinstance(tower, (BaseFq, BasePadic)):
            return Element(tower, True, base=value)
        raise TowerMismatchError("bare coefficient used at a series level")
    raise HlfError(f"cannot coerce {value!r}")


def from_fraction(tower, x: Fraction, prec=None) -> Element:
    x = Fraction(x)
    if isinstance(tower, BaseFq):
        p = tower.field.p
        if x.denominator % p == 0:
            raise ZeroDivisionError(f"denominator divisible by char {p}")
        num = tower.field.elem(x.numerator % p)
        den = tower.field.elem(x.denominator % p)
        return Element(tower, True, base=num * den.inv())
    if isinstance(tower, BasePadic):
        m, _ = _prec_parts(tower, prec)
        return Element(tower, True, base=PadicNum.from_rational(x, tower.p, m))
    window, inner_prec = _prec_parts(tower, prec)
    c = from_fraction(tower.inner, x, _sub_prec(prec))
    coeffs = {} if status(c) == ZERO_EXACT else {0: c}
    if isinstance(tower, Laurent):
        return _series(tower, True, coeffs, None, window)
    return _series(tower, True, coeffs, window[0], window[1])


def _sub_prec(prec):
    if prec is None:
        return None
    return prec[-1]


def zero(tower, prec=None) -> Element:
    return from_fraction(tower, Fraction(0), prec)


def one(tower, prec=None) -> Element:
    return from_fraction(tower, Fraction(1), prec)


def zero_at_prec(tower, prec=None) -> Element:
    """The inexact zero O(...) at the given precision contract."""
    if isinstance(tower, BaseFq):
        return Element(tower, True, base=tower.field.zero())
    if isinstance(tower, BasePadic):
        m, _ = _prec_parts(tower, prec)
        return Element(tower, True, base=PadicNum.zero(tower.p, m, exact=False))
    window, _ = _prec_parts(tower, prec)
    if isinstance(tower, Laurent):
        return _series(tower, False, {}, None, window)
    return _series(tower, False, {}, window[0], window[1])


def const(tower, inner_elem: Element, window=None) -> Element:
    """Embed an element of the inner field as the exponent-0 coefficient."""
    if inner_elem.tower != tower.inner:
        raise TowerMismatchError("constant embedding from the wrong field")
    coeffs = {0: inner_elem}
    if isinstance(tower, Laurent):
        hi = window if window is not None else DEFAULT_LAURENT_N
        return _series(tower, True, coeffs, None, hi)
    lo, hi = window if window is not None else DEFAULT_CURLY_WINDOW
    return _series(tower, True, coeffs, lo, hi)


def monomial(tower, exp: int, coeff: Element, prec=None) -> Element:
    window, _ = _prec_parts(tower, prec)
    if isinstance(tower, Laurent):
        return _series(tower, True, {exp: coeff}, None, window)
    return _series(tower, True, {exp: coeff}, window[0], window[1])


def uniformizer(tower, prec=None) -> Element:
    """The canonical prime element of the top-level valuation."""
    if isinstance(tower, BaseFq):
        raise HlfError("finite fields have no uniformiser")
    if isinstance(tower, BasePadic):
        m, _ = _prec_parts(tower, prec)
        return Element(tower, True, base=PadicNum.from_int(tower.p, tower.p, m))
    if isinstance(tower, Laurent):
        return monomial(tower, 1, one(tower.inner, _sub_prec(prec)), prec)
    # e(K{{t}}/K) = 1: the inner prime stays prime
    return const(tower, uniformizer(tower.inner, _sub_prec(prec)),
                 _prec_parts(tower, prec)[0])


def var_element(tower, name: str, prec=None) -> Element:
    """The element named by a tower variable (as a degree-1 monomial)."""
    if isinstance(tower, (BaseFq, BasePadic)):
        raise HlfError(f"unknown variable {name!r}")
    if tower.var == name:
        return monomial(tower, 1, one(tower.inner, _sub_prec(prec)), prec)
    inner = var_element(tower.inner, name, _sub_prec(prec))
    window, _ = _prec_parts(tower, prec)
    return const(tower, inner, window)


# ---------------------------------------------------------------------------
# status and valuation


def status(e: Element) -> str:
    """NONZERO / ZERO_PREC / ZERO_EXACT classification of an element."""
    if not e.is_series():
        b = e.base
        if isinstance(b, FqElem):
            return ZERO_EXACT if b.is_zero() else NONZERO
        if b.is_zero():
            return ZERO_EXACT if b.exact else ZERO_PREC
        return NONZERO
    seen_prec_zero = False
    for v in e.coeffs.values():
        st = status(v)
        if st == NONZERO:
            return NONZERO
        if st == ZERO_PREC:
            seen_prec_zero = True
    if seen_prec_zero or not e.exact:
        return ZERO_PREC
    return ZERO_EXACT


def valuation(e: Element) -> int:
    """The unique surjective discrete valuation of the top constructor."""
    t = e.tower
    if isinstance(t, BaseFq):
        raise HlfError("finite fields carry no discrete valuation")
    if isinstance(t, BasePadic):
        return e.base.valuation()
    st = status(e)
    if st == ZERO_EXACT:
        raise HlfError("the zero element has no valuation")
    if st == ZERO_PREC:
        raise PrecisionError("zero at working precision: valuation not certified")
    if isinstance(t, Laurent):
        for k in sorted(e.coeffs):
            cst = status(e.coeffs[k])
            if cst == NONZERO:
                return k
            if cst == ZERO_PREC:
                raise PrecisionError(
                    f"coefficient of {t.var}^{k} is zero at working precision")
        raise PrecisionError("no certified leading coefficient")
    # curly: nu = inf of coefficient valuations; the tails cannot undercut
    # a certified minimum (below lo everything vanishes at inner precision)
    best = None
    for k in sorted(e.coeffs):
        cst = status(e.coeffs[k])
        if cst != NONZERO:
            continue
        v = valuation(e.coeffs[k])
        if best is None or v < best:
            best = v
    if best is None:
        raise PrecisionError("no certified coefficient in the window")
    return best


def _low_exp(e: Element) -> int:
    """A certified lower bound for the top-level exponent support."""
    if e.coeffs:
        return min(e.coeffs)
    if e.exact:
        return 0
    return e.hi if isinstance(e.tower, Laurent) else e.lo


# ---------------------------------------------------------------------------
# ring operations


def _check_towers(a, b):
    if a.tower != b.tower:
        raise TowerMismatchError(f"towers {a.tower} and {b.tower} differ")


def add(a: Element, b: Element) -> Element:
    _check_towers(a, b)
    t = a.tower
    if not a.is_series():
        return Element(t, True, base=a.base + b.base)
    exact = a.exact and b.exact
    coeffs = dict(a.coeffs)
    for k, v in b.coeffs.items():
        coeffs[k] = add(coeffs[k], v) if k in coeffs else v
    if isinstance(t, Laurent):
        if exact:
            hi = max(a.hi, b.hi)
        else:
            hi = min(x.hi for x in (a, b) if not x.exact)
        return _series(t, exact, coeffs, None, hi)
    los = [x.lo for x in (a, b) if not x.exact]
    his = [x.hi for x in (a, b) if not x.exact]
    lo = max(los) if los else min(a.lo, b.lo)
    hi = min(his) if his else max(a.hi, b.hi)
    return _series(t, exact, coeffs, lo, hi)


def neg(a: Element) -> Element:
    if not a.is_series():
        b = a.base
        return Element(a.tower, True, base=-b if isinstance(b, PadicNum) else -b)
    out = {k: neg(v) for k, v in a.coeffs.items()}
    return Element(a.tower, a.exact, coeffs=out, lo=a.lo, hi=a.hi)


def mul(a: Element, b: Element) -> Element:
    _check_towers(a, b)
    t = a.tower
    if not a.is_series():
        return Element(t, True, base=a.base * b.base)
    exact = a.exact and b.exact
    if isinstance(t, Laurent):
        if exact:
            hi = max(a.hi, b.hi)
            if a.coeffs and b.coeffs:
                hi = max(hi, max(a.coeffs) + max(b.coeffs) + 1)
        else:
            bounds = []
            if not a.exact:
                bounds.append(a.hi + _low_exp(b))
            if not b.exact:
                bounds.append(b.hi + _low_exp(a))
            hi = min(bounds)
        out = {}
        for i, ai in a.coeffs.items():
            for j, bj in b.coeffs.items():
                k = i + j
                if k >= hi:
                    continue
                prod = mul(ai, bj)
                out[k] = add(out[k], prod) if k in out else prod
        return _series(t, exact, out, None, hi)
    # curly level
    lo_a = _low_exp(a) if a.exact else a.lo
    lo_b = _low_exp(b) if b.exact else b.lo
    lo = lo_a + lo_b
    bounds = []
    if not a.exact:
        bounds.append(a.hi + lo_b)
    if not b.exact:
        bounds.append(b.hi + lo_a)
    if exact:
        hi = max(a.hi + b.hi, lo + 1)
        if a.coeffs and b.coeffs:
            hi = max(a.coeffs) + max(b.coeffs) + 1
    else:
        hi = min(bounds)
    out = {}
    for i, ai in a.coeffs.items():
        for j, bj in b.coeffs.items():
            k = i + j
            if not exact and not (lo <= k < hi):
                continue
            prod = mul(ai, bj)
            out[k] = add(out[k], prod) if k in out else prod
    return _series(t, exact, out, lo, hi)


def power(a: Element, e: int) -> Element:
    if e < 0:
        return power(inv(a), -e)
    acc = one(a.tower, _own_prec(a))
    base = a
    while e:
        if e & 1:
            acc = mul(acc, base)
        e >>= 1
        if e:
            base = mul(base, base)
    return acc


def _own_prec(e: Element):
    """Extract the element's own precision contract as a prec spec."""
    t = e.tower
    if isinstance(t, BaseFq):
        return None
    if isinstance(t, BasePadic):
        return e.base.prec
    inner = (_own_prec(next(iter(e.coeffs.values()))) if e.coeffs
             else default_prec(t.inner))
    if isinstance(t, Laurent):
        return (e.hi, inner)
    return (e.lo, e.hi, inner)


def prec_meet(s1, s2):
    """Componentwise meet of two precision specs of the same shape."""
    if s1 is None or s2 is None:
        return None
    if isinstance(s1, int):
        return min(s1, s2)
    if len(s1) == 2:
        return (min(s1[0], s2[0]), prec_meet(s1[1], s2[1]))
    return (max(s1[0], s2[0]), min(s1[1], s2[1]), prec_meet(s1[2], s2[2]))


def meet_prec(e: Element):
    """The worst-case per-level precision contract actually certified by e."""
    t = e.tower
    if isinstance(t, BaseFq):
        return None
    if isinstance(t, BasePadic):
        return e.base.prec
    subs = [meet_prec(v) for v in e.coeffs.values()]
    inner = subs[0] if subs else default_prec(t.inner)
    for s in subs[1:]:
        inner = prec_meet(inner, s)
    if isinstance(t, Laurent):
        return (e.hi, inner)
    return (e.lo, e.hi, inner)


def base_padic_prec(e: Element):
    """Smallest p-adic precision stored anywhere inside (None over F_q)."""
    if not e.is_series():
        return e.base.prec if isinstance(e.base, PadicNum) else None
    vals = [base_padic_prec(v) for v in e.coeffs.values()]
    vals = [v for v in vals if v is not None]
    if vals:
        return min(vals)
    if field_char(e.tower) == 0:
        return default_prec(e.tower)
    return None


def inv(a: Element) -> Element:
    """Multiplicative inverse; raises on exact zero / zero at precision."""
    t = a.tower
    st = status(a)
    if st == ZERO_EXACT:
        raise ZeroDivisionError("inversion of the zero element")
    if st == ZERO_PREC:
        raise PrecisionError("inversion of an element that is zero at working precision")
    if not a.is_series():
        return Element(t, True, base=a.base.inv())
    if len(a.coeffs) == 1:
        (k, c), = a.coeffs.items()
        return monomial(t, -k, inv(c), _own_prec(a))
    v = valuation(a)
    if isinstance(t, Laurent):
        # the inverse of a non-monomial is an infinite series: demote to the
        # (relative) working window before running the geometric expansion
        n = a.hi - v
        u = _series(t, False, {k - v: c for k, c in a.coeffs.items()}, None, n)
        c0 = inv(u.coeffs[0])
        c0e = const(t, c0, n)
        w = add(one(t, _own_prec(u)), neg(mul(c0e, u)))  # 1 - c0*u, val >= 1
        acc = one(t, (n, _sub_prec(_own_prec(u))))
        term = acc
        for _ in range(1, n):
            term = mul(term, w)
            if status(term) != NONZERO:
                break
            acc = add(acc, term)
        res = mul(c0e, acc)
        return _shift(res, -v, exact=False)
    # curly level: normalise by a lift of the residue inverse, then a
    # geometric series along the top valuation (each step gains one digit)
    pi = uniformizer(t, _own_prec(a))
    u = mul(a, power(pi, -v)) if v else a
    if u.exact:
        u = _series(t, False, u.coeffs, u.lo, u.hi)
    rbar = residue(u)
    c = lift(inv_in(rbar), t, padic_m=base_padic_prec(a))
    w = add(one(t, _own_prec(u)), neg(mul(c, u)))  # top valuation >= 1
    cap = 64  # the status check below fires once digits run out
    acc = one(t, _own_prec(u))
    term = acc
    steps = cap
    for j in range(1, cap + 1):
        term = mul(term, w)
        if status(term) != NONZERO:
            steps = j
            break
        acc = add(acc, term)
    # the discarded tail has valuation >= steps
    res = _cap_val_prec(mul(c, acc), steps)
    if v:
        res = mul(res, power(pi, -v))
    return res


def inv_in(a: Element) -> Element:
    """Inverse inside a's own tower (alias used when recursing into residues)."""
    return inv(a)


def _cap_val_prec(e: Element, j: int) -> Element:
    """Certify e only modulo the j-th power of its maximal ideal.

    Used after a truncated geometric series whose tail has valuation >= j:
    stored digits beyond that depth are demoted rather than overclaimed.
    """
    t = e.tower
    if isinstance(t, BaseFq):
        return e
    if isinstance(t, BasePadic):
        return Element(t, True, base=e.base.lower_precision(min(e.base.prec, j)))
    if isinstance(t, Laurent):
        hi = min(e.hi, j)
        return _series(t, False,
                       {k: v for k, v in e.coeffs.items() if k < hi}, None, hi)
    # curly: the valuation is inherited from the inner level
    return _series(t, False, {k: _cap_val_prec(v, j) for k, v in e.coeffs.items()},
                   e.lo, e.hi)


def _shift(a: Element, d: int, exact=None) -> Element:
    t = a.tower
    coeffs = {k + d: v for k, v in a.coeffs.items()}
    ex = a.exact if exact is None else exact
    if isinstance(t, Laurent):
        return _series(t, ex, coeffs, None, a.hi + d)
    return _series(t, ex, coeffs, a.lo + d, a.hi + d)


# ---------------------------------------------------------------------------
# residue and lifting


def weak_nonneg(e: Element) -> bool:
    """Certify nu(e) >= 0 without needing the exact valuation."""
    t = e.tower
    if isinstance(t, BaseFq):
        return True
    if isinstance(t, BasePadic):
        b = e.base
        if b.is_zero():
            return True
        return b.v >= 0
    if isinstance(t, Laurent):
        for k in sorted(e.coeffs):
            if k >= 0:
                break
            cst = status(e.coeffs[k])
            if cst == NONZERO:
                return False
            if cst == ZERO_PREC:
                raise PrecisionError(
                    f"cannot decide integrality: coefficient of {t.var}^{k} "
                    "is zero at working precision")
        return True
    pending = False
    for k in sorted(e.coeffs):
        try:
            if not weak_nonneg(e.coeffs[k]):
                return False
        except PrecisionError:
            pending = True
    if pending:
        raise PrecisionError("cannot decide integrality of a curly coefficient")
    return True


def residue(e: Element) -> Element:
    """Image in the first residue field (requires nu >= 0)."""
    t = e.tower
    if isinstance(t, BaseFq):
        raise HlfError("finite fields have no residue map")
    if not weak_nonneg(e):
        raise HlfError("negative valuation: not in the ring of integers")
    if isinstance(t, BasePadic):
        rt = residue_tower(t, 1)
        return Element(rt, True, base=e.base.residue())
    if isinstance(t, Laurent):
        if 0 in e.coeffs:
            return e.coeffs[0]
        if e.exact or e.hi > 0:
            return zero(t.inner) if e.exact else zero_at_prec(
                t.inner, _sub_prec(_own_prec(e)))
        raise PrecisionError("window does not reach exponent 0")
    rt = residue_tower(t, 1)
    coeffs = {}
    for k, v in e.coeffs.items():
        coeffs[k] = residue(v)
    if e.exact:
        return _series(rt, True, coeffs, None, max(e.hi, 1))
    return _series(rt, False, coeffs, None, e.hi)


def lift(r: Element, target: TowerDesc, padic_m=None) -> Element:
    """Coefficientwise section of residue; Teichmuller at the p-adic step."""
    if isinstance(target, BaseFq):
        raise HlfError("cannot lift into a finite field")
    if r.tower != residue_tower(target, 1):
        raise TowerMismatchError("element does not live in the first residue field")
    if isinstance(target, BasePadic):
        m = padic_m or DEFAULT_PADIC_PREC
        return Element(target, True, base=teichmuller(r.base, target.p, m))
    if isinstance(target, Laurent):
        return const(target, r)
    # curly: r is a Laurent series over the residue of the inner field
    coeffs = {k: lift(v, target.inner, padic_m) for k, v in r.coeffs.items()}
    lo = min(coeffs) if coeffs else 0
    hi = r.hi
    return _series(target, r.exact, coeffs, min(lo, 0), max(hi, 1))


# ---------------------------------------------------------------------------
# polynomials, Hensel lifting, m-th roots


class Poly:
    """Polynomial with Element coefficients (ascending order)."""

    def __init__(self, coeffs):
        while len(coeffs) > 1 and status(coeffs[-1]) == ZERO_EXACT:
            coeffs = coeffs[:-1]
        self.coeffs = list(coeffs)

    @staticmethod
    def make(tower, values, prec=None):
        return Poly([coerce(tower, v, prec) for v in values])

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_monic(self):
        top = self.coeffs[-1]
        diff = add(top, neg(one(top.tower, _own_prec(top))))
        return status(diff) != NONZERO

    def eval(self, x: Element) -> Element:
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = add(mul(acc, x), c)
        return acc

    def derivative(self) -> "Poly":
        t = self.coeffs[0].tower
        out = []
        for i, c in enumerate(self.coeffs[1:], start=1):
            out.append(mul(coerce(t, i, _own_prec(c)), c))
        return Poly(out if out else [zero(t)])

    def reduce(self) -> "Poly":
        return Poly([residue(c) for c in self.coeffs])


def hensel_lift(f: Poly, r0: Element, max_iter: int = 60) -> Element:
    """The unique root of f above the simple residue root r0."""
    tower = f.coeffs[0].tower
    if not f.is_monic():
        raise HlfError("Hensel lifting needs a monic polynomial")
    for c in f.coeffs:
        if not weak_nonneg(c):
            raise HlfError("Hensel lifting needs integral coefficients")
    fbar = f.reduce()
    if status(fbar.eval(r0)) == NONZERO:
        raise HlfError("not a residue root")
    dstat = status(fbar.derivative().eval(r0))
    if dstat != NONZERO:
        raise HlfError("residue root is not simple")
    fprime = f.derivative()
    a = lift(r0, tower, padic_m=base_padic_prec(f.coeffs[0]))
    for _ in range(max_iter):
        fa = f.eval(a)
        if status(fa) != NONZERO:
            return a
        delta = mul(fa, inv(fprime.eval(a)))
        if status(delta) != NONZERO:
            return a
        a = add(a, neg(delta))
    return a


def mth_root(a: Element, m: int):
    """b with b^m = a, via Hensel's lemma applied to X^m - (unit part)."""
    if m <= 1:
        raise HlfError("m must exceed 1")
    t = a.tower
    p = bottom_prime(t)
    if m % p == 0:
        raise HlfError(f"{m} is divisible by the residue characteristic {p}")
    if isinstance(t, BaseFq):
        for cand in t.field.elements():
            if cand ** m == a.base:
                return Element(t, True, base=cand)
        raise HlfError(f"no {m}-th root in {t}")
    v = valuation(a)
    if v % m != 0:
        raise HlfError(f"valuation {v} not divisible by {m}")
    pi = uniformizer(t, _own_prec(a))
    u = mul(a, power(pi, -v)) if v else a
    rbar = residue(u)
    rroot = mth_root(rbar, m)
    f = Poly([neg(u)] + [zero(t, _own_prec(a))] * (m - 1) + [one(t, _own_prec(a))])
    b = hensel_lift(f, rroot)
    return mul(power(pi, v // m), b) if v else b


# ---------------------------------------------------------------------------
# the reshuffle isomorphism K{{t}} ~ k((t))((u)) for K = k((u))


def reshuffle_target(t: TowerDesc) -> TowerDesc:
    if not (isinstance(t, Curly) and isinstance(t.inner, Laurent)):
        raise HlfError("reshuffle needs a curly step over a Laurent field")
    inner = t.inner
    return Laurent(Laurent(inner.inner, t.var), inner.var)


def reshuffle(a: Element) -> Element:
    """Transport sum_i (sum_j a_ij u^j) t^i to sum_j (sum_i a_ij t^i) u^j."""
    t = a.tower
    target = reshuffle_target(t)
    t_inner = target.inner
    grid: dict[int, dict[int, Element]] = {}
    n_u = None
    for i, c in a.coeffs.items():
        if not c.exact:
            n_u = c.hi if n_u is None else min(n_u, c.hi)
        for j, x in c.coeffs.items():
            grid.setdefault(j, {})[i] = x
    if n_u is None:
        n_u = max((max(c.coeffs) + 1 for c in a.coeffs.values() if c.coeffs),
                  default=1)
    hi_t = a.hi
    out = {}
    for j, row in grid.items():
        out[j] = _series(t_inner, a.exact, row, None, hi_t)
    return _series(target, a.exact, out, None, n_u)


def reshuffle_inverse(b: Element) -> Element:
    """Inverse transport k((t))((u)) -> (k((u))){{t}}."""
    target_check = b.tower
    if not (isinstance(target_check, Laurent) and isinstance(target_check.inner, Laurent)):
        raise HlfError("inverse reshuffle needs a double Laurent tower")
    uvar = target_check.var
    tvar = target_check.inner.var
    source = Curly(Laurent(target_check.inner.inner, uvar), tvar)
    grid: dict[int, dict[int, Element]] = {}
    hi_t = None
    for j, c in b.coeffs.items():
        if not c.exact:
            hi_t = c.hi if hi_t is None else min(hi_t, c.hi)
        for i, x in c.coeffs.items():
            grid.setdefault(i, {})[j] = x
    if hi_t is None:
        hi_t = max((max(c.coeffs) + 1 for c in b.coeffs.values() if c.coeffs),
                   default=1)
    n_u = b.hi
    out = {}
    for i, row in grid.items():
        out[i] = _series(source.inner, b.exact, row, None, n_u)
    lo_t = min(out) if out else 0
    return _series(source, b.exact, out, lo_t, hi_t)


# ---------------------------------------------------------------------------
# rendering


def render(e: Element) -> str:
    """Pretty expression form; re-parseable by the CLI grammar."""
    if not e.is_series():
        b = e.base
        if isinstance(b, FqElem):
            if b.code < b.field.p:
                return str(b.code)
            return f"<{b.code}>"
        if b.is_zero():
            return "0"
        if b.v >= 0:
            return str((b.unit * b.p ** b.v) % b.p ** b.prec)
        rel = b.prec - b.v
        return f"{b.unit % b.p ** rel}/{b.p ** (-b.v)}"
    if not e.coeffs:
        return "0"
    var = e.tower.var
    parts = []
    for k in sorted(e.coeffs):
        c = e.coeffs[k]
        cs = render(c)
        needs_paren = ("+" in cs or "-" in cs or "/" in cs) and len(cs) > 1
        if k == 0:
            parts.append(f"({cs})" if needs_paren and cs != "0" else cs)
            continue
        vpow = var if k == 1 else f"{var}^{k}"
        if cs == "1":
            parts.append(vpow)
        elif needs_paren:
            parts.append(f"({cs})*{vpow}")
        else:
            parts.append(f"{cs}*{vpow}")
    return " + ".join(parts)


def demote(e: Element, spec) -> Element:
    """Forget precision: clamp e to the given contract and drop exactness.

    At a curly level, shrinking the window from below asserts that the
    dropped coefficients are covered by the tail contract at the target
    precision; callers use this when the algebra guarantees it (e.g. when
    comparing against a residual that terminated at this very contract).
    """
    t = e.tower
    if isinstance(t, BaseFq):
        return e
    if isinstance(t, BasePadic):
        return Element(t, True, base=e.base.lower_precision(spec))
    inner = spec[-1]
    if isinstance(t, Laurent):
        hi = spec[0] if e.exact else min(e.hi, spec[0])
        coeffs = {k: demote(v, inner) for k, v in e.coeffs.items() if k < hi}
        return _series(t, False, coeffs, None, hi)
    lo, hi = spec[0], spec[1]
    if not e.exact:
        lo, hi = max(lo, e.lo), min(hi, e.hi)
    coeffs = {k: demote(v, inner) for k, v in e.coeffs.items() if lo <= k < hi}
    return _series(t, False, coeffs, lo, hi)


def agree(a: Element, b: Element) -> bool:
    """True when a - b is zero at the shared working precision."""
    return status(add(a, neg(b))) != NONZERO


def exact_eq(a: Element, b: Element) -> bool:
    """Exact equality for exact elements: same tower, support and digits.

    Declared windows are ignored; on an exact element they carry no
    information (everything outside the stored support is exactly zero)."""
    if a.tower != b.tower:
        return False
    if not a.is_series():
        return a.base == b.base
    if not (a.exact and b.exact):
        return a == b
    if set(a.coeffs) != set(b.coeffs):
        return False
    return all(exact_eq(v, b.coeffs[k]) for k, v in a.coeffs.items())
