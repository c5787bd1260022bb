"""Milnor K-theory symbol calculus via computable homomorphisms.

Symbols {a_1, ..., a_m} have no normal form here; every statement about
them is evaluated through one of the implemented Steinberg homomorphisms:
the tame symbol / border map of a discretely-valued tower, the sign map on
real-embeddable entries, and the full decomposition of K_2(Q) into a sign
and one component per prime.

The tame symbol is implemented as
    (x, y) |-> (-1)^(v(x)v(y)) * residue(x^v(y) / y^v(x)),
the unique bilinear Steinberg map sending (unit, uniformiser) to the
unit's reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coeffs import FqElem, fq_make
from .errors import HlfError
from .towers import (Element, TowerDesc, add, agree, inv, mul, neg, one,
                     power, residue, residue_tower, status, valuation,
                     NONZERO)


def _as_fraction(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return None


@dataclass(frozen=True)
class Symbol:
    """{a_1, ..., a_m}: a pure symbol with nonzero entries."""

    entries: tuple

    def __post_init__(self):
        for e in self.entries:
            if isinstance(e, Element):
                if status(e) != NONZERO:
                    raise HlfError("symbol entries must be certified nonzero")
            elif _as_fraction(e) == 0:
                raise HlfError("symbol entries must be nonzero")

    @property
    def degree(self):
        return len(self.entries)


class SymbolSum:
    """Z-linear combination of equal-degree symbols."""

    def __init__(self, terms):
        merged = []
        for coef, sym in terms:
            if not isinstance(sym, Symbol):
                sym = Symbol(tuple(sym))
            if coef:
                merged.append((coef, sym))
        degrees = {s.degree for _, s in merged}
        if len(degrees) > 1:
            raise HlfError("mixed symbol degrees in one sum")
        self.terms = merged

    @staticmethod
    def of(*entries, coef=1):
        return SymbolSum([(coef, Symbol(tuple(entries)))])

    @property
    def degree(self):
        return self.terms[0][1].degree if self.terms else None

    def __add__(self, other):
        return SymbolSum(self.terms + other.terms)

    def __neg__(self):
        return SymbolSum([(-c, s) for c, s in self.terms])


# ---------------------------------------------------------------------------
# tame symbol over a valued tower


def tame_symbol(x: Element, y: Element) -> Element:
    """The border map on {x, y}: a unit of the first residue field."""
    if x.tower != y.tower:
        raise HlfError("tame symbol needs entries in one tower")
    r, s = valuation(x), valuation(y)
    u = mul(power(x, s), inv(power(y, r))) if (s or r) else \
        mul(x, inv(x))  # both units: the symbol value is 1
    val = residue(u)
    if (r * s) % 2:
        val = neg(val)
    return val


def border(ss: SymbolSum):
    """Border map for degree 1 (valuation into K_0 = Z) and degree 2
    (termwise tame symbol, returned as a degree-1 sum over the residues)."""
    if ss.degree == 1:
        total = 0
        for coef, sym in ss.terms:
            total += coef * valuation(sym.entries[0])
        return total
    if ss.degree == 2:
        acc = None
        for coef, sym in ss.terms:
            t = tame_symbol(*sym.entries)
            t = t if coef >= 0 else inv(t)
            for _ in range(abs(coef)):
                acc = t if acc is None else mul(acc, t)
        if acc is None:
            raise HlfError("empty symbol sum has no border value")
        return SymbolSum([(1, Symbol((acc,)))])
    raise HlfError("border map implemented for degrees 1 and 2 only")


# ---------------------------------------------------------------------------
# rational symbols: sign map and K_2(Q) decomposition


def _val_p(x: Fraction, p: int) -> int:
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def tame_symbol_at(x: Fraction, y: Fraction, p: int) -> FqElem:
    """The border map of K_2(Q) at the prime p, valued in F_p^x."""
    x, y = Fraction(x), Fraction(y)
    r, s = _val_p(x, p), _val_p(y, p)
    u = x ** s / y ** r if (r or s) else Fraction(1)
    sign = -1 if (r * s) % 2 else 1
    u *= sign
    field = fq_make(p)
    num = field.elem(u.numerator % p)
    den = field.elem(u.denominator % p)
    return num * den.inv()


def sign_symbol(s) -> int:
    """-1 iff all entries are negative; extended multiplicatively to sums."""
    if isinstance(s, Symbol):
        s = SymbolSum([(1, s)])
    total = 1
    for coef, sym in s.terms:
        val = -1 if all(Fraction(e) < 0 for e in sym.entries) else 1
        if coef % 2:
            total *= val
    return total


@dataclass
class K2QImage:
    """Element of {+-1} + sum_p F_p^x with only nontrivial components kept."""

    sign: int = 1
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        self.components = {p: c for p, c in self.components.items()
                           if c.code != 1}

    def __mul__(self, other):
        comps = dict(self.components)
        for p, c in other.components.items():
            comps[p] = comps[p] * c if p in comps else c
        return K2QImage(self.sign * other.sign, comps)

    def inverse(self):
        return K2QImage(self.sign,
                        {p: c.inv() for p, c in self.components.items()})

    def is_trivial(self):
        return self.sign == 1 and not self.components

    def __eq__(self, other):
        return (isinstance(other, K2QImage) and self.sign == other.sign
                and self.components == other.components)


def _primes_of(x: Fraction):
    out = set()
    for n in (abs(x.numerator), x.denominator):
        d = 2
        while d * d <= n:
            if n % d == 0:
                out.add(d)
                while n % d == 0:
                    n //= d
            d += 1
        if n > 1:
            out.add(n)
    return out


def k2q_decompose(ss) -> K2QImage:
    """The isomorphism K_2(Q) -> {+-1} + sum_p F_p^x on a symbol sum."""
    if isinstance(ss, Symbol):
        ss = SymbolSum([(1, ss)])
    if ss.degree not in (None, 2):
        raise HlfError("K_2(Q) decomposition needs degree-2 symbols")
    primes = set()
    for _, sym in ss.terms:
        for e in sym.entries:
            primes |= _primes_of(Fraction(e))
    comps = {}
    for p in sorted(primes):
        acc = fq_make(p).one()
        for coef, sym in ss.terms:
            t = tame_symbol_at(sym.entries[0], sym.entries[1], p)
            t = t if coef >= 0 else t.inv()
            for _ in range(abs(coef)):
                acc = acc * t
        comps[p] = acc
    return K2QImage(sign_symbol(ss), comps)


# ---------------------------------------------------------------------------
# relation harness


@dataclass
class RelationReport:
    hom: str
    trials: int
    checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def note(self, passed, label):
        self.checks += 1
        if not passed:
            self.failures.append(label)


def _rand_rational(rng) -> Fraction:
    num = rng.choice([-7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 9, 10])
    den = rng.choice([1, 1, 2, 3, 5, 7])
    return Fraction(num, den)


def _rand_tower_elt(rng, tower, helpers_pool):
    while True:
        e = helpers_pool(rng, tower)
        if status(e) == NONZERO:
            return e


def verify_relations(hom: str, trials: int, seed: int, tower: TowerDesc = None,
                     sampler=None) -> RelationReport:
    """Randomized multilinearity / Steinberg / {x,-x} / antisymmetry checks.

    hom is one of 'tame', 'border', 'sign', 'k2q'.  For the tower-valued
    homomorphisms a tower and an element sampler must be supplied.
    """
    import random as _random
    rng = _random.Random(seed)
    rep = RelationReport(hom, trials)
    if hom in ("sign", "k2q"):
        h = (lambda s: k2q_decompose(s)) if hom == "k2q" else sign_symbol
        ident = K2QImage() if hom == "k2q" else 1
        compose = (lambda a, b: a * b)
        invert = (lambda a: a.inverse()) if hom == "k2q" else (lambda a: a)
        for _ in range(trials):
            a, b, c = (_rand_rational(rng) for _ in range(3))
            left = h(SymbolSum.of(a, b * c))
            right = compose(h(SymbolSum.of(a, b)), h(SymbolSum.of(a, c)))
            rep.note(left == right, f"multilinearity {a},{b},{c}")
            x = _rand_rational(rng)
            if x not in (0, 1):
                rep.note(h(SymbolSum.of(x, 1 - x)) == ident, f"steinberg {x}")
            rep.note(h(SymbolSum.of(x, -x)) == ident, f"x,-x {x}")
            ab, ba = h(SymbolSum.of(a, b)), h(SymbolSum.of(b, a))
            rep.note(ab == invert(ba), f"antisymmetry {a},{b}")
        return rep
    if hom in ("tame", "border"):
        if tower is None or sampler is None:
            raise HlfError("tower-valued harness needs a tower and sampler")
        onee = one(residue_tower(tower, 1))
        for _ in range(trials):
            a = _rand_tower_elt(rng, tower, sampler)
            b = _rand_tower_elt(rng, tower, sampler)
            c = _rand_tower_elt(rng, tower, sampler)
            left = tame_symbol(a, mul(b, c))
            right = mul(tame_symbol(a, b), tame_symbol(a, c))
            rep.note(agree(left, right), "multilinearity")
            x = a
            omx = add(one(tower), neg(x))
            if status(omx) == NONZERO:
                rep.note(agree(tame_symbol(x, omx), onee), "steinberg")
            rep.note(agree(tame_symbol(x, neg(x)), onee), "x,-x")
            rep.note(agree(tame_symbol(a, b), inv(tame_symbol(b, a))),
                     "antisymmetry")
        return rep
    raise HlfError(f"unknown homomorphism {hom!r}")
