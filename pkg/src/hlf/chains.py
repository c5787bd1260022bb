"""Regular chains and the localization-completion functor.

Supported local rings: F_q[t_1..t_n] localized at the origin, and Z[t]
localized at (p, t).  A chain fixes an order for the regular sequence
(s_1, ..., s_n); the flag primes are p_i = <last i generators>, so the
sequence is also the canonical parameter sequence of the resulting field.

The functor itself is computed symbolically: alternately completing and
localizing along the flag turns the order of generators directly into the
tower shape (a variable before p contributes a curly layer, after p a
Laurent layer).  The analytic content lives in `embed`, which expands ring
elements (including fractions with invertible denominators) inside the
tower.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coeffs import fq_make, is_prime
from .errors import HlfError
from .towers import (BaseFq, BasePadic, Curly, Element, Laurent, TowerDesc,
                     add, from_fraction, inv, mul, power, status,
                     var_element, zero, NONZERO)

PRIME_MARK = "p"


def _factor_prime_power(q: int):
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            m = q
            while m % p == 0:
                m //= p
                k += 1
            if m != 1 or not is_prime(p):
                raise HlfError(f"{q} is not a prime power")
            return p, k
    raise HlfError(f"{q} is not a prime power")


@dataclass(frozen=True)
class RingDesc:
    """Coefficient base plus polynomial variables of the local ring."""

    coeff: tuple  # ("Fq", q) or ("Z", p)
    vars: tuple

    def __str__(self):
        if self.coeff[0] == "Fq":
            return f"F_{self.coeff[1]}[{','.join(self.vars)}]_loc"
        return f"Z[{','.join(self.vars)}]_({self.coeff[1]},...)"


def poly_local(q: int, n: int, names=None) -> RingDesc:
    """F_q[t_1..t_n] localized at <t_1, ..., t_n>."""
    _factor_prime_power(q)
    names = tuple(names) if names else tuple(f"t{i+1}" for i in range(n))
    if len(names) != n:
        raise HlfError("variable count mismatch")
    return RingDesc(("Fq", q), names)


def zt_local(p: int, name: str = "t") -> RingDesc:
    """Z[t] localized at <p, t>."""
    if not is_prime(p):
        raise HlfError(f"{p} is not prime")
    return RingDesc(("Z", p), (name,))


@dataclass(frozen=True)
class RegularChainDesc:
    """A supported ring with an ordered regular sequence.

    order lists the generators s_1, ..., s_n (the marker "p" stands for the
    prime of a Z-coefficient ring); the flag prime p_i is generated by the
    last i entries, so p_1 = <s_n>.
    """

    ring: RingDesc
    order: tuple

    def __post_init__(self):
        expected = set(self.ring.vars)
        if self.ring.coeff[0] == "Z":
            expected.add(PRIME_MARK)
        if set(self.order) != expected or len(self.order) != len(expected):
            raise HlfError(f"order {self.order} is not a permutation of {sorted(expected)}")

    @property
    def length(self):
        return len(self.order)


def chain(ring: RingDesc, order=None) -> RegularChainDesc:
    if order is None:
        order = (ring.vars if ring.coeff[0] == "Fq"
                 else (PRIME_MARK,) + ring.vars)
    return RegularChainDesc(ring, tuple(order))


def hl(c: RegularChainDesc) -> TowerDesc:
    """Iterated completion-localization, computed on descriptors."""
    coeff = c.ring.coeff
    if coeff[0] == "Fq":
        p, k = _factor_prime_power(coeff[1])
        tower: TowerDesc = BaseFq(fq_make(p, k))
        for name in c.order:
            tower = Laurent(tower, name)
        return tower
    p = coeff[1]
    if PRIME_MARK not in c.order:
        raise HlfError("Z-coefficient chain lost its prime")
    pos = c.order.index(PRIME_MARK)
    tower = BasePadic(p)
    for name in c.order[:pos]:
        tower = Curly(tower, name)
    for name in c.order[pos + 1:]:
        tower = Laurent(tower, name)
    return tower


def truncate_chain(c: RegularChainDesc, i: int) -> RegularChainDesc:
    """The chain of A / p_i with the inherited flag (drop the last i)."""
    if not 0 <= i <= c.length:
        raise HlfError(f"truncation index {i} out of range 0..{c.length}")
    kept = c.order[:c.length - i]
    coeff = c.ring.coeff
    if coeff[0] == "Z" and PRIME_MARK not in kept:
        new_ring = RingDesc(("Fq", coeff[1]), tuple(v for v in kept))
    elif coeff[0] == "Z":
        new_ring = RingDesc(coeff, tuple(v for v in kept if v != PRIME_MARK))
    else:
        new_ring = RingDesc(coeff, kept)
    return RegularChainDesc(new_ring, kept)


def chain_local_params(c: RegularChainDesc, prec=None) -> list[Element]:
    """Images of the regular sequence inside hl(c)."""
    tower = hl(c)
    out = []
    for name in c.order:
        if name == PRIME_MARK:
            out.append(from_fraction(tower, Fraction(c.ring.coeff[1]), prec))
        else:
            out.append(var_element(tower, name, prec))
    return out


# ---------------------------------------------------------------------------
# ring elements and the flat embedding


@dataclass(frozen=True)
class RingElem:
    """num / den as sparse polynomial dicts {exponent tuple: coefficient}.

    Exponents are aligned with ring.vars; coefficients are integers (or
    Fractions over a Z-coefficient ring).  den None means 1.
    """

    num: tuple
    den: tuple = None

    @staticmethod
    def poly(d: dict) -> "RingElem":
        return RingElem(tuple(sorted(d.items())))

    @staticmethod
    def frac(num: dict, den: dict) -> "RingElem":
        return RingElem(tuple(sorted(num.items())), tuple(sorted(den.items())))


def poly_mul(da: dict, db: dict) -> dict:
    out = {}
    for ea, ca in da.items():
        for eb, cb in db.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def poly_add(da: dict, db: dict) -> dict:
    out = dict(da)
    for e, c in db.items():
        out[e] = out.get(e, 0) + c
    return {e: c for e, c in out.items() if c}


def _eval_poly(c: RegularChainDesc, d: dict, tower, var_elts, prec) -> Element:
    acc = zero(tower, prec)
    for exps, coef in sorted(d.items()):
        term = from_fraction(tower, Fraction(coef), prec)
        for v, e in zip(var_elts, exps):
            if e:
                term = mul(term, power(v, e))
        acc = add(acc, term)
    return acc


def embed(c: RegularChainDesc, f: RingElem, prec=None) -> Element:
    """The natural flat embedding A -> hl(c) at working precision."""
    tower = hl(c)
    var_elts = [var_element(tower, v, prec) for v in c.ring.vars]
    num = _eval_poly(c, dict(f.num), tower, var_elts, prec)
    if f.den is None:
        return num
    den = _eval_poly(c, dict(f.den), tower, var_elts, prec)
    if status(den) != NONZERO:
        raise HlfError("denominator is zero at working precision")
    return mul(num, inv(den))
