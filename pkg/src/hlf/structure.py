"""Structure theory of towers: local parameters, rank-r integer rings and
their prime chain, unit decomposition, canonical digit expansions, the
classification trichotomy, and the two supported extension kinds.

Multi-indices (i_1, ..., i_n) are exponent vectors against the canonical
local parameters t_1, ..., t_n; they are ordered with the top level most
significant, i.e. compared by the reversed tuple (i_n, ..., i_1).  This is
the order in which the unit group decomposes as Z x (inner units), and the
order in which the greedy expansions emit digits.

The representative set for the last residue field is the finite field
itself at equal-characteristic steps and the Teichmuller lift at the
p-adic step, embedded through constant coefficients; the composite section
is multiplicative, which keeps the product expansion clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coeffs import FqElem, FqField, fq_make
from .errors import HlfError, PrecisionError
from .towers import (BaseFq, BasePadic, Curly, Element, Laurent, TowerDesc,
                     add, base_padic_prec, bottom_prime, cdvdim, coerce,
                     const, field_char, inv, lift, mul, neg, one, power,
                     residue, meet_prec, residue_tower, status, uniformizer, valuation,
                     variables, weak_nonneg, zero, NONZERO, ZERO_EXACT,
                     ZERO_PREC, _own_prec)

_EXPAND_CAP = 20000


def revlex_key(idx):
    return tuple(reversed(idx))


# ---------------------------------------------------------------------------
# local parameters


def local_parameters(t: TowerDesc, prec=None) -> list[Element]:
    """The canonical parameter sequence (t_1, ..., t_n), top uniformiser last."""
    n = cdvdim(t)
    if n == 0:
        return []
    if isinstance(t, BasePadic):
        return [uniformizer(t, prec)]
    lower = local_parameters(residue_tower(t, 1))
    lifted = [lift(x, t) for x in lower]
    return lifted + [uniformizer(t, prec)]


def last_residue_field(t: TowerDesc) -> FqField:
    while isinstance(t, (Laurent, Curly)):
        t = t.inner
    return fq_make(t.p) if isinstance(t, BasePadic) else t.field


def iterated_residue(a: Element, i: int) -> Element:
    for _ in range(i):
        a = residue(a)
    return a


def rep_lift(theta, tower: TowerDesc, padic_m=None) -> Element:
    """Multiplicative section of the last residue field into the tower."""
    if isinstance(tower, BaseFq):
        if isinstance(theta, Element):
            return theta
        return Element(tower, True, base=theta)
    if isinstance(tower, BasePadic):
        r = coerce(residue_tower(tower, 1), theta if isinstance(theta, FqElem)
                   else theta.base)
        return lift(r, tower, padic_m=padic_m)
    inner = rep_lift(theta, tower.inner, padic_m)
    return const(tower, inner)


# ---------------------------------------------------------------------------
# rank-r rings of integers and their primes


def rank_membership(a: Element, r: int) -> bool:
    """Is a in the rank-r ring of integers O^(r)?"""
    n = cdvdim(a.tower)
    if not 0 <= r <= n:
        raise HlfError(f"rank {r} out of range 0..{n}")
    if r == 0:
        return True
    st = status(a)
    if st == ZERO_EXACT:
        return True
    if st == ZERO_PREC:
        raise PrecisionError("membership undecidable at working precision")
    if not weak_nonneg(a):
        return False
    return rank_membership(residue(a), r - 1)


def prime_membership(a: Element, r: int) -> bool:
    """Is a in p^(r), the maximal ideal of O^(r)?"""
    n = cdvdim(a.tower)
    if not 0 <= r <= n:
        raise HlfError(f"rank {r} out of range 0..{n}")
    st = status(a)
    if st == ZERO_EXACT:
        return True
    if st == ZERO_PREC:
        raise PrecisionError("membership undecidable at working precision")
    if r == 0:
        return False  # p^(0) = 0 and a is certified nonzero
    if not weak_nonneg(a):
        return False
    return prime_membership(residue(a), r - 1)


def unit_decompose(a: Element):
    """a = unit * t_1^(r_1) ... t_n^(r_n) with unit in O^(n)x.

    Returns (exponents, unit).  Exponents are read off top-down through the
    residue tower; the unit is reconstructed inside the tower itself.
    """
    st = status(a)
    if st == ZERO_EXACT:
        raise HlfError("zero has no unit decomposition")
    if st == ZERO_PREC:
        raise PrecisionError("zero at working precision")
    exps = []
    x = a
    while not isinstance(x.tower, BaseFq):
        v = valuation(x)
        exps.append(v)
        pi = uniformizer(x.tower, _own_prec(x))
        x = residue(mul(x, power(pi, -v)) if v else x)
    exps = tuple(reversed(exps))
    params = local_parameters(a.tower, _own_prec(a))
    unit = a
    for t_i, r_i in zip(params, exps):
        if r_i:
            unit = mul(unit, power(t_i, -r_i))
    return exps, unit


# ---------------------------------------------------------------------------
# canonical expansions


def leading_digit(x: Element):
    """(multi-index, theta): the reversed-lex least certified digit of x."""
    t = x.tower
    if isinstance(t, BaseFq):
        return (), x.base
    v = valuation(x)
    pi = uniformizer(t, _own_prec(x))
    y = residue(mul(x, power(pi, -v)) if v else x)
    idx, theta = leading_digit(y)
    return idx + (v,), theta


def digit_monomial(tower: TowerDesc, idx, theta, params, padic_m=None) -> Element:
    m = rep_lift(theta, tower, padic_m)
    for t_i, e_i in zip(params, idx):
        if e_i:
            m = mul(m, power(t_i, e_i))
    return m


@dataclass
class AdditiveExpansion:
    tower: TowerDesc
    digits: dict
    window: object = None
    complete: bool = True  # False: extraction stopped at the certification boundary
    residual: object = None  # what remains of the input after extraction

    def support(self):
        return sorted(self.digits, key=revlex_key)

    def evaluate(self, prec=None) -> Element:
        params = local_parameters(self.tower, prec)
        acc = zero(self.tower, prec)
        for idx in self.support():
            acc = add(acc, digit_monomial(self.tower, idx, self.digits[idx], params))
        return acc


@dataclass
class MultiplicativeExpansion:
    tower: TowerDesc
    exponents: tuple
    theta: FqElem
    factors: dict
    window: object = None
    complete: bool = True
    residual: object = None  # multiplicative remainder: input = recompose * residual

    def support(self):
        return sorted(self.factors, key=revlex_key)

    def recompose(self, prec=None) -> Element:
        params = local_parameters(self.tower, prec)
        acc = rep_lift(self.theta, self.tower)
        for t_i, r_i in zip(params, self.exponents):
            if r_i:
                acc = mul(acc, power(t_i, r_i))
        for idx in self.support():
            f = add(one(self.tower, prec),
                    digit_monomial(self.tower, idx, self.factors[idx], params))
            acc = mul(acc, f)
        return acc


def additive_expand(a: Element, max_digits: int = _EXPAND_CAP) -> AdditiveExpansion:
    """Greedy digit extraction: subtract the leading certified digit, repeat."""
    tower = a.tower
    params = local_parameters(tower, _own_prec(a))
    pm = base_padic_prec(a)
    digits = {}
    x = a
    for _ in range(max_digits):
        if status(x) != NONZERO:
            return AdditiveExpansion(tower, digits, window=meet_prec(x),
                                     residual=x)
        try:
            idx, theta = leading_digit(x)
        except PrecisionError:
            # remaining certified digits sit beyond an uncertified slot:
            # extraction cannot continue honestly
            return AdditiveExpansion(tower, digits, window=meet_prec(x),
                                     complete=False, residual=x)
        digits[idx] = theta
        x = add(x, neg(digit_monomial(tower, idx, theta, params, pm)))
    raise HlfError("additive expansion did not terminate within the digit cap")


def _shift_prec_by_monomial(spec, m: Element):
    """Shift a precision contract by a parameter monomial: each level's
    window moves by that level's exponent in m, the p-adic floor by its
    p-valuation.  (The curly variable is not the top uniformiser, so the
    shifts must be read off the monomial itself, not the exponent list.)"""
    if spec is None or isinstance(m.tower, BaseFq):
        return spec
    if isinstance(m.tower, BasePadic):
        return spec + m.base.v
    if len(m.coeffs) != 1:
        raise HlfError("parameter product is not a monomial")
    (k, c), = m.coeffs.items()
    if len(spec) == 2:
        return (spec[0] + k, _shift_prec_by_monomial(spec[1], c))
    return (spec[0] + k, spec[1] + k, _shift_prec_by_monomial(spec[2], c))


def multiplicative_expand(a: Element, max_factors: int = _EXPAND_CAP) -> MultiplicativeExpansion:
    """a = t^r * theta * prod (1 + theta_i t^i), greedily from the leading digit."""
    exps, unit = unit_decompose(a)
    n = cdvdim(a.tower)
    theta = iterated_residue(unit, n)
    theta = theta.base if isinstance(theta, Element) else theta
    params = local_parameters(a.tower, _own_prec(a))
    pm = base_padic_prec(a)
    mono = one(a.tower, _own_prec(a))
    for t_i, r_i in zip(params, exps):
        if r_i:
            mono = mul(mono, power(t_i, r_i))
    w = mul(unit, inv(rep_lift(theta, a.tower, pm)))
    factors = {}
    for _ in range(max_factors):
        d = add(w, neg(one(a.tower, _own_prec(w))))
        if status(d) != NONZERO:
            return MultiplicativeExpansion(a.tower, exps, theta, factors,
                                           window=_shift_prec_by_monomial(
                                               meet_prec(d), mono),
                                           residual=w)
        try:
            idx, th = leading_digit(d)
        except PrecisionError:
            return MultiplicativeExpansion(a.tower, exps, theta, factors,
                                           window=_shift_prec_by_monomial(
                                               meet_prec(d), mono),
                                           complete=False, residual=w)
        factors[idx] = th
        f = add(one(a.tower, _own_prec(w)),
                digit_monomial(a.tower, idx, th, params, pm))
        w = mul(w, inv(f))
    raise HlfError("multiplicative expansion did not terminate within the factor cap")


def check_admissible(indices, window) -> bool:
    """Window-relative admissibility of a set of multi-indices.

    window is a per-coordinate list of (lo, hi) bounds.  For each 1 <= r <= n
    and each fixed tail, the r-th coordinates must stay strictly above the
    window's lower edge; a set touching the edge cannot be certified bounded
    below and is reported inadmissible on this window.
    """
    indices = list(indices)
    if not indices:
        return True
    n = len(indices[0])
    for idx in indices:
        if len(idx) != n:
            raise HlfError("mixed multi-index lengths")
    for r in range(1, n + 1):
        groups = {}
        for idx in indices:
            tail = idx[r:]
            cur = groups.get(tail)
            if cur is None or idx[r - 1] < cur:
                groups[tail] = idx[r - 1]
        lo_r = window[r - 1][0]
        for m in groups.values():
            if m <= lo_r:
                return False
    return True


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class EqualCharFq:
    q: int
    n: int


@dataclass(frozen=True)
class EqualCharZero:
    residue_field: TowerDesc
    laurent_layers: int


@dataclass(frozen=True)
class MixedChar:
    p: int
    r: int
    n: int


def classify(t: TowerDesc):
    """The trichotomy: which standard shape the tower is isomorphic to."""
    n = cdvdim(t)
    if field_char(t) != 0:
        return EqualCharFq(last_residue_field(t).q, n)
    if n >= 1 and field_char(residue_tower(t, n - 1)) == 0:
        return EqualCharZero(residue_tower(t, n - 1), n - 1)
    for r in range(2, n + 1):
        if (field_char(residue_tower(t, n - r)) == 0
                and field_char(residue_tower(t, n + 1 - r)) != 0):
            return MixedChar(last_residue_field(t).p, r, n)
    raise HlfError("tower does not fit the classification cases")


# ---------------------------------------------------------------------------
# extensions


@dataclass(frozen=True)
class ResidueExt:
    k: int


@dataclass(frozen=True)
class RamifiedBase:
    e: int


@dataclass
class ExtensionData:
    degree: int
    e_vector: tuple
    f: int
    source: TowerDesc
    target: TowerDesc
    embed: object = field(repr=False, default=None)


def _replace_base(t: TowerDesc, new_base: TowerDesc) -> TowerDesc:
    if isinstance(t, (BaseFq, BasePadic)):
        return new_base
    cls = Laurent if isinstance(t, Laurent) else Curly
    return cls(_replace_base(t.inner, new_base), t.var)


def _fq_embedding(small: FqField, big: FqField):
    """Map F_q -> F_{q^k}: send the generator to the least root of the modulus."""
    if small.k == 1:
        return lambda x: big.elem(x.code)
    root = None
    for cand in big.elements():
        acc = big.zero()
        for c in reversed(small.modulus):
            acc = acc * cand + big.elem(c)
        if acc.is_zero():
            root = cand
            break
    if root is None:
        raise HlfError("no embedding found")

    def emb(x: FqElem) -> FqElem:
        acc = big.zero()
        for c in reversed(x.rep()):
            acc = acc * root + big.elem(c)
        return acc

    return emb


def _map_base_coeffs(e: Element, target: TowerDesc, fn) -> Element:
    if not e.is_series():
        return Element(target, True, base=fn(e.base))
    out = {k: _map_base_coeffs(v, target.inner, fn) for k, v in e.coeffs.items()}
    return Element(target, e.exact, coeffs=out, lo=e.lo, hi=e.hi)


def extension_invariants(base: TowerDesc, ext) -> ExtensionData:
    """Degree, per-level ramification vector and inertia degree of ext."""
    n = cdvdim(base)
    if isinstance(ext, ResidueExt):
        bottom = base
        while isinstance(bottom, (Laurent, Curly)):
            bottom = bottom.inner
        if not isinstance(bottom, BaseFq):
            raise HlfError("residue extensions are supported over finite bases only")
        small = bottom.field
        big = fq_make(small.p, small.k * ext.k)
        target = _replace_base(base, BaseFq(big))
        fn = _fq_embedding(small, big)
        emb = lambda e: _map_base_coeffs(e, target, fn)
        return ExtensionData(ext.k, (1,) * n, ext.k, base, target, emb)
    if isinstance(ext, RamifiedBase):
        if not isinstance(base, Laurent):
            raise HlfError("ramified base change needs a Laurent top level")
        if ext.e % bottom_prime(base) == 0:
            raise HlfError("ramification index divisible by the residue characteristic")
        new_var = "s" if "s" not in variables(base) else f"s{ext.e}"
        target = Laurent(base.inner, new_var)

        def emb(el: Element, e=ext.e, tg=target):
            coeffs = {k * e: v for k, v in el.coeffs.items()}
            return Element(tg, el.exact, coeffs=coeffs, lo=None, hi=el.hi * e)

        return ExtensionData(ext.e, (1,) * (n - 1) + (ext.e,), 1, base, target, emb)
    raise HlfError(f"unsupported extension kind {ext!r}")
