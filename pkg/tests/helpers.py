"""Shared test utilities: the tower catalog, random exact elements, and a
schoolbook double-sum multiplication oracle on nested coefficient dicts."""

from fractions import Fraction

from hlf.coeffs import fq_make
from hlf.towers import (BaseFq, BasePadic, add, coerce, curly_tower,
                        laurent_tower, monomial, zero)


def catalog():
    """The five reference towers used by the randomized suites."""
    return [
        laurent_tower(BaseFq(fq_make(2, 2)), 1),   # F_4((t))
        laurent_tower(BaseFq(fq_make(3)), 2),      # F_3((t1))((t2))
        laurent_tower(BasePadic(5), 1),            # Q_5((t))
        curly_tower(BasePadic(5), 1),              # Q_5{{t}}
        curly_tower(BasePadic(3), 2),              # Q_3{{t1}}{{t2}}
    ]


def rand_base_dict(rng, tower):
    if isinstance(tower, BaseFq):
        return tower.field.elem(rng.randrange(1, tower.field.q))
    p = tower.p
    v = rng.choice([-1, 0, 0, 1])
    m = rng.choice([1, 2, 3, p + 1, 2 * p + 1])
    while m % p == 0:
        m += 1
    return Fraction(m) * Fraction(p) ** v


def rand_dict(rng, tower, max_terms=3, span=3):
    """Nested dict representation: exponent -> sub-dict / base coefficient."""
    if isinstance(tower, (BaseFq, BasePadic)):
        return rand_base_dict(rng, tower)
    out = {}
    for _ in range(rng.randrange(1, max_terms + 1)):
        e = rng.randrange(-span, span + 1)
        sub = rand_dict(rng, tower.inner, max_terms, span)
        out[e] = sub
    return out


def dict_to_elt(tower, d, prec=None):
    if isinstance(tower, (BaseFq, BasePadic)):
        if isinstance(d, Fraction):
            return coerce(tower, d, prec)
        return coerce(tower, d)
    acc = zero(tower, prec)
    for e, sub in sorted(d.items()):
        acc = add(acc, monomial(tower, e, dict_to_elt(tower.inner, sub,
                                                      _sub(prec)), prec))
    return acc


def _sub(prec):
    return None if prec is None else prec[-1]


def dict_add(tower, da, db):
    if isinstance(tower, (BaseFq, BasePadic)):
        return da + db
    out = dict(da)
    for e, sub in db.items():
        out[e] = dict_add(tower.inner, out[e], sub) if e in out else sub
    return out


def dict_mul(tower, da, db):
    """Brute-force double sum: coefficient of e is sum over r of a_r*b_(e-r)."""
    if isinstance(tower, (BaseFq, BasePadic)):
        return da * db
    out = {}
    for i, ai in da.items():
        for j, bj in db.items():
            prod = dict_mul(tower.inner, ai, bj)
            if i + j in out:
                out[i + j] = dict_add(tower.inner, out[i + j], prod)
            else:
                out[i + j] = prod
    return out


def rand_elt(rng, tower, prec=None, **kw):
    return dict_to_elt(tower, rand_dict(rng, tower, **kw), prec)
