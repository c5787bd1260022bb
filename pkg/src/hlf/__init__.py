"""Exact arithmetic for higher-dimensional local fields.

Towers of Laurent and curly constructions over finite fields and Q_p, with
valuation theory, Hensel lifting, canonical digit expansions, Milnor
K-theory symbol maps, the localization-completion functor on regular
chains, and adelic cohomology on the projective line.
"""

from .coeffs import (FqElem, FqField, PadicNum, fq_make, padic_arith,
                     padic_from_rational, teichmuller)
from .errors import (HlfError, PrecisionError, TowerMismatchError,
                     WindowInstabilityError)
from .towers import (BaseFq, BasePadic, Curly, Element, Laurent, Poly,
                     add, agree, cdvdim, coerce, const, curly_tower,
                     exact_eq, from_fraction, hensel_lift, inv,
                     laurent_tower, lift, monomial, mth_root, mul, neg, one,
                     power, render, reshuffle, reshuffle_inverse, residue,
                     residue_tower, status, uniformizer, valuation,
                     var_element, zero)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
