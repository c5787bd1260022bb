"""Adelic machinery for the projective line over F_q, plus the dim-2 local
factors and membership predicates for coordinate flags on the affine plane.

Dimension one: closed points of P^1 are monic irreducibles in u together
with the point at infinity (uniformiser 1/u).  Local expansions keep their
coefficients as polynomials mod pi -- no field-embedding normalisation.
The cohomology of a divisor is computed from the truncated two-term adelic
complex by linear algebra over F_q; every dimension is recomputed at window
T and T+5 and reported only when stable.

Dimension two: for a coordinate curve y (V(s-a) or V(u-b)) and a point x on
it, the local factor is the two-variable Laurent tower in the shifted
coordinates, built through the localization-completion machinery.  The
restricted-product membership predicates are window-relative verdicts: the
conditions quantify over infinitely many points and all r, so a verdict
only ever says "consistent on this window" or exhibits a witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chains import chain, hl, poly_local
from .coeffs import FqElem, FqField, fq_make
from .errors import HlfError, WindowInstabilityError
from .towers import (Element, add, const, inv, mul, power, status,
                     var_element, zero, NONZERO)


# ---------------------------------------------------------------------------
# polynomials over F_q (little-endian tuples of FqElem)


def pnorm(f):
    f = tuple(f)
    while f and f[-1].is_zero():
        f = f[:-1]
    return f


def pconst(F: FqField, c) -> tuple:
    e = F.elem(c)
    return (e,) if not e.is_zero() else ()


def pdeg(f) -> int:
    return len(f) - 1


def padd(F, f, g):
    n = max(len(f), len(g))
    f = f + (F.zero(),) * (n - len(f))
    g = g + (F.zero(),) * (n - len(g))
    return pnorm(a + b for a, b in zip(f, g))


def pneg(F, f):
    return tuple(-a for a in f)


def pmul(F, f, g):
    if not f or not g:
        return ()
    out = [F.zero()] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a.is_zero():
            continue
        for j, b in enumerate(g):
            out[i + j] = out[i + j] + a * b
    return pnorm(out)


def pdivmod(F, f, g):
    g = pnorm(g)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    q = [F.zero()] * max(0, len(f) - len(g) + 1)
    r = list(f)
    ginv = g[-1].inv()
    while len(pnorm(r)) >= len(g):
        r = list(pnorm(r))
        shift = len(r) - len(g)
        c = r[-1] * ginv
        q[shift] = c
        for i, b in enumerate(g):
            r[shift + i] = r[shift + i] - c * b
    return pnorm(q), pnorm(r)


def pmod(F, f, g):
    return pdivmod(F, f, g)[1]


def pgcd(F, f, g):
    f, g = pnorm(f), pnorm(g)
    while g:
        f, g = g, pmod(F, f, g)
    if f:
        c = f[-1].inv()
        f = tuple(a * c for a in f)
    return f


def pinv_mod(F, f, m):
    r0, r1 = pnorm(m), pnorm(f)
    s0, s1 = (), (F.one(),)
    while r1:
        q, r = pdivmod(F, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, padd(F, s0, pneg(F, pmul(F, q, s1)))
    if pdeg(r0) != 0:
        raise ZeroDivisionError("not invertible modulo the given polynomial")
    c = r0[0].inv()
    return pmod(F, tuple(a * c for a in s0), m)


def poly_from_ints(F: FqField, coeffs) -> tuple:
    return pnorm(F.elem(c) for c in coeffs)


def ord_at(F, f, pi) -> int:
    """pi-adic valuation of a nonzero polynomial."""
    f = pnorm(f)
    if not f:
        raise HlfError("zero polynomial has infinite order")
    v = 0
    while True:
        q, r = pdivmod(F, f, pi)
        if r:
            return v
        f = q
        v += 1


class RatFunc:
    """Element of F_q(u), normalised with monic coprime denominator."""

    __slots__ = ("F", "num", "den")

    def __init__(self, F: FqField, num, den=None):
        num = pnorm(num)
        den = pnorm(den) if den is not None else (F.one(),)
        if not den:
            raise ZeroDivisionError("zero denominator")
        g = pgcd(F, num, den)
        if pdeg(g) > 0:
            num = pdivmod(F, num, g)[0]
            den = pdivmod(F, den, g)[0]
        lc = den[-1]
        if not (lc == F.one()):
            c = lc.inv()
            num = tuple(a * c for a in num)
            den = tuple(a * c for a in den)
        self.F = F
        self.num = num
        self.den = den

    @staticmethod
    def of(F, num_ints, den_ints=None):
        return RatFunc(F, poly_from_ints(F, num_ints),
                       poly_from_ints(F, den_ints) if den_ints is not None else None)

    def is_zero(self):
        return not self.num

    def __add__(self, other):
        F = self.F
        num = padd(F, pmul(F, self.num, other.den), pmul(F, other.num, self.den))
        return RatFunc(F, num, pmul(F, self.den, other.den))

    def __neg__(self):
        return RatFunc(self.F, pneg(self.F, self.num), self.den)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return RatFunc(self.F, pmul(self.F, self.num, other.num),
                       pmul(self.F, self.den, other.den))

    def inv(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero function")
        return RatFunc(self.F, self.den, self.num)

    def __eq__(self, other):
        return (isinstance(other, RatFunc) and self.num == other.num
                and self.den == other.den)

    def __repr__(self):
        def s(p):
            if not p:
                return "0"
            return " + ".join(f"{c.code}*u^{i}" if i else str(c.code)
                              for i, c in enumerate(p) if not c.is_zero())
        return s(self.num) if self.den == (self.F.one(),) else f"({s(self.num)})/({s(self.den)})"


# ---------------------------------------------------------------------------
# closed points


@dataclass(frozen=True)
class ClosedPointP1:
    """A monic irreducible pi(u), or the point at infinity."""

    field: FqField
    poly: tuple = None  # None marks infinity

    @property
    def is_inf(self):
        return self.poly is None

    @property
    def degree(self):
        return 1 if self.is_inf else pdeg(self.poly)

    def sort_key(self):
        if self.is_inf:
            return (0,)
        return (1, self.degree) + tuple(c.code for c in self.poly)

    def __repr__(self):
        if self.is_inf:
            return "inf"
        return "(" + " + ".join(f"{c.code}u^{i}" if i else str(c.code)
                                for i, c in enumerate(self.poly)) + ")"


def infinity(F: FqField) -> ClosedPointP1:
    return ClosedPointP1(F)


def affine_point(F: FqField, coeffs) -> ClosedPointP1:
    pi = poly_from_ints(F, coeffs) if not (coeffs and isinstance(coeffs[0], FqElem)) \
        else pnorm(coeffs)
    if pdeg(pi) < 1 or not (pi[-1] == F.one()):
        raise HlfError("closed points need a monic polynomial of degree >= 1")
    if not _is_irreducible_poly(F, pi):
        raise HlfError("polynomial is not irreducible")
    return ClosedPointP1(F, pi)


def _all_monic(F, d):
    q = F.q
    for code in range(q ** d):
        c = code
        coeffs = []
        for _ in range(d):
            coeffs.append(FqElem(F, c % q))
            c //= q
        yield tuple(coeffs) + (F.one(),)


def _is_irreducible_poly(F, f) -> bool:
    d = pdeg(f)
    if d == 1:
        return True
    for e in range(1, d // 2 + 1):
        for g in _all_monic(F, e):
            if _is_irreducible_poly(F, g) and not pmod(F, f, g):
                return False
    return True


def closed_points(q: int, degree_bound: int) -> list[ClosedPointP1]:
    """All monic irreducibles of degree <= bound, plus infinity."""
    if degree_bound < 1:
        raise HlfError("degree bound must be >= 1")
    p, k = _prime_power(q)
    F = fq_make(p, k)
    out = [infinity(F)]
    for d in range(1, degree_bound + 1):
        for f in _all_monic(F, d):
            if _is_irreducible_poly(F, f):
                out.append(ClosedPointP1(F, f))
    return out


def _prime_power(q):
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            while q % p == 0:
                q //= p
                k += 1
            if q != 1:
                raise HlfError("not a prime power")
            return p, k
    raise HlfError("not a prime power")


# ---------------------------------------------------------------------------
# local expansions


@dataclass
class LocalExpansion:
    """Truncated pi-adic Laurent expansion: coefficients (polys mod pi) for
    exponents in [lo, hi)."""

    point: ClosedPointP1
    lo: int
    coeffs: list
    # hi = lo + len(coeffs)

    @property
    def hi(self):
        return self.lo + len(self.coeffs)

    def valuation(self):
        for i, c in enumerate(self.coeffs):
            if c:
                return self.lo + i
        return None  # zero on the window

    def coeff(self, j):
        if self.lo <= j < self.hi:
            return self.coeffs[j - self.lo]
        return ()

    def is_zero_on_window(self):
        return self.valuation() is None

    def __add__(self, other):
        _same_point(self, other)
        lo = min(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        F = self.point.field
        out = []
        for j in range(lo, hi):
            out.append(padd(F, self.coeff(j), other.coeff(j)))
        return LocalExpansion(self.point, lo, out)

    def __mul__(self, other):
        _same_point(self, other)
        F = self.point.field
        pi = self.point.poly
        va = self.valuation()
        vb = other.valuation()
        if va is None or vb is None:
            lo = (self.lo if va is None else va) + (other.lo if vb is None else vb)
            return LocalExpansion(self.point, lo, [])
        hi = min(self.hi + vb, other.hi + va)
        lo = va + vb
        raw = [() for _ in range(hi - lo)]
        for i in range(va, self.hi):
            ci = self.coeff(i)
            if not ci:
                continue
            for j in range(vb, other.hi):
                if not (lo <= i + j < hi):
                    continue
                cj = other.coeff(j)
                if not cj:
                    continue
                raw[i + j - lo] = padd(F, raw[i + j - lo], pmul(F, ci, cj))
        if self.point.is_inf:
            return LocalExpansion(self.point, lo, raw)
        # carry pass: a product of reduced coefficients may exceed deg(pi)
        # and its quotient belongs to the next pi-power
        out = []
        carry = ()
        for c in raw:
            c = padd(F, c, carry)
            carry, r = pdivmod(F, c, pi)
            out.append(r)
        return LocalExpansion(self.point, lo, out)

    def __eq__(self, other):
        """Agreement on the shared window [min lo, min hi)."""
        if not isinstance(other, LocalExpansion) or self.point != other.point:
            return False
        lo = min(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return all(self.coeff(j) == other.coeff(j) for j in range(lo, hi))


def _same_point(a, b):
    if a.point != b.point:
        raise HlfError("local expansions at different points")


def complete_at(x: ClosedPointP1, f: RatFunc, prec: int) -> LocalExpansion:
    """The image of f in the completed local field at x, mod pi^prec."""
    F = x.field
    if f.is_zero():
        return LocalExpansion(x, prec, [])
    if x.is_inf:
        # expand in w = 1/u: f = w^(deg den - deg num) * num_rev / den_rev,
        # where rev reverses coefficients (constant term = old leading one)
        num, den = f.num, f.den
        v = pdeg(den) - pdeg(num)
        n1 = pnorm(tuple(reversed(num)))
        d1 = pnorm(tuple(reversed(den)))
        w = (F.zero(), F.one())
        digits = []
        for _ in range(v, prec):
            c = (n1[0] if n1 else F.zero()) * d1[0].inv()
            digits.append((c,) if not c.is_zero() else ())
            n1 = padd(F, n1, pneg(F, pmul(F, (c,), d1)))
            n1 = pdivmod(F, n1, w)[0] if n1 else ()
        return LocalExpansion(x, v, digits)
    pi = x.poly
    num, den = f.num, f.den
    a = ord_at(F, num, pi)
    b = ord_at(F, den, pi)
    v = a - b
    for _ in range(a):
        num = pdivmod(F, num, pi)[0]
    for _ in range(b):
        den = pdivmod(F, den, pi)[0]
    dinv = pinv_mod(F, den, pi)
    digits = []
    for _ in range(v, prec):
        c = pmod(F, pmul(F, num, dinv), pi)
        digits.append(c)
        num = padd(F, num, pneg(F, pmul(F, c, den)))
        num = pdivmod(F, num, pi)[0] if num else ()
    return LocalExpansion(x, v, digits)


# ---------------------------------------------------------------------------
# divisors


@dataclass
class DivisorP1:
    """Finite formal sum of closed points with integer coefficients."""

    coeffs: dict

    def __post_init__(self):
        self.coeffs = {x: n for x, n in self.coeffs.items() if n}

    def degree(self):
        return sum(n * x.degree for x, n in self.coeffs.items())

    def mult(self, x):
        return self.coeffs.get(x, 0)

    def support(self):
        return sorted(self.coeffs, key=lambda x: x.sort_key())

    def __add__(self, other):
        out = dict(self.coeffs)
        for x, n in other.coeffs.items():
            out[x] = out.get(x, 0) + n
        return DivisorP1(out)

    def __neg__(self):
        return DivisorP1({x: -n for x, n in self.coeffs.items()})


def principal_divisor(factors) -> DivisorP1:
    """div(f) for f given in factored form [(point, exponent), ...]."""
    out = {}
    deg = 0
    for x, e in factors:
        if x.is_inf:
            raise HlfError("give only the affine factorisation; infinity is implied")
        out[x] = out.get(x, 0) + e
        deg += e * x.degree
    inf = infinity(next(iter(out)).field) if out else None
    if inf is not None:
        out[inf] = out.get(inf, 0) - deg
    return DivisorP1(out)


# ---------------------------------------------------------------------------
# adele vectors in dimension one


@dataclass
class AdeleVector1:
    """Finitely many explicit local components; the rest defaults to the
    stated constant (exact zero, or one for the multiplicative identity) --
    in either case integral, so restrictedness holds by construction."""

    field: FqField
    comps: dict
    default: str = "zero"  # "zero" | "one"
    bound: DivisorP1 = None

    def component(self, x: ClosedPointP1, prec: int = 8) -> LocalExpansion:
        if x in self.comps:
            return self.comps[x]
        if self.default == "zero":
            return LocalExpansion(x, prec, [])
        one_c = (self.field.one(),)
        return LocalExpansion(x, 0, [one_c] + [()] * (prec - 1))

    def support(self):
        return sorted(self.comps, key=lambda x: x.sort_key())


def adele_diag(F: FqField, f: RatFunc, points, prec: int = 8) -> AdeleVector1:
    return AdeleVector1(F, {x: complete_at(x, f, prec) for x in points})


def adele_add(a: AdeleVector1, b: AdeleVector1) -> AdeleVector1:
    if a.default != "zero" or b.default != "zero":
        raise HlfError("addition needs zero-default vectors")
    out = dict(a.comps)
    for x, c in b.comps.items():
        out[x] = out[x] + c if x in out else c
    return AdeleVector1(a.field, out)


def adele_mul(a: AdeleVector1, b: AdeleVector1) -> AdeleVector1:
    """Componentwise product over the union of explicit supports."""
    if a.field != b.field:
        raise HlfError("adeles over different fields")
    pts = set(a.comps) | set(b.comps)
    out = {x: a.component(x) * b.component(x) for x in pts}
    default = "one" if (a.default == "one" and b.default == "one") else "zero"
    return AdeleVector1(a.field, out, default=default)


def adele_one(F: FqField) -> AdeleVector1:
    return AdeleVector1(F, {}, default="one")


# ---------------------------------------------------------------------------
# linear algebra over F_q (integer codes, table-driven)


def rank_of(F: FqField, rows, ncols) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(rows)):
            if rows[i][col]:
                piv = i
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pinv = F.inv_code(rows[rank][col])
        row = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                c = F.mul_code(rows[i][col], pinv)
                this = rows[i]
                for j in range(col, ncols):
                    if row[j]:
                        this[j] = F.add_code(this[j], F.neg_code(F.mul_code(c, row[j])))
        rank += 1
        if rank == len(rows):
            break
    return rank


def solve_linear(F: FqField, rows, rhs):
    """One solution of rows * x = rhs over F_q, or None if inconsistent."""
    n = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    rank = 0
    for col in range(n):
        piv = None
        for i in range(rank, len(aug)):
            if aug[i][col]:
                piv = i
                break
        if piv is None:
            continue
        aug[rank], aug[piv] = aug[piv], aug[rank]
        pinv = F.inv_code(aug[rank][col])
        aug[rank] = [F.mul_code(v, pinv) for v in aug[rank]]
        for i in range(len(aug)):
            if i != rank and aug[i][col]:
                c = aug[i][col]
                aug[i] = [F.add_code(v, F.neg_code(F.mul_code(c, w)))
                          for v, w in zip(aug[i], aug[rank])]
        pivots.append(col)
        rank += 1
    for i in range(rank, len(aug)):
        if aug[i][n]:
            return None
    x = [0] * n
    for i, col in enumerate(pivots):
        x[col] = aug[i][n]
    return x


# ---------------------------------------------------------------------------
# cohomology of divisors on P^1


@dataclass
class CohomologyResult:
    h0: int
    h1: int
    window: int
    stable: bool


def _basis_of_bounded_functions(F, points, T):
    """A basis of the rational functions with pole order <= T at each of the
    given points (which must include infinity) and no other poles."""
    basis = []
    u = (F.zero(), F.one())
    for k in range(T + 1):
        mono = poly_from_ints(F, [0] * k + [1])
        basis.append(RatFunc(F, mono))
    for x in points:
        if x.is_inf:
            continue
        d = x.degree
        den = (F.one(),)
        for j in range(1, T + 1):
            den = pmul(F, den, x.poly)
            for i in range(d):
                num = poly_from_ints(F, [0] * i + [1])
                basis.append(RatFunc(F, num, den))
    return basis


def _flatten(c, d):
    """Residue-field coefficient (poly mod pi, degree < d) -> d field codes."""
    out = [0] * d
    for i, e in enumerate(c):
        out[i] = e.code
    return out


def _principal_part_matrix(F, basis, points, depth_lo, depth_hi):
    """Rows: expansions of basis elements; columns: coefficient coordinates
    at exponents [depth_lo[x], depth_hi[x]) for each x."""
    rows = []
    for b in basis:
        row = []
        for x in points:
            d = x.degree
            hi = depth_hi[x]
            exp = complete_at(x, b, hi)
            for j in range(depth_lo[x], hi):
                row.extend(_flatten(exp.coeff(j), d))
        rows.append(row)
    ncols = sum((depth_hi[x] - depth_lo[x]) * x.degree for x in points)
    return rows, ncols


def _cohomology_at_window(F, D: DivisorP1, points, T):
    basis = _basis_of_bounded_functions(F, points, T)
    depth_lo = {x: -T for x in points}
    depth_hi = {x: -D.mult(x) for x in points}
    for x in points:
        if depth_hi[x] < depth_lo[x]:
            depth_hi[x] = depth_lo[x]
    rows, ncols = _principal_part_matrix(F, basis, points, depth_lo, depth_hi)
    r = rank_of(F, rows, ncols)
    return len(basis) - r, ncols - r


def cohomology_P1(D: DivisorP1, q: int = None, t_max: int = 60) -> CohomologyResult:
    """h^0 and h^1 of O(D) on P^1, by truncated adelic linear algebra.

    Dimensions are recomputed at window T and T+5 and only reported when
    they agree; growing past t_max raises WindowInstabilityError.
    """
    if D.coeffs:
        F = next(iter(D.coeffs)).field
    else:
        if q is None:
            raise HlfError("empty divisor needs the field size q")
        p, k = _prime_power(q)
        F = fq_make(p, k)
    points = set(D.support()) | {infinity(F)}
    points = sorted(points, key=lambda x: x.sort_key())
    maxmult = max((abs(n) for n in D.coeffs.values()), default=0)
    T = max(3, maxmult + 1)
    prev = _cohomology_at_window(F, D, points, T)
    while T + 5 <= t_max:
        cur = _cohomology_at_window(F, D, points, T + 5)
        if cur == prev:
            return CohomologyResult(prev[0], prev[1], T, True)
        T += 5
        prev = cur
    raise WindowInstabilityError(
        f"dimensions did not stabilise below window {t_max}")


# ---------------------------------------------------------------------------
# weak approximation


def weak_approx(targets, c: int, F: FqField = None, max_rounds: int = 4) -> RatFunc:
    """f with v_x(f - a_x) >= c at every listed (x, a_x), via linear algebra
    on a pole-bounded function space.  An empty target list yields 0."""
    if not targets:
        if F is None:
            raise HlfError("an empty target list needs an explicit field")
        return RatFunc(F, ())
    F = targets[0][0].field
    pts = [x for x, _ in targets]
    if len(set(pts)) != len(pts):
        raise HlfError("target points must be distinct")
    space_pts = set(pts) | {infinity(F)}
    # one auxiliary point outside the targets, so approximants may dump
    # their correction poles somewhere unconstrained
    deg = 1
    while True:
        aux = next((ClosedPointP1(F, f) for f in _all_monic(F, deg)
                    if _is_irreducible_poly(F, f)
                    and ClosedPointP1(F, f) not in space_pts), None)
        if aux is not None:
            space_pts.add(aux)
            break
        deg += 1
    space_pts = sorted(space_pts, key=lambda x: x.sort_key())

    def _val(x, a):
        v = complete_at(x, a, max(c, 1)).valuation()
        return 0 if v is None else v

    extra = sum(max(0, -_val(x, a)) for x, a in targets)
    M = max(1, c) + extra + 1
    for _ in range(max_rounds):
        basis = _basis_of_bounded_functions(F, space_pts, M)
        rhs = []
        coords = []
        for x, a in targets:
            d = x.degree
            ax = complete_at(x, a, c)
            lo = min(-M, _val(x, a))
            bexp = [complete_at(x, b, c) for b in basis]
            for j in range(lo, c):
                target_c = _flatten(ax.coeff(j), d)
                for t_i in range(d):
                    row = [_flatten(be.coeff(j), d)[t_i] for be in bexp]
                    coords.append(row)
                    rhs.append(target_c[t_i])
        sol = solve_linear(F, coords, rhs)
        if sol is not None:
            f = RatFunc(F, ())
            for lam, b in zip(sol, basis):
                if lam:
                    coef = RatFunc(F, (FqElem(F, lam),))
                    f = f + coef * b
            return f
        M += max(1, c)
    raise HlfError("no approximant found (window exhausted)")


# ---------------------------------------------------------------------------
# dimension two: coordinate flags on the affine plane


@dataclass(frozen=True)
class SurfaceFlag:
    """A full flag (generic point, coordinate curve, rational point)."""

    field: FqField
    curve_var: str      # "s": y = V(s - a); "u": y = V(u - b)
    curve_val: FqElem
    point: tuple        # (a, b) with s = a, u = b

    def __post_init__(self):
        a, b = self.point
        on = a if self.curve_var == "s" else b
        if not (on == self.curve_val):
            raise HlfError("the point does not lie on the curve")


def flag_on(F: FqField, curve_var: str, curve_val, a, b) -> SurfaceFlag:
    return SurfaceFlag(F, curve_var, F.elem(curve_val), (F.elem(a), F.elem(b)))


# two-variable polynomials: {(i_s, j_u): FqElem}


def poly2_from_ints(F, d: dict) -> dict:
    out = {}
    for e, c in d.items():
        el = F.elem(c)
        if not el.is_zero():
            out[e] = el
    return out


def poly2_mul(F, da, db):
    out = {}
    for ea, ca in da.items():
        for eb, cb in db.items():
            e = (ea[0] + eb[0], ea[1] + eb[1])
            out[e] = out.get(e, F.zero()) + ca * cb
    return {e: c for e, c in out.items() if not c.is_zero()}


def poly2_shift(F, d, var_index, cval: FqElem):
    """Substitute x -> x + c in the chosen variable (0 = s, 1 = u)."""
    out = {}
    for e, coef in d.items():
        k = e[var_index]
        # expand (x + c)^k by iterated multiplication
        expn = {(0, 0): F.one()}
        lin = {(1, 0) if var_index == 0 else (0, 1): F.one()}
        if not cval.is_zero():
            lin[(0, 0)] = cval
        for _ in range(k):
            expn = poly2_mul(F, expn, lin)
        base = {(0, e[1]) if var_index == 0 else (e[0], 0): coef}
        term = poly2_mul(F, base, expn)
        for ee, cc in term.items():
            out[ee] = out.get(ee, F.zero()) + cc
    return {e: c for e, c in out.items() if not c.is_zero()}


def _scalar(tower, c: FqElem) -> Element:
    from .towers import BaseFq as _BaseFq
    if isinstance(tower, _BaseFq):
        return Element(tower, True, base=c)
    return const(tower, _scalar(tower.inner, c))


def _embed_poly2(tower, d, s_elt, u_elt) -> Element:
    acc = zero(tower)
    for (i, j), c in sorted(d.items()):
        term = _scalar(tower, c)
        if i:
            term = mul(term, power(s_elt, i))
        if j:
            term = mul(term, power(u_elt, j))
        acc = add(acc, term)
    return acc


def local_factor_dim2(flag: SurfaceFlag, prec=None):
    """The local field at the flag plus the embedding of F_q(s, u) into it.

    For y = V(s - a): the tower F_q((u - b))((s - a)) with the shifted
    variables named u1 (inner) and s1 (outer); for y = V(u - b) the roles
    swap.  The embedding accepts (num, den) pairs of 2-variable polynomial
    dicts over exponents (i_s, j_u).
    """
    F = flag.field
    a, b = flag.point
    if flag.curve_var == "s":
        names = ("u1", "s1")
    else:
        names = ("s1", "u1")
    c = chain(poly_local(F.q, 2, names=names), names)
    tower = hl(c)
    s_elt = add(var_element(tower, "s1", prec), _scalar(tower, a))
    u_elt = add(var_element(tower, "u1", prec), _scalar(tower, b))

    def embed2(num: dict, den: dict = None) -> Element:
        nd = poly2_from_ints(F, num) if _needs_coercion(num) else num
        top = _embed_poly2(tower, nd, s_elt, u_elt)
        if den is None:
            return top
        dd = poly2_from_ints(F, den) if _needs_coercion(den) else den
        bot = _embed_poly2(tower, dd, s_elt, u_elt)
        if status(bot) != NONZERO:
            raise HlfError("denominator vanishes at working precision on the flag")
        return mul(top, inv(bot))

    return tower, embed2


def _needs_coercion(d):
    return any(not isinstance(c, FqElem) for c in d.values())


# ---------------------------------------------------------------------------
# curve-level expansions: F_q(s,u) -> (coefficients in F_q(u))((s - a))


def curve_expansion(F: FqField, num: dict, den: dict, curve_var: str,
                    curve_val: FqElem, r_lo_cap: int, r_max: int):
    """s1-adic coefficients of num/den along the curve, each in F_q(t) where
    t is the curve coordinate.  Returns (v, [c_v, ..., c_(r_max-1)]).

    For curve_var == "u" the roles of the variables are swapped first.
    """
    if curve_var == "u":
        num = {(j, i): c for (i, j), c in num.items()}
        den = {(j, i): c for (i, j), c in den.items()}
    num = poly2_shift(F, _coerce2(F, num), 0, curve_val)
    den = poly2_shift(F, _coerce2(F, den), 0, curve_val)

    def split(d):
        # dict s1-exponent -> poly in the curve coordinate
        out = {}
        for (i, j), c in d.items():
            cur = out.setdefault(i, {})
            cur[j] = cur.get(j, F.zero()) + c
        polys = {}
        for i, row in out.items():
            deg = max(row) if row else 0
            polys[i] = pnorm(tuple(row.get(k, F.zero()) for k in range(deg + 1)))
        return {i: p for i, p in polys.items() if p}

    nsplit, dsplit = split(num), split(den)
    if not nsplit:
        return 0, [RatFunc(F, ())] * r_max
    if not dsplit:
        raise ZeroDivisionError("zero denominator")
    b = min(dsplit)
    a = min(nsplit)
    v = a - b
    if v < r_lo_cap:
        raise HlfError(f"pole order along the curve exceeds the cap {-r_lo_cap}")
    # long division of Laurent series in s1 with F_q(u) coefficients
    dshift = {i - b: RatFunc(F, p) for i, p in dsplit.items()}
    nshift = {i - a: RatFunc(F, p) for i, p in nsplit.items()}
    d0inv = dshift[0].inv()
    coeffs = []
    cur = dict(nshift)
    for k in range(0, r_max - v):
        ck = cur.get(0, RatFunc(F, ())) * d0inv
        coeffs.append(ck)
        # cur = (cur - ck * dshift) / s1
        for i, di in dshift.items():
            upd = cur.get(i, RatFunc(F, ())) - ck * di
            if upd.is_zero():
                cur.pop(i, None)
            else:
                cur[i] = upd
        cur = {i - 1: x for i, x in cur.items() if i >= 1}
    return v, coeffs


def _coerce2(F, d):
    return poly2_from_ints(F, d) if _needs_coercion(d) else d


# ---------------------------------------------------------------------------
# membership predicates (window-relative)


@dataclass
class Verdict:
    consistent: bool
    witnesses: list = field(default_factory=list)
    divisor: dict = None
    detail: str = ""


class DiagonalCurveFamily:
    """f_{x,y} = image of one global rational function at every x on y."""

    def __init__(self, F, num, den=None):
        self.F = F
        self.num = _coerce2(F, num)
        self.den = _coerce2(F, den) if den is not None else {(0, 0): F.one()}

    def coefficients(self, curve_var, curve_val, r_max):
        return curve_expansion(self.F, self.num, self.den, curve_var,
                               curve_val, -r_max, r_max)


class ExplicitCurveFamily:
    """Finitely many explicit components on one curve; zero elsewhere."""

    def __init__(self, F, entries: dict):
        # entries: point-poly tuple -> list of RatFunc (s1-coefficients)
        self.F = F
        self.entries = entries


class PointwiseCurveFamily:
    """Components given by a per-point rule (used to build counterexamples)."""

    def __init__(self, F, rule):
        self.F = F
        self.rule = rule  # callable: pi poly -> list of RatFunc


def _window_points(F, degree_bound):
    pts = []
    for d in range(1, degree_bound + 1):
        for f in _all_monic(F, d):
            if _is_irreducible_poly(F, f):
                pts.append(f)
    return pts


def a12_member(family, curve_var, curve_val, degree_bound: int,
               r_max: int) -> Verdict:
    """Window-relative test of the integral-adele condition on one curve:
    outside a finite set, components must lie in O_x + p_{x,y}^r for all
    r <= r_max.  Components must be integral along the curve itself."""
    F = family.F
    if isinstance(family, ExplicitCurveFamily):
        # the explicit components are the allowed finite exception set and
        # the default is zero, which is integral everywhere
        return Verdict(True, detail="zero default; finitely many explicit components")
    if isinstance(family, DiagonalCurveFamily):
        v, coeffs = family.coefficients(curve_var, curve_val, r_max)
        if v < 0:
            raise HlfError("component not integral along the curve "
                           f"(pole of order {-v} in the curve equation)")
        pad = [RatFunc(F, ())] * v + coeffs
        witnesses = []
        for pi in _window_points(F, degree_bound):
            for i, c in enumerate(pad[:r_max]):
                if not c.is_zero() and ord_at(F, c.den, pi) > 0:
                    witnesses.append((pi, i))
                    break
        # rational coefficients have finitely many poles: consistent, with
        # the window exceptions listed as witnesses of the exceptional set
        return Verdict(True, witnesses=witnesses,
                       detail="diagonal family: exceptional set = coefficient poles")
    if isinstance(family, PointwiseCurveFamily):
        def exceptions(bound):
            out = []
            for pi in _window_points(F, bound):
                coeffs = family.rule(pi)
                for i, c in enumerate(coeffs[:r_max]):
                    if not c.is_zero() and ord_at(F, c.den, pi) > 0:
                        out.append((pi, i + 1))
                        break
            return out
        small = exceptions(max(1, degree_bound - 1))
        full = exceptions(degree_bound)
        grew = len(full) > len(small)
        if grew:
            return Verdict(False, witnesses=full,
                           detail="exceptional set grows with the window")
        return Verdict(True, witnesses=full,
                       detail="exceptional set stable across sub-windows")
    raise HlfError(f"unsupported family {family!r}")


def a012_member(family_by_curve, r_max: int, degree_bound: int = 2) -> Verdict:
    """Window-relative test of the full rational-adele conditions: a single
    effective divisor must bound all curve-level pole orders (condition 1),
    and each curve family must satisfy the integral condition (condition 2).

    family_by_curve: list of (curve_var, curve_val, family, pole_order) in
    window-enumeration order.  The pole order is the pole of the family
    along its own curve (0 for an integral family).  Divisor existence is
    decided per the family kinds: diagonal and explicit families have a
    fixed finite pole divisor; for rule-built families the pole orders are
    compared across the first and second halves of the enumeration, and
    growth in the tail is reported as a violation with witnesses.
    """
    needed = {}
    rule_poles = []
    for cvar, cval, family, pole in family_by_curve:
        if pole > 0:
            needed[(cvar, cval.code)] = pole
        if isinstance(family, PointwiseCurveFamily):
            rule_poles.append(((cvar, cval.code), pole))
        if pole == 0:
            sub = a12_member(family, cvar, cval, degree_bound, r_max)
            if not sub.consistent:
                return Verdict(False, witnesses=sub.witnesses,
                               detail=f"condition (2) fails on {cvar}={cval.code}: "
                                      + sub.detail)
    if rule_poles:
        half = len(rule_poles) // 2
        head = max((p for _, p in rule_poles[:half]), default=0)
        tail = max((p for _, p in rule_poles[half:]), default=0)
        if tail > head and tail > 0:
            witnesses = [rp for rp in rule_poles if rp[1] > head][-3:]
            return Verdict(False, witnesses=witnesses,
                           detail="no single divisor bounds the pole orders: "
                                  "they keep growing across the window")
    return Verdict(True, divisor=needed,
                   detail="bounded by the divisor with the listed multiplicities")


# ---------------------------------------------------------------------------
# the boundary-diagram check


@dataclass
class BoundaryReport:
    entries: list

    @property
    def all_agree(self):
        return all(e[1] for e in self.entries)

    @property
    def max_discrepancies(self):
        return max((e[2] for e in self.entries), default=0)


def dim2_boundary_check(num: dict, den: dict, flags, s_window=4,
                        u_window=5) -> BoundaryReport:
    """Compare the two composites F -> F_{x,y} at each flag: through the
    curve completion (exact rational coefficients, then point-expanded) and
    through the point completion (nested Laurent embedding)."""
    entries = []
    for flag in flags:
        F = flag.field
        a, b = flag.point
        tower, embed2 = local_factor_dim2(flag)
        via_point = embed2(num, den)
        den_d = den if den is not None else {(0, 0): F.one()}

        v, coeffs = curve_expansion(F, _coerce2(F, num), _coerce2(F, den_d),
                                    flag.curve_var, flag.curve_val,
                                    -8 * s_window, s_window)
        pt_val = b if flag.curve_var == "s" else a
        point = ClosedPointP1(F, (-pt_val, F.one()))

        mism = 0
        checked = 0
        outer_hi = s_window
        if not via_point.exact:
            outer_hi = min(outer_hi, via_point.hi)
        for i in range(v, outer_hi):
            c_rat = coeffs[i - v]
            col = via_point.coeffs.get(i)
            exp = complete_at(point, c_rat, u_window)
            hi = exp.hi
            if col is not None and not col.exact:
                hi = min(hi, col.hi)
            for j in range(exp.lo, hi):
                want = exp.coeff(j)
                wantc = want[0].code if want else 0
                gotc = 0
                if col is not None and j in col.coeffs:
                    gotc = col.coeffs[j].base.code
                checked += 1
                if wantc != gotc:
                    mism += 1
        entries.append((flag, mism == 0 and checked > 0, mism, checked))
    return BoundaryReport(entries)
