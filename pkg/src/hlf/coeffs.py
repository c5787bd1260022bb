"""Exact base-coefficient arithmetic: F_q, fixed-precision p-adics, rationals.

Finite fields F_{p^k} are realised as F_p[X]/(m) where m is the first monic
irreducible of degree k in the base-p encoding order, so the same (p, k)
always produces the same field.  Elements are stored as a single integer
code sum(c_i * p^i); small fields precompute multiplication and inversion
tables, which keeps the linear algebra in the adelic module fast.

p-adic numbers carry an explicit absolute precision M ("known mod p^M").
A nonzero value is a pair (v, unit) with unit a unit residue mod p^(M-v);
zero is a distinguished flag carrying only its precision, and an `exact`
bit records whether it is the true zero or merely O(p^M).  Values that come
from rationals remember the rational, so sums and products of such values
never lose digits below their declared precision.

Rationals are `fractions.Fraction` throughout.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import HlfError, PrecisionError

_TABLE_LIMIT = 256  # build F_q op tables up to this q


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, int(n ** 0.5) + 1):
        if n % d == 0:
            return False
    return True


# ---------------------------------------------------------------------------
# polynomials over F_p as little-endian int tuples (internal helpers)

def _pnorm(f):
    while f and f[-1] == 0:
        f = f[:-1]
    return f


def _padd(f, g, p):
    n = max(len(f), len(g))
    f = f + (0,) * (n - len(f))
    g = g + (0,) * (n - len(g))
    return _pnorm(tuple((a + b) % p for a, b in zip(f, g)))


def _pmul(f, g, p):
    if not f or not g:
        return ()
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return _pnorm(tuple(out))


def _pdivmod(f, g, p):
    g = _pnorm(g)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    q = [0] * max(0, len(f) - len(g) + 1)
    r = list(f)
    ginv = pow(g[-1], -1, p)
    while len(_pnorm(tuple(r))) >= len(g):
        r = list(_pnorm(tuple(r)))
        shift = len(r) - len(g)
        c = (r[-1] * ginv) % p
        q[shift] = c
        for i, b in enumerate(g):
            r[shift + i] = (r[shift + i] - c * b) % p
    return _pnorm(tuple(q)), _pnorm(tuple(r))


def _pmod(f, g, p):
    return _pdivmod(f, g, p)[1]


def _pgcd(f, g, p):
    f, g = _pnorm(f), _pnorm(g)
    while g:
        f, g = g, _pmod(f, g, p)
    if f:
        c = pow(f[-1], -1, p)
        f = tuple((a * c) % p for a in f)
    return f


def _ppowmod(f, e, m, p):
    acc = (1,)
    f = _pmod(f, m, p)
    while e:
        if e & 1:
            acc = _pmod(_pmul(acc, f, p), m, p)
        f = _pmod(_pmul(f, f, p), m, p)
        e >>= 1
    return acc


def _pinvmod(f, m, p):
    # extended Euclid in F_p[X]
    r0, r1 = _pnorm(m), _pnorm(f)
    s0, s1 = (), (1,)
    while r1:
        q, r = _pdivmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _padd(s0, tuple((-c) % p for c in _pmul(q, s1, p)), p)
    if len(r0) != 1:
        raise ZeroDivisionError("element not invertible")
    c = pow(r0[0], -1, p)
    return _pmod(tuple((a * c) % p for a in s0), m, p)


def _is_irreducible(f, p) -> bool:
    # Rabin test: X^(p^k) = X mod f and gcd(X^(p^(k/d)) - X, f) = 1
    k = len(f) - 1
    if k < 1:
        return False
    x = (0, 1)
    xp = _ppowmod(x, p ** k, f, p)
    if _pnorm(_padd(xp, tuple((-c) % p for c in x), p)):
        return False
    d = 2
    kk = k
    primes = []
    while d * d <= kk:
        if kk % d == 0:
            primes.append(d)
            while kk % d == 0:
                kk //= d
        d += 1
    if kk > 1:
        primes.append(kk)
    for q in primes:
        xq = _ppowmod(x, p ** (k // q), f, p)
        g = _pgcd(_padd(xq, tuple((-c) % p for c in x), p), f, p)
        if len(g) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# F_q

_FIELD_CACHE: dict[tuple[int, int], "FqField"] = {}


class FqField:
    """The finite field F_{p^k} with a deterministic modulus choice."""

    def __init__(self, p: int, k: int, _token=None):
        if _token is not _FIELD_CACHE:
            raise HlfError("use fq_make(p, k)")
        self.p = p
        self.k = k
        self.q = p ** k
        self.modulus = self._find_modulus(p, k)
        self._mul_table = None
        self._inv_table = None
        if self.q <= _TABLE_LIMIT:
            self._build_tables()

    @staticmethod
    def _find_modulus(p, k):
        if k == 1:
            return (0, 1)  # X
        for code in range(p ** k):
            f = tuple((code // p ** i) % p for i in range(k)) + (1,)
            if _is_irreducible(f, p):
                return f
        raise HlfError("no irreducible polynomial found")  # unreachable

    # encoding: element sum(c_i X^i) <-> integer sum(c_i p^i)
    def _decode(self, code):
        p, k = self.p, self.k
        return tuple((code // p ** i) % p for i in range(k))

    def _encode(self, rep):
        return sum(c * self.p ** i for i, c in enumerate(rep))

    def _raw_mul(self, a, b):
        f = _pmod(_pmul(_pnorm(self._decode(a)), _pnorm(self._decode(b)), self.p),
                  self.modulus, self.p)
        return self._encode(f)

    def _raw_inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_q")
        f = _pinvmod(_pnorm(self._decode(a)), self.modulus, self.p)
        return self._encode(f)

    def _build_tables(self):
        q = self.q
        self._mul_table = [[0] * q for _ in range(q)]
        self._inv_table = [0] * q
        for a in range(q):
            for b in range(a, q):
                m = self._raw_mul(a, b)
                self._mul_table[a][b] = m
                self._mul_table[b][a] = m
        for a in range(1, q):
            self._inv_table[a] = self._raw_inv(a)

    # integer-code arithmetic (used heavily by the adelic linear algebra)
    def add_code(self, a: int, b: int) -> int:
        p, k = self.p, self.k
        out = 0
        pw = 1
        for _ in range(k):
            out += ((a % p + b % p) % p) * pw
            a //= p
            b //= p
            pw *= p
        return out

    def neg_code(self, a: int) -> int:
        p, k = self.p, self.k
        out = 0
        pw = 1
        for _ in range(k):
            out += ((-(a % p)) % p) * pw
            a //= p
            pw *= p
        return out

    def mul_code(self, a: int, b: int) -> int:
        if self._mul_table is not None:
            return self._mul_table[a][b]
        return self._raw_mul(a, b)

    def inv_code(self, a: int) -> int:
        if self._inv_table is not None:
            if a == 0:
                raise ZeroDivisionError("inverse of zero in F_q")
            return self._inv_table[a]
        return self._raw_inv(a)

    def elem(self, value) -> "FqElem":
        """Coerce an int (reduced mod p) or coefficient sequence into the field."""
        if isinstance(value, FqElem):
            if value.field is not self:
                raise HlfError("element of a different field")
            return value
        if isinstance(value, int):
            return FqElem(self, value % self.p)
        rep = tuple(int(c) % self.p for c in value)
        if len(rep) > self.k:
            raise HlfError("coefficient sequence too long")
        rep = rep + (0,) * (self.k - len(rep))
        return FqElem(self, self._encode(rep))

    def zero(self):
        return FqElem(self, 0)

    def one(self):
        return FqElem(self, 1)

    def elements(self):
        """All q elements, in the deterministic code order."""
        return [FqElem(self, c) for c in range(self.q)]

    def __eq__(self, other):
        return isinstance(other, FqField) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash(("FqField", self.p, self.k))

    def __repr__(self):
        return f"F_{self.q}" if self.k == 1 else f"F_{self.q} = F_{self.p}[X]/{self.modulus}"


def fq_make(p: int, k: int = 1) -> FqField:
    """Return F_{p^k}; the modulus only depends on (p, k)."""
    if not is_prime(p):
        raise HlfError(f"{p} is not prime")
    if k < 1:
        raise HlfError("extension degree must be >= 1")
    key = (p, k)
    if key not in _FIELD_CACHE:
        _FIELD_CACHE[key] = FqField(p, k, _token=_FIELD_CACHE)
    return _FIELD_CACHE[key]


class FqElem:
    """Element of an FqField, stored as its integer code."""

    __slots__ = ("field", "code")

    def __init__(self, field: FqField, code: int):
        self.field = field
        self.code = code

    def rep(self):
        return self.field._decode(self.code)

    def is_zero(self) -> bool:
        return self.code == 0

    def __add__(self, other):
        other = self.field.elem(other)
        return FqElem(self.field, self.field.add_code(self.code, other.code))

    __radd__ = __add__

    def __neg__(self):
        return FqElem(self.field, self.field.neg_code(self.code))

    def __sub__(self, other):
        other = self.field.elem(other)
        return self + (-other)

    def __mul__(self, other):
        other = self.field.elem(other)
        return FqElem(self.field, self.field.mul_code(self.code, other.code))

    __rmul__ = __mul__

    def inv(self):
        return FqElem(self.field, self.field.inv_code(self.code))

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        acc = self.field.one()
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.field.elem(other)
        return (isinstance(other, FqElem) and other.field == self.field
                and other.code == self.code)

    def __hash__(self):
        return hash((self.field.p, self.field.k, self.code))

    def __repr__(self):
        if self.field.k == 1:
            return str(self.code)
        return f"Fq({self.code})"


# ---------------------------------------------------------------------------
# p-adic numbers at fixed precision


class PadicNum:
    """Element of Q_p known mod p^M.

    Nonzero: (v, unit) with p not dividing unit, 0 < unit < p^(M-v); v may be
    negative, and v <= M-1 is forced (otherwise the value is zero at this
    precision).  Zero: a flag plus the precision, with `exact` telling the
    true zero apart from O(p^M).  `value` optionally holds the underlying
    rational, letting arithmetic between rational inputs stay exact.
    """

    __slots__ = ("p", "prec", "v", "unit", "exact", "value")

    def __init__(self, p, prec, v=None, unit=None, exact=False, value=None):
        self.p = p
        self.prec = prec
        self.v = v
        self.unit = unit
        self.exact = exact
        self.value = value

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(p: int, M: int, exact: bool = True) -> "PadicNum":
        return PadicNum(p, M, exact=exact, value=Fraction(0) if exact else None)

    @staticmethod
    def from_rational(x, p: int, M: int) -> "PadicNum":
        """The image of a rational number, correct mod p^M."""
        x = Fraction(x)
        if x == 0:
            return PadicNum.zero(p, M, exact=True)
        num, den = x.numerator, x.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        if v >= M:
            return PadicNum(p, M, exact=False)  # all certified digits are 0
        rel = M - v
        unit = (num * pow(den, -1, p ** rel)) % p ** rel
        return PadicNum(p, M, v=v, unit=unit, value=x)

    @staticmethod
    def from_int(n: int, p: int, M: int) -> "PadicNum":
        return PadicNum.from_rational(Fraction(n), p, M)

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        return self.v is None

    def is_exact_zero(self) -> bool:
        return self.v is None and self.exact

    def valuation(self) -> int:
        if self.v is None:
            if self.exact:
                raise HlfError("the zero element has no valuation")
            raise PrecisionError(f"zero mod {self.p}^{self.prec}: valuation not certified")
        return self.v

    def rel_prec(self) -> int:
        return self.prec - self.v if self.v is not None else 0

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other):
        if self.p != other.p:
            raise HlfError(f"mismatched primes {self.p} and {other.p}")

    def _as_scaled_int(self, floor_v, modexp):
        # value * p^-floor_v as an integer mod p^modexp
        if self.v is None:
            return 0
        return (self.unit * self.p ** (self.v - floor_v)) % self.p ** modexp

    def __add__(self, other):
        self._check(other)
        p = self.p
        M = min(self.prec, other.prec)
        if self.value is not None and other.value is not None:
            out = PadicNum.from_rational(self.value + other.value, p, M)
            if out.v is None:  # cancellation down to a known-exact zero
                out.exact = self.value + other.value == 0
                out.value = Fraction(0) if out.exact else None
            return out
        if self.is_zero() and other.is_zero():
            return PadicNum.zero(p, M, exact=self.exact and other.exact)
        floor_v = min(x.v for x in (self, other) if x.v is not None)
        floor_v = min(floor_v, 0) if floor_v > 0 else floor_v
        modexp = M - floor_v
        s = (self._as_scaled_int(floor_v, modexp)
             + other._as_scaled_int(floor_v, modexp)) % p ** modexp
        if s == 0:
            return PadicNum(p, M, exact=False)
        w = 0
        while s % p == 0:
            s //= p
            w += 1
        v = floor_v + w
        if v >= M:
            return PadicNum(p, M, exact=False)
        return PadicNum(p, M, v=v, unit=s % p ** (M - v))

    def __neg__(self):
        if self.is_zero():
            return self
        val = -self.value if self.value is not None else None
        rel = self.rel_prec()
        return PadicNum(self.p, self.prec, v=self.v,
                        unit=(-self.unit) % self.p ** rel, value=val)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        p = self.p
        if self.is_exact_zero() or other.is_exact_zero():
            return PadicNum.zero(p, min(self.prec, other.prec), exact=True)
        if self.is_zero() or other.is_zero():
            # O(p^Ma) * x = O(p^(Ma + v(x)))
            za, x = (self, other) if self.is_zero() else (other, self)
            bound = za.prec + (x.v if x.v is not None else x.prec)
            return PadicNum(p, bound, exact=False)
        v = self.v + other.v
        rel = min(self.rel_prec(), other.rel_prec())
        M = v + rel
        val = None
        if self.value is not None and other.value is not None:
            val = self.value * other.value
        unit = (self.unit * other.unit) % p ** rel
        return PadicNum(p, M, v=v, unit=unit, value=val)

    def inv(self) -> "PadicNum":
        if self.is_zero():
            if self.exact:
                raise ZeroDivisionError("inversion of zero")
            raise PrecisionError("inversion of a value that is zero at working precision")
        rel = self.rel_prec()
        val = 1 / self.value if self.value is not None else None
        unit = pow(self.unit, -1, self.p ** rel)
        return PadicNum(self.p, -self.v + rel, v=-self.v, unit=unit, value=val)

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        acc = PadicNum.from_int(1, self.p, self.prec + abs(self.v or 0) * max(e, 1))
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    # -- reduction ------------------------------------------------------------

    def residue(self) -> FqElem:
        """Image in F_p (requires valuation >= 0)."""
        field = fq_make(self.p)
        if self.is_zero():
            if self.prec < 1:
                raise PrecisionError("no certified digits")
            return field.zero()
        if self.v < 0:
            raise HlfError("negative valuation: not in Z_p")
        if self.v > 0:
            return field.zero()
        return field.elem(self.unit % self.p)

    def lower_precision(self, M: int) -> "PadicNum":
        if M >= self.prec:
            return self
        if self.v is None or self.v >= M:
            return PadicNum(self.p, M, exact=self.exact and self.v is None,
                            value=self.value if self.v is None else None)
        return PadicNum(self.p, M, v=self.v, unit=self.unit % self.p ** (M - self.v),
                        value=self.value)

    def __eq__(self, other):
        """Equality of the certified residue classes (same p and precision)."""
        if not isinstance(other, PadicNum):
            return NotImplemented
        if (self.p, self.prec) != (other.p, other.prec):
            return False
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero() and self.exact == other.exact
        return (self.v, self.unit) == (other.v, other.unit)

    def __repr__(self):
        if self.is_zero():
            tag = "0" if self.exact else "O"
            return f"{tag}({self.p}^{self.prec})"
        return f"{self.unit}*{self.p}^{self.v} + O({self.p}^{self.prec})"


def padic_arith(a: PadicNum, b: PadicNum, op: str) -> PadicNum:
    """Dispatch form of the basic operations (op in {'add', 'mul', 'inv'})."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inv()
    raise HlfError(f"unknown operation {op!r}")


def teichmuller(r, p: int, M: int) -> PadicNum:
    """The multiplicative lift of r in F_p: w = r mod p with w^(p-1) = 1 mod p^M.

    Computed as the limit of r^(p^k), which stabilises after at most M steps.
    """
    if isinstance(r, FqElem):
        if r.field.k != 1:
            raise HlfError("Teichmuller lift needs a prime-field element")
        if r.field.p != p:
            raise HlfError("element lives over a different prime")
        r = r.code
    r = r % p
    if r == 0:
        return PadicNum.zero(p, M, exact=True)
    mod = p ** M
    w = r % mod
    for _ in range(M + 1):
        nxt = pow(w, p, mod)
        if nxt == w:
            break
        w = nxt
    return PadicNum(p, M, v=0, unit=w)


def padic_from_rational(x, p: int, M: int) -> PadicNum:
    return PadicNum.from_rational(x, p, M)
