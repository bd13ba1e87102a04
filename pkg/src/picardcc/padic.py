"""Capped-precision arithmetic in Q_p and in totally ramified extensions Q_p(p^(1/e)).

Elements are immutable.  A nonzero element stores (valuation v, unit, relative
precision r) and represents p^v * (unit + O(p^r)); the relative precision is
capped by the context's N.  Zero is a dedicated sentinel "O(p^k)" so that
precision exhaustion is distinguishable from a true zero.
"""

from __future__ import annotations

import math
from fractions import Fraction

import sympy

from .errors import (
    ContextMismatch,
    DivisionByZeroPrecision,
    NoCubeRoot,
    NotSimpleRoot,
)

INF = math.inf


def _pval(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class PadicContext:
    """Prime p > 3 and coefficient precision cap N (in p-adic digits)."""

    __slots__ = ("p", "N", "_pk")

    def __init__(self, p: int, N: int):
        if p <= 3 or not sympy.isprime(p):
            raise ValueError(f"p must be a prime > 3, got {p}")
        if N < 1:
            raise ValueError(f"N must be >= 1, got {N}")
        self.p = p
        self.N = N
        self._pk = {}

    def pk(self, k: int) -> int:
        """p^k, cached."""
        if k not in self._pk:
            self._pk[k] = self.p ** k
        return self._pk[k]

    def __eq__(self, other):
        return isinstance(other, PadicContext) and (self.p, self.N) == (other.p, other.N)

    def __hash__(self):
        return hash((self.p, self.N))

    def __repr__(self):
        return f"PadicContext(p={self.p}, N={self.N})"

    # constructors -------------------------------------------------------

    def zero(self, abs_prec=INF) -> "PadicElement":
        return PadicElement(self, abs_prec, 0, 0, _raw=True)

    def one(self) -> "PadicElement":
        return self.from_int(1)

    def from_int(self, n: int) -> "PadicElement":
        if n == 0:
            return self.zero()
        v = _pval(n, self.p)
        unit = (n // self.pk(v)) % self.pk(self.N)
        return PadicElement(self, v, unit, self.N, _raw=True)

    def from_rational(self, q) -> "PadicElement":
        q = Fraction(q)
        if q == 0:
            return self.zero()
        num, den = q.numerator, q.denominator
        vn, vd = _pval(num, self.p), _pval(den, self.p)
        v = vn - vd
        pN = self.pk(self.N)
        unit = (num // self.pk(vn)) * pow(den // self.pk(vd), -1, pN) % pN
        return PadicElement(self, v, unit, self.N, _raw=True)

    def element(self, x) -> "PadicElement":
        if isinstance(x, PadicElement):
            if x.ctx != self:
                raise ContextMismatch("element from a different context")
            return x
        if isinstance(x, int):
            return self.from_int(x)
        return self.from_rational(x)


class PadicElement:
    """An element of Q_p to capped relative precision.

    Nonzero: value = p^v * unit with unit a p-unit in [1, p^rel).
    Zero sentinel: unit == 0, rel == 0, and v holds the absolute precision k,
    meaning the element is O(p^k) (k = +inf for an exact zero).
    """

    __slots__ = ("ctx", "v", "unit", "rel")

    def __init__(self, ctx, v, unit, rel, _raw=False):
        if not _raw:
            raise TypeError("use PadicContext constructors")
        self.ctx = ctx
        self.v = v
        self.unit = unit
        self.rel = rel

    # predicates and accessors ------------------------------------------

    @property
    def is_zero(self) -> bool:
        """True when the element is zero to its precision."""
        return self.unit == 0

    @property
    def is_exact_zero(self) -> bool:
        return self.unit == 0 and self.v == INF

    @property
    def abs_prec(self):
        """Absolute precision: the element is known modulo p^abs_prec."""
        return self.v + self.rel if self.unit else self.v

    def valuation(self):
        """v_p; +inf for any element that is zero to precision."""
        return INF if self.unit == 0 else self.v

    def residue(self, k: int) -> int:
        """Integer representative modulo p^k (requires v >= 0 and abs_prec >= k)."""
        if self.unit == 0:
            if self.v < k:
                raise DivisionByZeroPrecision(f"zero to O(p^{self.v}) has no residue mod p^{k}")
            return 0
        if self.v < 0:
            raise ValueError("negative valuation element has no integer residue")
        if self.abs_prec < k:
            raise ValueError(f"insufficient precision ({self.abs_prec} < {k})")
        return (self.unit * self.ctx.pk(self.v)) % self.ctx.pk(k)

    def lift_int(self) -> int:
        """Integer representative mod p^abs_prec (v >= 0)."""
        if self.unit == 0:
            return 0
        return self.residue(min(self.abs_prec, self.v + self.ctx.N))

    def lift_fraction(self) -> Fraction:
        """Representative p^v*unit as an exact rational."""
        if self.unit == 0:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.ctx.p) ** self.v

    def __repr__(self):
        if self.unit == 0:
            return f"O({self.ctx.p}^{self.v})"
        return f"{self.unit}*{self.ctx.p}^{self.v} + O({self.ctx.p}^{self.v + self.rel})"

    # arithmetic ---------------------------------------------------------

    def _check(self, other) -> "PadicElement":
        if isinstance(other, (int, Fraction)):
            return self.ctx.element(other)
        if not isinstance(other, PadicElement):
            return NotImplemented
        if other.ctx != self.ctx:
            raise ContextMismatch(f"{self.ctx} vs {other.ctx}")
        return other

    def _make(self, v, s, a):
        """Build an element from p^v * s known modulo p^(a - v); s an integer."""
        ctx = self.ctx
        if a <= v:
            return ctx.zero(a if a != INF else INF)
        if a == INF:
            cap = ctx.N + (max(0, _pval(s, ctx.p)) if s else 0)
        else:
            cap = min(a - v, ctx.N + (max(0, _pval(s, ctx.p)) if s else 0))
        s %= ctx.pk(cap)
        if s == 0:
            return ctx.zero(min(a, v + cap))
        w = _pval(s, ctx.p)
        if w >= cap:
            return ctx.zero(min(a, v + cap))
        rel = min((a - v - w) if a != INF else ctx.N, ctx.N)
        unit = (s // ctx.pk(w)) % ctx.pk(rel)
        return PadicElement(ctx, v + w, unit, rel, _raw=True)

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        if self.unit == 0 and other.unit == 0:
            return self.ctx.zero(min(self.v, other.v))
        if self.unit == 0:
            return other._add_zero(self.v)
        if other.unit == 0:
            return self._add_zero(other.v)
        a = min(self.abs_prec, other.abs_prec)
        m = min(self.v, other.v)
        s = self.unit * self.ctx.pk(self.v - m) + other.unit * self.ctx.pk(other.v - m)
        return self._make(m, s, a)

    def _add_zero(self, zero_absprec):
        """Add a zero-to-precision O(p^k) to a nonzero element."""
        a = min(self.abs_prec, zero_absprec)
        if a <= self.v:
            return self.ctx.zero(a)
        rel = min(a - self.v, self.ctx.N)
        return PadicElement(self.ctx, self.v, self.unit % self.ctx.pk(rel), rel, _raw=True)

    __radd__ = __add__

    def __neg__(self):
        if self.unit == 0:
            return self
        return PadicElement(self.ctx, self.v, self.ctx.pk(self.rel) - self.unit, self.rel, _raw=True)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        if self.unit == 0 or other.unit == 0:
            # O(p^a) * (p^v unit) = O(p^(a+v)); O(p^a) * O(p^b) = O(p^(a+b))
            return self.ctx.zero(self.v + other.v)
        rel = min(self.rel, other.rel, self.ctx.N)
        unit = (self.unit * other.unit) % self.ctx.pk(rel)
        return PadicElement(self.ctx, self.v + other.v, unit, rel, _raw=True)

    __rmul__ = __mul__

    def inverse(self) -> "PadicElement":
        if self.unit == 0:
            raise DivisionByZeroPrecision(f"cannot invert {self!r}")
        unit = pow(self.unit, -1, self.ctx.pk(self.rel))
        return PadicElement(self.ctx, -self.v, unit, self.rel, _raw=True)

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n == 0:
            return self.ctx.one()
        if n < 0:
            return self.inverse() ** (-n)
        if self.unit == 0:
            return self.ctx.zero(INF if self.v == INF else self.v * n)
        unit = pow(self.unit, n, self.ctx.pk(self.rel))
        return PadicElement(self.ctx, self.v * n, unit, self.rel, _raw=True)

    # comparisons --------------------------------------------------------

    def is_congruent(self, other, k=None) -> bool:
        """Equality modulo p^k (default: the joint available precision)."""
        other = self._check(other)
        d = self - other
        if k is None:
            return d.is_zero
        return d.is_zero or d.v >= k

    def __eq__(self, other):
        try:
            other = self._check(other)
        except ContextMismatch:
            return False
        if other is NotImplemented:
            return NotImplemented
        return self.is_congruent(other)

    def __hash__(self):
        raise TypeError("PadicElement equality is to-precision; not hashable")


# --- ramified extension --------------------------------------------------


class RamifiedElement:
    """Element of Q_p(pi), pi^e = p, stored as coefficients of 1, pi, ..., pi^(e-1).

    With e = 1 the arithmetic agrees with PadicElement.  The pi-adic valuation
    is min_i(e*v_p(c_i) + i), exposed in units of 1/e as a Fraction.
    """

    __slots__ = ("ctx", "e", "coeffs")

    def __init__(self, ctx: PadicContext, e: int, coeffs):
        if e < 1:
            raise ValueError("ramification index e must be >= 1")
        coeffs = list(coeffs)
        if len(coeffs) != e:
            raise ValueError(f"need exactly e={e} coefficients, got {len(coeffs)}")
        self.ctx = ctx
        self.e = e
        self.coeffs = [ctx.element(c) for c in coeffs]

    # constructors -------------------------------------------------------

    @classmethod
    def from_padic(cls, x: PadicElement, e: int) -> "RamifiedElement":
        return cls(x.ctx, e, [x] + [x.ctx.zero()] * (e - 1))

    @classmethod
    def pi(cls, ctx: PadicContext, e: int, power: int = 1) -> "RamifiedElement":
        """pi^power for any integer power (pi^e = p)."""
        q, r = divmod(power, e)
        coeffs = [ctx.zero()] * e
        coeffs[r] = ctx.from_rational(Fraction(ctx.p) ** q)
        return cls(ctx, e, coeffs)

    @classmethod
    def zero(cls, ctx: PadicContext, e: int) -> "RamifiedElement":
        return cls(ctx, e, [ctx.zero()] * e)

    # accessors ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs)

    def valuation(self):
        """pi-adic valuation as a Fraction with denominator dividing e (inf if zero)."""
        vals = [Fraction(self.e * c.v + i, self.e) for i, c in enumerate(self.coeffs) if c.unit]
        return min(vals) if vals else INF

    def pi_valuation(self):
        """Valuation in pi-units (integer, or inf)."""
        v = self.valuation()
        return v if v == INF else int(v * self.e)

    def abs_prec_pi(self):
        """Absolute precision in pi-units: known modulo pi^k."""
        k = INF
        for i, c in enumerate(self.coeffs):
            a = c.abs_prec
            k = min(k, INF if a == INF else self.e * a + i)
        return k

    def to_padic(self, noise_floor=None) -> PadicElement:
        """Project to Q_p, requiring the pi^i (i>0) parts to vanish to precision.

        noise_floor: minimal p-adic valuation demanded of the junk coefficients
        (default: their own absolute precision, i.e. they must be zero sentinels).
        """
        junk = INF
        for i, c in enumerate(self.coeffs[1:], start=1):
            if not c.is_zero:
                if noise_floor is not None and c.v >= noise_floor:
                    junk = min(junk, c.v)
                    continue
                raise ValueError(f"pi^{i} coefficient {c!r} is not zero to precision")
        c0 = self.coeffs[0]
        if junk == INF:
            return c0
        return c0._add_zero(junk)  # cap the precision by the observed noise level

    def __repr__(self):
        return f"Ramified(e={self.e}, {self.coeffs!r})"

    # arithmetic ---------------------------------------------------------

    def _check(self, other):
        if isinstance(other, (int, Fraction, PadicElement)):
            return RamifiedElement.from_padic(self.ctx.element(other), self.e)
        if not isinstance(other, RamifiedElement):
            return NotImplemented
        if other.ctx != self.ctx or other.e != self.e:
            raise ContextMismatch("ramified elements from different rings")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return RamifiedElement(self.ctx, self.e,
                               [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return RamifiedElement(self.ctx, self.e, [-c for c in self.coeffs])

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scalar_mul(self, s: PadicElement) -> "RamifiedElement":
        return RamifiedElement(self.ctx, self.e, [s * c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PadicElement)):
            return self.scalar_mul(self.ctx.element(other))
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        if self.e == 1:
            return RamifiedElement(self.ctx, 1, [self.coeffs[0] * other.coeffs[0]])
        return self._mul_flat(other)

    __rmul__ = __mul__

    def _flat(self):
        """(shift m, list of ints, modulus digits C): value = p^m * sum(a_i pi^i)."""
        ctx = self.ctx
        vs = [c.v for c in self.coeffs if c.unit]
        m = min(vs) if vs else 0
        C = 2 * ctx.N + 8
        pC = ctx.pk(C)
        ints = []
        for c in self.coeffs:
            if c.unit == 0:
                ints.append(0)
            else:
                ints.append((c.unit * ctx.pk(c.v - m)) % pC)
        return m, ints, C

    def _mul_flat(self, other):
        ctx, e = self.ctx, self.e
        m1, a, C = self._flat()
        m2, b, _ = other._flat()
        # polynomial product in pi, folded by pi^e = p
        prod = _polymul_mod(a, b, ctx.pk(C))
        out = prod[:e] + [0] * max(0, e - len(prod))
        p = ctx.p
        for k in range(e, len(prod)):
            out[k - e] = out[k - e] + prod[k] * p
        # precision: known modulo pi^A with A = min(A1 + w2, A2 + w1)
        # (inf arithmetic does the right thing for exact/zero operands)
        A1, A2 = self.abs_prec_pi(), other.abs_prec_pi()
        w1, w2 = self.pi_valuation(), other.pi_valuation()
        A = min(A1 + w2, A2 + w1)
        m = m1 + m2
        coeffs = []
        for i in range(e):
            # coefficient of pi^i is known modulo p^floor((A - i)/e)
            cap = INF if A == INF else math.floor(Fraction(int(A) - i, e))
            coeffs.append(_int_to_padic(ctx, out[i], m, cap))
        return RamifiedElement(ctx, e, coeffs)

    def _refreshed(self) -> "RamifiedElement":
        """Reinterpret the stored digits at full nominal precision.

        Used inside Newton loops, where the min-rule would charge the iterate
        for error the iteration itself corrects; callers must certify the
        final answer independently.
        """
        ctx = self.ctx
        out = []
        for c in self.coeffs:
            if c.unit:
                out.append(PadicElement(ctx, c.v, c.unit, ctx.N, _raw=True))
            else:
                out.append(ctx.zero())
        return RamifiedElement(ctx, self.e, out)

    def inverse(self) -> "RamifiedElement":
        """Newton iteration z <- z(2 - a z); requires nonzero to precision."""
        if self.is_zero:
            raise DivisionByZeroPrecision("cannot invert ramified zero")
        w = self.pi_valuation()
        a = self.shift_pi(-w)._refreshed()  # unit: pi-valuation 0, coeff0 a p-unit
        ctx, e = self.ctx, self.e
        z = RamifiedElement.from_padic(a.coeffs[0].inverse(), e)
        two = RamifiedElement.from_padic(ctx.from_int(2), e)
        # correct pi-digit count doubles per step
        steps = max(1, math.ceil(math.log2(max(2, e * ctx.N)))) + 1
        for _ in range(steps):
            z = (z * (two - a * z))._refreshed()
        # per-coefficient digit caps limit the certifiable error to ~p^(N-1)
        err = a * z - RamifiedElement.from_padic(ctx.one(), e)
        if not err.is_zero and err.valuation() < ctx.N - 2:
            raise DivisionByZeroPrecision("ramified inverse failed to converge")
        return z.shift_pi(-w)

    def shift_pi(self, k: int) -> "RamifiedElement":
        """Multiply by pi^k (k may be negative)."""
        ctx, e = self.ctx, self.e
        out = [ctx.zero()] * e
        pfrac = ctx.from_int(ctx.p)
        for i, c in enumerate(self.coeffs):
            j = i + k
            q, r = divmod(j, e)
            term = c if q == 0 else c * ctx.from_rational(Fraction(ctx.p) ** q)
            out[r] = out[r] + term
        return RamifiedElement(ctx, e, out)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = RamifiedElement.from_padic(self.ctx.one(), self.e)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, PadicElement)):
            return self.scalar_mul(self.ctx.element(other).inverse())
        other = self._check(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def reduce_residue(self) -> int:
        """Image in the residue field F_p (requires pi-valuation >= 0)."""
        if self.is_zero:
            return 0
        if self.valuation() < 0:
            raise ValueError("negative valuation: no residue")
        c0 = self.coeffs[0]
        return 0 if c0.is_zero or c0.v > 0 else c0.residue(1)


def _int_to_padic(ctx: PadicContext, s: int, shift_v: int, abs_prec) -> PadicElement:
    """p^shift_v * s with the given absolute p-adic precision bound."""
    if s == 0:
        return ctx.zero(abs_prec)
    probe = PadicElement(ctx, 0, 1, ctx.N, _raw=True)
    return probe._make(shift_v, s, abs_prec)


def _polymul_mod(a, b, mod):
    """Product of two integer coefficient lists, coefficients reduced mod `mod`.

    Uses Kronecker substitution so that CPython's big-integer multiplication
    does the heavy lifting.
    """
    if not a or not b:
        return []
    n = max(len(a), len(b))
    # block size: fits coefficient products plus carries
    B = (mod * mod * n).bit_length() + 1
    B = (B + 7) // 8 * 8  # byte aligned
    Bb = B // 8
    abuf = bytearray(len(a) * Bb)
    for i, c in enumerate(a):
        abuf[i * Bb:(i + 1) * Bb] = int(c % mod).to_bytes(Bb, "little")
    bbuf = bytearray(len(b) * Bb)
    for i, c in enumerate(b):
        bbuf[i * Bb:(i + 1) * Bb] = int(c % mod).to_bytes(Bb, "little")
    prod = int.from_bytes(bytes(abuf), "little") * int.from_bytes(bytes(bbuf), "little")
    out_len = len(a) + len(b) - 1
    pbytes = prod.to_bytes(out_len * Bb + 16, "little")
    return [int.from_bytes(pbytes[i * Bb:(i + 1) * Bb], "little") % mod
            for i in range(out_len)]


# --- Hensel machinery ----------------------------------------------------


def hensel_lift_root(g, r0: int, ctx: PadicContext) -> PadicElement:
    """Unique root of the integer polynomial g in Z_p congruent to r0 mod p.

    g is a low-to-high list of integer coefficients.  Requires g(r0) = 0 and
    g'(r0) != 0 mod p (a simple root); Newton iteration then converges
    quadratically to N digits.
    """
    p, N = ctx.p, ctx.N

    def ev(poly, x, mod):
        acc = 0
        for c in reversed(poly):
            acc = (acc * x + c) % mod
        return acc

    dg = [i * c for i, c in enumerate(g)][1:]
    if ev(g, r0, p) != 0 or ev(dg, r0, p) == 0:
        raise NotSimpleRoot(f"r0={r0} is not a simple root of g mod {p}")
    r = r0 % p
    prec = 1
    while prec < N:
        prec = min(2 * prec, N)
        mod = ctx.pk(prec)
        r = (r - ev(g, r, mod) * pow(ev(dg, r, mod), -1, mod)) % mod
    return ctx.from_int(r if r else 0) if r else ctx.zero(N)


def cube_roots(a: PadicElement):
    """All cube roots of a in Q_p, each to the precision of a.

    Returns 0, 1, or 3 roots (1 when p = 2 mod 3 and a is a unit times an
    exact cube of p).  Raises NoCubeRoot if v_p(a) is not divisible by 3.
    """
    ctx = a.ctx
    if a.is_zero:
        return [ctx.zero(INF if a.v == INF else -(-a.v // 3))]
    if a.v % 3 != 0:
        raise NoCubeRoot(f"valuation {a.v} not divisible by 3")
    p = ctx.p
    u0 = a.unit % p
    roots_mod_p = sympy.ntheory.residue_ntheory.nthroot_mod(u0, 3, p, all_roots=True) or []
    out = []
    rel = a.rel
    for r0 in roots_mod_p:
        # Newton-lift r0 to a cube root of the unit part
        r = int(r0)
        prec = 1
        while prec < rel:
            prec = min(2 * prec, rel)
            mod = ctx.pk(prec)
            u = a.unit % mod
            r = (r - (pow(r, 3, mod) - u) * pow(3 * r * r % mod, -1, mod)) % mod
        y = PadicElement(ctx, a.v // 3, r % ctx.pk(rel), rel, _raw=True)
        out.append(y)
    return out


def cube_root_ramified(a: RamifiedElement, start: RamifiedElement) -> RamifiedElement:
    """Cube root of a in Q_p(pi) by Newton iteration from an approximate root.

    `start` must satisfy start^3 = a to positive pi-adic precision with
    3*start^2 a unit times pi-power; convergence is quadratic.
    """
    z = start
    ctx, e = a.ctx, a.e
    steps = max(1, math.ceil(math.log2(max(2, e * ctx.N)))) + 1
    three = ctx.from_int(3)
    for _ in range(steps):
        z = (z - (z * z * z - a) * (z * z * three).inverse())._refreshed()
    return z
