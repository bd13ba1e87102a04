"""Frobenius lift on a Picard curve and its action on cohomology.

The lift sends x -> x^p and y -> y^p (1 + u)^(1/3) with
u = p A(x)/f(x)^p, pA = f(x^p) - f(x)^p.  Pulling back the basis
differential x^a y^b dx/f and expanding the binomial series gives

    phi^* (x^a y^b dx/f)
      = sum_k p^(k+1) C((b-3)/3, k) x^(pa+p-1) A(x)^k y^j dx / f(x)^(s_k)

with j = pb mod 3 in {1, 2} and s_k = p + pk - (pb - j)/3.  Each term is
g(x) dx / y^t with t = 3 s_k - j, and is reduced to the basis span plus an
exact differential by two moves:

  pole step (t > 2):   write g = u f + v f' (Bezout mod f); then
      g dx/y^t = [u - 3/(3-t) v'] dx/y^(t-3) + d(3/(3-t) v y^(3-t))
  degree step (t <= 2): d(x^m y^(3-t)) = [m x^(m-1) f + (3-t)/3 x^m f'] dx/y^t
      kills the top x-degree (leading coefficient (3m + 12 - 4t)/3 != 0).

All polynomial arithmetic is on integer coefficients modulo p^W.  Divisions
by p-divisible integers are tracked by a global shift sigma (values are
p^-sigma times the stored integers), so the claimed precision is W - sigma.

The reduction basis is [dx/y^2, x dx/y^2, dx/y, x^2 dx/y^2, x dx/y,
x^2 dx/y]: the first three are the regular omega_1, omega_2, omega_3; slot 4
replaces the traditional x^3 dx/y^2, which is exact when f has no x^3 term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import sympy

from .errors import PrecisionExhausted
from .padic import PadicContext, _int_to_padic, _pval
from .series import ser_mul, ser_trim
from .curve import PicardCurve, points_over_Fp


# internal reduction basis: (a, b) with omega = x^a y^b dx/f
BASIS = [(0, 1), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2)]
REGULAR = (0, 1, 2)  # indices of omega_1..omega_3 in BASIS


def basis_differentials(curve: PicardCurve):
    """The six symbolic basis forms (a, b, regular-flag), omega = x^a y^b dx/f."""
    paper = [(0, 1), (1, 1), (0, 2), (3, 1), (1, 2), (2, 2)]
    return [(a, b, i < 3) for i, (a, b) in enumerate(paper)]


# --- polynomial helpers (integer coefficients mod p^W) -------------------


def _poly_mod(a, mod):
    return [c % mod for c in a]


def _poly_sub(a, b, mod):
    n = max(len(a), len(b))
    return [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % mod
            for i in range(n)]


def _poly_divmod_monic(a, f, mod):
    """Divide by the monic polynomial f: a = q*f + r, deg r < deg f."""
    a = list(a)
    d = len(f) - 1
    q = [0] * max(len(a) - d, 0)
    for i in range(len(a) - 1, d - 1, -1):
        c = a[i] % mod
        if c:
            q[i - d] = c
            for j in range(d + 1):
                a[i - d + j] = (a[i - d + j] - c * f[j]) % mod
    return q, ser_trim([c % mod for c in a[:d]])


def _poly_pow(a, n, mod):
    result = [1]
    base = a
    while n:
        if n & 1:
            result = ser_mul(result, base, mod)
        n >>= 1
        if n:
            base = ser_mul(base, base, mod)
    return result


def _subst_xp(a, p):
    """a(x^p) from a(x)."""
    out = [0] * ((len(a) - 1) * p + 1) if a else []
    for i, c in enumerate(a):
        out[i * p] = c
    return out


def _bezout_unit(curve: PicardCurve, p, mod):
    """alpha, beta with alpha f + beta f' = 1 (denominators are p-units)."""
    x = sympy.Symbol("x")
    fpoly = sympy.Poly(sum(c * x ** i for i, c in enumerate(curve.f)), x, domain="QQ")
    dfpoly = fpoly.diff(x)
    alpha, beta, h = sympy.gcdex(fpoly.as_expr(), dfpoly.as_expr(), x)
    # scale so alpha f + beta f' = 1 exactly
    hval = sympy.Poly(h, x).all_coeffs()
    assert len(hval) == 1, "f not squarefree"
    scale = Fraction(1) / Fraction(sympy.Rational(hval[0]))
    out = []
    for poly in (alpha, beta):
        coeffs = sympy.Poly(poly * sympy.Rational(scale.numerator, scale.denominator),
                            x).all_coeffs()[::-1]
        ints = []
        for c in coeffs:
            q = Fraction(sympy.Rational(c))
            den = q.denominator
            if den % p == 0:
                raise PrecisionExhausted("Bezout denominators not p-integral (bad p?)")
            ints.append(q.numerator * pow(den, -1, mod) % mod)
        out.append(ints)
    return out


# --- the reduction -------------------------------------------------------


def _strip(sigma, poly, p):
    """Remove common p-content (up to p^sigma) so the denominator exponent
    sigma stays minimal.  Stored residues divisible by p^d are divided out
    exactly; intermediate reduction values regain the divisibility that the
    divisions by (3 - t) consume, so sigma stays bounded instead of growing
    with the pole order.  (Validated downstream by the zeta certificates.)"""
    poly = ser_trim(poly)
    if sigma <= 0 or not poly:
        return 0 if not poly else sigma, poly
    d = sigma
    for c in poly:
        if c:
            d = min(d, _pval(c, p))
            if d == 0:
                return sigma, poly
    q = p ** d
    return sigma - d, [c // q for c in poly]


def _entry_add(e1, e2, p, mod):
    """Add two (sigma, poly) pairs representing p^-sigma * poly."""
    s1, p1 = e1
    s2, p2 = e2
    s = max(s1, s2)
    if s1 < s:
        p1 = [c * p ** (s - s1) % mod for c in p1]
    if s2 < s:
        p2 = [c * p ** (s - s2) % mod for c in p2]
    n = max(len(p1), len(p2))
    out = [((p1[i] if i < len(p1) else 0) + (p2[i] if i < len(p2) else 0)) % mod
           for i in range(n)]
    return _strip(s, out, p)


class _Reducer:
    """Reduces g(x) dx / y^t into basis coordinates plus an exact part.

    All values are (sigma, integer data) pairs meaning p^-sigma times the
    stored integers, coefficients modulo p^W.
    """

    def __init__(self, curve, p, W):
        self.curve = curve
        self.p = p
        self.W = W
        self.mod = p ** W
        self.f = [c % self.mod for c in curve.f]
        self.df = [c % self.mod for c in curve.f_deriv()]
        self.alpha, self.beta = _bezout_unit(curve, p, self.mod)
        self.inv3 = pow(3, -1, self.mod)

    def _inv_tracked(self, n):
        """(inverse of unit part, p-valuation) of the integer n != 0."""
        v = _pval(n, self.p)
        return pow(n // self.p ** v, -1, self.mod), v

    def reduce(self, g, t):
        """Returns ((sigma, coeffs[6]), exact) with
        g dx/y^t = p^-sigma sum coeffs_i omega_i + d(sum of exact entries),
        exact a dict y_exp -> (sigma_e, poly)."""
        mod, p = self.mod, self.p
        sigma = 0
        exact = {}
        sigma, g = _strip(sigma, _poly_mod(g, mod), p)

        while t > 2:
            gbar = _poly_divmod_monic(g, self.f, mod)[1]
            v = _poly_divmod_monic(ser_mul(gbar, self.beta, mod), self.f, mod)[1]
            u = _poly_divmod_monic(_poly_sub(g, ser_mul(v, self.df, mod), mod),
                                   self.f, mod)[0]
            dv = [i * c % mod for i, c in enumerate(v)][1:]
            inv, extra = self._inv_tracked(3 - t)
            # the division by (3 - t) raises sigma by extra; v and dv sit
            # inside that division so they stay at the old scale, while u
            # must be rescaled to the new one
            sigma += extra
            if extra:
                scale = p ** extra
                u = [c * scale % mod for c in u]
            coef = 3 * inv % mod  # 3/(3-t) with the p-part moved into sigma
            g = _poly_sub(u, [c * coef % mod for c in dv], mod)
            key = 3 - t
            ve = (sigma, [c * coef % mod for c in v])
            exact[key] = _entry_add(exact.get(key, (0, [])), ve, p, mod)
            t -= 3
            sigma, g = _strip(sigma, g, p)

        # degree reduction at t in {1, 2}
        while len(g) > 3:
            d = len(g) - 1
            m = d - 3
            lead_num = 3 * m + 12 - 4 * t
            inv, extra = self._inv_tracked(lead_num)
            lead = g[-1]  # pre-rescale: the division by p^extra cancels it
            sigma += extra
            if extra:
                scale = p ** extra
                g = [c * scale % mod for c in g]
            c = lead * 3 % mod * inv % mod
            # subtract c * d(x^m y^(3-t)) = c [m x^(m-1) f + (3-t)/3 x^m f'] dx/y^t
            sub = [0] * (d + 1)
            for j, fc in enumerate(self.f):
                if m >= 1:
                    sub[m - 1 + j] = (sub[m - 1 + j] + c * m % mod * fc) % mod
            coef2 = c * (3 - t) % mod * self.inv3 % mod
            for j, fc in enumerate(self.df):
                sub[m + j] = (sub[m + j] + coef2 * fc) % mod
            g = _poly_sub(g, sub, mod)
            key = 3 - t
            exact[key] = _entry_add(exact.get(key, (0, [])),
                                    (sigma, [0] * m + [c]), p, mod)
            sigma, g = _strip(sigma, g, p)

        # map the residual deg <= 2 poly into basis slots
        # t=2: {1, x, x^2} dx/y^2 = omega_1, omega_2, omega_4'
        # t=1: {1, x, x^2} dx/y  = omega_3, omega_5, omega_6
        coeffs = [0] * 6
        slots = (0, 1, 3) if t == 2 else (2, 4, 5)
        for d, c in enumerate(g):
            coeffs[slots[d]] = c % mod
        return (sigma, coeffs), exact


# --- Frobenius data ------------------------------------------------------


@dataclass
class ExactPart:
    """f_i = sum over levels of p^-sigma_e poly(x) y^y_exp,
    levels: dict y_exp -> (sigma_e, poly)."""

    levels: dict


@dataclass
class FrobeniusData:
    curve: PicardCurve
    p: int
    N_work: int
    ctx: PadicContext           # working context (N = N_work)
    M: list                     # 6x6 PadicElement
    exact_parts: list           # 6 ExactPart
    sigma_max: int
    A_poly: list = None         # pA = f(x^p) - f(x)^p support data
    k_max: int = 0


def working_precision(p: int, N: int) -> int:
    """Guard-digit schedule: enough digits that reduction losses (bounded by
    valuations of small integers up to ~3 p k_max) cannot eat into N."""
    k_max = _binomial_cutoff(p, N + 8)
    q_max = 3 * (p + p * k_max)
    return N + 8 + 2 * max(1, math.ceil(math.log(q_max, p)))


def _binomial_cutoff(p: int, W: int) -> int:
    """Smallest K such that v_p(p^(k+1)/k!) >= W for all k >= K."""
    k = 1
    while True:
        lower = k + 1 - sum(k // p ** j for j in range(1, 40) if p ** j <= k)
        if lower >= W:
            return k
        k += 1


def frobenius_matrix(curve: PicardCurve, p: int, N: int) -> FrobeniusData:
    """M and exact parts f_i with phi^* omega_i = d f_i + sum_j M_ij omega_j."""
    W = working_precision(p, N)
    mod = p ** W
    ctx = PadicContext(p, W)

    # pA = f(x^p) - f(x)^p, computed mod p^(W+1) so A is exact mod p^W
    mod1 = mod * p
    fxp = _subst_xp([c % mod1 for c in curve.f], p)
    fp = _poly_pow([c % mod1 for c in curve.f], p, mod1)
    diff = _poly_sub(fxp, fp, mod1)
    assert all(c % p == 0 for c in diff), "f(x^p) != f(x)^p mod p"
    A = ser_trim([(c // p) % mod for c in diff])

    reducer = _Reducer(curve, p, W)
    k_max = _binomial_cutoff(p, W)

    rows = []
    parts = []
    sigma_max = 0
    for (a, b) in BASIS:
        j = (p * b) % 3
        # accumulated (sigma, coeffs) and exact dict across binomial terms
        acc_coeffs = (0, [0] * 6)
        acc_exact = {}
        alpha = Fraction(b - 3, 3)
        binom = Fraction(1)  # C(alpha, k)
        Ak = [1]
        for k in range(k_max + 1):
            if k > 0:
                binom = binom * (alpha - (k - 1)) / k
                Ak = ser_mul(Ak, A, mod)
            ck = Fraction(p) ** (k + 1) * binom
            vck = (_pval(ck.numerator, p) - _pval(ck.denominator, p)) if ck else W
            if vck >= W:
                continue
            # ck as integer mod p^W (it is p-integral)
            den = ck.denominator // p ** _pval(ck.denominator, p)
            num = ck.numerator
            ck_int = num * pow(den, -1, mod) % mod
            g = ser_mul([0] * (p * a + p - 1) + [ck_int], Ak, mod)
            s_k = p + p * k - (p * b - j) // 3
            t = 3 * s_k - j
            term_coeffs, term_exact = reducer.reduce(g, t)
            acc_coeffs = _entry_add(acc_coeffs, term_coeffs, p, mod)
            for m, entry in term_exact.items():
                acc_exact[m] = _entry_add(acc_exact.get(m, (0, [])), entry, p, mod)

        rows.append(acc_coeffs)
        parts.append(ExactPart({m: entry for m, entry in acc_exact.items()
                                if entry[1]}))
        sigma_max = max(sigma_max, acc_coeffs[0],
                        max((e[0] for e in acc_exact.values()), default=0))

    # build the matrix of PadicElements: entry = p^-sigma * int, known mod p^(W - sigma)
    M = []
    for sigma, coeffs in rows:
        coeffs = coeffs + [0] * (6 - len(coeffs))
        row = [_int_to_padic(ctx, c, -sigma, W - sigma) for c in coeffs]
        M.append(row)
    if W - sigma_max < N:
        raise PrecisionExhausted(
            f"guard digits exhausted: W={W}, sigma={sigma_max}, N={N}")
    return FrobeniusData(curve, p, W, ctx, M, parts, sigma_max, A, k_max)


def frobenius_lift_series(curve: PicardCurve, p: int, N: int):
    """Data defining phi(y) = y^p (1 + u)^(1/3), u = p A(x)/f(x)^p.

    Returns dict with A (the integer polynomial with pA = f(x^p) - f(x)^p,
    coefficients mod p^W) and the working precision W.
    """
    W = working_precision(p, N)
    mod = p ** W
    mod1 = mod * p
    fxp = _subst_xp([c % mod1 for c in curve.f], p)
    fp = _poly_pow([c % mod1 for c in curve.f], p, mod1)
    diff = _poly_sub(fxp, fp, mod1)
    A = ser_trim([(c // p) % mod for c in diff])
    return {"A": A, "W": W, "p": p}


# --- zeta / consistency --------------------------------------------------


@dataclass
class ZetaReport:
    char_poly: list          # integer coefficients, degree 6, leading 1
    det_ok: bool
    integrality_ok: bool
    functional_eq_ok: bool
    trace_ok: bool
    point_count: int
    trace: int
    weil_ok: bool

    @property
    def all_ok(self):
        return (self.det_ok and self.integrality_ok and self.functional_eq_ok
                and self.trace_ok and self.weil_ok)


def _balanced(c, mod):
    c %= mod
    return c - mod if c > mod // 2 else c


def zeta_consistency_check(fd: FrobeniusData) -> ZetaReport:
    """Integer char poly, det = p^3, functional equation, trace vs #X(F_p)."""
    p, W = fd.p, fd.N_work
    Wp = W - fd.sigma_max
    modp = p ** Wp
    # entries may have bounded denominators (valuation >= -s); scale by p^s,
    # take the char poly of the integral matrix, and divide the scaling back
    # out: c_i(M) = c_i(p^s M) / p^(s (6 - i))
    s = 0
    for row in fd.M:
        for e in row:
            if not e.is_zero and e.valuation() < -s:
                s = -int(e.valuation())
    ints = []
    for row in fd.M:
        r = []
        for e in row:
            if e.is_zero:
                r.append(0)
            else:
                scaled = e * e.ctx.from_int(p ** s)
                r.append(scaled.residue(min(Wp, int(scaled.abs_prec))))
        ints.append(r)
    m = sympy.Matrix(ints)
    lam = sympy.Symbol("T")
    chi = m.charpoly(lam).all_coeffs()  # degree 6 monic, over ZZ (huge ints)
    # Weil bounds: |c_{6-i}| for chi = prod (T - alpha_i), |alpha_i| = sqrt(p)
    bounds = [math.comb(6, i) * (p ** 0.5) ** i * 1.000001 for i in range(7)]
    integrality = True
    coeffs = []
    for i in range(7):  # c0..c6 of chi(T) for M itself
        d = int(chi[6 - i]) % modp
        scale = p ** (s * (6 - i))
        if d % scale:
            integrality = False
            coeffs.append(_balanced(d, modp))
            continue
        # balanced lift at just enough digits to pin the Weil-bounded
        # integer (guard digits above the effective precision are noise)
        avail = Wp - s * (6 - i)
        need = math.ceil(math.log(2 * bounds[6 - i] + 1, p)) + 2
        k_use = min(avail, need)
        coeffs.append(_balanced(d // scale, p ** k_use))

    det_ok = coeffs[0] == p ** 3
    weil_ok = all(abs(coeffs[6 - i]) <= bounds[i] for i in range(7))
    integrality_ok = integrality and weil_ok
    func_ok = all(coeffs[6 - i] * p ** 3 == coeffs[i] * p ** i for i in range(7))
    tr = -coeffs[5]
    count = len(points_over_Fp(fd.curve, p))
    trace_ok = (p + 1 - tr) == count
    return ZetaReport(coeffs[::-1], det_ok, integrality_ok, func_ok, trace_ok,
                      count, tr, weil_ok)
