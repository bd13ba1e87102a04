"""Picard curve model: validation, prime selection, residue disks, local
coordinates, point lifting, and rational point search.

A curve is y^3 = f(x) with f monic, quartic, squarefree.  Points use the
(x, b, inf) convention with b = [1, y, y^2] at finite points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .errors import (
    NotMonic,
    NotSplit,
    NotSquarefree,
    WrongDegree,
    WrongDisk,
)
from .padic import PadicContext, PadicElement, RamifiedElement, cube_roots, hensel_lift_root
from .series import ser_cuberoot, ser_inv, ser_mul, ser_trim


class PicardCurve:
    """y^3 = f(x), f monic quartic squarefree; genus 3."""

    def __init__(self, f_coefficients, discriminant=None, label=None):
        f = list(f_coefficients)
        if len(f) != 5 or f[4] == 0:
            raise WrongDegree(f"f must be quartic, got degree {len(f) - 1}")
        if f[4] != 1:
            raise NotMonic(f"leading coefficient {f[4]} != 1")
        if any(Fraction(c).denominator != 1 for c in f):
            raise NotMonic("f must have integer coefficients")
        self.f = [int(c) for c in f]
        x = sympy.Symbol("x")
        poly = sympy.Poly(sum(int(c) * x ** i for i, c in enumerate(self.f)), x)
        self.disc_f = int(sympy.discriminant(poly.as_expr(), x))
        if self.disc_f == 0:
            raise NotSquarefree("f has a repeated root")
        self.discriminant = int(discriminant) if discriminant is not None else None
        self.label = label
        self.genus = 3

    def f_eval(self, x):
        """Horner evaluation of f; works on ints, Fractions, and ring elements."""
        acc = x * 0 + self.f[4]
        for c in reversed(self.f[:4]):
            acc = acc * x + c
        return acc

    def f_deriv(self):
        return [i * c for i, c in enumerate(self.f)][1:]

    def f_eval_mod(self, x, mod):
        acc = 0
        for c in reversed(self.f):
            acc = (acc * x + c) % mod
        return acc

    def __repr__(self):
        terms = " + ".join(f"{c}*x^{i}" for i, c in enumerate(self.f) if c)
        return f"PicardCurve(y^3 = {terms})"


@dataclass
class CurvePoint:
    """A point of X over Q_p or Q_p(p^(1/e)); b = [1, y, y^2] when finite."""

    x: object = None
    y: object = None
    inf: bool = False
    exact_x: object = None  # Fraction, when the point is known exactly
    exact_y: object = None

    @property
    def b(self):
        if self.inf:
            raise ValueError("b^0 undefined at infinity")
        return [self.y * 0 + 1, self.y, self.y * self.y]

    def __repr__(self):
        if self.inf:
            return "Point(inf)"
        if self.exact_x is not None:
            return f"Point({self.exact_x}, {self.exact_y})"
        return f"Point({self.x!r}, {self.y!r})"


GOOD = "good"
BAD_FINITE = "bad_finite"
BAD_INFINITE = "bad_infinite"


@dataclass
class ResidueDisk:
    reduction: object  # (x mod p, y mod p) or "inf"
    kind: str
    very_bad_point: object = None
    ramification_index: int = 1

    def __repr__(self):
        return f"Disk({self.reduction}, {self.kind})"


def good_prime(curve: PicardCurve, min_prime: int = 5, split_poly=None,
               skip=()):
    """Smallest prime p > 3 of good reduction, optionally completely split.

    Always requires p not dividing 3*disc(f); additionally p not dividing the
    supplied curve discriminant, and — when split_poly g is given — g mod p
    must have deg(g) distinct roots in F_p.
    """
    p = max(min_prime, 5)
    p = int(sympy.nextprime(p - 1))
    while True:
        ok = (curve.disc_f % p != 0)
        if ok and curve.discriminant is not None:
            ok = curve.discriminant % p != 0
        if ok and p in skip:
            ok = False
        if ok and split_poly is not None:
            ok = _splits_completely(split_poly, p)
        if ok:
            return p
        p = int(sympy.nextprime(p))


def _splits_completely(g, p):
    g = [c % p for c in g]
    deg = len(ser_trim(g)) - 1
    if deg <= 0:
        return True
    roots = [a for a in range(p) if sum(c * pow(a, i, p) for i, c in enumerate(g)) % p == 0]
    if len(roots) != deg:
        return False
    dg = [i * c % p for i, c in enumerate(g)][1:]
    return all(sum(c * pow(a, i, p) for i, c in enumerate(dg)) % p != 0 for a in roots)


def points_over_Fp(curve: PicardCurve, p: int):
    """All F_p-points, the infinite one encoded as "inf"."""
    cubes = {}
    for y in range(p):
        cubes.setdefault(pow(y, 3, p), []).append(y)
    pts = []
    for x in range(p):
        for y in cubes.get(curve.f_eval_mod(x, p), []):
            pts.append((x, y))
    pts.append("inf")
    return pts


def classify_disks(curve: PicardCurve, p: int, ctx: PadicContext = None):
    """One ResidueDisk per F_p-point; bad disks get Hensel-lifted centers."""
    if ctx is None:
        ctx = PadicContext(p, 12)
    disks = []
    for pt in points_over_Fp(curve, p):
        if pt == "inf":
            disks.append(ResidueDisk("inf", BAD_INFINITE,
                                     CurvePoint(inf=True), 3))
        elif pt[1] == 0:
            # ramification point: lift the root of f (simple mod p at good p)
            xr = hensel_lift_root(curve.f, pt[0], ctx)
            center = CurvePoint(xr, ctx.zero())
            disks.append(ResidueDisk(pt, BAD_FINITE, center, 3))
        else:
            disks.append(ResidueDisk(pt, GOOD))
    return disks


def lift_point(curve: PicardCurve, x0, ctx: PadicContext):
    """All points of X(Q_p) with the given x-coordinate."""
    x0 = ctx.element(x0)
    fx = curve.f_eval(x0)
    return [CurvePoint(x0, y) for y in cube_roots(fx)]


def reduce_point(point: CurvePoint, p: int):
    """The F_p-point a Q_p-point reduces to (key into the disk list)."""
    if point.inf:
        return "inf"
    x, y = point.x, point.y
    if isinstance(x, RamifiedElement):
        if x.valuation() < 0:
            return "inf"
        return (x.reduce_residue(), y.reduce_residue())
    if x.valuation() < 0:
        return "inf"
    xv = x.residue(1)
    yv = 0 if (y.is_zero or y.valuation() > 0) else y.residue(1)
    return (xv, yv)


# --- local coordinates ---------------------------------------------------


@dataclass
class LocalExpansion:
    """x(t), y(t) as integer Laurent series modulo p^W to t-order T.

    A pair (shift, coeffs) encodes t^shift * sum(coeffs[i] t^i).  Coefficient
    arithmetic is exact modulo p^W; the caller chooses W with guard digits.
    """

    kind: str
    p: int
    W: int
    T: int
    x_shift: int
    x_coeffs: list
    y_shift: int
    y_coeffs: list
    center: object = None

    @property
    def mod(self):
        return self.p ** self.W


def local_expansion(curve: PicardCurve, disk: ResidueDisk, ctx: PadicContext,
                    T: int, W: int = None, center: CurvePoint = None) -> LocalExpansion:
    """Expand (x(t), y(t)) in the disk's uniformizer.

    Good disk: t = x - x(center), any Q_p-point of the disk as center.
    Bad finite disk: t = y; x(t) from f(x) = t^3 by series Newton.
    Infinite disk: x = t^(-3), y = t^(-4) u(t) with u(0) = 1.
    """
    if W is None:
        W = ctx.N
    p = ctx.p
    mod = p ** W

    if disk.kind == GOOD:
        if center is None:
            raise WrongDisk("good-disk expansion needs a center point")
        if reduce_point(center, p) != disk.reduction:
            raise WrongDisk(f"center {center!r} is not in disk {disk!r}")
        x0 = center.x.residue(W)
        y0 = center.y.residue(W)
        fx = _taylor_shift(curve.f, x0, mod)  # f(x0 + t)
        y = ser_cuberoot(fx + [0] * max(0, T + 1 - len(fx)), mod, T, y0)
        return LocalExpansion(GOOD, p, W, T, 0, [x0, 1], 0, y, center)

    if disk.kind == BAD_FINITE:
        if center is not None and reduce_point(center, p) != disk.reduction:
            raise WrongDisk(f"center {center!r} is not in disk {disk!r}")
        a = disk.very_bad_point.x.residue(W)
        # solve f(x) = s (s = t^3) for x = a + ...: Newton in Z_p[[s]]
        Ts = T // 3 + 1
        xs = [a]  # series in s
        prec = 1
        while prec <= Ts:
            prec = min(2 * prec, Ts + 1)
            fxs = _poly_of_series(curve.f, xs, mod, prec - 1)
            # numerator: s - f(x_k)
            num = [(-c) % mod for c in fxs] + [0] * max(0, 2 - len(fxs))
            num[1] = (num[1] + 1) % mod
            dfxs = _poly_of_series(curve.f_deriv(), xs, mod, prec - 1)
            corr = ser_mul(num, ser_inv(dfxs, mod, prec - 1), mod, prec - 1)
            xs = [(xs[i] if i < len(xs) else 0) + (corr[i] if i < len(corr) else 0)
                  for i in range(max(len(xs), len(corr)))]
            xs = [c % mod for c in xs][:prec]
        # expand in t: x(t) = sum xs[k] t^(3k)
        xt = [0] * (T + 1)
        for k, c in enumerate(xs):
            if 3 * k <= T:
                xt[3 * k] = c
        return LocalExpansion(BAD_FINITE, p, W, T, 0, xt, 0, [0, 1] + [0] * (T - 1),
                              disk.very_bad_point)

    # infinite disk: u^3 = t^12 f(t^-3) = 1 + c3 t^3 + c2 t^6 + c1 t^9 + c0 t^12
    c0, c1, c2, c3, _ = curve.f
    rhs = [0] * (T + 1)
    for k, c in zip((0, 3, 6, 9, 12), (1, c3, c2, c1, c0)):
        if k <= T:
            rhs[k] = c % mod
    u = ser_cuberoot(rhs, mod, T, 1)
    return LocalExpansion(BAD_INFINITE, p, W, T, -3, [1] + [0] * T, -4, u,
                          CurvePoint(inf=True))


def _taylor_shift(poly, a, mod):
    """Coefficients of poly(a + t) mod `mod`."""
    c = [x % mod for x in poly]
    n = len(c)
    for k in range(n):
        for j in range(n - 2, k - 1, -1):
            c[j] = (c[j] + a * c[j + 1]) % mod
    return c


def _poly_of_series(poly, s, mod, T):
    """Evaluate an integer polynomial on a series s, truncated to degree T."""
    acc = [poly[-1] % mod]
    for c in reversed(poly[:-1]):
        acc = ser_mul(acc, s, mod, T)
        if not acc:
            acc = [0]
        acc[0] = (acc[0] + c) % mod
    return acc + [0] * (T + 1 - len(acc))


def laurent_eval(shift, coeffs, t, one):
    """Evaluate t^shift * sum(coeffs[i] t^i) at a ring element t.

    `one` is the multiplicative identity of the target ring; coefficients are
    plain integers.
    """
    acc = one * 0
    for c in reversed(coeffs):
        acc = acc * t + one * c
    return acc * t ** shift if shift else acc


# --- rational point search ----------------------------------------------


def _icbrt(n: int) -> int:
    """Exact integer cube root of |n| rounded down, signed."""
    if n == 0:
        return 0
    sign = 1 if n > 0 else -1
    m = abs(n)
    r = round(m ** (1.0 / 3.0))
    while r ** 3 > m:
        r -= 1
    while (r + 1) ** 3 <= m:
        r += 1
    return sign * r


def rational_point_search(curve: PicardCurve, height_bound: int = 1000):
    """All (a/b, y) in X(Q) with gcd(a, b) = 1, max(|a|, b) <= H, plus infinity.

    y^3 = f(a/b) has a rational solution iff n b^2 is a perfect cube, where
    n = b^4 f(a/b); then y = cbrt(n b^2) / b^2.  A numpy float prefilter
    discards almost all candidates before exact confirmation.
    """
    import numpy as np

    H = height_bound
    c0, c1, c2, c3, _ = curve.f
    found = []
    a_arr = np.arange(-H, H + 1, dtype=np.float64)
    a2 = a_arr * a_arr
    a3 = a2 * a_arr
    a4 = a3 * a_arr
    for b in range(1, H + 1):
        bf = float(b)
        n_arr = a4 + c3 * a3 * bf + c2 * a2 * bf ** 2 + c1 * a_arr * bf ** 3 + c0 * bf ** 4
        target = n_arr * bf * bf
        roots = np.rint(np.cbrt(target))
        resid = np.abs(roots ** 3 - target)
        cand = np.nonzero(resid <= 1e-6 * np.abs(target) + 4)[0]
        for idx in cand:
            a = int(idx) - H
            if math.gcd(a, b) != 1:
                continue
            n = a ** 4 + c3 * a ** 3 * b + c2 * a ** 2 * b * b + c1 * a * b ** 3 + c0 * b ** 4
            m = n * b * b
            r = _icbrt(m)
            if r ** 3 == m:
                x = Fraction(a, b)
                y = Fraction(r, b * b)
                assert y ** 3 == curve.f_eval(x)
                found.append(CurvePoint(exact_x=x, exact_y=y))
    found.sort(key=lambda P: (P.exact_x, P.exact_y))
    return [CurvePoint(inf=True)] + found
