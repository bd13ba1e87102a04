"""Coleman integration on Picard curves y^3 = f(x).

The single-disk ("tiny") integrals expand the integrand in the disk
uniformizer and integrate termwise; integrals between disks solve the
Frobenius-equivariant linear system (I - M) v = c, where M is the matrix of
Frobenius on the cohomology basis and the right-hand side collects exact-part
values and endpoint corrections.  Endpoints inside bad disks are routed
through boundary points defined over Q_p(pi), pi^e = p.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .curve import (
    BAD_FINITE,
    BAD_INFINITE,
    GOOD,
    CurvePoint,
    PicardCurve,
    _poly_of_series,
    _splits_completely,
    _taylor_shift,
    classify_disks,
    reduce_point,
    local_expansion,
)
from .errors import (
    BadYRule,
    IncreaseE,
    NotSameDisk,
    NotSplit,
    PoleInDisk,
    PrecisionExhausted,
    WrongDisk,
)
from .frobenius import BASIS, FrobeniusData
from .padic import (
    INF,
    PadicContext,
    PadicElement,
    RamifiedElement,
    _int_to_padic,
    cube_root_ramified,
    cube_roots,
    hensel_lift_root,
)
from .series import ser_inv, ser_mul, ser_trim


# --- input records --------------------------------------------------------


@dataclass
class NumberFieldPointSpec:
    """Points with conjugate x-coordinates: the roots of x_minpoly.

    y_rule, when given, is a polynomial h with y = h(x) on each point;
    without it the unique cube-root branch is used (requires p = 2 mod 3).
    Coefficients are low-to-high and may be Fractions.
    """

    x_minpoly: list
    y_rule: list = None


@dataclass
class DivisorSpec:
    """The degree-zero divisor sum(points) - base_multiple * infinity."""

    points: list
    base_multiple: int = None


def _integerize(poly):
    """Clear denominators of a rational coefficient list."""
    fracs = [Fraction(c) for c in poly]
    den = math.lcm(*[f.denominator for f in fracs]) if fracs else 1
    return [int(f * den) for f in fracs]


def realize_nf_points(curve: PicardCurve, spec: NumberFieldPointSpec,
                      ctx: PadicContext):
    """The p-adic points of the spec, one per root of x_minpoly mod p.

    Requires x_minpoly to split completely mod p (NotSplit otherwise); the
    y-coordinate comes from y_rule, checked against the curve (BadYRule), or
    from the unique cube root when there is exactly one.
    """
    p = ctx.p
    g = _integerize(spec.x_minpoly)
    if not _splits_completely(g, p):
        raise NotSplit(f"{spec.x_minpoly} does not split completely mod {p}")
    points = []
    for a in range(p):
        if sum(c * pow(a, i, p) for i, c in enumerate(g)) % p != 0:
            continue
        x = hensel_lift_root(g, a, ctx)
        fx = curve.f_eval(x)
        if spec.y_rule is not None:
            y = ctx.zero()
            for c in reversed(spec.y_rule):
                y = y * x + ctx.from_rational(Fraction(c))
            if not (y ** 3).is_congruent(fx):
                raise BadYRule(f"y-rule does not satisfy y^3 = f(x) at x = {x!r}")
        else:
            roots = cube_roots(fx)
            if len(roots) != 1:
                raise BadYRule("ambiguous cube-root branch; supply a y_rule")
            y = roots[0]
        points.append(CurvePoint(x, y))
    return points


# --- linear algebra over capped-precision elements ------------------------


def _solve_linear(rows, rhs):
    """Solve A v = b by Gauss-Jordan with minimal-valuation pivoting.

    Entries may be PadicElement or RamifiedElement (one ring throughout).
    Returns (solution, valuation of det A).
    """
    n = len(rhs)
    aug = [list(rows[i]) + [rhs[i]] for i in range(n)]
    det_ord = 0
    for col in range(n):
        piv, piv_val = None, INF
        for r in range(col, n):
            entry = aug[r][col]
            v = entry.valuation()
            if v < piv_val:
                piv, piv_val = r, v
        if piv is None or piv_val == INF:
            raise PrecisionExhausted("matrix is singular to working precision")
        aug[col], aug[piv] = aug[piv], aug[col]
        det_ord += piv_val
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r == col:
                continue
            factor = aug[r][col]
            if factor.is_zero:
                continue
            aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)], det_ord


def _pure_form(t: RamifiedElement):
    """(u, r) with t = u * pi^r when t has a single nonzero coefficient."""
    nz = [i for i, c in enumerate(t.coeffs) if not c.is_zero]
    if len(nz) != 1:
        return None
    return t.coeffs[nz[0]], nz[0]


@dataclass
class _Endpoint:
    """Admissible endpoint of the linear system with its Frobenius data.

    h[i] = f_i(R) - int_R^phi(R) omega_i, so the system right-hand side for
    a pair (P, Q) is simply h(Q) - h(P).
    """

    point: object
    disk: object
    h: list


class ColemanIntegrator:
    """Coleman integrals on one curve at one good prime.

    N is the number of p-adic digits aimed for in final answers; e is the
    ramification index used for boundary points of bad disks.
    """

    def __init__(self, fd: FrobeniusData, N: int, e: int = 40):
        self.fd = fd
        self.curve = fd.curve
        self.p = fd.p
        self.ctx = fd.ctx
        self.W = fd.N_work
        self.N = N
        if e < 1:
            raise ValueError(f"ramification index e must be >= 1, got {e}")
        self.e = e
        self.disks = classify_disks(self.curve, self.p, self.ctx)
        self._disk_by_key = {d.reduction: d for d in self.disks}
        self.infinite_disk = self._disk_by_key["inf"]
        self.det_ord = None
        self.T_good = N + 16
        self.T_bad = e * (N + 10) + 16
        self._disk_data_cache = {}
        self._omega_cache = {}
        self._endpoint_cache = {}
        self._boundary_cache = {}

    # -- disks and local data ---------------------------------------------

    def disk_of(self, P: CurvePoint):
        key = getattr(P, "_disk_key", None)
        if key is None:
            key = reduce_point(P, self.p)
        disk = self._disk_by_key.get(key)
        if disk is None:
            raise WrongDisk(f"point {P!r} reduces outside X(F_{self.p})")
        return disk

    def _disk_data(self, disk, center=None):
        """Cached uniformizer series and integrand building blocks."""
        key = (disk.reduction, id(center) if center is not None else None)
        got = self._disk_data_cache.get(key)
        if got is not None:
            return got
        ctx, p = self.ctx, self.p
        mod = ctx.pk(self.W)
        dd = {"mod": mod}
        if disk.kind == GOOD:
            T = self.T_good
            exp = local_expansion(self.curve, disk, ctx, T, center=center)
            ys = list(exp.y_coeffs) + [0] * (T + 1 - len(exp.y_coeffs))
            fx = _poly_of_series(self.curve.f, exp.x_coeffs, mod, T)
            dd.update(T=T, x0=exp.x_coeffs[0], ys=ys,
                      y2=ser_mul(ys, ys, mod, T), Finv=ser_inv(fx, mod, T))
        elif disk.kind == BAD_FINITE:
            T = self.T_bad
            exp = local_expansion(self.curve, disk, ctx, T)
            xt = list(exp.x_coeffs) + [0] * (T + 1 - len(exp.x_coeffs))
            dxt = [k * c % mod for k, c in enumerate(xt)][1:]
            dd.update(T=T, xt=xt, dxt=dxt)
        else:
            T = self.T_bad
            exp = local_expansion(self.curve, disk, ctx, T)
            u = list(exp.y_coeffs) + [0] * (T + 1 - len(exp.y_coeffs))
            c0, c1, c2, c3, _ = self.curve.f
            Ft = [0] * (T + 1)
            for k, c in zip((0, 3, 6, 9, 12), (1, c3, c2, c1, c0)):
                if k <= T:
                    Ft[k] = c % mod
            Finv = ser_inv(Ft, mod, T)
            dd.update(T=T, u=u, Ft=Ft,
                      g1=ser_mul(u, Finv, mod, T),
                      g2=ser_mul(ser_mul(u, u, mod, T), Finv, mod, T))
        self._disk_data_cache[key] = dd
        return dd

    # -- differentials as Laurent series in the uniformizer ---------------

    def _lift_omega(self, omega):
        """Coefficients of omega on BASIS as integers mod p^W + precision floor."""
        omega = list(omega)
        if len(omega) == 3:
            omega = omega + [0, 0, 0]
        if len(omega) != 6:
            raise ValueError("a differential is 3 or 6 basis coefficients")
        out, floor = [], self.W
        for c in omega:
            el = self.ctx.element(c)
            if el.is_zero:
                out.append(0)
                if el.v < self.W:
                    floor = min(floor, int(el.v))
                continue
            if el.v < 0:
                raise ValueError("differential coefficients must be p-integral")
            k = min(self.W, int(el.abs_prec))
            floor = min(floor, k)
            out.append(el.residue(k))
        return tuple(out), floor

    def pullback_series(self, disk, omega, center=None):
        """omega pulled back to the disk, as (shift, coeffs, prec).

        The differential equals t^shift * sum(coeffs[k] t^k) dt with integer
        coefficients valid mod p^prec; good disks expand around `center`.
        """
        om_ints, floor = self._lift_omega(omega)
        sh, cf = self._omega_series(disk, om_ints, center)
        return sh, cf, floor

    def _omega_series(self, disk, om_ints, center=None):
        key = (disk.reduction, id(center) if center is not None else None, om_ints)
        got = self._omega_cache.get(key)
        if got is not None:
            return got
        dd = self._disk_data(disk, center)
        mod, T = dd["mod"], dd["T"]
        # coefficients of x^a for each power of y
        P1, P2 = [0, 0, 0], [0, 0, 0]
        for ci, (a, b) in zip(om_ints, BASIS):
            if ci:
                (P1 if b == 1 else P2)[a] = (((P1 if b == 1 else P2)[a]) + ci) % mod
        if disk.kind == GOOD:
            s1 = _taylor_shift(P1, dd["x0"], mod)
            s2 = _taylor_shift(P2, dd["x0"], mod)
            num = [0] * (T + 1)
            for poly, ypow in ((s1, dd["ys"]), (s2, dd["y2"])):
                if not any(poly):
                    continue
                part = ser_mul(poly, ypow, mod, T)
                for k, c in enumerate(part):
                    num[k] = (num[k] + c) % mod
            out = (0, ser_mul(num, dd["Finv"], mod, T))
        elif disk.kind == BAD_FINITE:
            # x^a y^b dx / f = t^(b-3) P_b(x(t)) x'(t) dt
            arr = [0] * (T + 1)
            for b, poly in ((1, P1), (2, P2)):
                if not any(poly):
                    continue
                part = ser_mul(_poly_of_series(poly, dd["xt"], mod, T),
                               dd["dxt"], mod, T)
                for k, c in enumerate(part):
                    idx = k + b - 1  # t-power (k + b - 3) minus shift (-2)
                    if idx <= T:
                        arr[idx] = (arr[idx] + c) % mod
            out = (-2, arr)
        else:
            # x^a y^b dx / f = -3 t^(8-3a-4b) u(t)^b / Ft(t) dt
            arr = [0] * (T + 1)
            for ci, (a, b) in zip(om_ints, BASIS):
                if not ci:
                    continue
                base = dd["g1"] if b == 1 else dd["g2"]
                off = (8 - 3 * a - 4 * b) + 6
                sc = (-3 * ci) % mod
                for k, c in enumerate(base):
                    idx = off + k
                    if idx <= T:
                        arr[idx] = (arr[idx] + sc * c) % mod
            out = (-6, arr)
        self._omega_cache[key] = out
        return out

    # -- termwise evaluation ----------------------------------------------

    @staticmethod
    def _antider_terms(shift, coeffs):
        """Termwise antiderivative as [(power, coeff, divisor)], fixed at 0."""
        terms = []
        for i, c in enumerate(coeffs):
            if not c:
                continue
            k = shift + i
            if k == -1:
                raise PoleInDisk("nonzero residue: logarithmic term")
            terms.append((k + 1, c, k + 1))
        return terms

    def _eval_terms(self, terms, prec, t):
        """sum(c/d * t^j for (j, c, d) in terms) at the uniformizer value t."""
        ctx, p, e = self.ctx, self.p, self.e
        if t is None or t.is_zero:
            if any(j < 0 for j, _, _ in terms):
                raise PoleInDisk("pole at the disk center")
            const = sum(c * pow(d, -1, ctx.pk(prec)) for j, c, d in terms if j == 0)
            return _int_to_padic(ctx, const % ctx.pk(prec), 0, prec)
        modp = ctx.pk(prec)

        def scalar(c, d):
            el = _int_to_padic(ctx, c % modp, 0, prec)
            return el if d == 1 else el * ctx.from_int(d).inverse()

        if isinstance(t, PadicElement):
            v = int(t.valuation())
            if v < 1:
                raise WrongDisk("evaluation point lies outside the open disk")
            jcap = prec // v + 4
            acc = None
            for j, c, d in terms:
                if j > jcap:
                    break
                term = scalar(c, d) * t ** j
                acc = term if acc is None else acc + term
            return acc if acc is not None else ctx.zero(prec)

        vpi = t.pi_valuation()
        if vpi == INF or vpi < 1:
            raise WrongDisk("evaluation point lies outside the open disk")
        jcap = (e * prec) // vpi + 4
        pure = _pure_form(t)
        if pure is not None:
            u, r = pure
            buckets = [None] * e
            for j, c, d in terms:
                if j > jcap:
                    break
                q, s = divmod(r * j, e)
                val = scalar(c, d) * u ** j
                if q:
                    val = val * ctx.from_rational(Fraction(p) ** q)
                buckets[s] = val if buckets[s] is None else buckets[s] + val
            return RamifiedElement(
                ctx, e, [b if b is not None else ctx.zero() for b in buckets])
        acc = RamifiedElement.zero(ctx, e)
        tinv = None
        tp, cur = RamifiedElement.from_padic(ctx.one(), e), 0
        for j, c, d in terms:
            if j > jcap:
                break
            if j < 0:
                if tinv is None:
                    tinv = t.inverse()
                acc = acc + (tinv ** (-j)).scalar_mul(scalar(c, d))
                continue
            while cur < j:
                # refresh nominal precision: the per-step cap rounding of the
                # coefficient representation would otherwise charge one digit
                # per multiplication, far beyond the real error growth
                tp = (tp * t)._refreshed()
                cur += 1
            acc = acc + tp.scalar_mul(scalar(c, d))
        return acc

    # -- uniformizer values of points -------------------------------------

    def _param(self, disk, P):
        """The uniformizer value of P in its disk (None for the center)."""
        t = getattr(P, "_disk_t", None)
        if t is not None:
            return t
        if disk.kind == BAD_FINITE:
            if P.inf:
                raise WrongDisk(f"{P!r} is not in {disk!r}")
            return None if P.y.is_zero else P.y
        if disk.kind == GOOD:
            raise WrongDisk("good disks have no canonical uniformizer value")
        # infinite disk: t^-3 = x, branch fixed by y = t^-4 u(t)
        if P.inf:
            return None
        cands = cube_roots(P.x.inverse())
        dd = self._disk_data(disk)
        u_terms = [(k, c, 1) for k, c in enumerate(dd["u"]) if c]
        best, best_val = None, -INF
        for tc in cands:
            ut = self._eval_terms(u_terms, self.W, tc)
            diff = P.y * tc ** 4 - ut
            v = diff.valuation()
            if v > best_val:
                best, best_val = tc, v
        if best is None or best_val < 1:
            raise WrongDisk(f"{P!r} has no branch in the infinite disk")
        return best

    # -- boundary points ---------------------------------------------------

    def boundary_point(self, disk, e: int = None) -> CurvePoint:
        """The point at |t| = p^(-1/e) with t = pi on a bad disk."""
        if e is not None and e != self.e:
            raise ValueError("integrator is fixed at e = %d" % self.e)
        if disk.kind == GOOD:
            raise WrongDisk("boundary points are defined for bad disks")
        got = self._boundary_cache.get(disk.reduction)
        if got is not None:
            return got
        ctx, e = self.ctx, self.e
        pi1 = RamifiedElement.pi(ctx, e, 1)
        dd = self._disk_data(disk)
        if disk.kind == BAD_FINITE:
            x_terms = [(k, c, 1) for k, c in enumerate(dd["xt"]) if c]
            xS = self._eval_terms(x_terms, self.W, pi1)
            S = CurvePoint(xS, pi1)
        else:
            u_terms = [(k, c, 1) for k, c in enumerate(dd["u"]) if c]
            uS = self._eval_terms(u_terms, self.W, pi1)
            S = CurvePoint(RamifiedElement.pi(ctx, e, -3), uS.shift_pi(-4))
            S._u_value = uS
        S._disk_t = pi1
        S._disk_key = disk.reduction
        self._boundary_cache[disk.reduction] = S
        return S

    # -- exact parts f_i ----------------------------------------------------

    def _exact_at_unramified(self, x, y):
        """All six exact-part values at a good-disk Q_p point."""
        ctx, p = self.ctx, self.p
        kprec = self.W
        for el in (x, y):
            if el.abs_prec != INF:
                kprec = min(kprec, int(el.abs_prec))
        mod = ctx.pk(kprec)
        xr, yr = x.residue(kprec), y.residue(kprec)
        yinv = pow(yr, -1, mod)
        ypow = {}

        def yp(m):
            if m not in ypow:
                ypow[m] = pow(yr, m, mod) if m >= 0 else pow(yinv, -m, mod)
            return ypow[m]

        out = []
        for part in self.fd.exact_parts:
            smax = max((sig for sig, _ in part.levels.values()), default=0)
            acc = 0
            for m, (sig, poly) in part.levels.items():
                pv = 0
                for c in reversed(poly):
                    pv = (pv * xr + c) % mod
                acc = (acc + pv * yp(m) * pow(p, smax - sig, mod)) % mod
            out.append(_int_to_padic(ctx, acc, -smax, kprec - smax))
        return out

    def _flat_mul(self, a, b, mod):
        """Product in Z[pi]/(pi^e - p) on length-e integer vectors."""
        from .padic import _polymul_mod
        e, p = self.e, self.p
        c = _polymul_mod(a, b, mod)
        out = c[:e] + [0] * (e - len(c[:e]))
        for i, v in enumerate(c[e:]):
            out[i] = (out[i] + p * v) % mod
        return out

    def _exact_at_boundary(self, disk, S):
        """All six exact-part values at a boundary point, with convergence check."""
        ctx, p, e = self.ctx, self.p, self.e
        kprec = self.W
        mod = ctx.pk(kprec)
        max_deg = max((len(poly) for part in self.fd.exact_parts
                       for _, poly in part.levels.values()), default=1)

        if disk.kind == BAD_FINITE:
            xflat = [c.residue(kprec if c.abs_prec == INF
                               else min(kprec, int(c.abs_prec)))
                     for c in S.x.coeffs]
            xpows = [[1] + [0] * (e - 1)]
            for _ in range(max_deg - 1):
                xpows.append(self._flat_mul(xpows[-1], xflat, mod))

            def poly_at(poly):
                buckets = [0] * e
                for j, c in enumerate(poly):
                    if not c:
                        continue
                    xp = xpows[j]
                    for s in range(e):
                        if xp[s]:
                            buckets[s] = (buckets[s] + c * xp[s]) % mod
                return RamifiedElement(
                    ctx, e, [_int_to_padic(ctx, b, 0, kprec) for b in buckets])

            def y_power(m):
                return None, m  # pi^m: handled as a pure shift
        else:
            def poly_at(poly):
                # x = pi^-3: sum c_j p^floor(-3j/e) pi^((-3j) mod e)
                buckets = [None] * e
                for j, c in enumerate(poly):
                    if not c:
                        continue
                    q, s = divmod(-3 * j, e)
                    el = _int_to_padic(ctx, c % mod, q, q + kprec)
                    buckets[s] = el if buckets[s] is None else buckets[s] + el
                return RamifiedElement(
                    ctx, e, [b if b is not None else ctx.zero() for b in buckets])

            uval = S._u_value
            upows = {0: RamifiedElement.from_padic(ctx.one(), e), 1: uval}
            uinv = uval.inverse()

            def upow(m):
                if m in upows:
                    return upows[m]
                step = 1 if m > 0 else -1
                base = uval if m > 0 else uinv
                k = m
                while k not in upows:
                    k -= step
                cur = upows[k]
                while k != m:
                    k += step
                    cur = (cur * base)._refreshed()
                    upows[k] = cur
                return upows[m]

            def y_power(m):
                # y^m = pi^(-4m) u(pi)^m
                return upow(m), -4 * m

        out, diags = [], []
        for part in self.fd.exact_parts:
            acc = RamifiedElement.zero(ctx, e)
            for m, (sig, poly) in sorted(part.levels.items()):
                term = poly_at(poly)
                ram, shift = y_power(m)
                if ram is not None:
                    term = term * ram
                term = term.shift_pi(shift)
                if sig:
                    term = term.scalar_mul(ctx.from_rational(Fraction(1, p ** sig)))
                v = term.pi_valuation()
                if v != INF:
                    diags.append((m, v))
                acc = acc + term
            out.append(acc)
        self._check_convergence(diags)
        # each wrap of pi^e = p in a deep y^m shift divides by p, so the
        # values are only known modulo p^(W - depth/e); if that eats into the
        # target digits, a larger e is required
        need = self.N + 5
        lowest = min((int(c.abs_prec) for acc in out for c in acc.coeffs
                      if c.abs_prec != INF), default=None)
        if lowest is not None and lowest < need:
            deepest = max((-m for part in self.fd.exact_parts
                           for m in part.levels), default=0)
            budget = max(1, self.W - need)
            exc = IncreaseE(
                f"boundary values precise only to O(p^{lowest}) at radius "
                f"1/{e} (need {need} digits); increase e")
            exc.e_min = -(-deepest // budget)
            raise exc
        return out

    def _check_convergence(self, diags):
        """Flag evaluations whose deep pole terms dominate: the boundary is
        too close to the very bad point and e must grow."""
        if not diags:
            return
        vmin = min(v for _, v in diags)
        if vmin < -4 * self.e:
            raise IncreaseE(f"exact part blows up at radius 1/{self.e} "
                            f"(term of size p^{-vmin / self.e:.1f})")
        ms = sorted({m for m, _ in diags})
        if len(ms) >= 8:
            deep_cut = ms[len(ms) // 4 - 1]
            vdeep = min(v for m, v in diags if m <= deep_cut)
            vrest = min(v for m, v in diags if m > deep_cut)
            if vdeep < min(vrest, 0):
                raise IncreaseE("exact-part terms are not decaying at radius "
                                f"1/{self.e}; increase e")

    # -- Frobenius images of endpoints -------------------------------------

    def _phi_param(self, disk, S):
        """Uniformizer value of phi(S) for a boundary point S."""
        ctx, p, e = self.ctx, self.p, self.e
        one_r = RamifiedElement.from_padic(ctx.one(), e)
        A = self.fd.A_poly
        if disk.kind == BAD_FINITE:
            Aval = RamifiedElement.zero(ctx, e)
            for c in reversed(A):
                Aval = (Aval * S.x + c)._refreshed()
            # u = p A(x) / f(x)^p with f(x) = y^3 = pi^3
            u_el = Aval.scalar_mul(ctx.from_int(p)).shift_pi(-3 * p)
            if u_el.pi_valuation() < 1:
                raise IncreaseE(f"Frobenius correction diverges at radius 1/{e}; "
                                "increase e")
            w = cube_root_ramified(one_r + u_el, one_r)
            return w.shift_pi(p)
        # infinite disk: x = pi^-3, f(x)^p = pi^(-12p) Ft(pi)^p
        mod = ctx.pk(self.W)
        buckets = [None] * e
        for j, c in enumerate(A):
            if not c:
                continue
            q, s = divmod(-3 * j, e)
            el = _int_to_padic(ctx, c % mod, q, q + self.W)
            buckets[s] = el if buckets[s] is None else buckets[s] + el
        Aval = RamifiedElement(ctx, e,
                               [b if b is not None else ctx.zero() for b in buckets])
        dd = self._disk_data(disk)
        Ft_terms = [(k, c, 1) for k, c in enumerate(dd["Ft"]) if c]
        Fv = self._eval_terms(Ft_terms, self.W, RamifiedElement.pi(ctx, e, 1))
        u_el = (Aval.scalar_mul(ctx.from_int(p)) * Fv.inverse() ** p).shift_pi(12 * p)
        if u_el.pi_valuation() < 1:
            raise IncreaseE(f"Frobenius correction diverges at radius 1/{e}; "
                            "increase e")
        w = cube_root_ramified(one_r + u_el, one_r)
        y_phi = S.y ** p * w
        u_terms = [(k, c, 1) for k, c in enumerate(dd["u"]) if c]
        best, best_val = None, -INF
        for c in cube_roots(ctx.one()):
            tc = RamifiedElement.pi(ctx, e, p).scalar_mul(c)
            ut = self._eval_terms(u_terms, self.W, tc)
            yc = ut.scalar_mul(c.inverse() ** 4).shift_pi(-4 * p)
            v = (yc - y_phi).valuation()
            if v > best_val:
                best, best_val = tc, v
        return best

    # -- endpoints of the linear system ------------------------------------

    def _unit_omega(self, i):
        v = [0] * 6
        v[i] = 1
        return v

    def _endpoint(self, R):
        got = self._endpoint_cache.get(id(R))
        if got is not None:
            return got
        disk = self.disk_of(R)
        if disk.kind == GOOD:
            if not isinstance(R.x, PadicElement):
                raise WrongDisk("good-disk system endpoints must be Q_p points")
            fvals = self._exact_at_unramified(R.x, R.y)
            tphi = R.x ** self.p - R.x
            h = []
            for i in range(6):
                om, floor = self._lift_omega(self._unit_omega(i))
                sh, cf = self._omega_series(disk, om, center=R)
                tiny = self._eval_terms(self._antider_terms(sh, cf), floor, tphi)
                h.append(fvals[i] - tiny)
        else:
            if getattr(R, "_disk_t", None) is None:
                raise WrongDisk("bad-disk system endpoints must be boundary points")
            fvals = self._exact_at_boundary(disk, R)
            tphi = self._phi_param(disk, R)
            h = []
            for i in range(6):
                om, floor = self._lift_omega(self._unit_omega(i))
                sh, cf = self._omega_series(disk, om)
                terms = self._antider_terms(sh, cf)
                tiny = (self._eval_terms(terms, floor, tphi)
                        - self._eval_terms(terms, floor, R._disk_t))
                h.append(fvals[i] - tiny)
        rec = _Endpoint(R, disk, h)
        self._endpoint_cache[id(R)] = rec
        return rec

    # -- public integrals ---------------------------------------------------

    def tiny_integral(self, P, Q, omega):
        """int_P^Q omega for P, Q in one residue disk."""
        dP, dQ = self.disk_of(P), self.disk_of(Q)
        if dP is not dQ:
            raise NotSameDisk(f"{P!r} and {Q!r} lie in different disks")
        return self._tiny(dP, P, Q, omega)

    def _is_unramified(self, P):
        return P.inf or isinstance(P.x, PadicElement)

    def _tiny(self, disk, P, Q, omega):
        om_ints, floor = self._lift_omega(omega)
        if disk.kind == GOOD:
            if self._is_unramified(P):
                center, other, sign = P, Q, 1
            elif self._is_unramified(Q):
                center, other, sign = Q, P, -1
            else:
                raise WrongDisk("tiny integral in a good disk needs a Q_p endpoint")
            sh, cf = self._omega_series(disk, om_ints, center=center)
            val = self._eval_terms(self._antider_terms(sh, cf), floor,
                                   other.x - center.x)
            return val if sign == 1 else -val
        sh, cf = self._omega_series(disk, om_ints)
        terms = self._antider_terms(sh, cf)
        vQ = self._eval_terms(terms, floor, self._param(disk, Q))
        vP = self._eval_terms(terms, floor, self._param(disk, P))
        return vQ - vP

    def basis_integrals(self, P, Q):
        """The vector (int_P^Q omega_i) for the six basis differentials.

        P and Q must be good-disk Q_p points, boundary points, or interior
        points of bad disks away from the very bad point (routed through the
        disk boundary automatically).
        """
        dP, dQ = self.disk_of(P), self.disk_of(Q)
        if dP.kind != GOOD and getattr(P, "_disk_t", None) is None:
            S = self.boundary_point(dP)
            base = self.basis_integrals(S, Q)
            return [self._tiny(dP, P, S, self._unit_omega(i)) + base[i]
                    for i in range(6)]
        if dQ.kind != GOOD and getattr(Q, "_disk_t", None) is None:
            S = self.boundary_point(dQ)
            base = self.basis_integrals(P, S)
            return [base[i] + self._tiny(dQ, S, Q, self._unit_omega(i))
                    for i in range(6)]
        EP, EQ = self._endpoint(P), self._endpoint(Q)
        c = [EQ.h[i] - EP.h[i] for i in range(6)]
        ram = any(isinstance(x, RamifiedElement) for x in c)
        if ram:
            c = [x if isinstance(x, RamifiedElement)
                 else RamifiedElement.from_padic(x, self.e) for x in c]

        def entry(i, j):
            el = (1 if i == j else 0) - self.fd.M[i][j]
            return RamifiedElement.from_padic(el, self.e) if ram else el

        rows = [[entry(i, j) for j in range(6)] for i in range(6)]
        v, det_ord = _solve_linear(rows, c)
        self.det_ord = det_ord
        return v

    def integral(self, P, Q, omega):
        """int_P^Q omega across arbitrary disks (omega regular where needed)."""
        dP, dQ = self.disk_of(P), self.disk_of(Q)
        if dP is dQ:
            return self._tiny(dP, P, Q, omega)
        parts = []
        if dP.kind == GOOD:
            P2 = P
        elif getattr(P, "_disk_t", None) is not None:
            P2 = P
        else:
            P2 = self.boundary_point(dP)
            parts.append(self._tiny(dP, P, P2, omega))
        if dQ.kind == GOOD:
            Q2 = Q
        elif getattr(Q, "_disk_t", None) is not None:
            Q2 = Q
        else:
            Q2 = self.boundary_point(dQ)
            parts.append(self._tiny(dQ, Q2, Q, omega))
        v = self.basis_integrals(P2, Q2)
        omega = list(omega) + [0] * (6 - len(list(omega)))
        total = None
        for ci, vi in zip(omega, v):
            el = self.ctx.element(ci)
            if el.is_zero:
                continue
            term = vi * el
            total = term if total is None else total + term
        if total is None:
            total = self.ctx.zero(self.N)
        for extra in parts:
            total = total + extra
        if self._is_unramified(P) and self._is_unramified(Q):
            total = self._project(total)
        return total

    def _project(self, value):
        """Project a Q_p-rational answer computed through Q_p(pi) back to Q_p."""
        if not isinstance(value, RamifiedElement):
            return value
        try:
            return value.to_padic(noise_floor=max(1, self.N + 2))
        except ValueError as exc:
            raise IncreaseE(f"ramified noise exceeds tolerance: {exc}")

    def divisor_integral(self, divisor, omega):
        """int_D omega for D = sum(points) - (number of points) * infinity."""
        if isinstance(divisor, DivisorSpec):
            pts = list(divisor.points)
            if divisor.base_multiple is not None and divisor.base_multiple != len(pts):
                raise ValueError("divisor must have degree zero against infinity")
        else:
            pts = list(divisor)
        base = self.infinite_disk.very_bad_point
        total = None
        for P in pts:
            val = self.integral(base, P, omega)
            total = val if total is None else total + val
        if total is None:
            return self.ctx.zero(self.N)
        return self._project(total)
