"""Effective Chabauty--Coleman on Picard curves.

Vanishing differentials with precision accounting, per-disk zero solving,
assembly of X(Q_p)_1, classification of its members, and the end-to-end
pipeline with prime selection and e-escalation.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .algdep import algdep
from .coleman import (
    ColemanIntegrator,
    DivisorSpec,
    NumberFieldPointSpec,
    realize_nf_points,
)
from .curve import (
    BAD_FINITE,
    BAD_INFINITE,
    GOOD,
    CurvePoint,
    PicardCurve,
    good_prime,
    lift_point,
    points_over_Fp,
    rational_point_search,
)
from .errors import (
    ComputationFailure,
    DegenerateDivisor,
    DoubleRoot,
    IncreaseE,
    PicardCCError,
    PrecisionExhausted,
)
from .frobenius import frobenius_matrix
from .padic import INF, PadicContext, PadicElement, _pval, cube_roots
from .series import PadicSeries, poly_eval_mod, refine_root, solve_zeros_in_disk

__all__ = [
    "VanishingBasis",
    "PointClassification",
    "ChabautyReport",
    "vanishing_differentials",
    "chabauty_set",
    "classify_point",
    "run_pipeline",
]


def _unit3(i):
    v = [0, 0, 0]
    v[i] = 1
    return v


def _recap(el, ctx):
    """A PadicElement re-expressed in a (usually lower-precision) context.

    Zero sentinels keep their full absolute precision: the normalization
    step budgets zero coefficients by abs_prec, not relative precision.
    """
    if el.is_zero:
        ap = el.abs_prec
        return ctx.zero(INF if ap == INF else int(ap))
    rel = min(el.rel, ctx.N)
    return PadicElement(ctx, el.v, el.unit % ctx.pk(rel), rel, _raw=True)


def _int_to_ctx(ctx, c, known):
    """The integer c, known modulo p^known, as an element of ctx."""
    c %= ctx.pk(known)
    if c == 0:
        return ctx.zero(known)
    v = _pval(c, ctx.p)
    if v >= known:
        return ctx.zero(known)
    rel = min(known - v, ctx.N)
    return PadicElement(ctx, v, (c // ctx.pk(v)) % ctx.pk(rel), rel, _raw=True)


def _poly_at(poly, x, ctx):
    acc = ctx.zero(INF)
    for c in reversed(poly):
        acc = acc * x + c
    return acc


# --- vanishing differentials ---------------------------------------------


@dataclass
class VanishingBasis:
    """Kernel of the divisor-integral matrix over the regular differentials."""

    vectors: list            # each [v1, v2, v3], echelonized with unit pivots
    precision: int           # N - ord_p(det(M - I)) - delta
    base_precision: int      # N - ord_p(det(M - I)); the solver charges delta
    divisor_integrals: list  # the k x 3 evidence rows
    det_ord: int


def _delta_bound(p, T):
    """Worst antiderivative loss max v_p(i+1) over the first T+1 terms."""
    d, q = 0, p
    while q <= T + 1:
        d += 1
        q *= p
    return d


def _kernel_basis(rows, ctx):
    """Kernel of a k x 3 matrix over Q_p, echelonized with unit pivots."""
    pivots = {}  # column -> normalized reduced row
    for row in rows:
        row = list(row)
        for col, prow in pivots.items():
            c = row[col]
            if not c.is_zero:
                row = [a - c * b for a, b in zip(row, prow)]
        best = None
        for j in range(3):
            if j in pivots or row[j].is_zero:
                continue
            if best is None or row[j].valuation() < row[best].valuation():
                best = j
        if best is None:
            continue  # dependent divisor
        inv = ctx.from_int(1) / row[best]
        prow = [a * inv for a in row]
        for col, q in list(pivots.items()):
            c = q[best]
            if not c.is_zero:
                pivots[col] = [a - c * b for a, b in zip(q, prow)]
        pivots[best] = prow
    basis = []
    for j in range(3):
        if j in pivots:
            continue
        v = [ctx.zero(INF) for _ in range(3)]
        v[j] = ctx.from_int(1)
        for col, prow in pivots.items():
            v[col] = prow[j] * (-1)
        basis.append(v)
    return basis


def vanishing_differentials(curve, p, divisors, N=15, e=40, engine=None):
    """Basis of regular differentials whose integrals kill every divisor.

    divisors: list of DivisorSpec (realized points, implicitly minus a
    multiple of infinity).  Raises DegenerateDivisor on a zero integral
    vector and PrecisionExhausted when N - ord_p(det(M-I)) - delta <= 0.
    """
    if engine is None:
        engine = ColemanIntegrator(frobenius_matrix(curve, p, N), N=N, e=e)
    ctx = engine.ctx
    rows = []
    for D in divisors:
        row = [engine.divisor_integral(D, _unit3(i)) for i in range(3)]
        if all(c.is_zero or c.valuation() >= engine.N for c in row):
            raise DegenerateDivisor("divisor integral vector is zero to precision")
        rows.append(row)
    det_ord = int(math.ceil(engine.det_ord))
    prec = engine.N - det_ord - _delta_bound(p, engine.T_good)
    if prec <= 0:
        raise PrecisionExhausted(
            f"N - ord_p(det(M-I)) - delta = {prec} <= 0")
    vectors = _kernel_basis(rows, ctx)
    return VanishingBasis(vectors, prec, engine.N - det_ord, rows, det_ord)


# --- solving for X(Q_p)_1 -------------------------------------------------


def _disk_center(engine, disk):
    if disk.kind != GOOD:
        return disk.very_bad_point
    x0, y0 = disk.reduction
    for P in lift_point(engine.curve, x0, engine.ctx):
        if P.y.residue(1) == y0:
            return P
    raise ComputationFailure(f"no center above {disk.reduction}")


def _series_for_vector(engine, disk, center, vec, ctx_s):
    """The pullback of a regular combination as a PadicSeries over ctx_s."""
    sh, cf, prec = engine.pullback_series(
        disk, list(vec), center if disk.kind == GOOD else None)
    top = sh + len(cf) - 1
    dense = [0] * (top + 1)
    for k, c in enumerate(cf):
        j = sh + k
        if j < 0:
            if c % engine.ctx.pk(min(prec, ctx_s.N)):
                raise PicardCCError("regular differential with a pole in a disk")
            continue
        dense[j] = c
    return PadicSeries(ctx_s, [_int_to_ctx(ctx_s, c, prec) for c in dense])


def _agree_res(r1, k1, r2, k2, p):
    k = min(k1, k2)
    return (r1 - r2) % p ** k == 0


def _annihilates(r, solved_entry, p):
    recs, Np, lam, F = solved_entry
    if F is None:
        return False
    val = poly_eval_mod(F, r % p ** Np, p ** Np)
    if val == 0:
        return True
    return _pval(val, p) >= Np - 4


def _disk_points(engine, disk, vanishing, ctx_s, base):
    p = engine.p
    center = _disk_center(engine, disk)
    solved = []
    for vec in vanishing.vectors:
        if center.inf:
            const = ctx_s.zero(INF)
        else:
            const = _recap(engine.integral(base, center, list(vec)), ctx_s)
        fprime = _series_for_vector(engine, disk, center, vec, ctx_s)
        try:
            solved.append(solve_zeros_in_disk(fprime, const, ctx_s,
                                              require_simple=False))
        except PrecisionExhausted as exc:
            # starved coefficients trace back to boundary routing noise,
            # which shrinks as e grows
            raise IncreaseE(f"disk {disk.reduction}: {exc}")
    if any(F is None for (_, _, _, F) in solved):
        # some basis series has no zeros on the disk at all
        return []

    accepted = []  # (r, Np, record)
    for i, (recs, Np, lam, F) in enumerate(solved):
        for rec in recs:
            if not rec.certified_simple:
                continue
            r = refine_root(F, rec, p, Np)
            if any(_agree_res(r, Np, r2, Np2, p) for (r2, Np2, _) in accepted):
                continue
            if all(_annihilates(r, solved[j], p)
                   for j in range(len(solved)) if j != i):
                accepted.append((r, Np, rec))

    # common double root of every basis series -> provably stuck
    for rec in solved[0][0]:
        if rec.certified_simple:
            continue
        if any(_agree_res(rec.residue, rec.known_digits, r2, Np2, p)
               for (r2, Np2, _) in accepted):
            continue
        matches_all = all(
            any(not rec2.certified_simple and
                _agree_res(rec.residue, rec.known_digits,
                           rec2.residue, rec2.known_digits, p)
                for rec2 in recs2)
            for (recs2, _, _, _) in solved)
        if matches_all:
            raise DoubleRoot(
                f"uncertified common root near t = p*{rec.residue} "
                f"in disk {disk.reduction}")

    out = []
    for (r, Np, rec) in accepted:
        Q = _point_from_root(engine, disk, center, r, Np)
        Q._certificate = {
            "disk": list(disk.reduction) if disk.reduction != "inf" else "inf",
            "root_residue": int(r),
            "digits": int(rec.known_digits),
            "precision": int(Np),
        }
        out.append(Q)
    return out


def _point_from_root(engine, disk, center, r, Np):
    """Rebuild the curve point with uniformizer value t = p*r in its disk."""
    ctx, p = engine.ctx, engine.p
    t_int = (p * r) % p ** (Np + 1)
    if t_int == 0:
        return CurvePoint(center.x, center.y, inf=center.inf,
                          exact_x=center.exact_x, exact_y=center.exact_y)
    # full-precision representative of the certified class t = p*r mod p^(Np+1);
    # the certificate records how many digits are actually determined
    t = ctx.from_int(t_int)
    if disk.kind == GOOD:
        x = center.x + t
        y0 = disk.reduction[1]
        y = [yy for yy in cube_roots(engine.curve.f_eval(x))
             if yy.residue(1) == y0][0]
        return CurvePoint(x, y)
    if disk.kind == BAD_FINITE:
        # t = y; recover x from f(x) = y^3 by Newton from the lifted center
        y = t
        target = y * y * y
        df = engine.curve.f_deriv()
        x = center.x
        for _ in range(Np.bit_length() + 3):
            num = engine.curve.f_eval(x) - target
            if num.is_zero:
                break
            x = x - num / _poly_at(df, x, ctx)
        return CurvePoint(x, y)
    # infinite disk: x = t^-3, y = u(t) t^-4
    x = ctx.from_int(1) / (t * t * t)
    dd = engine._disk_data(disk, None)
    m = int(Np) + 2
    uval = _poly_at([c % ctx.pk(ctx.N) for c in dd["u"][:m]], t, ctx)
    y_ser = uval / (t * t * t * t)
    best, bestv = None, None
    for yy in cube_roots(engine.curve.f_eval(x)):
        d = yy - y_ser
        v = d.valuation() if not d.is_zero else INF
        if best is None or v > bestv:
            best, bestv = yy, v
    return CurvePoint(x, best)


def chabauty_set(curve, p, N, e, vanishing, engine=None):
    """All points of X(Q_p) killing every vanishing differential.

    Scans every residue disk; a root is accepted when it is a certified
    simple root of at least one basis series and annihilates all of them.
    """
    if engine is None:
        engine = ColemanIntegrator(frobenius_matrix(curve, p, N), N=N, e=e)
    n_fp = len(points_over_Fp(curve, p))
    assert len(engine.disks) == n_fp, "disk scan must cover all of X(F_p)"
    ctx_s = PadicContext(p, vanishing.base_precision)
    base = engine.infinite_disk.very_bad_point
    found = []
    scanned = 0
    for disk in engine.disks:
        scanned += 1
        found.extend(_disk_points(engine, disk, vanishing, ctx_s, base))
    assert scanned == n_fp
    return found


# --- classification -------------------------------------------------------


@dataclass
class PointClassification:
    tag: str  # Rational | Ramification | TorsionCandidate | LinearRelation
    #          | RecognizedAlgebraic | Unrecognized
    minpoly_x: list = None
    minpoly_y: list = None
    relation: tuple = None  # (n, m, divisor_index): n*I(Q) = m*I(D)
    evidence: dict = field(default_factory=dict)


def _find_relation(I, J, bound, tol):
    for n in range(1, bound + 1):
        nI = [v * n for v in I]
        for m in range(-bound, bound + 1):
            if m == 0:
                continue
            ok = True
            for a, b in zip(nI, J):
                d = a - b * m
                if not (d.is_zero or d.valuation() >= tol):
                    ok = False
                    break
            if ok:
                return (n, m)
    return None


def _recognize(alpha, height_bound=10 ** 8, max_degree=4, prec=None):
    for d in range(1, max_degree + 1):
        poly = algdep(alpha, d, height_bound, prec=prec)
        if poly:
            return poly
    return None


def classify_point(Q, engine, vanishing, relation_bound=50,
                   height_bound=10 ** 8):
    """Trichotomy tag for a member of X(Q_p)_1, with integral evidence.

    Ramification points (including rational ones) are tagged Ramification:
    their classes are 3-torsion, so they are never counted as the found
    rational points S of the algorithm.
    """
    ctx = engine.ctx
    tol = max(5, min(8, vanishing.precision))
    # coordinates are full-precision representatives; only the certified
    # digits of the underlying residue class are trusted for recognition
    kp = None
    if hasattr(Q, "_certificate"):
        kp = int(Q._certificate["precision"]) + 1
    if Q.inf:
        return PointClassification("Rational", evidence={"point": "inf"})

    fx = engine.curve.f_eval(Q.x)
    if Q.y.is_zero or fx.is_zero or fx.valuation() >= tol:
        mp = _recognize(Q.x, height_bound, prec=kp)
        return PointClassification("Ramification", minpoly_x=mp,
                                   evidence={"f_of_x": str(fx)})

    base = engine.infinite_disk.very_bad_point
    Ivec = [engine.integral(base, Q, _unit3(i)) for i in range(3)]
    ev = {"integrals": [str(v) for v in Ivec]}

    px = algdep(Q.x, 1, height_bound, prec=kp)
    py = algdep(Q.y, 1, height_bound, prec=kp)
    if px and py and len(px) == 2 and len(py) == 2:
        xq = Fraction(-px[0], px[1])
        yq = Fraction(-py[0], py[1])
        if yq ** 3 == engine.curve.f_eval(xq):
            Q.exact_x, Q.exact_y = xq, yq
            return PointClassification("Rational", minpoly_x=px,
                                       minpoly_y=py, evidence=ev)

    if all(v.is_zero or v.valuation() >= tol for v in Ivec):
        return PointClassification(
            "TorsionCandidate",
            minpoly_x=_recognize(Q.x, height_bound, prec=kp),
            minpoly_y=_recognize(Q.y, height_bound, prec=kp),
            evidence=ev)

    for di, row in enumerate(vanishing.divisor_integrals):
        rel = _find_relation(Ivec, row, relation_bound, tol)
        if rel:
            return PointClassification(
                "LinearRelation", relation=(rel[0], rel[1], di),
                minpoly_x=_recognize(Q.x, height_bound, prec=kp), evidence=ev)

    mp = _recognize(Q.x, height_bound, prec=kp)
    if mp:
        return PointClassification(
            "RecognizedAlgebraic", minpoly_x=mp,
            minpoly_y=_recognize(Q.y, height_bound, prec=kp), evidence=ev)
    return PointClassification("Unrecognized", evidence=ev)


# --- pipeline -------------------------------------------------------------


@dataclass
class ChabautyReport:
    label: str
    p: int = None
    N: int = None
    e: int = None
    status: str = "Failure"
    failure_reason: str = None
    S: list = field(default_factory=list)
    T: list = field(default_factory=list)
    precision: int = None
    det_ord: int = None
    kernel_dim: int = None
    soundness_ok: bool = None
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "label": self.label, "p": self.p, "N": self.N, "e": self.e,
            "status": self.status, "failure_reason": self.failure_reason,
            "S": self.S, "T": self.T, "precision": self.precision,
            "det_ord": self.det_ord, "kernel_dim": self.kernel_dim,
            "soundness_ok": self.soundness_ok, "timings": self.timings,
        }


def _point_record(Q, cls):
    rec = {"tag": cls.tag}
    if Q.inf:
        rec["x"] = "inf"
    elif Q.exact_x is not None:
        rec["x"], rec["y"] = str(Q.exact_x), str(Q.exact_y)
    else:
        rec["x"], rec["y"] = str(Q.x), str(Q.y)
    if cls.minpoly_x:
        rec["minpoly_x"] = list(cls.minpoly_x)
    if cls.minpoly_y:
        rec["minpoly_y"] = list(cls.minpoly_y)
    if cls.relation:
        rec["relation"] = list(cls.relation)
    rec["evidence"] = cls.evidence
    if hasattr(Q, "_certificate"):
        rec["certificate"] = Q._certificate
    return rec


def _divisor_specs(record):
    specs = []
    for d in record.get("divisors", []):
        g = [Fraction(str(c)) for c in d["g"]]
        y_rule = d.get("y_rule")
        if y_rule is not None:
            y_rule = [Fraction(str(c)) for c in y_rule]
        specs.append(NumberFieldPointSpec(g, y_rule))
    return specs


def _split_product(specs):
    if not specs:
        return None
    prod = [1]
    for spec in specs:
        g = [int(c) for c in spec.x_minpoly]
        out = [0] * (len(prod) + len(g) - 1)
        for i, a in enumerate(prod):
            for j, b in enumerate(g):
                out[i + j] += a * b
        prod = out
    return prod


def _realize_divisors(engine, record, specs, search):
    ctx = engine.ctx
    if specs:
        out = []
        for spec in specs:
            pts = realize_nf_points(engine.curve, spec, ctx)
            out.append(DivisorSpec(pts, base_multiple=len(pts)))
        return out
    if record.get("point"):
        xq, yq = (Fraction(str(v)) for v in record["point"])
    else:
        cand = [P for P in search if not P.inf and P.exact_y != 0]
        if not cand:
            raise ComputationFailure(
                "no non-torsion input point or divisor supplied")
        xq, yq = cand[0].exact_x, cand[0].exact_y
    if yq ** 3 != engine.curve.f_eval(xq):
        raise ComputationFailure(f"input point ({xq}, {yq}) is not on the curve")
    P = CurvePoint(ctx.from_rational(xq), ctx.from_rational(yq),
                   exact_x=xq, exact_y=yq)
    return [DivisorSpec([P], base_multiple=1)]


def _attempt(curve, p, N, e0, e_inc, e_cap, record, specs, search):
    fd = frobenius_matrix(curve, p, N)
    e = e0
    last = None
    while e <= e_cap:
        try:
            engine = ColemanIntegrator(fd, N=N, e=e)
            divisors = _realize_divisors(engine, record, specs, search)
            van = vanishing_differentials(curve, p, divisors, engine=engine)
            pts = chabauty_set(curve, p, N, e, van, engine=engine)
            return engine, van, pts, e
        except IncreaseE as exc:
            last = exc
            e = max(e + e_inc, getattr(exc, "e_min", 0))
    raise IncreaseE(f"e escalation exhausted at cap {e_cap} ({last})")


def _contains_point(pts, sp, ctx, tol):
    if sp.inf:
        return any(Q.inf for Q in pts)
    x = ctx.from_rational(sp.exact_x)
    y = ctx.from_rational(sp.exact_y)
    for Q in pts:
        if Q.inf:
            continue
        dx, dy = Q.x - x, Q.y - y
        if ((dx.is_zero or dx.valuation() >= tol) and
                (dy.is_zero or dy.valuation() >= tol)):
            return True
    return False


def run_pipeline(record, params=None):
    """Steps 1-7 on one curve record; all failures land in the report."""
    t0 = time.time()
    params = dict(params or {})
    N = int(params.get("N", 15))
    e0 = int(params.get("e0", 40))
    e_inc = int(params.get("e_increment", 20))
    e_cap = int(params.get("e_cap", 200))
    bound = int(params.get("relation_bound", 50))
    height = int(params.get("height", 1000))
    p_override = params.get("p") or record.get("p")

    report = ChabautyReport(label=record.get("label") or "", N=N, e=e0)
    try:
        curve = PicardCurve(
            [int(c) for c in record["f"]],
            discriminant=record.get("discriminant"),
            label=record.get("label"),
        )
        specs = _divisor_specs(record)
        split = _split_product(specs)

        def next_prime(minp, skip):
            return good_prime(curve, minp, split_poly=split, skip=skip)

        if p_override:
            p = int(p_override)
            if curve.disc_f % p == 0 or p <= 3 or (
                    curve.discriminant and curve.discriminant % p == 0):
                report.failure_reason = f"p = {p} is a prime of bad reduction"
                report.timings["total_s"] = round(time.time() - t0, 2)
                return report
            if split is not None and next_prime(p, ()) != p:
                report.failure_reason = (
                    f"p = {p} rejected (divisor field not completely split)")
                report.timings["total_s"] = round(time.time() - t0, 2)
                return report
        else:
            p = next_prime(5, ())

        t1 = time.time()
        search = rational_point_search(curve, height)
        report.timings["search_s"] = round(time.time() - t1, 2)

        tried = []
        result = None
        while True:
            try:
                t1 = time.time()
                result = _attempt(curve, p, N, e0, e_inc, e_cap,
                                  record, specs, search)
                report.timings["solve_s"] = round(time.time() - t1, 2)
                break
            except DoubleRoot as exc:
                tried.append(p)
                if len(tried) > 1 or p_override:
                    raise
                p = next_prime(p + 1, tuple(tried))

        engine, van, pts, e_used = result
        report.p, report.e = p, e_used
        report.precision = van.precision
        report.det_ord = van.det_ord
        report.kernel_dim = len(van.vectors)

        t1 = time.time()
        for Q in pts:
            cls = classify_point(Q, engine, van, relation_bound=bound)
            rec = _point_record(Q, cls)
            (report.S if cls.tag == "Rational" else report.T).append(rec)
        report.timings["classify_s"] = round(time.time() - t1, 2)

        tol = max(4, min(8, van.precision))
        report.soundness_ok = all(
            _contains_point(pts, sp, engine.ctx, tol) for sp in search)
        report.status = "Success"
    except PicardCCError as exc:
        report.p = report.p or (int(p_override) if p_override else None)
        reason = getattr(exc, "reason", exc.__class__.__name__)
        report.failure_reason = f"{reason}: {exc}"
    report.timings["total_s"] = round(time.time() - t0, 2)
    return report
