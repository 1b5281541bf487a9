"""Fredholm determinants of compact operators, Newton polygons, and slope data.

The determinant det(1 - T*A) of a truncated compact operator is computed as a
polynomial in T over the operator's coefficient ring by a leading-principal
Schur recursion: appending row/column k multiplies the determinant by

    1 - a_kk*T - sum_m T^(m+2) * (R_k . A_k^m . C_k)

where A_k is the previous corner, R_k the new row and C_k the new column.
This costs one matrix-vector chain per step and never divides, so it works
over every coefficient ring in the package.

Honesty bookkeeping rides along at three levels: per-coefficient precision in
the ring elements, per-coefficient tail bounds that quantify what the dropped
rows of the full compact operator could still contribute, and a polygon-level
analysis that reports exactly which Newton-polygon vertices are beyond the
reach of every unknown digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConfigInvalid,
    FactorizationResidual,
    KernelDimensionMismatch,
    NonUnit,
    NoSeparatingVertex,
    PrecisionExhausted,
    PrecisionTargetUnreachable,
    RingMismatch,
    TruncationMismatch,
    UncertifiedInput,
    UncertifiedValuation,
    UncertifiedVertexCandidate,
)
from .rings import (
    _BIG,
    FP_LAURENT,
    LAMBDA_ETA,
    QP,
    R_ETA,
    BoundarySeriesElem,
    PadicScalar,
    PrimeConfig,
    ValuationResult,
    int_vp,
)
from .distributions import DenseOperatorMatrix


def lambda_sequence(t: int, n_top: int, p: int) -> list[int]:
    """Cumulative minor bounds for the t-block contraction profile.

    lambda(0) = 0 and lambda(i+1) = lambda(i) + floor(i/t) - floor(i/(p*t)),
    the sum of the first i orthonormal row bounds of a one-step contraction
    at the deepest radius.  Valuations of the i-th determinant coefficient of
    such an operator can never fall below lambda(i).
    """
    if t < 1:
        raise ConfigInvalid("block count must be >= 1")
    if p < 2:
        raise ConfigInvalid("p must be at least 2")
    if n_top < 0:
        raise ConfigInvalid("sequence length must be >= 0")
    out = [0]
    for i in range(n_top):
        out.append(out[-1] + i // t - i // (p * t))
    return out


# -- generic determinant core ----------------------------------------------


def _det_one_minus_t(rows, n_top: int, zero, one) -> list:
    """Coefficients of det(1 - T*A) mod T^(n_top+1) over any coefficient ring.

    ``rows`` is a square grid of ring elements supporting add/mul/neg and
    is_exact_zero; ``zero``/``one`` are the ring constants.  Division-free.
    """
    size = len(rows)
    q = [one]
    for k in range(size):
        mult = [one, rows[k][k].neg()]
        if k > 0 and n_top >= 2:
            rvec = rows[k][:k]
            w = [rows[i][k] for i in range(k)]
            for m in range(n_top - 1):
                acc = zero
                for idx in range(k):
                    a = rvec[idx]
                    b = w[idx]
                    if a.is_exact_zero() or b.is_exact_zero():
                        continue
                    acc = acc.add(a.mul(b))
                mult.append(acc.neg())
                if m < n_top - 2:
                    w = _corner_matvec(rows, k, w, zero)
        q = _poly_mul_trunc(q, mult, n_top, zero)
    while len(q) < n_top + 1:
        q.append(zero)
    return q[: n_top + 1]


def _corner_matvec(rows, k: int, w: list, zero) -> list:
    out = []
    for i in range(k):
        acc = zero
        row = rows[i]
        for j in range(k):
            a = row[j]
            b = w[j]
            if a.is_exact_zero() or b.is_exact_zero():
                continue
            acc = acc.add(a.mul(b))
        out.append(acc)
    return out


def _poly_mul_trunc(a: list, b: list, n_top: int, zero) -> list:
    out = [zero] * min(len(a) + len(b) - 1, n_top + 1)
    for i, ai in enumerate(a):
        if i > n_top or ai.is_exact_zero():
            continue
        for j, bj in enumerate(b):
            if i + j > n_top:
                break
            if bj.is_exact_zero():
                continue
            out[i + j] = out[i + j].add(ai.mul(bj))
    return out


# -- packed fast lane for series-ring determinants ---------------------------


class _PackedRing:
    """Residue-vector arithmetic for integral X-window series, mod p^k.

    All coefficients are tracked as canonical residues modulo one uniform
    modulus p^k (k = the weakest precision among the inputs), so ring
    operations reduce to integer convolutions; a whole-series multiply packs
    both operands into single big integers and performs one machine multiply.
    Each value carries a certified floor ``tail`` for everything the window
    representation discards, and a certified Gauss-valuation floor ``gauss``
    used to propagate tails through products.
    """

    def __init__(self, cfg: PrimeConfig, kdigits: int):
        self.cfg = cfg
        self.p = cfg.p
        self.kdigits = kdigits
        self.width = cfg.n_max + 1
        self.pk = cfg.p ** kdigits
        bits = self.pk.bit_length()
        self.shift = 2 * bits + self.width.bit_length() + 2
        self.mask = (1 << self.shift) - 1
        self.zero = _Packed(self, (0,) * self.width, _BIG, _BIG)
        one = [0] * self.width
        one[0] = 1
        self.one = _Packed(self, tuple(one), _BIG, 0)

    def from_series(self, e: BoundarySeriesElem) -> "_Packed":
        vec = [0] * self.width
        for n, c in e.coeffs.items():
            if n < 0 or n > self.cfg.n_max:
                raise RingMismatch("support outside the packed window")
            vec[n] = c.residue % self.pk
        tail = _BIG if e.tail_floor is None else e.tail_floor
        tail = min(tail, self.kdigits)
        return _Packed(self, tuple(vec), tail, self._gauss(vec, tail))

    def _gauss(self, vec, tail: int) -> int:
        g = tail
        k = self.kdigits
        for n, r in enumerate(vec):
            if n >= g:
                break
            if r:
                v = int_vp(self.p, r)
                if v > k:
                    v = k
            else:
                v = k
            if n + v < g:
                g = n + v
        return g


class _Packed:
    __slots__ = ("ring", "vec", "tail", "gauss", "_packed")

    def __init__(self, ring: _PackedRing, vec: tuple, tail: int, gauss: int):
        self.ring = ring
        self.vec = vec
        self.tail = tail
        self.gauss = gauss
        self._packed = None

    def is_exact_zero(self) -> bool:
        return self.tail >= _BIG and not any(self.vec)

    def _as_int(self) -> int:
        if self._packed is None:
            acc = 0
            shift = self.ring.shift
            for n in range(self.ring.width - 1, -1, -1):
                acc = (acc << shift) | self.vec[n]
            self._packed = acc
        return self._packed

    def add(self, other: "_Packed") -> "_Packed":
        r = self.ring
        pk = r.pk
        vec = tuple((a + b) % pk for a, b in zip(self.vec, other.vec))
        tail = min(self.tail, other.tail)
        return _Packed(r, vec, tail, min(self.gauss, other.gauss))

    def neg(self) -> "_Packed":
        r = self.ring
        pk = r.pk
        vec = tuple((pk - a) % pk if a else 0 for a in self.vec)
        return _Packed(r, vec, self.tail, self.gauss)

    def mul(self, other: "_Packed") -> "_Packed":
        r = self.ring
        dropped = max(r.cfg.n_max + 1, self.gauss + other.gauss)
        tail = min(self.tail + other.gauss, other.tail + self.gauss,
                   self.tail + other.tail, dropped)
        if not any(self.vec) or not any(other.vec):
            return _Packed(r, (0,) * r.width, tail, tail)
        raw = self._as_int() * other._as_int()
        pk = r.pk
        shift = r.shift
        mask = r.mask
        vec = []
        for n in range(r.width):
            vec.append(((raw >> (n * shift)) & mask) % pk)
        vec = tuple(vec)
        return _Packed(r, vec, tail, r._gauss(vec, tail))

    def to_series(self, tag: str) -> BoundarySeriesElem:
        r = self.ring
        p = r.p
        k = r.kdigits
        cc = {}
        floor = self.tail
        for n, res in enumerate(self.vec):
            if res:
                cc[n] = PadicScalar.inexact(p, res, k)
            elif n + k < floor:
                floor = n + k
        tail = None if floor >= _BIG else floor
        return BoundarySeriesElem(tag, r.cfg, cc, tail, validate=False)


def _uniform_digits(u: DenseOperatorMatrix) -> int | None:
    """Weakest coefficient precision across all entries; None = unusable."""
    k = None
    for row in u.entries:
        for e in row:
            if e.tail_floor is not None and e.tail_floor < 1:
                return None
            for n, c in e.coeffs.items():
                if n < 0 or n > u.cfg.n_max:
                    return None
                if c.precision is not None and (k is None or c.precision < k):
                    k = c.precision
    return k


# -- truncated entire series with honest tails -------------------------------


@dataclass(frozen=True)
class EntireSeriesTrunc:
    """Initial coefficients of det(1 - T*A) plus everything known beyond them.

    ``coeffs[n]`` approximates the n-th coefficient; ``tail_bounds[n]`` is a
    certified floor for the difference between the stored value and the full
    compact operator's coefficient (the sentinel means the stored value is the
    whole story).  ``minor_prefix``/``tail_certificate`` extend the picture to
    coefficients that were never computed: the true coefficient at any index m
    has valuation at least ``minor_floor(m)``.
    """

    cfg: PrimeConfig
    tag: str
    coeffs: tuple
    tail_bounds: tuple
    minor_prefix: tuple | None = None
    tail_certificate: int | None = None
    finite_degree: int | None = None

    @property
    def n_trunc(self) -> int:
        return len(self.coeffs) - 1

    def minor_floor(self, m: int) -> int:
        """Certified valuation floor for the true m-th coefficient."""
        if self.minor_prefix is None:
            raise UncertifiedInput("series has no minor bounds beyond its data")
        pre = self.minor_prefix
        last = len(pre) - 1
        if m <= last:
            return pre[m]
        assert self.tail_certificate is not None
        return pre[last] + (m - last) * self.tail_certificate

    def coefficient_valuation(self, n: int) -> ValuationResult:
        """Valuation of the true n-th coefficient, tail bounds included."""
        return self._combined(n, self.coeffs[n].gauss_valuation())

    def point_valuation(self, n: int, point=None) -> ValuationResult:
        """Valuation of the n-th coefficient specialized at a weight point."""
        base = self.coeffs[n]
        if point is None:
            if self.tag in (LAMBDA_ETA, R_ETA):
                raise RingMismatch("weight-ring series needs a point to specialize at")
            return self._combined(n, base.gauss_valuation())
        if self.tag not in (LAMBDA_ETA, R_ETA):
            raise RingMismatch("scalar series does not take weight points")
        kind = getattr(point, "kind", None)
        if kind == "mod_p":
            spec = base.specialize_mod_p()
            return self._combined(n, spec.gauss_valuation())
        if kind == "classical":
            if base.tail_floor is not None and base.tail_floor < 1:
                return self._combined(n, ValuationResult(0, False))
            spec = base.specialize_classical(point.x)
            return self._combined(n, spec.gauss_valuation())
        raise ConfigInvalid("unknown weight point kind %r" % (kind,))

    def _combined(self, n: int, vr: ValuationResult) -> ValuationResult:
        tb = self.tail_bounds[n]
        if tb >= _BIG:
            return vr
        if vr.value is None:
            return ValuationResult(tb, False)
        if vr.certified and vr.value < tb:
            return vr
        return ValuationResult(min(vr.value, tb), False)

    def points(self, point=None) -> list:
        return [(n, self.point_valuation(n, point)) for n in range(self.n_trunc + 1)]

    def polygon_tail(self) -> "PolygonTail | None":
        """Floor model for the coefficients beyond the truncation."""
        start = self.n_trunc + 1
        if self.tail_certificate is None:
            if self.finite_degree is not None and self.n_trunc >= self.finite_degree:
                return None
            return PolygonTail(start, (), None)
        last = len(self.minor_prefix) - 1
        floors = [self.minor_floor(m) for m in range(start, max(start, last) + 1)]
        return PolygonTail(start, tuple(floors), self.tail_certificate)


def fredholm_det(u: DenseOperatorMatrix, n_top: int,
                 target: int | None = None) -> EntireSeriesTrunc:
    """det(1 - T*u) through T^n_top with certified tail bounds.

    When the matrix carries a ``tail_certificate`` (it stands for a compact
    operator truncated to this corner), every returned coefficient also gets
    a floor for the dropped rows' contribution: an omitted n-minor uses at
    least one omitted row (valuation >= the certificate) and n-1 further
    distinct rows (valuations >= the n-1 smallest row certificates).
    ``target`` asserts a certainty level for every coefficient up front.
    """
    if n_top < 0:
        raise ConfigInvalid("need at least the constant coefficient")
    cfg = u.cfg
    tag = u.tag
    coeffs = None
    if tag in (LAMBDA_ETA, R_ETA):
        k = _uniform_digits(u)
        if k is not None:
            ring = _PackedRing(cfg, k)
            rows = [[ring.from_series(e) for e in row] for row in u.entries]
            q = _det_one_minus_t(rows, n_top, ring.zero, ring.one)
            coeffs = [c.to_series(tag) for c in q]
            coeffs[0] = BoundarySeriesElem.one(tag, cfg)
    if coeffs is None:
        zero = BoundarySeriesElem.zero(tag, cfg)
        one = BoundarySeriesElem.one(tag, cfg)
        coeffs = _det_one_minus_t(u.entries, n_top, zero, one)

    if u.tail_certificate is not None:
        if u.row_valuation_cert is None:
            raise UncertifiedInput(
                "operator advertises a tail certificate but has no row certificates")
        tc = u.tail_certificate
        small = sorted(c for c in u.row_valuation_cert if c <= tc)
        prefix = [0]
        for c in small:
            prefix.append(prefix[-1] + c)
        minor_prefix = tuple(prefix)

        def floor(m: int) -> int:
            if m < len(prefix):
                return prefix[m]
            return prefix[-1] + (m - len(prefix) + 1) * tc

        tails = [_BIG] + [tc + floor(n - 1) for n in range(1, n_top + 1)]
        det = EntireSeriesTrunc(cfg, tag, tuple(coeffs), tuple(tails),
                                minor_prefix, tc, None)
    else:
        tails = (_BIG,) * (n_top + 1)
        det = EntireSeriesTrunc(cfg, tag, tuple(coeffs), tails,
                                None, None, u.size)

    if target is not None:
        for n in range(n_top + 1):
            m = det.coeffs[n].certainty_modulus()
            have = min(_BIG if m is None else m, det.tail_bounds[n])
            if have < target:
                raise PrecisionTargetUnreachable(
                    "coefficient %d certain only below valuation %d, target %d"
                    % (n, have, target))
    return det


# -- Newton polygons ---------------------------------------------------------


@dataclass(frozen=True)
class PolygonTail:
    """Convex valuation floors for coefficients beyond the data range.

    ``floors[i]`` bounds the coefficient at ``start + i``; past the explicit
    list each step adds ``final_increment``.  ``final_increment`` None means
    nothing at all is known beyond the explicit floors.  Increments must never
    decrease, which makes the floor family convex and finitely analyzable.
    """

    start: int
    floors: tuple = ()
    final_increment: int | None = None

    def __post_init__(self):
        diffs = [b - a for a, b in zip(self.floors, self.floors[1:])]
        if any(d2 < d1 for d1, d2 in zip(diffs, diffs[1:])):
            raise ConfigInvalid("tail floor increments must not decrease")
        if self.final_increment is not None:
            if not self.floors:
                raise ConfigInvalid("an increment needs a base floor")
            if diffs and self.final_increment < diffs[-1]:
                raise ConfigInvalid("tail floor increments must not decrease")


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower hull of certified valuations with an honesty watermark.

    ``certified_upto`` is the largest vertex abscissa through which no
    uncertified digit and no beyond-the-data coefficient can alter the hull;
    -1 when nothing survived.  ``provisional_final`` marks that the polygon
    may continue or its last reported segment may still lengthen.
    """

    vertices: tuple
    slopes: tuple
    certified_upto: int
    provisional_final: bool

    def certified_slopes(self) -> list:
        """(slope, multiplicity) for segments ending inside the certified range."""
        out = []
        for (x1, _), (slope, mult) in zip(self.vertices, self.slopes):
            if x1 + mult <= self.certified_upto:
                out.append((slope, mult))
        return out

    def first_slopes(self, count: int) -> list:
        """The first ``count`` certified slopes, with multiplicity expanded."""
        out = []
        for slope, mult in self.certified_slopes():
            for _ in range(mult):
                if len(out) == count:
                    return out
                out.append(slope)
        return out


def _lower_hull(pts: list) -> list:
    best = {}
    for x, y in pts:
        if x not in best or y < best[x]:
            best[x] = y
    hull = []
    for x, y in sorted(best.items()):
        while len(hull) >= 2:
            x1, y1 = hull[-2]
            x2, y2 = hull[-1]
            if (y2 - y1) * (x - x1) >= (y - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((x, y))
    return hull


def _common_prefix(a: list, b: list) -> int:
    k = 0
    for va, vb in zip(a, b):
        if va != vb:
            break
        k += 1
    return k


def newton_polygon(points, tail: PolygonTail | None = None,
                   require_certified_through: int | None = None) -> NewtonPolygon:
    """Lower hull of (index, valuation) data with uncertainty analysis.

    ``points`` yields (n, ValuationResult).  Certified finite values build the
    hull; every uncertified floor, and the whole ``tail`` floor family, is then
    tested against the hull: content that could reshape it truncates
    ``certified_upto`` at the last untouched vertex.
    """
    cert = []
    threats = []
    for n, vr in points:
        if vr.certified:
            if vr.value is not None:
                cert.append((n, vr.value))
        else:
            threats.append((n, vr.bound()))
    hull = _lower_hull(cert)
    if not hull:
        return NewtonPolygon((), (), -1, True)

    upto = hull[-1][0]
    provisional = False

    for n, f in threats:
        if f >= _BIG:
            continue
        if n < hull[0][0]:
            upto = -1
            provisional = True
            continue
        hb = _lower_hull(cert + [(n, f)])
        if hb and hb[-1] == (n, f) and n > hull[-1][0]:
            hb = hb[:-1]
        k = _common_prefix(hull, hb)
        if k == len(hull):
            continue
        upto = min(upto, hull[k - 1][0] if k else -1)
        provisional = True

    if tail is not None:
        floor_pts = [(tail.start + i, f) for i, f in enumerate(tail.floors)]
        if tail.final_increment is None:
            upto = min(upto, hull[0][0])
            provisional = True
        else:
            hb = _lower_hull(cert + floor_pts)
            s = tail.final_increment
            while len(hb) >= 2:
                x1, y1 = hb[-2]
                x2, y2 = hb[-1]
                if y2 - y1 >= s * (x2 - x1):
                    hb.pop()
                else:
                    break
            k = _common_prefix(hull, hb)
            if k < len(hull):
                upto = min(upto, hull[k - 1][0] if k else -1)
                provisional = True

    vertices = tuple(hull)
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slopes.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    poly = NewtonPolygon(vertices, tuple(slopes), upto, provisional)
    if require_certified_through is not None and upto < require_certified_through:
        raise UncertifiedVertexCandidate(
            "polygon certified only through x = %d, need %d; raise precision "
            "or the truncation" % (upto, require_certified_through))
    return poly


def slopes_at_point(det: EntireSeriesTrunc, point=None,
                    require_certified_through: int | None = None) -> NewtonPolygon:
    """Newton polygon of the determinant specialized at a weight point.

    ``point`` is None for scalar-ring determinants, a classical or mod-p
    weight point for weight-ring ones.  Valuation floors survive
    specialization (points sit on the closed annulus |X| <= |p|), so the tail
    model transfers verbatim.
    """
    return newton_polygon(det.points(point), det.polygon_tail(),
                          require_certified_through)


# -- slope factorization -----------------------------------------------------


def _coeff_tag(coeffs: list) -> str:
    tags = {c.tag for c in coeffs}
    if len(tags) != 1:
        raise RingMismatch("mixed coefficient rings in one polynomial")
    tag = tags.pop()
    if tag not in (QP, FP_LAURENT):
        raise RingMismatch("factorization works over scalar rings only")
    return tag


def _shift_elem(e: BoundarySeriesElem, k: int) -> BoundarySeriesElem:
    """Multiply by uniformizer^k (p-power or X-power; negative k divides)."""
    if e.tag == FP_LAURENT:
        return e.scale_by_x_power(k)
    if e.is_exact_zero() or k == 0:
        return e
    floor = None if e.tail_floor is None else e.tail_floor + k
    c = e.coeffs.get(0)
    if c is None:
        if floor is None:
            raise UncertifiedValuation("cannot shift a tail-only value exactly")
        return BoundarySeriesElem(QP, e.cfg, {}, floor, validate=False)
    c = c.times_p_power(k) if k >= 0 else c.divide_by_p_power(-k)
    return BoundarySeriesElem(QP, e.cfg, {0: c} if not c.is_exact_zero() else {},
                              floor, validate=False)


def _residue_digit(e: BoundarySeriesElem, p: int) -> int:
    """Image in the residue field (coefficient of uniformizer^0), in [0, p)."""
    if e.tag == FP_LAURENT:
        return e.coeffs.get(0, 0)
    c = e.coeffs.get(0)
    return 0 if c is None else c.reduce_mod_p()


def _digit_at(e: BoundarySeriesElem, k: int) -> int:
    """The uniformizer^k digit of a value divisible by uniformizer^k.

    The element must be known past level k; a tail floor at or below k means
    the digit is genuinely out of reach.
    """
    if e.tail_floor is not None and e.tail_floor <= k:
        raise PrecisionExhausted(
            "tail floor %d hides the level-%d digit" % (e.tail_floor, k))
    if e.tag == FP_LAURENT:
        return e.coeffs.get(k, 0)
    c = e.coeffs.get(0)
    if c is None:
        return 0
    p = e.cfg.p
    return c.residue_mod(k + 1) // p**k


def _from_residue(tag: str, cfg: PrimeConfig, r: int) -> BoundarySeriesElem:
    return BoundarySeriesElem.from_int_coeffs(tag, cfg, {0: r % cfg.p})


def _poly_mul_full(a: list, b: list, zero) -> list:
    out = [zero] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai.is_exact_zero():
            continue
        for j, bj in enumerate(b):
            if bj.is_exact_zero():
                continue
            out[i + j] = out[i + j].add(ai.mul(bj))
    return out


def _modp_divmod(num: list, den: list, p: int) -> tuple:
    """Division in F_p[T]; den's leading coefficient must be a unit."""
    num = list(num)
    d = len(den) - 1
    while den[d] % p == 0:
        d -= 1
    inv = pow(den[d], -1, p)
    q = [0] * max(1, len(num) - d)
    for i in range(len(num) - 1 - d, -1, -1):
        c = (num[i + d] * inv) % p
        if c:
            q[i] = c
            for j in range(d + 1):
                num[i + j] = (num[i + j] - c * den[j]) % p
    return q, [x % p for x in num[:d]]


def slope_factorize(coeffs: list, h, modulus: int,
                    tail: PolygonTail | None = None) -> tuple:
    """Split F = Q*S at slope boundary h, certified modulo uniformizer^modulus.

    ``coeffs`` lists a polynomial over the p-adic scalars or over F_p((X))
    with unit constant term and integral coefficients; Q collects the Newton
    slopes <= h (deg Q = their multiplicity, Q(0) = 1) and S the rest.  The
    splitting runs by residue-field Hensel lifting after an integral rescale,
    so it needs an integer gauge between the slopes on either side of the
    separating vertex.  The returned pair always satisfies F ≡ Q*S within the
    requested modulus; anything less raises instead of returning.
    """
    tag = _coeff_tag(coeffs)
    cfg = coeffs[0].cfg
    p = cfg.p
    h = Fraction(h)
    deg = len(coeffs) - 1
    one = BoundarySeriesElem.one(tag, cfg)
    zero = BoundarySeriesElem.zero(tag, cfg)

    vals = []
    for n, c in enumerate(coeffs):
        vr = c.gauss_valuation()
        if vr.value is not None and vr.bound() < 0:
            raise NonUnit("coefficient %d is not integral" % n)
        vals.append((n, vr))
    v0 = vals[0][1]
    if not (v0.certified and v0.value == 0):
        raise NonUnit("constant coefficient must be a certified unit")

    poly = newton_polygon(vals, tail)
    d = 0
    for slope, mult in poly.slopes:
        if slope <= h:
            d += mult
    if d == 0:
        return [one], list(coeffs)
    if d > poly.certified_upto:
        raise NoSeparatingVertex(
            "separating vertex at %d is beyond the certified range %d"
            % (d, poly.certified_upto))
    if d == poly.vertices[-1][0]:
        if tail is not None or poly.provisional_final or d < deg:
            raise NoSeparatingVertex(
                "no certified segment of slope > %s after the vertex at %d"
                % (h, d))
        return list(coeffs), [one]

    s_in = poly.slopes[[v[0] for v in poly.vertices].index(d) - 1][0]
    s_out = None
    for (x1, _), (slope, _) in zip(poly.vertices, poly.slopes):
        if x1 == d:
            s_out = slope
    assert s_out is not None
    eta = math.ceil(s_in)
    if not (s_in <= eta < s_out):
        raise NoSeparatingVertex(
            "no integer gauge between slopes %s and %s" % (s_in, s_out))

    val_d = next(vr.require_certified("vertex valuation")
                 for n, vr in vals if n == d)
    w = eta * d - val_d
    levels = modulus + w + 1

    # the rescale divides coefficient n by uniformizer^(eta*n - w); certified
    # valuations clear that by the supporting-line property of the vertex, but
    # an uncertified floor past the vertex may not
    for n, vr in vals:
        if vr.bound() + w - eta * n < 0:
            raise PrecisionTargetUnreachable(
                "coefficient %d certified only above valuation %d, the "
                "rescale needs %d" % (n, vr.bound(), eta * n - w))

    # integral rescale: H_n = c_n * pi^(w - eta*n); vertex at d becomes the
    # top unit coefficient of the residue-field reduction
    big_h = []
    for n, c in enumerate(coeffs):
        mod_known = c.certainty_modulus()
        if mod_known is not None and mod_known + w - eta * n < levels:
            raise PrecisionTargetUnreachable(
                "coefficient %d carries %d digits, rescaled lifting needs %d"
                % (n, mod_known, levels - w + eta * n))
        big_h.append(_shift_elem(c, w - eta * n))

    hbar = [_residue_digit(e, p) for e in big_h]
    if hbar[d] % p == 0:
        raise NoSeparatingVertex("vertex coefficient vanished in the residue field")
    for n in range(d + 1, deg + 1):
        if hbar[n] % p:
            raise NoSeparatingVertex("rescaled reduction has degree beyond the vertex")
    hbar = hbar[: d + 1]

    q_lift = [_from_residue(tag, cfg, r) for r in hbar]
    s_lift = [one] + [zero] * (deg - d)

    for k in range(1, levels):
        prod = _poly_mul_full(q_lift, s_lift, zero)
        prod = prod[: deg + 1] + [zero] * (deg + 1 - len(prod))
        eps = []
        for n in range(deg + 1):
            diff = big_h[n].sub(prod[n])
            if diff.is_exact_zero():
                eps.append(0)
                continue
            if diff.val_lower() < k and not diff.agrees_with(zero, k):
                raise FactorizationResidual(
                    "lifting lost the factorization at level %d" % k)
            eps.append(_digit_at(diff, k))
        vbar, ubar = _modp_divmod(eps, hbar, p)
        for n, r in enumerate(ubar):
            if r:
                q_lift[n] = q_lift[n].add(_shift_elem(_from_residue(tag, cfg, r), k))
        for n, r in enumerate(vbar):
            if r:
                s_lift[n] = s_lift[n].add(_shift_elem(_from_residue(tag, cfg, r), k))

    # undo the rescale and normalize Q(0) = 1
    u0 = q_lift[0]
    uv = u0.gauss_valuation()
    if not (uv.certified and uv.value == w):
        raise FactorizationResidual(
            "lifted factor has constant valuation %r, expected %d" % (uv, w))
    unit = _shift_elem(u0, -w)
    uinv = _elem_unit_inverse(unit, cfg, max(1, modulus))
    q_out = [one]
    for n in range(1, d + 1):
        q_out.append(_shift_elem(q_lift[n], eta * n - w).mul(uinv))
    s_out_coeffs = [_shift_elem(s_lift[n], eta * n).mul(unit)
                    for n in range(deg - d + 1)]

    check = _poly_mul_full(q_out, s_out_coeffs, zero)
    check = check[: deg + 1] + [zero] * (deg + 1 - len(check))
    for n in range(deg + 1):
        if not coeffs[n].agrees_with(check[n], modulus):
            raise FactorizationResidual(
                "residual at coefficient %d exceeds the modulus" % n)
    return q_out, s_out_coeffs


def _elem_unit_inverse(e: BoundarySeriesElem, cfg: PrimeConfig,
                       precision: int) -> BoundarySeriesElem:
    vr = e.gauss_valuation()
    if not (vr.certified and vr.value == 0):
        raise NonUnit("inverse needs a certified unit, got valuation %r" % (vr,))
    if e.tag == FP_LAURENT:
        return e.invert_unit(series_bound=precision)
    c = e.coeffs[0]
    return BoundarySeriesElem(QP, cfg, {0: c.unit_inverse(precision)},
                              None, validate=False)


# -- Riesz kernels -----------------------------------------------------------


@dataclass(frozen=True)
class RieszData:
    """Finite slope part cut out by a determinant factor Q.

    ``basis`` spans ker Q*(A) where Q*(T) = T^deg(Q) * Q(1/T); ``action`` is
    the matrix of A on that basis (columns = images) and ``char_series`` its
    det(1 - T*action), which reproduces Q within the working modulus.
    """

    dimension: int
    basis: tuple
    action: tuple
    char_series: tuple


def riesz_kernel(matrix: DenseOperatorMatrix, q_coeffs: list,
                 modulus: int) -> RieszData:
    """Kernel of Q*(A) with the induced action and its determinant check.

    Entries must live over a scalar ring (p-adic or F_p((X))).  Elimination
    pivots on a global minimal valuation so that every multiplier stays
    integral; entries indistinguishable from zero below the modulus are
    treated as zero, and anything the data cannot decide raises.
    """
    tag = _coeff_tag([matrix.entries[0][0]] + list(q_coeffs))
    cfg = matrix.cfg
    size = matrix.size
    zero = BoundarySeriesElem.zero(tag, cfg)
    one = BoundarySeriesElem.one(tag, cfg)
    d = len(q_coeffs) - 1

    # M = Q*(A) by Horner: M <- A.M + q_n I, n = 0..d
    m = [[zero for _ in range(size)] for _ in range(size)]
    for n in range(d + 1):
        nxt = [[zero for _ in range(size)] for _ in range(size)]
        for i in range(size):
            for j in range(size):
                acc = nxt[i][j]
                for t in range(size):
                    a = matrix.entries[i][t]
                    b = m[t][j]
                    if a.is_exact_zero() or b.is_exact_zero():
                        continue
                    acc = acc.add(a.mul(b))
                if i == j:
                    acc = acc.add(q_coeffs[n])
                nxt[i][j] = acc
        m = nxt

    # Gauss-Jordan with global minimal-valuation pivoting.  A pivot of
    # valuation v costs digits: a vector of the mod-p^L kernel has that
    # pivot-column coordinate determined only mod p^(L - v), so the checks at
    # the requested modulus need the elimination threshold to sit at least
    # max(pivot valuation) above it.  The max is only known after
    # eliminating; rerun until the threshold covers it.  Deepening the
    # threshold can expose truncation noise as fake pivots inside what should
    # be the kernel; that shows up as a dimension drop and means the data
    # cannot support the requested modulus.
    def _eliminate(threshold: int):
        work = [row[:] for row in m]
        pivot_of_col = {}
        used_rows = set()
        deepest = 0
        while True:
            best = None
            for i in range(size):
                if i in used_rows:
                    continue
                for j in range(size):
                    if j in pivot_of_col:
                        continue
                    vr = work[i][j].gauss_valuation()
                    v = vr.bound()
                    if v >= threshold:
                        continue
                    if not vr.certified:
                        raise PrecisionTargetUnreachable(
                            "entry (%d, %d) certified only above %d, below "
                            "the working modulus %d" % (i, j, v, threshold))
                    if best is None or v < best[0]:
                        best = (v, i, j)
            if best is None:
                return work, pivot_of_col, deepest
            v, pi, pj = best
            deepest = max(deepest, v)
            inv = _elem_unit_inverse(_shift_elem(work[pi][pj], -v), cfg,
                                     max(1, threshold - v))
            row = [_shift_elem(e, -v).mul(inv) if not e.is_exact_zero() else e
                   for e in work[pi]]
            work[pi] = row
            for i in range(size):
                if i == pi:
                    continue
                c = work[i][pj]
                if c.is_exact_zero() or c.val_lower() >= threshold:
                    continue
                work[i] = [work[i][j].sub(c.mul(row[j])) for j in range(size)]
            pivot_of_col[pj] = pi
            used_rows.add(pi)

    threshold = modulus
    for _ in range(size + 2):
        work, pivot_of_col, deepest = _eliminate(threshold)
        if threshold >= modulus + deepest:
            break
        if threshold > modulus and size - len(pivot_of_col) < d:
            raise PrecisionTargetUnreachable(
                "truncation noise enters below the working modulus %d; the "
                "data cannot certify the kernel at modulus %d"
                % (threshold, modulus))
        threshold = modulus + deepest
    else:
        raise PrecisionTargetUnreachable(
            "pivot valuations keep outgrowing the working modulus")

    free_cols = [j for j in range(size) if j not in pivot_of_col]
    if len(free_cols) != d:
        raise KernelDimensionMismatch(
            "kernel dimension %d does not match deg Q = %d"
            % (len(free_cols), d))

    basis = []
    for f in free_cols:
        vec = [zero] * size
        vec[f] = one
        for j, pi in pivot_of_col.items():
            e = work[pi][f]
            if not e.is_exact_zero():
                vec[j] = e.neg()
        basis.append(vec)

    # action of A on the kernel: coordinates read off at the free positions
    action = [[zero for _ in range(d)] for _ in range(d)]
    images = []
    for idx, vec in enumerate(basis):
        img = []
        for i in range(size):
            acc = zero
            for j in range(size):
                a = matrix.entries[i][j]
                b = vec[j]
                if a.is_exact_zero() or b.is_exact_zero():
                    continue
                acc = acc.add(a.mul(b))
            img.append(acc)
        images.append(img)
        for r, f in enumerate(free_cols):
            action[r][idx] = img[f]

    for idx, img in enumerate(images):
        for i in range(size):
            acc = img[i]
            for r in range(d):
                b = action[r][idx]
                if b.is_exact_zero() or basis[r][i].is_exact_zero():
                    continue
                acc = acc.sub(b.mul(basis[r][i]))
            if not acc.agrees_with(zero, modulus):
                raise FactorizationResidual(
                    "kernel is not invariant within the modulus at row %d" % i)

    char = _det_one_minus_t(action, d, zero, one)
    for n in range(d + 1):
        if not char[n].agrees_with(q_coeffs[n], modulus):
            raise FactorizationResidual(
                "kernel determinant disagrees with Q at coefficient %d" % n)
    return RieszData(d, tuple(tuple(v) for v in basis),
                     tuple(tuple(r) for r in action), tuple(char))
