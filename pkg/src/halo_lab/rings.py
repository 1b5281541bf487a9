"""Coefficient rings for the boundary-annulus laboratory.

Everything here is exact integer arithmetic: no floating point anywhere.
A p-adic number is represented by a canonical residue together with the
number of known base-p digits (absolute precision), or by an exact integer
when the value is known completely.  Series elements are finite X-coefficient
windows; a window is the honest object, and every operation records what it
can no longer see (dropped high X-tails, surrendered p-digits) so that
valuations come back with an explicit certified flag.

Four ring tags share one element type:

  * ``Qp``        - p-adic scalars (window degenerates to exponent 0),
  * ``LambdaEta`` - power series in X over Z_p, exponents 0..n_max,
  * ``REta``      - boundary-annulus ring: Laurent windows n_min..n_max over
                    Z_p.  X is a unit here; the subring of elements with
                    Gauss valuation >= 0 is the ring of definition, and only
                    those specialize integrally at boundary points,
  * ``FpLaurent`` - Laurent windows over the field F_p (coefficients exact).

The Gauss valuation of sum a_n X^n is min_n (n + v_p(a_n)); the value group
is generated by |X| = |p| = 1/p, so all valuations are integers and X is a
multiplicative pseudo-uniformizer (a unit in REta and FpLaurent).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    HaloError,
    NonUnit,
    NotOneUnit,
    PointOutsideDomain,
    PrecisionLoss,
    RingMismatch,
    UncertifiedValuation,
    WindowOverflow,
    ZeroResidue,
)

QP = "Qp"
LAMBDA_ETA = "LambdaEta"
R_ETA = "REta"
FP_LAURENT = "FpLaurent"
RING_TAGS = (QP, LAMBDA_ETA, R_ETA, FP_LAURENT)

# p-adic tags carry PadicScalar coefficients; FpLaurent carries exact ints mod p.
_PADIC_TAGS = (QP, LAMBDA_ETA, R_ETA)

_BIG = 10**9  # stand-in for +infinity in integer valuation bookkeeping


def _is_odd_prime(n: int) -> bool:
    if n < 3 or n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def int_vp(p: int, n: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of integer 0 requested")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PrimeConfig:
    """Prime, working p-precision, and the representable X-exponent window."""

    p: int
    p_precision: int
    x_window: tuple[int, int] = (0, 16)

    def __post_init__(self) -> None:
        if not _is_odd_prime(self.p):
            raise HaloError("p must be an odd prime, got %r" % (self.p,))
        if self.p_precision < 1:
            raise HaloError("p_precision must be >= 1")
        n_min, n_max = self.x_window
        if not (n_min <= 0 <= n_max):
            raise HaloError("x_window must contain 0, got %r" % (self.x_window,))

    @property
    def n_min(self) -> int:
        return self.x_window[0]

    @property
    def n_max(self) -> int:
        return self.x_window[1]


@dataclass(frozen=True)
class ValuationResult:
    """A valuation value (None means +infinity) plus a certification flag.

    ``certified`` is False exactly when hidden digits (a coefficient residue
    that vanishes at its known precision, or a dropped X-tail) could still
    lower, or sit at, the reported value.  The reported value is always a
    correct lower bound for the true valuation.
    """

    value: int | None
    certified: bool

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def bound(self) -> int:
        """Lower bound as a plain int (exact zero maps to a huge sentinel)."""
        return _BIG if self.value is None else self.value

    def require_certified(self, what: str = "valuation") -> int:
        if not self.certified:
            raise UncertifiedValuation("%s is not certified (bound %r)" % (what, self.value))
        return _BIG if self.value is None else self.value


def _pmin(a: int | None, b: int | None) -> int | None:
    """Combine two absolute precisions; None means exact."""
    if a is None:
        return b
    if b is None:
        return a
    return a if a <= b else b


class PadicScalar:
    """Element of Z_p known either exactly (an integer) or modulo p^precision.

    Exact scalars keep their integer value in ``intval`` and have
    ``precision is None``.  Inexact scalars store the canonical residue in
    ``[0, p^precision)``.  All arithmetic keeps track of precision with the
    usual ultrametric rules for integral elements.
    """

    __slots__ = ("p", "residue", "precision", "intval")

    def __init__(self, p: int, residue: int, precision: int | None, intval: int | None = None):
        self.p = p
        self.precision = precision
        self.intval = intval
        if precision is None:
            if intval is None:
                raise HaloError("exact scalar needs an integer value")
            self.residue = intval
        else:
            if precision < 1:
                raise PrecisionLoss("p-adic scalar with no certified digits")
            self.residue = residue % (p**precision)

    @classmethod
    def from_int(cls, p: int, value: int) -> "PadicScalar":
        return cls(p, value, None, value)

    @classmethod
    def inexact(cls, p: int, residue: int, precision: int) -> "PadicScalar":
        return cls(p, residue, precision)

    # -- queries ---------------------------------------------------------

    def is_exact(self) -> bool:
        return self.precision is None

    def is_exact_zero(self) -> bool:
        return self.precision is None and self.intval == 0

    def residue_mod(self, k: int) -> int:
        """Canonical residue modulo p^k (requires k <= known precision)."""
        if self.precision is not None and k > self.precision:
            raise PrecisionLoss(
                "residue requested mod p^%d but only %d digits known" % (k, self.precision)
            )
        return self.residue % (self.p**k)

    def valuation(self) -> ValuationResult:
        if self.precision is None:
            if self.intval == 0:
                return ValuationResult(None, True)
            return ValuationResult(int_vp(self.p, self.intval), True)
        if self.residue == 0:
            return ValuationResult(self.precision, False)
        return ValuationResult(int_vp(self.p, self.residue), True)

    def val_lower(self) -> int:
        """Certified lower bound on v_p (exact zero gives a huge sentinel)."""
        return self.valuation().bound()

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "PadicScalar") -> None:
        if self.p != other.p:
            raise RingMismatch("scalars over different primes %d vs %d" % (self.p, other.p))

    def add(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        if self.precision is None and other.precision is None:
            return PadicScalar.from_int(self.p, self.intval + other.intval)
        prec = _pmin(self.precision, other.precision)
        assert prec is not None
        return PadicScalar(self.p, self.residue + other.residue, prec)

    def neg(self) -> "PadicScalar":
        if self.precision is None:
            return PadicScalar.from_int(self.p, -self.intval)
        return PadicScalar(self.p, -self.residue, self.precision)

    def sub(self, other: "PadicScalar") -> "PadicScalar":
        return self.add(other.neg())

    def mul(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        if self.is_exact_zero() or other.is_exact_zero():
            return PadicScalar.from_int(self.p, 0)
        if self.precision is None and other.precision is None:
            return PadicScalar.from_int(self.p, self.intval * other.intval)
        prec = _mul_precision(self, other)
        assert prec is not None
        return PadicScalar(self.p, self.residue * other.residue, prec)

    def pow_int(self, e: int) -> "PadicScalar":
        if e < 0:
            raise NonUnit("negative powers need unit_inverse")
        if self.precision is None:
            return PadicScalar.from_int(self.p, self.intval**e)
        return PadicScalar(self.p, pow(self.residue, e, self.p**self.precision), self.precision)

    def unit_inverse(self, default_precision: int | None = None) -> "PadicScalar":
        """Inverse of a p-adic unit; exact inputs need a target precision."""
        v = self.valuation()
        if v.value is None or v.value > 0:
            raise NonUnit("cannot invert: v_p = %r > 0" % (v.value,))
        if self.precision is None:
            if self.intval in (1, -1):
                return PadicScalar.from_int(self.p, self.intval)
            if default_precision is None:
                raise PrecisionLoss("inverting an exact non-unit-integer needs a target precision")
            prec = default_precision
        else:
            prec = self.precision
        m = self.p**prec
        return PadicScalar(self.p, pow(self.residue % m, -1, m), prec)

    def times_p_power(self, k: int) -> "PadicScalar":
        """Multiply by p^k, k >= 0 (gains k digits of absolute precision)."""
        if k < 0:
            raise ValueError("use divide_by_p_power for negative shifts")
        if self.precision is None:
            return PadicScalar.from_int(self.p, self.intval * self.p**k)
        return PadicScalar(self.p, self.residue * self.p**k, self.precision + k)

    def divide_by_p_power(self, k: int) -> "PadicScalar":
        """Exact division by p^k; surrenders k digits of absolute precision."""
        if k == 0:
            return self
        if k < 0:
            return self.times_p_power(-k)
        q = self.p**k
        if self.precision is None:
            if self.intval % q != 0:
                raise PrecisionLoss("exact value not divisible by p^%d" % k)
            return PadicScalar.from_int(self.p, self.intval // q)
        if self.residue % q != 0:
            raise PrecisionLoss("visible residue not divisible by p^%d" % k)
        if self.precision - k < 1:
            raise PrecisionLoss("division by p^%d would exhaust precision" % k)
        return PadicScalar(self.p, self.residue // q, self.precision - k)

    def reduce_mod_p(self) -> int:
        """Image in F_p (needs at least one certified digit)."""
        return self.residue % self.p

    def agrees_with(self, other: "PadicScalar", k: int) -> bool:
        """True when both values are known mod p^k and congruent there."""
        self._check(other)
        for s in (self, other):
            if s.precision is not None and s.precision < k:
                return False
        return (self.residue - other.residue) % (self.p**k) == 0

    def __repr__(self) -> str:
        if self.precision is None:
            return "PadicScalar(exact %d)" % self.intval
        return "PadicScalar(%d mod %d^%d)" % (self.residue, self.p, self.precision)


def _coeff_repr_int(c: PadicScalar) -> int:
    """Integer representative used inside convolution accumulators."""
    return c.intval if c.precision is None else c.residue


def _mul_precision(a: PadicScalar, b: PadicScalar) -> int | None:
    """Absolute precision of a product of integral scalars, ultrametrically.

    With a = a0 + O(p^qa), b = b0 + O(p^qb) the cross terms have valuations
    qa + v(b), qb + v(a), qa + qb, so the product is known to the minimum of
    those; an exact factor contributes no error term of its own.  None means
    the product is exact.
    """
    if a.precision is None and b.precision is None:
        return None
    qa = _BIG if a.precision is None else a.precision
    qb = _BIG if b.precision is None else b.precision
    va = a.valuation().bound()
    vb = b.valuation().bound()
    return min(qa + vb, qb + va, qa + qb)


class BoundarySeriesElem:
    """Finite X-window element of one of the four coefficient rings.

    ``coeffs`` maps exponent -> PadicScalar for the p-adic tags, and
    exponent -> int in [1, p) for FpLaurent (F_p values are exact, zeros are
    simply absent).  Exact-zero coefficients are never stored.

    ``tail_floor`` is None when the element is exactly what the window says;
    otherwise it is a certified lower bound on the Gauss valuation of the
    discarded (invisible) part, produced e.g. by truncating high X-powers in
    a product.  All arithmetic propagates this floor soundly.
    """

    __slots__ = ("tag", "cfg", "coeffs", "tail_floor")

    def __init__(self, tag: str, cfg: PrimeConfig, coeffs: dict, tail_floor: int | None = None,
                 validate: bool = True):
        if tag not in RING_TAGS:
            raise RingMismatch("unknown ring tag %r" % (tag,))
        self.tag = tag
        self.cfg = cfg
        self.coeffs = coeffs
        self.tail_floor = tail_floor
        if validate:
            self._validate()

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, tag: str, cfg: PrimeConfig) -> "BoundarySeriesElem":
        return cls(tag, cfg, {}, None, validate=False)

    @classmethod
    def one(cls, tag: str, cfg: PrimeConfig) -> "BoundarySeriesElem":
        return cls.from_int_coeffs(tag, cfg, {0: 1})

    @classmethod
    def x_power(cls, tag: str, cfg: PrimeConfig, k: int) -> "BoundarySeriesElem":
        return cls.from_int_coeffs(tag, cfg, {k: 1})

    @classmethod
    def from_int_coeffs(cls, tag: str, cfg: PrimeConfig, coeffs: dict[int, int]) -> "BoundarySeriesElem":
        """Build from exact integer coefficients keyed by X-exponent."""
        if tag == FP_LAURENT:
            cc = {n: v % cfg.p for n, v in coeffs.items() if v % cfg.p != 0}
        else:
            cc = {n: PadicScalar.from_int(cfg.p, v) for n, v in coeffs.items() if v != 0}
        return cls(tag, cfg, cc)

    @classmethod
    def from_scalar(cls, tag: str, cfg: PrimeConfig, s: PadicScalar) -> "BoundarySeriesElem":
        if s.is_exact_zero():
            return cls.zero(tag, cfg)
        if tag == FP_LAURENT:
            return cls(tag, cfg, {0: s.reduce_mod_p()} if s.reduce_mod_p() else {})
        return cls(tag, cfg, {0: s})

    # -- validation ------------------------------------------------------

    def _validate(self) -> None:
        n_min, n_max = self.cfg.x_window
        for n, c in self.coeffs.items():
            if self.tag == QP and n != 0:
                raise WindowOverflow("Qp elements live at X^0 only, got X^%d" % n)
            if self.tag == LAMBDA_ETA and n < 0:
                raise WindowOverflow("LambdaEta has no negative X-exponents (X^%d)" % n)
            if n < n_min or n > n_max:
                raise WindowOverflow("exponent %d outside window [%d, %d]" % (n, n_min, n_max))
            if self.tag == FP_LAURENT:
                if not isinstance(c, int) or not (1 <= c < self.cfg.p):
                    raise RingMismatch("FpLaurent coefficients are ints in [1, p)")
            else:
                if not isinstance(c, PadicScalar):
                    raise RingMismatch("p-adic coefficients must be PadicScalar")
                if c.is_exact_zero():
                    raise HaloError("exact-zero coefficients must not be stored")

    def _check_same_ring(self, other: "BoundarySeriesElem") -> None:
        if self.tag != other.tag or self.cfg != other.cfg:
            raise RingMismatch("mixed rings: %s/%s vs %s/%s"
                               % (self.tag, self.cfg, other.tag, other.cfg))

    # -- queries ---------------------------------------------------------

    def is_exact_zero(self) -> bool:
        return not self.coeffs and self.tail_floor is None

    def support(self) -> list[int]:
        return sorted(self.coeffs)

    def coeff(self, n: int) -> PadicScalar | int | None:
        return self.coeffs.get(n)

    def gauss_valuation(self) -> ValuationResult:
        """min_n (n + v_p(a_n)) with honest certification.

        The result is uncertified as soon as some invisible digit (a visibly
        zero residue, or the dropped tail) reaches down to the candidate
        minimum, i.e. certified requires candidate < every uncertainty floor.
        """
        candidate = _BIG
        floor = _BIG if self.tail_floor is None else self.tail_floor
        if self.tag == FP_LAURENT:
            for n in self.coeffs:
                if n < candidate:
                    candidate = n
        else:
            for n, c in self.coeffs.items():
                v = c.valuation()
                if v.certified:
                    if v.value is not None and n + v.value < candidate:
                        candidate = n + v.value
                else:
                    assert v.value is not None
                    if n + v.value < floor:
                        floor = n + v.value
        if candidate == _BIG and floor == _BIG:
            return ValuationResult(None, True)
        if candidate < floor:
            return ValuationResult(candidate, True)
        return ValuationResult(min(candidate, floor), False)

    def val_lower(self) -> int:
        """Certified integer lower bound for the Gauss valuation."""
        return self.gauss_valuation().bound()

    def certainty_modulus(self) -> int | None:
        """The element is known modulo {Gauss valuation >= this}; None = exact."""
        m = _BIG
        if self.tail_floor is not None:
            m = self.tail_floor
        if self.tag != FP_LAURENT:
            for n, c in self.coeffs.items():
                if c.precision is not None and n + c.precision < m:
                    m = n + c.precision
        # beyond the high window edge nothing is representable, but an element
        # whose tail is exact genuinely has no content there
        return None if m == _BIG else m

    # -- ring operations -------------------------------------------------

    def add(self, other: "BoundarySeriesElem") -> "BoundarySeriesElem":
        self._check_same_ring(other)
        floor = _min_opt(self.tail_floor, other.tail_floor)
        if self.tag == FP_LAURENT:
            cc = dict(self.coeffs)
            for n, v in other.coeffs.items():
                w = (cc.get(n, 0) + v) % self.cfg.p
                if w:
                    cc[n] = w
                elif n in cc:
                    del cc[n]
            return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)
        cc = dict(self.coeffs)
        for n, c in other.coeffs.items():
            if n in cc:
                s = cc[n].add(c)
                if s.is_exact_zero():
                    del cc[n]
                else:
                    cc[n] = s
            else:
                cc[n] = c
        return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)

    def neg(self) -> "BoundarySeriesElem":
        if self.tag == FP_LAURENT:
            cc = {n: (self.cfg.p - v) % self.cfg.p for n, v in self.coeffs.items()}
        else:
            cc = {n: c.neg() for n, c in self.coeffs.items()}
        return BoundarySeriesElem(self.tag, self.cfg, cc, self.tail_floor, validate=False)

    def sub(self, other: "BoundarySeriesElem") -> "BoundarySeriesElem":
        return self.add(other.neg())

    def scalar_mul(self, s: PadicScalar) -> "BoundarySeriesElem":
        """Multiply by a p-adic scalar (FpLaurent reduces the scalar mod p)."""
        if s.p != self.cfg.p:
            raise RingMismatch("scalar over wrong prime")
        if s.is_exact_zero():
            if self.tail_floor is None:
                return BoundarySeriesElem.zero(self.tag, self.cfg)
            return BoundarySeriesElem(self.tag, self.cfg, {}, self.tail_floor, validate=False)
        floor = None if self.tail_floor is None else self.tail_floor + s.val_lower()
        if floor is not None and floor >= _BIG:
            floor = _BIG
        if self.tag == FP_LAURENT:
            sv = s.reduce_mod_p()
            if sv == 0:
                return BoundarySeriesElem.zero(self.tag, self.cfg)
            cc = {n: (v * sv) % self.cfg.p for n, v in self.coeffs.items()}
            cc = {n: v for n, v in cc.items() if v}
            return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)
        cc = {}
        for n, c in self.coeffs.items():
            w = c.mul(s)
            if not w.is_exact_zero():
                cc[n] = w
        return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)

    def mul(self, other: "BoundarySeriesElem") -> "BoundarySeriesElem":
        self._check_same_ring(other)
        n_min, n_max = self.cfg.x_window
        # sound floor for the invisible part of the product
        floor: int | None = None
        if self.tail_floor is not None or other.tail_floor is not None:
            fa = _BIG if self.tail_floor is None else self.tail_floor
            fb = _BIG if other.tail_floor is None else other.tail_floor
            va = self.val_lower()
            vb = other.val_lower()
            floor = min(fa + vb, fb + va, fa + fb)
            floor = None if floor >= _BIG else floor

        if self.tag == FP_LAURENT:
            acc: dict[int, int] = {}
            for i, a in self.coeffs.items():
                for j, b in other.coeffs.items():
                    n = i + j
                    acc[n] = acc.get(n, 0) + a * b
            cc = {}
            for n, v in acc.items():
                v %= self.cfg.p
                if not v:
                    continue
                if n > n_max:
                    floor = _min_opt2(floor, n)
                    continue
                if n < n_min:
                    raise WindowOverflow(
                        "product exponent X^%d below window floor %d" % (n, n_min))
                cc[n] = v
            return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)

        # p-adic tags: accumulate integer representatives, then canonicalize.
        # Valuations and precisions are gathered once per operand coefficient
        # so the inner loop is plain integer arithmetic; precision >= _BIG
        # stands for "exact" (see _mul_precision for the combination rule).
        aa = []
        for i, a in self.coeffs.items():
            aa.append((i, _coeff_repr_int(a),
                       _BIG if a.precision is None else a.precision,
                       a.valuation().bound()))
        bb = []
        for j, b in other.coeffs.items():
            bb.append((j, _coeff_repr_int(b),
                       _BIG if b.precision is None else b.precision,
                       b.valuation().bound()))
        acc_val: dict[int, int] = {}
        acc_prec: dict[int, int] = {}
        for i, ra, qa, va in aa:
            for j, rb, qb, vb in bb:
                n = i + j
                q = qa + vb
                if qb + va < q:
                    q = qb + va
                if qa + qb < q:
                    q = qa + qb
                if n in acc_val:
                    acc_val[n] += ra * rb
                    if q < acc_prec[n]:
                        acc_prec[n] = q
                else:
                    acc_val[n] = ra * rb
                    acc_prec[n] = q
        p = self.cfg.p
        cc = {}
        for n, v in acc_val.items():
            prec = acc_prec[n]
            if prec >= _BIG:
                if v == 0:
                    continue
                c = PadicScalar.from_int(p, v)
            else:
                c = PadicScalar(p, v, prec)
            if n > n_max:
                # dropped content sits at Gauss valuation >= n (integral coeffs)
                floor = _min_opt2(floor, n)
                continue
            if n < n_min:
                raise WindowOverflow(
                    "product exponent X^%d below window floor %d" % (n, n_min))
            if c.precision is not None or c.intval != 0:
                cc[n] = c
        return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)

    def scale_by_x_power(self, k: int) -> "BoundarySeriesElem":
        """Multiply by X^k (any sign).  X is a unit in REta and FpLaurent only."""
        if k == 0:
            return self
        n_min, n_max = self.cfg.x_window
        if self.tag == QP:
            raise WindowOverflow("Qp has no X to scale by")
        if self.tag == LAMBDA_ETA and k < 0:
            if any(n + k < 0 for n in self.coeffs):
                raise NonUnit("X is not a unit in LambdaEta")
            if self.tail_floor is not None and self.tail_floor + k < 0:
                raise NonUnit("X is not a unit in LambdaEta (uncertain tail)")
        floor = None if self.tail_floor is None else self.tail_floor + k
        cc = {}
        for n, c in self.coeffs.items():
            m = n + k
            if m > n_max:
                floor = _min_opt2(floor, m)
                continue
            if m < n_min:
                raise WindowOverflow("shift lands X^%d below window floor %d" % (m, n_min))
            cc[m] = c
        return BoundarySeriesElem(self.tag, self.cfg, cc, floor, validate=False)

    def invert_unit(self, series_bound: int | None = None) -> "BoundarySeriesElem":
        """Invert a unit.

        The leading (lowest-exponent) coefficient must be a p-adic unit; the
        rest is handled by a finite geometric series, which terminates because
        the non-leading part raises X-degree.  In LambdaEta the leading
        exponent must be 0; in REta and FpLaurent the X-shift must fit the
        window.  Qp elements invert as scalars.
        """
        if self.is_exact_zero():
            raise NonUnit("zero is not a unit")
        if not self.coeffs:
            raise UncertifiedValuation("no visible coefficients to invert")
        m = min(self.coeffs)
        if self.tag == FP_LAURENT:
            lead_ok = True
        else:
            lv = self.coeffs[m].valuation()
            if not lv.certified:
                raise UncertifiedValuation("leading coefficient valuation uncertified")
            lead_ok = lv.value == 0
        if not lead_ok:
            raise NonUnit("leading coefficient at X^%d is not a p-adic unit" % m)
        if self.tag == LAMBDA_ETA and m != 0:
            raise NonUnit("element divisible by X is not a unit in LambdaEta")
        if self.tag == QP:
            c = self.coeffs[0].unit_inverse(self.cfg.p_precision)
            return BoundarySeriesElem(QP, self.cfg, {0: c}, None, validate=False)

        # u * X^m * (1 + h) with h of strictly positive X-degree
        if self.tag == FP_LAURENT:
            lead_inv = pow(self.coeffs[m], -1, self.cfg.p)
            unit_scaled = BoundarySeriesElem(
                self.tag, self.cfg,
                {n - m: (v * lead_inv) % self.cfg.p for n, v in self.coeffs.items()},
                None if self.tail_floor is None else self.tail_floor - m, validate=False)
        else:
            lead_inv = self.coeffs[m].unit_inverse(self.cfg.p_precision)
            cc = {}
            for n, c in self.coeffs.items():
                w = c.mul(lead_inv)
                if not w.is_exact_zero():
                    cc[n - m] = w
            unit_scaled = BoundarySeriesElem(
                self.tag, self.cfg, cc,
                None if self.tail_floor is None else self.tail_floor - m, validate=False)
        one = BoundarySeriesElem.one(self.tag, self.cfg)
        h = unit_scaled.sub(one)
        if h.coeffs and min(h.coeffs) <= 0:
            raise NonUnit("unit decomposition failed: non-leading term at X^%d" % min(h.coeffs))
        bound = self.cfg.n_max if series_bound is None else series_bound
        acc = one
        term = one
        k = 0
        while term.coeffs and k <= bound:
            term = term.mul(h.neg())
            acc = acc.add(term)
            k += 1
        inv = acc.scale_by_x_power(-m) if m != 0 else acc
        if self.tag == FP_LAURENT:
            if lead_inv != 1:
                inv = inv.scalar_mul(PadicScalar.from_int(self.cfg.p, lead_inv))
        else:
            li = self.coeffs[m].unit_inverse(self.cfg.p_precision)
            if not (li.precision is None and li.intval == 1):
                inv = inv.scalar_mul(li)
        return inv

    # -- specialization --------------------------------------------------

    def specialize_classical(self, x: PadicScalar) -> "BoundarySeriesElem":
        """Evaluate at X = x with v_p(x) >= 1; returns a Qp element.

        REta elements demand v_p(x) = 1 exactly (the boundary annulus), and
        reject the origin.  LambdaEta accepts any x with v_p(x) >= 1,
        including exact 0.
        """
        if self.tag == FP_LAURENT:
            raise RingMismatch("FpLaurent elements specialize via reduce; no p-adic points")
        if self.tag == QP:
            c = self.coeffs.get(0)
            out = {} if c is None else {0: c}
            return BoundarySeriesElem(QP, self.cfg, dict(out), self.tail_floor, validate=False)
        if x.p != self.cfg.p:
            raise RingMismatch("point over wrong prime")
        xv = x.valuation()
        neg_support = [n for n in self.coeffs if n < 0]
        if self.tag == R_ETA:
            if x.is_exact_zero():
                raise PointOutsideDomain("x = 0 is not on the boundary annulus")
            if not (xv.certified and xv.value == 1):
                raise PointOutsideDomain("REta specialization needs certified v_p(x) = 1")
        elif xv.bound() < 1:
            raise PointOutsideDomain("classical points need v_p(x) >= 1")
        p = self.cfg.p
        # evaluate X^shift * f by one Horner pass, then divide by x^shift;
        # dividing the whole sum at once keeps jointly-integral values legal
        shift = -min(neg_support) if neg_support else 0
        total = PadicScalar.from_int(p, 0)
        if self.coeffs:
            top = max(n + shift for n in self.coeffs)
            for e in range(top, -1, -1):
                total = total.mul(x)
                c = self.coeffs.get(e - shift)
                if c is not None:
                    total = total.add(c)
        if shift:
            u = x.divide_by_p_power(1)  # unit part of x, one digit surrendered
            uinv = u.unit_inverse(self.cfg.p_precision)
            try:
                total = total.divide_by_p_power(shift)
            except PrecisionLoss as exc:
                raise PointOutsideDomain(
                    "value does not specialize into Z_p: %s" % exc) from exc
            total = total.mul(uinv.pow_int(shift))
        if self.tail_floor is not None:
            # invisible part has Gauss valuation >= floor, hence lands in p^floor Z_p
            cap = self.tail_floor
            if cap < 1:
                raise PrecisionLoss("specialization retains no certified digits")
            if total.precision is None:
                total = PadicScalar(p, total.intval, cap)
            else:
                total = PadicScalar(p, total.residue, min(total.precision, cap))
        if total.is_exact_zero():
            return BoundarySeriesElem.zero(QP, self.cfg)
        return BoundarySeriesElem(QP, self.cfg, {0: total}, None, validate=False)

    def specialize_mod_p(self) -> "BoundarySeriesElem":
        """Reduce coefficients modulo p; returns an FpLaurent element."""
        if self.tag == FP_LAURENT:
            return self
        if self.tag == QP:
            c = self.coeffs.get(0)
            cc = {}
            if c is not None:
                r = c.reduce_mod_p()
                if r:
                    cc[0] = r
            floor = self.tail_floor
            return BoundarySeriesElem(FP_LAURENT, self.cfg, cc, floor, validate=False)
        cc = {}
        for n, c in self.coeffs.items():
            r = c.reduce_mod_p()
            if r:
                cc[n] = r
        return BoundarySeriesElem(FP_LAURENT, self.cfg, cc, self.tail_floor, validate=False)

    # -- comparisons -----------------------------------------------------

    def agrees_with(self, other: "BoundarySeriesElem", modulus: int) -> bool:
        """True when (self - other) provably has Gauss valuation >= modulus."""
        d = self.sub(other)
        if d.is_exact_zero():
            return True
        # every visible coefficient must clear the modulus, with enough digits
        if d.tail_floor is not None and d.tail_floor < modulus:
            return False
        if d.tag == FP_LAURENT:
            return all(n >= modulus for n in d.coeffs)
        for n, c in d.coeffs.items():
            need = modulus - n
            if need <= 0:
                continue
            if c.precision is None:
                if c.intval % self.cfg.p**need != 0:
                    return False
            else:
                if c.precision < need or c.residue % self.cfg.p**need != 0:
                    return False
        return True

    def __repr__(self) -> str:
        parts = []
        for n in self.support():
            parts.append("X^%d:%r" % (n, self.coeffs[n]))
        tail = "" if self.tail_floor is None else " +O(val>=%d)" % self.tail_floor
        return "<%s %s%s>" % (self.tag, ", ".join(parts) or "0", tail)


def _min_opt(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _min_opt2(floor: int | None, v: int) -> int:
    return v if floor is None else min(floor, v)


# -- module-level operations ---------------------------------------------


def gauss_valuation(f: BoundarySeriesElem) -> ValuationResult:
    """Gauss valuation min_n (n + v_p(a_n)) with certification."""
    return f.gauss_valuation()


def specialize(f: BoundarySeriesElem, pt) -> BoundarySeriesElem:
    """Evaluate f at a weight point (duck-typed: pt.kind, pt.x).

    ``pt.kind == "classical"`` evaluates at X = pt.x; ``pt.kind == "mod_p"``
    reduces coefficients modulo p into FpLaurent.
    """
    kind = getattr(pt, "kind", None)
    if kind == "classical":
        return f.specialize_classical(pt.x)
    if kind == "mod_p":
        return f.specialize_mod_p()
    raise PointOutsideDomain("unknown specialization point %r" % (pt,))


def teichmuller(cfg: PrimeConfig, z: int | PadicScalar) -> PadicScalar:
    """Teichmueller lift: the (p-1)-th root of unity congruent to z mod p."""
    if isinstance(z, PadicScalar):
        if z.p != cfg.p:
            raise RingMismatch("scalar over wrong prime")
        r = z.reduce_mod_p()
    else:
        r = z % cfg.p
    if r == 0:
        raise ZeroResidue("Teichmueller lift of residue 0 does not exist")
    if r == 1:
        return PadicScalar.from_int(cfg.p, 1)
    if r == cfg.p - 1:
        return PadicScalar.from_int(cfg.p, -1)
    n = cfg.p_precision
    m = cfg.p**n
    w = pow(r, cfg.p ** (n - 1), m)
    return PadicScalar(cfg.p, w, n)


def plog(cfg: PrimeConfig, u: PadicScalar) -> PadicScalar:
    """p-adic logarithm on 1 + pZ_p via the alternating series.

    The k-th term w^k/k has valuation >= k - v_p(k), so the loop stops as
    soon as that bound reaches the working precision.  Division by the
    prime-to-p part of k is a modular inverse; division by p^{v_p(k)} is
    exact on the integer representative.
    """
    if u.p != cfg.p:
        raise RingMismatch("scalar over wrong prime")
    n = cfg.p_precision if u.precision is None else min(u.precision, cfg.p_precision)
    p = cfg.p
    w = (u.residue if u.precision is not None else u.intval) - 1
    if w % p != 0:
        raise NotOneUnit("plog needs u = 1 mod p")
    if u.precision is None and u.intval == 1:
        return PadicScalar.from_int(p, 0)
    m = p**n
    # k - v_p(k) is not monotone (it dips at high p-powers), so pick the loop
    # bound soundly: with a0 minimal such that p^a0 - a0 >= n, every k beyond
    # n + a0 has k - v_p(k) >= n and contributes nothing mod p^n.
    a0 = 0
    while p**a0 - a0 < n:
        a0 += 1
    acc = 0
    for k in range(1, n + a0 + 1):
        a = int_vp(p, k) if k % p == 0 else 0
        if k - a >= n:
            continue
        t = pow(w, k, p ** (n + a))
        t //= p**a
        kk = k // p**a
        t = (t * pow(kk, -1, m)) % m
        if k % 2 == 0:
            acc = (acc - t) % m
        else:
            acc = (acc + t) % m
    return PadicScalar(p, acc, n)
