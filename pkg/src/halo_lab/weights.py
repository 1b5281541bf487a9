"""Weight characters on Z_p^x, their evaluation, and the weight dictionary.

A weight is a continuous character kappa: Z_p^x -> R^x.  Four kinds are
supported:

  * ``classical``          kappa(z) = z^k, valued in Qp,
  * ``twisted_classical``  kappa(z) = omega(zbar)^eta * <z>^k, valued in Qp,
  * ``universal_boundary`` the X-coordinate family character, valued in the
                           power-series or boundary-annulus ring,
  * ``mod_p_boundary``     its reduction into F_p((X)).

Here omega is the Teichmueller lift, zbar the residue of z, and
<z> = z / omega(zbar) the one-unit projection.  The family character is

    kappa(z) = omega(zbar^eta) * sum_n C(s, n) X^n,   s = plog<z> / plog(1+p),

so the coordinate is normalized by the topological generator 1 + p of
1 + pZ_p: the classical weight-k point is X = (1+p)^k - 1, and substituting
it recovers omega^eta <z>^k.  This generator convention keeps every classical
substitution rational and is fixed throughout the package (any other
generator differs by an automorphism of the coordinate ring).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConfigInvalid,
    NonUnit,
    NormViolation,
    PointOutsideDomain,
    PrecisionLoss,
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
    int_vp,
    plog,
    teichmuller,
)

CLASSICAL = "classical"
TWISTED_CLASSICAL = "twisted_classical"
UNIVERSAL_BOUNDARY = "universal_boundary"
MOD_P_BOUNDARY = "mod_p_boundary"


@dataclass(frozen=True)
class RadiusParam:
    """A radius r = p^(-a/b) with 0 < a/b <= 1, held in lowest terms."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ConfigInvalid("radius exponent a/b must be positive")
        if self.a > self.b:
            raise ConfigInvalid("radius below p^-1 is not representable")
        g = math.gcd(self.a, self.b)
        if g != 1:
            object.__setattr__(self, "a", self.a // g)
            object.__setattr__(self, "b", self.b // g)

    def as_fraction(self) -> Fraction:
        return Fraction(self.a, self.b)

    def pth_root(self, p: int, times: int = 1) -> "RadiusParam":
        """The radius r^(1/p^times); exponent a/b becomes a/(b*p^times)."""
        if times < 0:
            raise ConfigInvalid("pth_root repeats must be >= 0")
        return RadiusParam(self.a, self.b * p**times)

    def is_deeper_than(self, other: "RadiusParam") -> bool:
        """True when self < other as radii, i.e. the exponent is larger."""
        return self.a * other.b > other.a * self.b

    def __str__(self) -> str:
        return "p^(-%d/%d)" % (self.a, self.b)


@dataclass(frozen=True)
class WeightCharacter:
    """A weight character, identified by kind plus its defining integers."""

    kind: str
    cfg: PrimeConfig
    k: int = 0
    eta: int = 0
    target_tag: str = R_ETA

    def __post_init__(self) -> None:
        if self.kind not in (CLASSICAL, TWISTED_CLASSICAL, UNIVERSAL_BOUNDARY,
                             MOD_P_BOUNDARY):
            raise ConfigInvalid("unknown weight kind %r" % (self.kind,))
        if not (0 <= self.eta <= self.cfg.p - 2):
            raise ConfigInvalid("finite-order exponent eta must lie in 0..p-2")
        if self.kind == UNIVERSAL_BOUNDARY and self.target_tag not in (LAMBDA_ETA, R_ETA):
            raise ConfigInvalid("family weights take values in LambdaEta or REta")

    # -- constructors ------------------------------------------------------

    @classmethod
    def classical(cls, cfg: PrimeConfig, k: int) -> "WeightCharacter":
        return cls(CLASSICAL, cfg, k=k)

    @classmethod
    def twisted_classical(cls, cfg: PrimeConfig, k: int, eta: int) -> "WeightCharacter":
        return cls(TWISTED_CLASSICAL, cfg, k=k, eta=eta)

    @classmethod
    def universal_boundary(cls, cfg: PrimeConfig, eta: int = 0,
                           target_tag: str = R_ETA) -> "WeightCharacter":
        return cls(UNIVERSAL_BOUNDARY, cfg, eta=eta, target_tag=target_tag)

    @classmethod
    def mod_p_boundary(cls, cfg: PrimeConfig, eta: int = 0) -> "WeightCharacter":
        return cls(MOD_P_BOUNDARY, cfg, eta=eta)

    @property
    def value_ring_tag(self) -> str:
        if self.kind in (CLASSICAL, TWISTED_CLASSICAL):
            return QP
        if self.kind == UNIVERSAL_BOUNDARY:
            return self.target_tag
        return FP_LAURENT


@dataclass(frozen=True)
class WeightPoint:
    """A point of weight space: a classical X-value in pZ_p, or the mod-p fiber."""

    kind: str  # "classical" | "mod_p"
    x: PadicScalar | None = None
    in_annulus: bool = False
    k: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "mod_p":
            if self.x is not None:
                raise ConfigInvalid("mod-p points carry no X-value")
            return
        if self.kind != "classical":
            raise ConfigInvalid("unknown point kind %r" % (self.kind,))
        x = self.x
        if x is None:
            raise ConfigInvalid("classical points need an X-value")
        if x.is_exact_zero():
            if self.in_annulus:
                raise ConfigInvalid("X = 0 is not on the boundary annulus")
            return
        v = x.valuation()
        if not v.certified:
            raise PointOutsideDomain("point valuation v_p(x) is uncertified")
        assert v.value is not None
        if v.value < 1:
            raise PointOutsideDomain("classical points need v_p(x) >= 1")
        if self.in_annulus != (v.value == 1):
            raise ConfigInvalid("in_annulus flag contradicts v_p(x)")

    @property
    def label(self) -> str:
        if self.kind == "mod_p":
            return "modp"
        if self.k is not None:
            return "k%d" % self.k
        assert self.x is not None
        if self.x.is_exact_zero():
            return "x0"
        return "x%d" % self.x.residue_mod(min(3, _point_precision(self.x)))


def _point_precision(x: PadicScalar) -> int:
    return 10**9 if x.precision is None else x.precision


def mod_p_point() -> WeightPoint:
    """The characteristic-p fiber of the boundary annulus."""
    return WeightPoint("mod_p", None, True, None)


def classical_point(cfg: PrimeConfig, k: int) -> WeightPoint:
    """The weight-k point: X = (1+p)^k - 1; on the annulus exactly when p does not divide k."""
    p = cfg.p
    if k >= 0:
        x = PadicScalar.from_int(p, (1 + p) ** k - 1)
    else:
        m = p**cfg.p_precision
        x = PadicScalar(p, pow(1 + p, k, m) - 1, cfg.p_precision)
    in_ann = k != 0 and k % p != 0
    return WeightPoint("classical", x, in_ann, k)


def binomial_scalar(cfg: PrimeConfig, s: PadicScalar, n: int) -> PadicScalar:
    """C(s, n) for s in Z_p: exact for exact s, else with honest digit surrender.

    The numerator s(s-1)...(s-n+1) is a scalar product; division by n! costs
    v_p(n!) digits of absolute precision plus a unit inversion.
    """
    p = cfg.p
    if n < 0:
        raise ConfigInvalid("binomial lower index must be >= 0")
    if n == 0:
        return PadicScalar.from_int(p, 1)
    if s.is_exact():
        num = 1
        for i in range(n):
            num *= s.intval - i
        return PadicScalar.from_int(p, num // math.factorial(n))
    num = PadicScalar.from_int(p, 1)
    for i in range(n):
        num = num.mul(s.sub(PadicScalar.from_int(p, i)))
    fact = math.factorial(n)
    a = int_vp(p, fact)
    unit = fact // p**a
    out = num.divide_by_p_power(a)
    if unit != 1:
        assert out.precision is not None
        inv = pow(unit, -1, p**out.precision)
        out = out.mul(PadicScalar(p, inv, out.precision))
    return out


def _require_unit(z: PadicScalar, p: int) -> None:
    if z.p != p:
        raise NonUnit("argument over the wrong prime")
    v = z.valuation()
    if not v.certified or v.value != 0:
        raise NonUnit("weight characters evaluate at certified units only")


def _one_unit_projection(cfg: PrimeConfig, z: PadicScalar) -> PadicScalar:
    """<z> = z / omega(zbar), a one-unit."""
    zbar = z.reduce_mod_p()
    w = teichmuller(cfg, zbar)
    return z.mul(w.unit_inverse(cfg.p_precision))


def coordinate_exponent(cfg: PrimeConfig, z: PadicScalar) -> PadicScalar:
    """s(z) = plog<z> / plog(1+p), the exponent of z in generator coordinates.

    For z = (1+p)^m this is m (to working precision); it is the unique
    s in Z_p with <z> = (1+p)^s.
    """
    _require_unit(z, cfg.p)
    lg = plog(cfg, _one_unit_projection(cfg, z))
    if lg.is_exact_zero():
        return PadicScalar.from_int(cfg.p, 0)
    base = plog(cfg, PadicScalar.from_int(cfg.p, 1 + cfg.p))
    return lg.divide_by_p_power(1).mul(base.divide_by_p_power(1).unit_inverse())


def eval_weight(kappa: WeightCharacter, z: PadicScalar) -> BoundarySeriesElem:
    """kappa(z) as an element of the character's value ring."""
    cfg = kappa.cfg
    p = cfg.p
    _require_unit(z, p)

    if kappa.kind == CLASSICAL:
        if kappa.k >= 0:
            val = z.pow_int(kappa.k)
        else:
            val = z.unit_inverse(cfg.p_precision).pow_int(-kappa.k)
        return BoundarySeriesElem.from_scalar(QP, cfg, val)

    zbar = z.reduce_mod_p()
    eta_part = teichmuller(cfg, pow(zbar, kappa.eta, p))

    if kappa.kind == TWISTED_CLASSICAL:
        zproj = _one_unit_projection(cfg, z)
        if kappa.k >= 0:
            val = zproj.pow_int(kappa.k)
        else:
            val = zproj.unit_inverse(cfg.p_precision).pow_int(-kappa.k)
        return BoundarySeriesElem.from_scalar(QP, cfg, eta_part.mul(val))

    # family character: eta twist times the binomial series in X
    target = R_ETA if kappa.kind == MOD_P_BOUNDARY else kappa.target_tag
    s = coordinate_exponent(cfg, z)
    if s.is_exact_zero():
        out = BoundarySeriesElem.from_scalar(target, cfg, eta_part)
    else:
        coeffs = {}
        for n in range(0, cfg.n_max + 1):
            c = binomial_scalar(cfg, s, n).mul(eta_part)
            if not c.is_exact_zero():
                coeffs[n] = c
        # the true series continues past the window with integral coefficients
        out = BoundarySeriesElem(target, cfg, coeffs, tail_floor=cfg.n_max + 1,
                                 validate=False)
    if kappa.kind == MOD_P_BOUNDARY:
        return out.specialize_mod_p()
    return out


def r_kappa(kappa: WeightCharacter) -> RadiusParam:
    """The adapted radius: p^(-v) with v = min(1, val(kappa(1+p) - 1)).

    Computed honestly from the character value; every supported kind is
    adapted at the annulus radius, so the result is p^(-1).
    """
    cfg = kappa.cfg
    gen = PadicScalar.from_int(cfg.p, 1 + cfg.p)
    val = eval_weight(kappa, gen)
    diff = val.sub(BoundarySeriesElem.one(val.tag, cfg))
    v = diff.gauss_valuation()
    if not v.certified:
        raise PrecisionLoss("val(kappa(1+p) - 1) is not certified at this precision")
    bound = _BIG if v.value is None else v.value
    if bound < 1:
        raise NormViolation("character is not norm-adapted: |kappa(1+p) - 1| = 1")
    return RadiusParam(1, 1)
