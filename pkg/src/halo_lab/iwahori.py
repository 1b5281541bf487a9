"""Weighted action of the p-adic upper-triangular-mod-p monoid.

Elements (a b; c d) with a a unit, c divisible by p and nonzero determinant
act on distributions supported on p*Z_p.  The matrix of the action in the
Mahler basis is computed exactly from finite differences of sampled values;
the determinant's valuation m grades how much the action contracts, and
every entry is checked against the contraction certificate before the
matrix is released.
"""

from dataclasses import dataclass, field

from .errors import (
    BlockIndexOutOfRange,
    ConfigInvalid,
    DomainEscape,
    NonUnit,
    NormViolation,
    PrecisionExhausted,
    RingMismatch,
)
from .rings import (
    BoundarySeriesElem,
    PadicScalar,
    PrimeConfig,
    QP,
)
from .weights import (
    RadiusParam,
    WeightCharacter,
    binomial_scalar,
    eval_weight,
    r_kappa,
)
from .distributions import (
    DOMAIN_PZP,
    DenseOperatorMatrix,
    MahlerFunction,
    on_scale_exponent,
)


@dataclass(frozen=True)
class MonoidElem:
    """2x2 matrix (a b; c d): a unit, p | c, det != 0 with certified valuation."""

    cfg: PrimeConfig
    a: PadicScalar
    b: PadicScalar
    c: PadicScalar
    d: PadicScalar

    def __post_init__(self):
        p = self.cfg.p
        for name in ("a", "b", "c", "d"):
            if getattr(self, name).p != p:
                raise RingMismatch("matrix entry %s lives over the wrong prime" % name)
        av = self.a.valuation()
        if not (av.certified and av.value == 0):
            raise NonUnit("upper-left entry must be a certified unit")
        if not self.c.is_exact_zero() and self.c.val_lower() < 1:
            raise ConfigInvalid("lower-left entry must be divisible by p")
        det = self.det()
        if det.is_exact_zero():
            raise ConfigInvalid("matrix is singular")
        det.valuation().require_certified("determinant valuation")

    @classmethod
    def from_ints(cls, cfg: PrimeConfig, a: int, b: int, c: int, d: int) -> "MonoidElem":
        p = cfg.p
        return cls(cfg, PadicScalar.from_int(p, a), PadicScalar.from_int(p, b),
                   PadicScalar.from_int(p, c), PadicScalar.from_int(p, d))

    def det(self) -> PadicScalar:
        return self.a.mul(self.d).sub(self.b.mul(self.c))

    @property
    def t_factor_exponent(self) -> int:
        """m = v_p(det): how many p-th roots the action takes off the radius."""
        return self.det().valuation().require_certified("determinant valuation")

    @property
    def is_iwahori(self) -> bool:
        return self.t_factor_exponent == 0

    def compose(self, other: "MonoidElem") -> "MonoidElem":
        """Matrix product self * other."""
        if self.cfg.p != other.cfg.p:
            raise RingMismatch("composing matrices over different primes")
        return MonoidElem(
            self.cfg,
            self.a.mul(other.a).add(self.b.mul(other.c)),
            self.a.mul(other.b).add(self.b.mul(other.d)),
            self.c.mul(other.a).add(self.d.mul(other.c)),
            self.c.mul(other.b).add(self.d.mul(other.d)),
        )

    def iwahori_inverse(self, precision: int | None = None) -> "MonoidElem":
        """det^-1 times the adjugate; only unit-determinant elements qualify."""
        if not self.is_iwahori:
            raise ConfigInvalid("only unit-determinant elements invert in the monoid")
        u = self.det().unit_inverse(precision or self.cfg.p_precision)
        return MonoidElem(self.cfg, self.d.mul(u), self.b.neg().mul(u),
                          self.c.neg().mul(u), self.a.mul(u))


def _quotient(num: PadicScalar, den: PadicScalar, precision: int) -> PadicScalar:
    if den.is_exact() and den.intval in (1, -1):
        return num.mul(den)
    return num.mul(den.unit_inverse(precision))


def _sample_grid(gamma: MonoidElem, kappa: WeightCharacter, truncation: int,
                 precision: int):
    """Per-sample (weight value, image/p) pairs along x = 0, p, ..., Mp."""
    cfg = gamma.cfg
    p = cfg.p
    out = []
    for u in range(truncation + 1):
        x = PadicScalar.from_int(p, p * u)
        den = gamma.a.add(gamma.b.mul(x))
        dv = den.valuation()
        if not (dv.certified and dv.value == 0):
            raise DomainEscape("denominator a + b*x is not a unit at sample %d" % u)
        num = gamma.c.add(gamma.d.mul(x))
        y = _quotient(num, den, precision)
        if not y.is_exact_zero() and y.val_lower() < 1:
            raise DomainEscape("image point leaves p*Z_p at sample %d" % u)
        w = y.divide_by_p_power(1)
        out.append((eval_weight(kappa, den), w))
    return out


def act_on_samples(gamma: MonoidElem, kappa: WeightCharacter, f: MahlerFunction,
                   precision: int | None = None) -> list[BoundarySeriesElem]:
    """Sampled values of x -> kappa(a+bx) * f((c+dx)/(a+bx)) on the p-grid."""
    cfg = gamma.cfg
    prec = precision or cfg.p_precision
    grid = _sample_grid(gamma, kappa, len(f.coeffs) - 1, prec)
    vals = []
    for kv, w in grid:
        fv = f.value_at(w.times_p_power(1))
        vals.append(kv.scalar_mul(fv))
    return vals


def _difference_row(samples: list[BoundarySeriesElem]) -> list[BoundarySeriesElem]:
    """Forward differences at 0: the exact leading Mahler coefficients."""
    table = list(samples)
    row = [table[0]]
    while len(table) > 1:
        table = [table[k + 1].sub(table[k]) for k in range(len(table) - 1)]
        row.append(table[0])
    return row


def contraction_certificate(radius: RadiusParam, m: int, p: int,
                            alpha: int) -> int:
    """rho(alpha) = n(r, alpha) - n(r^(1/p^m), alpha), the row lower bound."""
    return (on_scale_exponent(radius, alpha)
            - on_scale_exponent(radius.pth_root(p, m), alpha))


def _check_entry_bounds(mat: DenseOperatorMatrix, rho: list[int]) -> None:
    for i in range(mat.size):
        need = rho[i]
        for j in range(mat.size):
            res = mat.on_entry_valuation(i, j)
            if res.value is None:
                continue
            if res.certified:
                if res.value < need:
                    raise NormViolation(
                        "entry (%d, %d) has orthonormal valuation %d < bound %d"
                        % (i, j, res.value, need))
            elif res.bound() < need:
                raise PrecisionExhausted(
                    "entry (%d, %d) only certified above %d, bound needs %d; "
                    "raise the working precision" % (i, j, res.bound(), need))


def gamma_matrix(gamma: MonoidElem, kappa: WeightCharacter, radius: RadiusParam,
                 truncation: int, precision: int | None = None) -> DenseOperatorMatrix:
    """Matrix of the weighted action on distributions, rows/cols 0..truncation.

    Row i holds the Mahler coefficients of x -> kappa(a+bx) * E_i((c+dx)/(a+bx)),
    so columns are the images of the basis distributions.  Finite differences
    of truncation+1 samples give those coefficients exactly.  Every entry is
    checked against the contraction certificate rho before returning.
    """
    cfg = gamma.cfg
    if kappa.cfg != cfg:
        raise RingMismatch("weight character and matrix use different prime setups")
    prec = precision or cfg.p_precision
    m = gamma.t_factor_exponent
    if radius.is_deeper_than(r_kappa(kappa)):
        raise ConfigInvalid("radius is deeper than the character allows")
    grid = _sample_grid(gamma, kappa, truncation, prec)
    tag = kappa.value_ring_tag
    entries = []
    for alpha in range(truncation + 1):
        samples = [kv.scalar_mul(binomial_scalar(cfg, w, alpha)) for kv, w in grid]
        entries.append(_difference_row(samples))
    rho = [contraction_certificate(radius, m, cfg.p, i) for i in range(truncation + 1)]
    tail = contraction_certificate(radius, m, cfg.p, truncation + 1)
    mat = DenseOperatorMatrix(cfg, tag, entries, radius, radius, 1, rho,
                              DOMAIN_PZP, tail)
    _check_entry_bounds(mat, rho)
    return mat


@dataclass(frozen=True)
class UpOperatorSpec:
    """Block operator: summands[src] lists (target block, monoid element).

    Every summand must contract (determinant valuation >= 1) so that the
    assembled operator is compact at the working radius.
    """

    cfg: PrimeConfig
    kappa: WeightCharacter
    radius: RadiusParam
    truncation: int
    nblocks: int = 1
    summands: tuple = field(default=())

    def __post_init__(self):
        if self.truncation < 0:
            raise ConfigInvalid("truncation must be >= 0")
        if self.nblocks < 1:
            raise ConfigInvalid("need at least one block")
        if len(self.summands) != self.nblocks:
            raise ConfigInvalid("need one summand list per source block")
        total = 0
        for src, lst in enumerate(self.summands):
            for tgt, gamma in lst:
                if not 0 <= tgt < self.nblocks:
                    raise BlockIndexOutOfRange(
                        "target block %d outside 0..%d" % (tgt, self.nblocks - 1))
                if gamma.cfg.p != self.cfg.p:
                    raise RingMismatch("summand over the wrong prime")
                if gamma.t_factor_exponent < 1:
                    raise ConfigInvalid(
                        "summand in block %d does not contract: unit determinant"
                        % src)
                total += 1
        if total == 0:
            raise ConfigInvalid("operator needs at least one summand")
        if self.radius.is_deeper_than(r_kappa(self.kappa)):
            raise ConfigInvalid("radius is deeper than the character allows")

    @property
    def min_contraction(self) -> int:
        return min(g.t_factor_exponent for lst in self.summands for _, g in lst)


def build_U(spec: UpOperatorSpec, precision: int | None = None) -> DenseOperatorMatrix:
    """Assemble the block compact operator at the spec's truncation.

    Index i*t + c holds Mahler degree i of block c; the row certificate uses
    the weakest contraction exponent among the summands.
    """
    cfg = spec.cfg
    t = spec.nblocks
    n = t * (spec.truncation + 1)
    tag = spec.kappa.value_ring_tag
    zero = BoundarySeriesElem.zero(tag, cfg)
    entries = [[zero for _ in range(n)] for _ in range(n)]
    for src, lst in enumerate(spec.summands):
        for tgt, gamma in lst:
            gm = gamma_matrix(gamma, spec.kappa, spec.radius, spec.truncation,
                              precision)
            for alpha in range(spec.truncation + 1):
                grow = gm.entries[alpha]
                for beta in range(spec.truncation + 1):
                    e = grow[beta]
                    if e.is_exact_zero():
                        continue
                    gi = alpha * t + tgt
                    gj = beta * t + src
                    entries[gi][gj] = entries[gi][gj].add(e)
    mm = spec.min_contraction
    rho = [contraction_certificate(spec.radius, mm, cfg.p, i // t) for i in range(n)]
    tail = contraction_certificate(spec.radius, mm, cfg.p, spec.truncation + 1)
    return DenseOperatorMatrix(cfg, tag, entries, spec.radius, spec.radius, t,
                               rho, DOMAIN_PZP, tail)


def toy_up_spec(cfg: PrimeConfig, kappa: WeightCharacter, radius: RadiusParam,
                truncation: int) -> UpOperatorSpec:
    """Single-block U_p with the p standard cosets (1 a; 0 p), a = 0..p-1."""
    gammas = tuple((0, MonoidElem.from_ints(cfg, 1, a, 0, cfg.p))
                   for a in range(cfg.p))
    return UpOperatorSpec(cfg, kappa, radius, truncation, 1, (gammas,))
