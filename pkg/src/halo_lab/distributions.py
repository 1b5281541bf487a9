"""Truncated distribution modules in explicit bases, with norm certificates.

Distributions on Z_p (or on pZ_p, the case the weight action uses) are held
by their coefficients in the monomial basis b^alpha = T^alpha, where
T = [generator] - 1 under the Amice isomorphism: a Dirac mass at step*u maps
to (1+T)^u.  Functions are held by their Mahler coefficients against the
binomial basis E_alpha (E_alpha(y) = C(y/step, alpha)), and the two sides
pair by <T^alpha, E_beta> = delta.

The r-norm with radius r = p^(-a/b) gives the monomial b^alpha the valuation
alpha*a/b; the orthonormal basis rescales b^alpha by the pseudo-uniformizer
power n(r, alpha) = floor(alpha*a/b), and operator matrices carry their
source and target radii so orthonormal-basis entry valuations are computed
on demand.  Truncation degree M is always caller-chosen; compactness facts
are phrased as entry-valuation certificates at the truncation, never as
limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConfigInvalid,
    RadiusOrder,
    RingMismatch,
    TruncationMismatch,
    UncertifiedValuation,
)
from .rings import (
    BoundarySeriesElem,
    PadicScalar,
    PrimeConfig,
    ValuationResult,
)
from .weights import RadiusParam, binomial_scalar

DOMAIN_ZP = "Zp"
DOMAIN_PZP = "pZp"


def domain_step(cfg: PrimeConfig, domain: str) -> int:
    if domain == DOMAIN_ZP:
        return 1
    if domain == DOMAIN_PZP:
        return cfg.p
    raise ConfigInvalid("unknown domain scale %r" % (domain,))


def on_scale_exponent(r: RadiusParam, alpha: int) -> int:
    """The orthonormal rescaling exponent n(r, alpha) = floor(alpha * a/b)."""
    if alpha < 0:
        raise ConfigInvalid("basis index must be >= 0")
    return (alpha * r.a) // r.b


def mahler_basis_value(cfg: PrimeConfig, domain: str, alpha: int,
                       y: PadicScalar) -> PadicScalar:
    """E_alpha(y) = C(y/step, alpha); y must be divisible by the domain step."""
    u = y if domain == DOMAIN_ZP else y.divide_by_p_power(1)
    return binomial_scalar(cfg, u, alpha)


@dataclass(frozen=True)
class MahlerFunction:
    """A function by its Mahler coefficients c_0..c_M against E_alpha."""

    cfg: PrimeConfig
    domain: str
    coeffs: tuple[PadicScalar, ...]

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1

    def value_at(self, y: PadicScalar) -> PadicScalar:
        """Evaluate sum c_alpha E_alpha(y)."""
        total = PadicScalar.from_int(self.cfg.p, 0)
        for alpha, c in enumerate(self.coeffs):
            total = total.add(c.mul(mahler_basis_value(self.cfg, self.domain, alpha, y)))
        return total


def mahler_coefficients(cfg: PrimeConfig, domain: str,
                        values: list[PadicScalar]) -> MahlerFunction:
    """Finite differences of consecutive-step samples f(0), f(step), ...

    c_m is the m-th forward difference at 0; exact at tracked precision and
    division-free.
    """
    row = list(values)
    out = []
    while row:
        out.append(row[0])
        row = [row[i + 1].sub(row[i]) for i in range(len(row) - 1)]
    return MahlerFunction(cfg, domain, tuple(out))


@dataclass(frozen=True)
class DistributionVec:
    """A distribution by monomial coefficients d_0..d_M, with an r-norm radius."""

    cfg: PrimeConfig
    domain: str
    radius: RadiusParam
    coeffs: tuple[PadicScalar, ...]

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1


def amice_of_dirac(cfg: PrimeConfig, domain: str, u: int | PadicScalar,
                   truncation: int,
                   radius: RadiusParam = RadiusParam(1, 1)) -> DistributionVec:
    """The Dirac mass at step*u as a monomial vector: (1+T)^u truncated.

    The coefficient of T^alpha is C(u, alpha).
    """
    s = PadicScalar.from_int(cfg.p, u) if isinstance(u, int) else u
    cc = tuple(binomial_scalar(cfg, s, alpha) for alpha in range(truncation + 1))
    return DistributionVec(cfg, domain, radius, cc)


def rnorm_valuation(mu: DistributionVec) -> Fraction | None:
    """min_alpha (val(d_alpha) + alpha*a/b) as an exact rational; None is +infinity.

    Raises when an uncertified coefficient valuation could reach the minimum.
    """
    r = mu.radius
    best: Fraction | None = None
    uncertain: Fraction | None = None
    for alpha, c in enumerate(mu.coeffs):
        v = c.valuation()
        if v.value is None:
            continue
        cand = Fraction(v.value) + Fraction(alpha * r.a, r.b)
        if v.certified:
            if best is None or cand < best:
                best = cand
        else:
            if uncertain is None or cand < uncertain:
                uncertain = cand
    if uncertain is not None and (best is None or uncertain <= best):
        raise UncertifiedValuation(
            "r-norm candidate %s is blocked by an uncertified coefficient at %s"
            % (best, uncertain))
    return best


def pairing(mu: DistributionVec, f: MahlerFunction) -> PadicScalar:
    """The duality value sum_alpha d_alpha c_alpha."""
    if mu.cfg != f.cfg or mu.domain != f.domain:
        raise RingMismatch("pairing needs one domain and prime")
    if mu.truncation != f.truncation:
        raise TruncationMismatch(
            "distribution truncated at %d, function at %d" % (mu.truncation, f.truncation))
    total = PadicScalar.from_int(mu.cfg.p, 0)
    for d, c in zip(mu.coeffs, f.coeffs):
        total = total.add(d.mul(c))
    return total


def change_generator(mu: DistributionVec, u: PadicScalar) -> DistributionVec:
    """Re-express mu in the basis built on the generator [g^u].

    The new monomial is b' = (1+T)^u - 1, so b = (1+b')^(1/u) - 1 and the
    old basis vectors expand as b^alpha = ((1+b')^w - 1)^alpha with w = 1/u.
    """
    cfg = mu.cfg
    m = mu.truncation
    w = u.unit_inverse(cfg.p_precision)
    # base = (1+T)^w - 1 as a scalar polynomial, degree-1-and-up coefficients
    base = [binomial_scalar(cfg, w, k) for k in range(m + 1)]
    base[0] = PadicScalar.from_int(cfg.p, 0)
    out = [PadicScalar.from_int(cfg.p, 0) for _ in range(m + 1)]
    power = [PadicScalar.from_int(cfg.p, 0) for _ in range(m + 1)]
    power[0] = PadicScalar.from_int(cfg.p, 1)  # base^0
    for alpha, d in enumerate(mu.coeffs):
        if alpha > 0:
            nxt = [PadicScalar.from_int(cfg.p, 0) for _ in range(m + 1)]
            for i in range(alpha - 1, m + 1):
                if power[i].is_exact_zero():
                    continue
                for j in range(1, m + 1 - i):
                    nxt[i + j] = nxt[i + j].add(power[i].mul(base[j]))
            power = nxt
        if not d.is_exact_zero():
            for i in range(m + 1):
                if not power[i].is_exact_zero():
                    out[i] = out[i].add(d.mul(power[i]))
    return DistributionVec(cfg, mu.domain, mu.radius, tuple(out))


def translate(mu: DistributionVec, u: int) -> DistributionVec:
    """Convolve with the Dirac at step*u: multiply by (1+T)^u, truncated."""
    cfg = mu.cfg
    m = mu.truncation
    shift = [PadicScalar.from_int(cfg.p, 1)]
    for k in range(1, m + 1):
        s = PadicScalar.from_int(cfg.p, u)
        shift.append(binomial_scalar(cfg, s, k))
    out = [PadicScalar.from_int(cfg.p, 0) for _ in range(m + 1)]
    for i, d in enumerate(mu.coeffs):
        if d.is_exact_zero():
            continue
        for j in range(m + 1 - i):
            if not shift[j].is_exact_zero():
                out[i + j] = out[i + j].add(d.mul(shift[j]))
    return DistributionVec(cfg, mu.domain, mu.radius, tuple(out))


def convolve(mu: DistributionVec, nu: DistributionVec) -> DistributionVec:
    """Product of the Amice series, truncated to the common degree."""
    if mu.cfg != nu.cfg or mu.domain != nu.domain or mu.radius != nu.radius:
        raise RingMismatch("convolution needs matching domain, prime and radius")
    m = mu.truncation
    if nu.truncation != m:
        raise TruncationMismatch("mismatched truncations %d vs %d" % (m, nu.truncation))
    out = [PadicScalar.from_int(mu.cfg.p, 0) for _ in range(m + 1)]
    for i, d in enumerate(mu.coeffs):
        if d.is_exact_zero():
            continue
        for j in range(m + 1 - i):
            e = nu.coeffs[j]
            if not e.is_exact_zero():
                out[i + j] = out[i + j].add(d.mul(e))
    return DistributionVec(mu.cfg, mu.domain, mu.radius, tuple(out))


# -- operator matrices -------------------------------------------------------


@dataclass
class DenseOperatorMatrix:
    """A finite square matrix acting in the monomial basis, columns = images.

    Entries are coefficient-ring elements.  ``block_count`` t describes an
    interleaved block structure: global index i corresponds to block i mod t
    and Mahler index i // t (t = 1 for plain single-module operators).  The
    orthonormal-basis entry at (i, j) is the stored entry rescaled by
    ϖ^(n(target, i//t) - n(source, j//t)); ``row_valuation_cert`` optionally
    certifies a lower bound for every orthonormal entry of row i.

    ``tail_certificate``, when set, certifies that every orthonormal entry of
    every row *beyond* the stored truncation has valuation at least this
    value; it is what lets a finite corner stand in for the whole compact
    operator in determinant computations.
    """

    cfg: PrimeConfig
    tag: str
    entries: list[list[BoundarySeriesElem]]
    source_radius: RadiusParam
    target_radius: RadiusParam
    block_count: int = 1
    row_valuation_cert: list[int] | None = None
    domain: str = DOMAIN_PZP
    tail_certificate: int | None = None

    def __post_init__(self) -> None:
        n = len(self.entries)
        if any(len(row) != n for row in self.entries):
            raise ConfigInvalid("operator matrix must be square")
        if n % self.block_count != 0:
            raise ConfigInvalid("matrix size must be a multiple of the block count")

    @property
    def size(self) -> int:
        return len(self.entries)

    def mahler_index(self, i: int) -> int:
        return i // self.block_count

    def on_scale_shift(self, i: int, j: int) -> int:
        """n(target, i//t) - n(source, j//t), the orthonormal rescaling."""
        return (on_scale_exponent(self.target_radius, self.mahler_index(i))
                - on_scale_exponent(self.source_radius, self.mahler_index(j)))

    def on_entry_valuation(self, i: int, j: int) -> ValuationResult:
        """Valuation of the orthonormal-basis entry at (i, j)."""
        v = self.entries[i][j].gauss_valuation()
        if v.value is None:
            return v
        return ValuationResult(v.value + self.on_scale_shift(i, j), v.certified)

    def apply(self, vec: list[BoundarySeriesElem]) -> list[BoundarySeriesElem]:
        if len(vec) != self.size:
            raise TruncationMismatch("vector length %d vs matrix size %d"
                                     % (len(vec), self.size))
        out = []
        for i in range(self.size):
            acc = BoundarySeriesElem.zero(self.tag, self.cfg)
            for j in range(self.size):
                e = self.entries[i][j]
                if e.is_exact_zero() or vec[j].is_exact_zero():
                    continue
                acc = acc.add(e.mul(vec[j]))
            out.append(acc)
        return out

    def apply_distribution(self, mu: DistributionVec) -> DistributionVec:
        """Scalar matvec for matrices whose entries are constant in X."""
        if mu.radius != self.source_radius:
            raise RadiusOrder("vector radius %s does not match source radius %s"
                              % (mu.radius, self.source_radius))
        if len(mu.coeffs) != self.size:
            raise TruncationMismatch("vector length %d vs matrix size %d"
                                     % (len(mu.coeffs), self.size))
        p = self.cfg.p
        out = []
        for i in range(self.size):
            acc = PadicScalar.from_int(p, 0)
            for j, c in enumerate(mu.coeffs):
                if c.is_exact_zero():
                    continue
                e = self.entries[i][j]
                if e.is_exact_zero():
                    continue
                if any(n != 0 for n in e.support()):
                    raise RingMismatch("matrix entries are not scalar-valued")
                acc = acc.add(e.coeffs[0].mul(c))
            out.append(acc)
        return DistributionVec(self.cfg, self.domain, self.target_radius,
                               tuple(out))

    def matmul(self, other: "DenseOperatorMatrix") -> "DenseOperatorMatrix":
        """self o other (apply other first)."""
        if self.size != other.size or self.tag != other.tag:
            raise TruncationMismatch("composing mismatched operator matrices")
        if self.source_radius != other.target_radius:
            raise RadiusOrder("inner radii do not match under composition")
        n = self.size
        zero = BoundarySeriesElem.zero(self.tag, self.cfg)
        out = [[zero for _ in range(n)] for _ in range(n)]
        for i in range(n):
            row = self.entries[i]
            for k in range(n):
                e = row[k]
                if e.is_exact_zero():
                    continue
                orow = other.entries[k]
                for j in range(n):
                    if orow[j].is_exact_zero():
                        continue
                    out[i][j] = out[i][j].add(e.mul(orow[j]))
        return DenseOperatorMatrix(self.cfg, self.tag, out, other.source_radius,
                                   self.target_radius, self.block_count,
                                   None, self.domain)

    def principal_truncation(self, size: int) -> "DenseOperatorMatrix":
        if size > self.size:
            raise TruncationMismatch("cannot grow a truncation")
        cert = None if self.row_valuation_cert is None else self.row_valuation_cert[:size]
        tail = self.tail_certificate
        if tail is not None and size < self.size:
            if self.row_valuation_cert is None:
                tail = None
            else:
                tail = min([tail] + self.row_valuation_cert[size:])
        return DenseOperatorMatrix(
            self.cfg, self.tag, [row[:size] for row in self.entries[:size]],
            self.source_radius, self.target_radius, self.block_count, cert, self.domain,
            tail)


def scalar_entry(cfg: PrimeConfig, tag: str, value: int | PadicScalar) -> BoundarySeriesElem:
    """An X-free ring element from an integer or scalar."""
    if isinstance(value, int):
        return BoundarySeriesElem.from_int_coeffs(tag, cfg, {0: value})
    return BoundarySeriesElem.from_scalar(tag, cfg, value)


def inclusion_matrix(cfg: PrimeConfig, tag: str, s: RadiusParam, r: RadiusParam,
                     truncation: int) -> DenseOperatorMatrix:
    """The identity-on-monomials inclusion from radius s to the deeper radius r.

    In orthonormal coordinates the diagonal entry at alpha has valuation
    n(r, alpha) - n(s, alpha) >= 0, nondecreasing and unbounded: the
    compactness certificate at this truncation.
    """
    if s.is_deeper_than(r):
        raise RadiusOrder("inclusion runs toward the deeper radius: need r <= s")
    n = truncation + 1
    zero = BoundarySeriesElem.zero(tag, cfg)
    one = BoundarySeriesElem.from_int_coeffs(tag, cfg, {0: 1})
    entries = [[one if i == j else zero for j in range(n)] for i in range(n)]
    cert = [on_scale_exponent(r, i) - on_scale_exponent(s, i) for i in range(n)]
    return DenseOperatorMatrix(cfg, tag, entries, s, r, 1, cert)


def mult_by_p_pushforward(cfg: PrimeConfig, tag: str, truncation: int,
                          radius: RadiusParam = RadiusParam(1, 1)) -> DenseOperatorMatrix:
    """Pushforward along multiplication by p on the Amice side.

    Column beta holds the coefficients of ((1+T)^p - 1)^beta, so the matrix
    is lower triangular with diagonal p^beta; read from radius r to r^(1/p)
    every orthonormal entry is integral.
    """
    n = truncation + 1
    base = [0] + [_comb(cfg.p, k) for k in range(1, cfg.p + 1)]
    cols = [[1] + [0] * truncation]
    for _ in range(truncation):
        prev = cols[-1]
        nxt = [0] * n
        for i, a in enumerate(prev):
            if a == 0:
                continue
            for j, b in enumerate(base):
                if b == 0 or i + j > truncation:
                    continue
                nxt[i + j] += a * b
        cols.append(nxt)
    entries = [[scalar_entry(cfg, tag, cols[j][i]) for j in range(n)] for i in range(n)]
    return DenseOperatorMatrix(cfg, tag, entries, radius, radius.pth_root(cfg.p))


def _comb(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out
