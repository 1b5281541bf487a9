"""Coefficient-ring behavior: pinned values, error contracts, randomized laws."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halo_lab.errors import (
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
from halo_lab.rings import (
    FP_LAURENT,
    LAMBDA_ETA,
    QP,
    R_ETA,
    BoundarySeriesElem,
    PadicScalar,
    PrimeConfig,
    ValuationResult,
    gauss_valuation,
    int_vp,
    plog,
    specialize,
    teichmuller,
)
from tests import oracles, randgen

CFG3 = PrimeConfig(3, 8, x_window=(-6, 12))
CFG3_POS = PrimeConfig(3, 8, x_window=(0, 12))
SERIES_TAGS = (LAMBDA_ETA, R_ETA, FP_LAURENT)


class _Point:
    def __init__(self, kind, x=None):
        self.kind = kind
        self.x = x


# -- PrimeConfig -----------------------------------------------------------


def test_prime_config_rejects_two_and_composites():
    for bad in (2, 4, 9, 1, 0, -3):
        with pytest.raises(HaloError):
            PrimeConfig(bad, 4)


def test_prime_config_rejects_bad_window_and_precision():
    with pytest.raises(HaloError):
        PrimeConfig(3, 0)
    with pytest.raises(HaloError):
        PrimeConfig(3, 4, x_window=(1, 4))
    with pytest.raises(HaloError):
        PrimeConfig(3, 4, x_window=(-2, -1))


# -- PadicScalar -----------------------------------------------------------


def test_exact_zero_distinct_from_visible_zero():
    z = PadicScalar.from_int(3, 0)
    assert z.is_exact_zero()
    v = z.valuation()
    assert v.value is None and v.certified
    w = PadicScalar.inexact(3, 0, 4)
    assert not w.is_exact_zero()
    assert w.valuation() == ValuationResult(4, False)


def test_scalar_valuations_and_precision_combine():
    a = PadicScalar.from_int(5, 50)
    assert a.valuation() == ValuationResult(2, True)
    b = PadicScalar.inexact(5, 10, 3)
    assert b.valuation() == ValuationResult(1, True)
    s = a.add(b)
    assert s.precision == 3
    m = a.mul(b)
    # exact 50 carries v=2 into the error term: precision 3 + 2
    assert m.precision == 5
    assert m.valuation().value == 3
    assert PadicScalar.from_int(5, 0).mul(b).is_exact_zero()


def test_scalar_inverse_contracts():
    p = 7
    u = PadicScalar.inexact(p, 3, 5)
    ui = u.unit_inverse()
    assert u.mul(ui).residue_mod(5) == 1
    with pytest.raises(NonUnit):
        PadicScalar.from_int(p, 7).unit_inverse(5)
    one = PadicScalar.from_int(p, -1).unit_inverse()
    assert one.is_exact() and one.intval == -1
    with pytest.raises(PrecisionLoss):
        PadicScalar.from_int(p, 2).unit_inverse()  # exact non-trivial needs target


def test_divide_by_p_power():
    a = PadicScalar.from_int(3, 18)
    assert a.divide_by_p_power(2).intval == 2
    with pytest.raises(PrecisionLoss):
        PadicScalar.from_int(3, 2).divide_by_p_power(1)
    b = PadicScalar.inexact(3, 9, 4)
    c = b.divide_by_p_power(2)
    assert c.precision == 2 and c.residue == 1
    with pytest.raises(PrecisionLoss):
        PadicScalar.inexact(3, 9, 2).divide_by_p_power(2)  # would exhaust digits


# -- arithmetic pinned examples ---------------------------------------------


@pytest.mark.parametrize("tag", SERIES_TAGS)
def test_add_x_and_minus_x_is_exact_zero(tag):
    x = BoundarySeriesElem.x_power(tag, CFG3, 1)
    assert x.add(x.neg()).is_exact_zero()


@pytest.mark.parametrize("tag", SERIES_TAGS)
def test_mul_conjugates_gives_one_minus_x_squared(tag):
    one_plus = BoundarySeriesElem.from_int_coeffs(tag, CFG3, {0: 1, 1: 1})
    one_minus = BoundarySeriesElem.from_int_coeffs(tag, CFG3, {0: 1, 1: -1})
    prod = one_minus.mul(one_plus)
    expect = BoundarySeriesElem.from_int_coeffs(tag, CFG3, {0: 1, 2: -1})
    assert prod.sub(expect).is_exact_zero()


def test_invert_geometric_series():
    # the oracle is multiplication back to 1: 1/(1-X) must be sum of X^n over
    # the window, with an honest tail marker past the edge
    cfg = PrimeConfig(3, 6, x_window=(0, 10))
    f = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, cfg, {0: 1, 1: -1})
    inv = f.invert_unit()
    assert inv.support() == list(range(0, 11))
    for n in range(11):
        c = inv.coeffs[n]
        assert c.is_exact() and c.intval == 1
    assert inv.tail_floor == 11
    back = f.mul(inv)
    assert back.agrees_with(BoundarySeriesElem.one(LAMBDA_ETA, cfg), 11)


def test_invert_x_in_boundary_ring():
    x = BoundarySeriesElem.x_power(R_ETA, CFG3, 1)
    inv = x.invert_unit()
    assert inv.support() == [-1]
    assert x.mul(inv).sub(BoundarySeriesElem.one(R_ETA, CFG3)).is_exact_zero()


def test_invert_fp_laurent_unit_multiplies_back():
    f = BoundarySeriesElem.from_int_coeffs(FP_LAURENT, CFG3, {-1: 1, 0: 2})
    inv = f.invert_unit()
    prod = f.mul(inv)
    assert prod.coeffs.get(0) == 1
    assert all(n == 0 for n in prod.coeffs if n <= CFG3.n_max) or prod.tail_floor is not None
    # within the certainty modulus the product is 1
    assert prod.agrees_with(BoundarySeriesElem.one(FP_LAURENT, CFG3), prod.tail_floor or 1)


def test_invert_non_units_rejected():
    with pytest.raises(NonUnit):
        BoundarySeriesElem.zero(R_ETA, CFG3).invert_unit()
    with pytest.raises(NonUnit):
        BoundarySeriesElem.x_power(LAMBDA_ETA, CFG3_POS, 1).invert_unit()
    with pytest.raises(NonUnit):
        BoundarySeriesElem.from_int_coeffs(R_ETA, CFG3, {-1: 3}).invert_unit()
    lead_unknown = BoundarySeriesElem(
        R_ETA, CFG3, {0: PadicScalar.inexact(3, 0, 4), 1: PadicScalar.from_int(3, 1)})
    with pytest.raises(UncertifiedValuation):
        lead_unknown.invert_unit()


def test_ring_mismatch_and_window_overflow():
    x_lam = BoundarySeriesElem.x_power(LAMBDA_ETA, CFG3, 1)
    x_ret = BoundarySeriesElem.x_power(R_ETA, CFG3, 1)
    with pytest.raises(RingMismatch):
        x_lam.add(x_ret)
    with pytest.raises(WindowOverflow):
        BoundarySeriesElem.from_int_coeffs(QP, CFG3, {1: 1})
    with pytest.raises(WindowOverflow):
        BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, CFG3, {-1: 1})
    low = BoundarySeriesElem.x_power(R_ETA, CFG3, -4)
    with pytest.raises(WindowOverflow):
        low.mul(low)  # X^-8 below the window floor -6


def test_high_truncation_is_recorded_not_silent():
    cfg = PrimeConfig(3, 6, x_window=(0, 4))
    f = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, cfg, {0: 1, 3: 1})
    g = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, cfg, {2: 1})
    prod = f.mul(g)  # X^2 + X^5, the X^5 falls off the window
    assert prod.support() == [2]
    assert prod.tail_floor == 5
    v = prod.gauss_valuation()
    assert v.value == 2 and v.certified  # candidate 2 < floor 5


# -- Gauss valuation pinned --------------------------------------------------


def test_gauss_valuation_pinned_values():
    assert gauss_valuation(BoundarySeriesElem.x_power(R_ETA, CFG3, 1)) == ValuationResult(1, True)
    pxinv = BoundarySeriesElem.from_int_coeffs(R_ETA, CFG3, {-1: 3})
    assert gauss_valuation(pxinv) == ValuationResult(0, True)
    zero = BoundarySeriesElem.zero(LAMBDA_ETA, CFG3)
    v = gauss_valuation(zero)
    assert v.is_infinite and v.certified
    assert gauss_valuation(BoundarySeriesElem.x_power(FP_LAURENT, CFG3, -2)).value == -2


def test_gauss_valuation_uncertified_cases():
    # a visibly-zero residue sitting below the visible minimum
    f = BoundarySeriesElem(
        R_ETA, CFG3,
        {-2: PadicScalar.inexact(3, 0, 2), 0: PadicScalar.from_int(3, 9)})
    v = f.gauss_valuation()
    assert v == ValuationResult(0, False)  # hidden digits could reach 0 = -2+2
    # a dropped tail at the candidate itself
    g = BoundarySeriesElem(
        LAMBDA_ETA, CFG3, {0: PadicScalar.from_int(3, 27)}, tail_floor=3)
    assert g.gauss_valuation() == ValuationResult(3, False)
    # tail safely above the candidate stays certified
    h = BoundarySeriesElem(
        LAMBDA_ETA, CFG3, {0: PadicScalar.from_int(3, 1)}, tail_floor=9)
    assert h.gauss_valuation() == ValuationResult(0, True)


# -- specialization ----------------------------------------------------------


def test_specialize_pinned_values():
    p3 = PadicScalar.from_int(3, 3)
    x = BoundarySeriesElem.x_power(LAMBDA_ETA, CFG3, 1)
    out = specialize(x, _Point("classical", p3))
    assert out.tag == QP and out.coeffs[0].intval == 3

    f = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, CFG3, {0: 1, 1: 1})
    red = specialize(f, _Point("mod_p"))
    assert red.tag == FP_LAURENT and red.coeffs == {0: 1, 1: 1}

    g = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, CFG3, {0: 3, 2: 1})
    out = specialize(g, _Point("classical", p3))
    assert out.coeffs[0].intval == 12


def test_specialize_domain_errors():
    p = 3
    x0 = PadicScalar.from_int(p, 0)
    xp2 = PadicScalar.from_int(p, 9)
    unit = PadicScalar.from_int(p, 1)
    f = BoundarySeriesElem.from_int_coeffs(R_ETA, CFG3, {0: 1, 1: 1})
    with pytest.raises(PointOutsideDomain):
        f.specialize_classical(x0)
    with pytest.raises(PointOutsideDomain):
        f.specialize_classical(xp2)  # boundary annulus needs v_p(x) = 1 exactly
    with pytest.raises(PointOutsideDomain):
        f.specialize_classical(unit)
    # power-series ring is laxer: any v_p >= 1 point works, including 0
    g = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, CFG3, {0: 5, 2: 1})
    assert g.specialize_classical(x0).coeffs[0].intval == 5
    assert g.specialize_classical(xp2).coeffs[0].intval == 86


def test_specialize_joint_integrality_on_boundary():
    # 2/X + 3/X^2 at X=3 is 2/3 + 1/3 = 1: integral only as a sum
    g = BoundarySeriesElem.from_int_coeffs(R_ETA, CFG3, {-1: 2, -2: 3})
    out = g.specialize_classical(PadicScalar.from_int(3, 3))
    c = out.coeffs[0]
    assert c.residue_mod(1) == 1 % 3
    assert c.residue_mod(c.precision or 5) == 1
    # 1/X alone at X=3 is 1/3: not integral, refused
    with pytest.raises(PointOutsideDomain):
        BoundarySeriesElem.x_power(R_ETA, CFG3, -1).specialize_classical(
            PadicScalar.from_int(3, 3))


def test_specialize_is_ring_homomorphism_randomized():
    rng = random.Random(20260816)
    p = 3
    cfg = PrimeConfig(p, 10, x_window=(-8, 16))
    for tag in (LAMBDA_ETA, R_ETA):
        for _ in range(100):
            f = randgen.random_series(rng, tag, cfg, span=3, terms=3)
            g = randgen.random_series(rng, tag, cfg, span=3, terms=3)
            x = PadicScalar.from_int(p, p * randgen.random_unit_int(rng, p, 40))
            try:
                lhs = f.mul(g).specialize_classical(x)
                rhs = f.specialize_classical(x).mul(g.specialize_classical(x))
            except PointOutsideDomain:
                continue  # a non-integral boundary value; nothing to compare
            mod = min(m for m in (lhs.certainty_modulus(), rhs.certainty_modulus(), 10)
                      if m is not None)
            assert lhs.agrees_with(rhs, mod)


def test_specialize_mod_p_is_ring_homomorphism_randomized():
    rng = random.Random(997)
    cfg = PrimeConfig(5, 6, x_window=(-8, 16))
    for _ in range(100):
        f = randgen.random_series(rng, R_ETA, cfg, span=3, terms=3)
        g = randgen.random_series(rng, R_ETA, cfg, span=3, terms=3)
        lhs = f.mul(g).specialize_mod_p()
        rhs = f.specialize_mod_p().mul(g.specialize_mod_p())
        assert lhs.sub(rhs).is_exact_zero()


# -- teichmuller and plog -----------------------------------------------------


def test_teichmuller_pinned_values():
    cfg = PrimeConfig(5, 2)
    w = teichmuller(cfg, 2)
    assert w.residue_mod(2) == 7
    assert w.residue_mod(2) == oracles.hensel_unit_root(5, 2, 2)
    one = teichmuller(cfg, 1)
    assert one.is_exact() and one.intval == 1
    minus = teichmuller(cfg, 4)
    assert minus.is_exact() and minus.intval == -1
    with pytest.raises(ZeroResidue):
        teichmuller(cfg, 5)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_teichmuller_section_property(p):
    cfg = PrimeConfig(p, 6)
    m = p**6
    for z in range(1, p):
        w = teichmuller(cfg, z)
        assert w.residue_mod(1) == z % p  # section of reduction
        assert pow(w.residue_mod(6), p - 1, m) == 1  # root of unity mod p^N


def test_teichmuller_matches_hensel_oracle():
    for p, n in ((3, 7), (5, 5), (7, 4)):
        cfg = PrimeConfig(p, n)
        for z in range(2, p - 1):
            assert teichmuller(cfg, z).residue_mod(n) == oracles.hensel_unit_root(p, n, z)


def test_plog_pinned_values():
    cfg = PrimeConfig(3, 3)
    zero = plog(cfg, PadicScalar.from_int(3, 1))
    assert zero.is_exact_zero()
    v = plog(cfg, PadicScalar.from_int(3, 4))
    assert v.residue_mod(3) == 21
    assert v.residue_mod(3) == oracles.log_series_residue(3, 3, 4)
    with pytest.raises(NotOneUnit):
        plog(cfg, PadicScalar.from_int(3, 2))


@pytest.mark.parametrize("p", [3, 5, 7])
def test_plog_of_one_plus_p_has_valuation_one(p):
    cfg = PrimeConfig(p, 8)
    v = plog(cfg, PadicScalar.from_int(p, 1 + p)).valuation()
    assert v.certified and v.value == 1


def test_plog_matches_series_oracle_at_awkward_precisions():
    # precisions where the term k = p^j dips back under the working modulus
    for p, n in ((3, 25), (3, 26), (5, 22), (3, 8), (7, 10)):
        cfg = PrimeConfig(p, n)
        for u in (1 + p, 1 + 2 * p, 1 + p * p, 1 + 7 * p):
            got = plog(cfg, PadicScalar.from_int(p, u))
            assert got.residue_mod(n) == oracles.log_series_residue(p, n, u)


def test_plog_is_additive_randomized():
    rng = random.Random(1234)
    for p in (3, 5):
        cfg = PrimeConfig(p, 8)
        for _ in range(60):
            u = randgen.random_one_unit(rng, p, 6)
            v = randgen.random_one_unit(rng, p, 6)
            lu, lv = plog(cfg, u), plog(cfg, v)
            luv = plog(cfg, u.mul(v))
            assert luv.agrees_with(lu.add(lv), 8)


# -- randomized valuation laws -----------------------------------------------


def _val_law_cases(tag, p, count, seed):
    rng = random.Random(seed)
    cfg = PrimeConfig(p, 12, x_window=(0, 24) if tag in (QP, LAMBDA_ETA) else (-12, 24))
    for _ in range(count):
        yield (randgen.random_series(rng, tag, cfg, span=4, terms=4),
               randgen.random_series(rng, tag, cfg, span=4, terms=4),
               cfg)


@pytest.mark.parametrize("tag,p,seed", [
    (QP, 3, 11), (LAMBDA_ETA, 3, 12), (R_ETA, 3, 13), (FP_LAURENT, 3, 14),
    (QP, 5, 21), (LAMBDA_ETA, 5, 22), (R_ETA, 5, 23), (FP_LAURENT, 5, 24),
])
def test_valuation_axioms_bulk(tag, p, seed):
    # >= 10^3 random triple checks per ring: multiplicativity, ultrametric
    # inequality, and the integer value group
    for f, g, _cfg in _val_law_cases(tag, p, 1000, seed):
        vf = f.gauss_valuation().require_certified()
        vg = g.gauss_valuation().require_certified()
        prod = f.mul(g)
        vp = prod.gauss_valuation()
        assert vp.certified
        assert vp.bound() == vf + vg
        s = f.add(g)
        vs = s.gauss_valuation()
        assert vs.bound() >= min(vf, vg)
        if vf != vg and vs.value is not None:
            assert vs.certified and vs.value == min(vf, vg)
        for v in (vf, vg):
            assert isinstance(v, int)  # value group is p^Z, exponents integral


@pytest.mark.parametrize("tag", SERIES_TAGS)
def test_x_is_multiplicative(tag):
    rng = random.Random(77)
    cfg = PrimeConfig(3, 8, x_window=(0, 24) if tag == LAMBDA_ETA else (-12, 24))
    for _ in range(300):
        f = randgen.random_series(rng, tag, cfg, span=4, terms=4)
        vf = f.gauss_valuation().require_certified()
        xf = f.scale_by_x_power(1)
        assert xf.gauss_valuation().require_certified() == 1 + vf


def test_scale_by_x_power_errors():
    cfg = PrimeConfig(3, 6, x_window=(0, 8))
    f = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, cfg, {0: 1})
    with pytest.raises(NonUnit):
        f.scale_by_x_power(-1)
    g = BoundarySeriesElem.from_int_coeffs(LAMBDA_ETA, cfg, {2: 1})
    assert g.scale_by_x_power(-2).support() == [0]
    with pytest.raises(WindowOverflow):
        BoundarySeriesElem.x_power(R_ETA, CFG3, -4).scale_by_x_power(-3)


# -- hypothesis property checks ----------------------------------------------


small_ints = st.integers(min_value=-200, max_value=200)


@settings(max_examples=150, deadline=None)
@given(small_ints, small_ints, small_ints)
def test_scalar_ring_laws(a, b, c):
    p = 5
    xs = [PadicScalar.from_int(p, v) for v in (a, b, c)]
    lhs = xs[0].mul(xs[1].add(xs[2]))
    rhs = xs[0].mul(xs[1]).add(xs[0].mul(xs[2]))
    assert lhs.intval == rhs.intval


@settings(max_examples=150, deadline=None)
@given(st.dictionaries(st.integers(min_value=-4, max_value=4), small_ints,
                       max_size=5),
       st.dictionaries(st.integers(min_value=-4, max_value=4), small_ints,
                       max_size=5))
def test_boundary_ring_distributivity(da, db):
    cfg = PrimeConfig(3, 8, x_window=(-12, 24))
    f = BoundarySeriesElem.from_int_coeffs(R_ETA, cfg, da)
    g = BoundarySeriesElem.from_int_coeffs(R_ETA, cfg, db)
    h = BoundarySeriesElem.from_int_coeffs(R_ETA, cfg, {0: 2, 1: 1})
    lhs = h.mul(f.add(g))
    rhs = h.mul(f).add(h.mul(g))
    assert lhs.sub(rhs).is_exact_zero()


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=1, max_value=3 * 10**5))
def test_plog_additivity_hypothesis(k):
    p = 3
    cfg = PrimeConfig(p, 7)
    u = PadicScalar.from_int(p, 1 + p * k)
    two = PadicScalar.from_int(p, 1 + p)
    assert plog(cfg, u.mul(two)).agrees_with(plog(cfg, u).add(plog(cfg, two)), 7)
