"""Experiment driver: validated configs, the standard pipeline, flat reports.

A config describes one operator over one weight ring plus the analyses to run
on its characteristic series.  ``run_experiment`` executes the pipeline
(build the operator, take the Fredholm determinant, check the coefficient
valuation bound, specialize Newton polygons at the requested points, then
optionally factor and cut out a Riesz kernel at a scalar point) and returns a
report whose serialized form is byte-stable: integers and exact fraction
strings only, keys sorted, no clocks and no floats anywhere.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigInvalid, RingMismatch
from .rings import (
    FP_LAURENT,
    LAMBDA_ETA,
    QP,
    R_ETA,
    BoundarySeriesElem,
    PrimeConfig,
)
from .weights import (
    RadiusParam,
    WeightCharacter,
    WeightPoint,
    classical_point,
    mod_p_point,
)
from .distributions import DenseOperatorMatrix
from .iwahori import MonoidElem, UpOperatorSpec, build_U, toy_up_spec
from .fredholm import (
    EntireSeriesTrunc,
    fredholm_det,
    lambda_sequence,
    riesz_kernel,
    slope_factorize,
    slopes_at_point,
)

REPORT_SCHEMA_NAME = "halo-lab-report-v1"
COEFFS_CSV_SCHEMA = "coefficients_v1"
SLOPES_CSV_SCHEMA = "slopes_v1"

_WEIGHT_KINDS = ("universal", "classical", "twisted_classical", "mod_p")
_RING_NAMES = {"lambda": LAMBDA_ETA, "r_eta": R_ETA}
_FORMATS = ("csv", "json", "svg")


def _check_keys(raw: dict, where: str, required: tuple, optional: tuple = ()):
    if not isinstance(raw, dict):
        raise ConfigInvalid("%s must be an object" % where)
    unknown = sorted(set(raw) - set(required) - set(optional))
    if unknown:
        raise ConfigInvalid("unknown field(s) %s in %s" % (", ".join(unknown), where))
    missing = sorted(set(required) - set(raw))
    if missing:
        raise ConfigInvalid("missing field(s) %s in %s" % (", ".join(missing), where))


def _int_field(raw, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigInvalid("%s must be an integer" % where)
    return raw


def _fraction_field(raw, where: str) -> Fraction:
    if isinstance(raw, bool):
        raise ConfigInvalid("%s must be an integer or a fraction string" % where)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ConfigInvalid("%s is not a valid fraction: %r" % (where, raw))
    raise ConfigInvalid("%s must be an integer or a fraction string, floats are "
                        "not reproducible" % where)


@dataclass(frozen=True)
class PointSpec:
    """A weight point to specialize at: the mod-p point or a classical k."""

    kind: str
    k: int = 0

    @classmethod
    def parse(cls, raw, where: str) -> "PointSpec":
        if raw == "mod_p":
            return cls("mod_p")
        if isinstance(raw, dict):
            _check_keys(raw, where, ("classical",))
            return cls("classical", _int_field(raw["classical"], where + ".classical"))
        raise ConfigInvalid('%s must be "mod_p" or {"classical": k}' % where)

    def build(self, cfg: PrimeConfig) -> WeightPoint:
        if self.kind == "mod_p":
            return mod_p_point()
        return classical_point(cfg, self.k)

    def as_json(self):
        if self.kind == "mod_p":
            return "mod_p"
        return {"classical": self.k}


@dataclass(frozen=True)
class WeightConfig:
    kind: str
    eta: int = 0
    k: int = 0
    ring: str = "lambda"

    @classmethod
    def parse(cls, raw) -> "WeightConfig":
        _check_keys(raw, "weight", ("kind",), ("eta", "k", "ring"))
        kind = raw["kind"]
        if kind not in _WEIGHT_KINDS:
            raise ConfigInvalid("weight.kind must be one of %s" % (_WEIGHT_KINDS,))
        eta = _int_field(raw.get("eta", 0), "weight.eta")
        k = _int_field(raw.get("k", 0), "weight.k")
        ring = raw.get("ring", "lambda")
        if ring not in _RING_NAMES:
            raise ConfigInvalid('weight.ring must be "lambda" or "r_eta"')
        if kind == "classical" and "eta" in raw and eta != 0:
            raise ConfigInvalid("classical weights take no eta twist; use "
                                "twisted_classical")
        if kind in ("universal", "mod_p") and "k" in raw:
            raise ConfigInvalid("weight.k only applies to classical kinds")
        return cls(kind, eta, k, ring)

    def build(self, cfg: PrimeConfig) -> WeightCharacter:
        if self.kind == "universal":
            return WeightCharacter.universal_boundary(
                cfg, eta=self.eta, target_tag=_RING_NAMES[self.ring])
        if self.kind == "classical":
            return WeightCharacter.classical(cfg, self.k)
        if self.kind == "twisted_classical":
            return WeightCharacter.twisted_classical(cfg, self.k, self.eta)
        return WeightCharacter.mod_p_boundary(cfg, eta=self.eta)

    def as_json(self):
        out = {"kind": self.kind, "eta": self.eta, "ring": self.ring}
        if self.kind in ("classical", "twisted_classical"):
            out["k"] = self.k
        return out


@dataclass(frozen=True)
class SummandConfig:
    source: int
    target: int
    gamma: tuple

    @classmethod
    def parse(cls, raw, where: str) -> "SummandConfig":
        _check_keys(raw, where, ("source", "target", "gamma"))
        g = raw["gamma"]
        if (not isinstance(g, list) or len(g) != 4
                or any(isinstance(x, bool) or not isinstance(x, int) for x in g)):
            raise ConfigInvalid("%s.gamma must be four integers (a, b, c, d)" % where)
        return cls(_int_field(raw["source"], where + ".source"),
                   _int_field(raw["target"], where + ".target"),
                   tuple(g))

    def as_json(self):
        return {"source": self.source, "target": self.target,
                "gamma": list(self.gamma)}


@dataclass(frozen=True)
class OperatorConfig:
    kind: str
    blocks: int = 1
    summands: tuple = ()

    @classmethod
    def parse(cls, raw) -> "OperatorConfig":
        _check_keys(raw, "operator", ("kind",), ("blocks", "summands"))
        kind = raw["kind"]
        if kind == "toy_up":
            if "blocks" in raw or "summands" in raw:
                raise ConfigInvalid("toy_up takes no blocks or summands")
            return cls("toy_up")
        if kind != "blocks":
            raise ConfigInvalid('operator.kind must be "toy_up" or "blocks"')
        _check_keys(raw, "operator", ("kind", "blocks", "summands"))
        blocks = _int_field(raw["blocks"], "operator.blocks")
        raw_s = raw["summands"]
        if not isinstance(raw_s, list) or not raw_s:
            raise ConfigInvalid("operator.summands must be a nonempty list")
        summands = tuple(SummandConfig.parse(s, "operator.summands[%d]" % i)
                         for i, s in enumerate(raw_s))
        return cls("blocks", blocks, summands)

    def build(self, cfg: PrimeConfig, kappa: WeightCharacter,
              radius: RadiusParam, truncation: int) -> UpOperatorSpec:
        if self.kind == "toy_up":
            return toy_up_spec(cfg, kappa, radius, truncation)
        per_source = [[] for _ in range(self.blocks)]
        for s in self.summands:
            if not 0 <= s.source < self.blocks:
                raise ConfigInvalid("summand source %d outside 0..%d"
                                    % (s.source, self.blocks - 1))
            a, b, c, d = s.gamma
            per_source[s.source].append(
                (s.target, MonoidElem.from_ints(cfg, a, b, c, d)))
        return UpOperatorSpec(cfg, kappa, radius, truncation, self.blocks,
                              tuple(tuple(lst) for lst in per_source))

    def as_json(self):
        if self.kind == "toy_up":
            return {"kind": "toy_up"}
        return {"kind": "blocks", "blocks": self.blocks,
                "summands": [s.as_json() for s in self.summands]}


@dataclass(frozen=True)
class FactorConfig:
    point: PointSpec
    h: Fraction
    modulus: int

    @classmethod
    def parse(cls, raw, where: str) -> "FactorConfig":
        _check_keys(raw, where, ("point", "h", "modulus"))
        return cls(PointSpec.parse(raw["point"], where + ".point"),
                   _fraction_field(raw["h"], where + ".h"),
                   _int_field(raw["modulus"], where + ".modulus"))

    def as_json(self):
        return {"point": self.point.as_json(), "h": str(self.h),
                "modulus": self.modulus}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment; rejects unknown fields."""

    p: int
    precision: int
    window: tuple
    weight: WeightConfig
    operator: OperatorConfig
    radius: tuple
    truncation: int
    n_max: int
    points: tuple
    lambda_check: bool = True
    target_precision: int | None = None
    factor: FactorConfig | None = None
    riesz: FactorConfig | None = None
    formats: tuple = ("csv", "json")

    @classmethod
    def parse(cls, raw: dict) -> "ExperimentConfig":
        _check_keys(raw, "config",
                    ("prime", "weight", "operator", "radius", "truncation",
                     "n_max", "points"),
                    ("lambda_check", "target_precision", "factor", "riesz",
                     "outputs"))
        prime = raw["prime"]
        _check_keys(prime, "prime", ("p", "precision", "window"))
        p = _int_field(prime["p"], "prime.p")
        if p % 2 == 0:
            raise ConfigInvalid("p must be odd")
        precision = _int_field(prime["precision"], "prime.precision")
        window = prime["window"]
        if (not isinstance(window, list) or len(window) != 2
                or any(isinstance(x, bool) or not isinstance(x, int)
                       for x in window)):
            raise ConfigInvalid("prime.window must be [n_min, n_max]")
        radius = raw["radius"]
        if (not isinstance(radius, list) or len(radius) != 2
                or any(isinstance(x, bool) or not isinstance(x, int)
                       for x in radius)):
            raise ConfigInvalid("radius must be [a, b]")
        raw_points = raw["points"]
        if not isinstance(raw_points, list) or not raw_points:
            raise ConfigInvalid("points must be a nonempty list")
        points = tuple(PointSpec.parse(q, "points[%d]" % i)
                       for i, q in enumerate(raw_points))
        lambda_check = raw.get("lambda_check", True)
        if not isinstance(lambda_check, bool):
            raise ConfigInvalid("lambda_check must be true or false")
        target = raw.get("target_precision")
        if target is not None:
            target = _int_field(target, "target_precision")
        factor = raw.get("factor")
        if factor is not None:
            factor = FactorConfig.parse(factor, "factor")
        riesz = raw.get("riesz")
        if riesz is not None:
            riesz = FactorConfig.parse(riesz, "riesz")
        formats = ("csv", "json")
        if "outputs" in raw:
            _check_keys(raw["outputs"], "outputs", ("formats",))
            fmts = raw["outputs"]["formats"]
            if not isinstance(fmts, list) or not fmts:
                raise ConfigInvalid("outputs.formats must be a nonempty list")
            for f in fmts:
                if f not in _FORMATS:
                    raise ConfigInvalid("unknown output format %r" % (f,))
            formats = tuple(sorted(set(fmts)))
        return cls(p, precision, tuple(window), WeightConfig.parse(raw["weight"]),
                   OperatorConfig.parse(raw["operator"]), tuple(radius),
                   _int_field(raw["truncation"], "truncation"),
                   _int_field(raw["n_max"], "n_max"), points, lambda_check,
                   target, factor, riesz, formats)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigInvalid("config is not valid JSON: %s" % e)
        return cls.parse(raw)

    def prime_config(self) -> PrimeConfig:
        return PrimeConfig(self.p, self.precision, x_window=self.window)

    def canonical_json(self) -> str:
        obj = {
            "prime": {"p": self.p, "precision": self.precision,
                      "window": list(self.window)},
            "weight": self.weight.as_json(),
            "operator": self.operator.as_json(),
            "radius": list(self.radius),
            "truncation": self.truncation,
            "n_max": self.n_max,
            "points": [q.as_json() for q in self.points],
            "lambda_check": self.lambda_check,
            "target_precision": self.target_precision,
            "factor": None if self.factor is None else self.factor.as_json(),
            "riesz": None if self.riesz is None else self.riesz.as_json(),
            "outputs": {"formats": list(self.formats)},
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# -- pipeline -----------------------------------------------------------------


def _block_count(config: ExperimentConfig) -> int:
    return 1 if config.operator.kind == "toy_up" else config.operator.blocks


def _lambda_table(det: EntireSeriesTrunc, lam: list) -> list:
    """Rows (n, valuation, precision_modulus, lambda_n, status).

    The valuation column is the honest one for the full compact operator's
    coefficient: the computed corner value combined with the certified floor
    for what the truncation discarded.  ``violated`` means a certified value
    sits below the required bound; ``inconclusive`` means the certified
    knowledge stops above the bound without confirming it.
    """
    rows = []
    for n in range(det.n_trunc + 1):
        vr = det.coefficient_valuation(n)
        modulus = det.coeffs[n].certainty_modulus()
        if vr.value is None:
            valuation, status = None, "ok"
        elif vr.certified:
            valuation = vr.value
            status = "ok" if vr.value >= lam[n] else "violated"
        else:
            valuation = vr.value
            status = "ok" if vr.value >= lam[n] else "inconclusive"
        rows.append({
            "n": n,
            "valuation": valuation,
            "certified": bool(vr.certified or vr.value is None),
            "precision_modulus": modulus,
            "lambda_n": lam[n],
            "status": status,
        })
    return rows


def _point_valuation_of(point: WeightPoint):
    """v_p of the point coordinate: None means the center (infinite)."""
    if point.kind == "mod_p":
        return Fraction(1)
    v = point.x.valuation()
    if v.value is None:
        return None
    return Fraction(v.value)


def _slope_rows(poly, v_point) -> list:
    rows = []
    for (x1, _), (slope, mult) in zip(poly.vertices, poly.slopes):
        provisional = x1 + mult > poly.certified_upto
        ratio = None
        if v_point not in (None, 0):
            ratio = slope / v_point
        rows.append({
            "slope_num": slope.numerator,
            "slope_den": slope.denominator,
            "multiplicity": mult,
            "provisional": provisional,
            "ratio": None if ratio is None else str(ratio),
        })
    return rows


def _specialized_series(det: EntireSeriesTrunc, point: WeightPoint) -> list:
    """Scalar coefficients of the determinant at a weight point."""
    out = []
    for n in range(det.n_trunc + 1):
        c = det.coeffs[n]
        if point.kind == "mod_p":
            out.append(c.specialize_mod_p())
        else:
            out.append(c.specialize_classical(point.x))
    return out


def _specialized_matrix(u: DenseOperatorMatrix, point: WeightPoint):
    cfg = u.cfg
    if u.tag in (QP, FP_LAURENT):
        return u  # already scalar; the point carries no extra information
    entries = []
    for row in u.entries:
        if point.kind == "mod_p":
            entries.append([e.specialize_mod_p() for e in row])
        else:
            entries.append([e.specialize_classical(point.x) for e in row])
    return DenseOperatorMatrix(cfg, entries[0][0].tag if entries else QP,
                               entries, u.source_radius, u.target_radius,
                               u.block_count, u.row_valuation_cert, u.domain,
                               u.tail_certificate)


def _factor_block(det: EntireSeriesTrunc, cfg: PrimeConfig,
                  fc: FactorConfig) -> tuple:
    point = fc.point.build(cfg)
    if det.tag in (LAMBDA_ETA, R_ETA):
        coeffs = _specialized_series(det, point)
    else:
        coeffs = [det.coeffs[n] for n in range(det.n_trunc + 1)]
    q, s = slope_factorize(coeffs, fc.h, fc.modulus, det.polygon_tail())
    return {
        "point": fc.point.as_json(),
        "h": str(fc.h),
        "modulus": fc.modulus,
        "q_degree": len(q) - 1,
        "q": [_series_repr(e) for e in q],
        "s": [_series_repr(e) for e in s],
    }, q


def _riesz_block(u: DenseOperatorMatrix, det: EntireSeriesTrunc,
                 cfg: PrimeConfig, rc: FactorConfig) -> dict:
    point = rc.point.build(cfg)
    matrix = _specialized_matrix(u, point)
    if det.tag in (LAMBDA_ETA, R_ETA):
        coeffs = _specialized_series(det, point)
    else:
        coeffs = [det.coeffs[n] for n in range(det.n_trunc + 1)]
    q, _ = slope_factorize(coeffs, rc.h, rc.modulus, det.polygon_tail())
    data = riesz_kernel(matrix, q, rc.modulus)
    return {
        "point": rc.point.as_json(),
        "h": str(rc.h),
        "modulus": rc.modulus,
        "dimension": data.dimension,
        "char_series": [_series_repr(e) for e in data.char_series],
    }


def _series_repr(e: BoundarySeriesElem) -> dict:
    """Deterministic JSON form of a series element: sorted integer data."""
    coeffs = {}
    for m in sorted(e.coeffs):
        c = e.coeffs[m]
        if e.tag == FP_LAURENT:
            coeffs[str(m)] = int(c)
        else:
            coeffs[str(m)] = c.residue if c.precision is not None else c.intval
    return {
        "tag": e.tag,
        "coeffs": coeffs,
        "tail_floor": e.tail_floor,
    }


@dataclass(frozen=True)
class ExperimentReport:
    """Deterministic result bundle: a JSON-ready dict plus artifact texts."""

    report: dict
    artifacts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.report, sort_keys=True, indent=2,
                          ensure_ascii=True) + "\n"

    @property
    def lambda_violated(self) -> bool:
        return any(r["status"] == "violated"
                   for r in self.report.get("lambda_table", ()))

    @property
    def lambda_inconclusive(self) -> bool:
        return any(r["status"] == "inconclusive"
                   for r in self.report.get("lambda_table", ()))


def run_experiment(config: ExperimentConfig,
                   stages: tuple = ("lambda", "points", "factor", "riesz"),
                   ) -> ExperimentReport:
    """Execute the pipeline and assemble the report for the chosen stages."""
    cfg = config.prime_config()
    kappa = config.weight.build(cfg)
    radius = RadiusParam(config.radius[0], config.radius[1])
    spec = config.operator.build(cfg, kappa, radius, config.truncation)
    u = build_U(spec)
    det = fredholm_det(u, config.n_max, target=config.target_precision)
    t = _block_count(config)
    lam = lambda_sequence(t, config.n_max, config.p)

    report = {
        "schema": REPORT_SCHEMA_NAME,
        "version": _library_version(),
        "config_sha256": config.sha256(),
        "p": config.p,
        "truncation": config.truncation,
        "matrix_size": u.size,
        "n_max": config.n_max,
        "block_count": t,
        "stages": sorted(stages),
    }
    artifacts = {}

    if "lambda" in stages and config.lambda_check:
        table = _lambda_table(det, lam)
        report["lambda_table"] = table
        report["lambda_ok"] = all(r["status"] == "ok" for r in table)
        artifacts["coefficients.csv"] = _coefficients_csv(table)

    scalar_det = det.tag not in (LAMBDA_ETA, R_ETA)
    if "points" in stages:
        point_blocks = []
        for q in config.points:
            point = q.build(cfg)
            poly = slopes_at_point(det, None if scalar_det else point)
            v_point = _point_valuation_of(point)
            rows = _slope_rows(poly, v_point)
            label = point.label
            block = {
                "label": label,
                "point": q.as_json(),
                "v_point": None if v_point is None else str(v_point),
                "certified_upto": poly.certified_upto,
                "provisional_final": poly.provisional_final,
                "vertices": [[x, y] for x, y in poly.vertices],
                "slopes": rows,
                "first_slopes": [str(s) for s in poly.first_slopes(5)],
            }
            point_blocks.append(block)
            artifacts["slopes_%s.csv" % label] = _slopes_csv(rows)
            artifacts["polygon_%s.svg" % label] = _polygon_svg(poly)
            artifacts["polygon_%s.dat" % label] = _polygon_dat(
                det, point if not scalar_det else None, poly)
        report["points"] = point_blocks

    if "factor" in stages and config.factor is not None:
        block, _ = _factor_block(det, cfg, config.factor)
        report["factorization"] = block

    if "riesz" in stages and config.riesz is not None:
        report["riesz"] = _riesz_block(u, det, cfg, config.riesz)

    return ExperimentReport(report, artifacts)


def _library_version() -> str:
    from . import __version__

    return __version__


# -- artifact renderers --------------------------------------------------------


def _coefficients_csv(table: list) -> str:
    lines = ["# schema: %s" % COEFFS_CSV_SCHEMA,
             "n,valuation,precision_modulus,lambda_n,ok"]
    for r in table:
        val = "inf" if r["valuation"] is None else str(r["valuation"])
        mod = "exact" if r["precision_modulus"] is None else str(r["precision_modulus"])
        ok = "true" if r["status"] == "ok" else "false"
        lines.append("%d,%s,%s,%d,%s" % (r["n"], val, mod, r["lambda_n"], ok))
    return "\n".join(lines) + "\n"


def _slopes_csv(rows: list) -> str:
    lines = ["# schema: %s" % SLOPES_CSV_SCHEMA,
             "slope_num,slope_den,multiplicity,provisional"]
    for r in rows:
        lines.append("%d,%d,%d,%s" % (r["slope_num"], r["slope_den"],
                                      r["multiplicity"],
                                      "true" if r["provisional"] else "false"))
    return "\n".join(lines) + "\n"


def _polygon_dat(det: EntireSeriesTrunc, point, poly) -> str:
    """Gnuplot-friendly blocks: certified points, then hull vertices."""
    lines = ["# certified coefficient valuations (n, val)"]
    for n, vr in det.points(point):
        if vr.certified and vr.value is not None:
            lines.append("%d %d" % (n, vr.value))
    lines.append("")
    lines.append("# newton polygon vertices")
    for x, y in poly.vertices:
        lines.append("%d %d" % (x, y))
    return "\n".join(lines) + "\n"


def _polygon_svg(poly) -> str:
    """Self-contained SVG of the polygon: pure geometry, integer coordinates."""
    if not poly.vertices:
        return ('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 100 40">'
                "<text x=\"4\" y=\"20\" font-size=\"8\">empty polygon</text></svg>\n")
    sc = 24
    xs = [x for x, _ in poly.vertices]
    ys = [y for _, y in poly.vertices]
    w = (max(xs) - min(xs)) * sc + 2 * sc
    h = (max(ys) - min(ys)) * sc + 2 * sc
    toy = lambda y: h - sc - (y - min(ys)) * sc
    tox = lambda x: sc + (x - min(xs)) * sc
    pts = " ".join("%d,%d" % (tox(x), toy(y)) for x, y in poly.vertices)
    marks = "".join(
        '<circle cx="%d" cy="%d" r="3" fill="#205080"/>' % (tox(x), toy(y))
        for x, y in poly.vertices)
    return ('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 %d %d">'
            '<rect width="%d" height="%d" fill="white"/>'
            '<polyline points="%s" fill="none" stroke="#205080" stroke-width="2"/>'
            "%s</svg>\n" % (w, h, w, h, pts, marks))
