"""Config validation, pipeline report shape, and byte determinism."""

import json
import xml.etree.ElementTree as ET

import pytest

from halo_lab.errors import ConfigInvalid, RingMismatch
from halo_lab.experiment import (
    COEFFS_CSV_SCHEMA,
    SLOPES_CSV_SCHEMA,
    ExperimentConfig,
    run_experiment,
)


def base_config(**overrides):
    raw = {
        "prime": {"p": 3, "precision": 26, "window": [0, 22]},
        "weight": {"kind": "universal", "eta": 0, "ring": "lambda"},
        "operator": {"kind": "toy_up"},
        "radius": [1, 1],
        "truncation": 10,
        "n_max": 6,
        "points": ["mod_p", {"classical": 1}],
        "lambda_check": True,
    }
    raw.update(overrides)
    return raw


BLOCK_OPERATOR = {
    "kind": "blocks",
    "blocks": 2,
    "summands": [
        {"source": 0, "target": 0, "gamma": [1, 0, 3, 3]},
        {"source": 1, "target": 1, "gamma": [1, 1, 6, 3]},
        {"source": 0, "target": 1, "gamma": [1, 2, 0, 3]},
        {"source": 1, "target": 0, "gamma": [1, 0, 6, 3]},
    ],
}


# -- parsing ------------------------------------------------------------------


def test_parse_roundtrip_and_hash_stability():
    c1 = ExperimentConfig.parse(base_config())
    c2 = ExperimentConfig.from_json(json.dumps(base_config(), indent=4))
    assert c1 == c2
    assert c1.sha256() == c2.sha256()


def test_rejects_even_prime():
    with pytest.raises(ConfigInvalid, match="p must be odd"):
        ExperimentConfig.parse(base_config(
            prime={"p": 2, "precision": 10, "window": [0, 8]}))


@pytest.mark.parametrize("mutate", [
    lambda raw: raw.update(surprise=1),
    lambda raw: raw["prime"].update(extra=1),
    lambda raw: raw["weight"].update(flavor="wrong"),
    lambda raw: raw["operator"].update(noise=1),
    lambda raw: raw.update(outputs={"formats": ["csv"], "oops": 1}),
])
def test_rejects_unknown_fields_at_every_level(mutate):
    raw = base_config()
    mutate(raw)
    with pytest.raises(ConfigInvalid, match="unknown field"):
        ExperimentConfig.parse(raw)


def test_rejects_unknown_summand_fields():
    op = json.loads(json.dumps(BLOCK_OPERATOR))
    op["summands"][0]["weird"] = 1
    with pytest.raises(ConfigInvalid, match="unknown field"):
        ExperimentConfig.parse(base_config(operator=op))


def test_rejects_missing_required_fields():
    raw = base_config()
    del raw["truncation"]
    with pytest.raises(ConfigInvalid, match="missing field"):
        ExperimentConfig.parse(raw)


def test_rejects_float_h():
    raw = base_config(factor={"point": {"classical": 1}, "h": 0.5,
                              "modulus": 4})
    with pytest.raises(ConfigInvalid, match="not reproducible"):
        ExperimentConfig.parse(raw)


def test_parses_fraction_h():
    raw = base_config(factor={"point": {"classical": 1}, "h": "1/2",
                              "modulus": 4})
    c = ExperimentConfig.parse(raw)
    assert str(c.factor.h) == "1/2"


def test_rejects_bad_point_and_bad_format():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.parse(base_config(points=["nowhere"]))
    with pytest.raises(ConfigInvalid, match="unknown output format"):
        ExperimentConfig.parse(base_config(
            outputs={"formats": ["csv", "pdf"]}))


def test_rejects_gamma_shape():
    op = json.loads(json.dumps(BLOCK_OPERATOR))
    op["summands"][0]["gamma"] = [1, 0, 3]
    with pytest.raises(ConfigInvalid, match="four integers"):
        ExperimentConfig.parse(base_config(operator=op))


def test_toy_up_takes_no_blocks():
    with pytest.raises(ConfigInvalid, match="toy_up takes no blocks"):
        ExperimentConfig.parse(base_config(
            operator={"kind": "toy_up", "blocks": 2}))


def test_classical_weight_field_rules():
    with pytest.raises(ConfigInvalid, match="k only applies"):
        ExperimentConfig.parse(base_config(
            weight={"kind": "universal", "k": 3}))
    c = ExperimentConfig.parse(base_config(
        weight={"kind": "classical", "k": 2}))
    assert c.weight.k == 2


# -- pipeline and report ------------------------------------------------------


@pytest.fixture(scope="module")
def block_report():
    raw = base_config(
        operator=json.loads(json.dumps(BLOCK_OPERATOR)),
        prime={"p": 3, "precision": 30, "window": [0, 26]},
        truncation=12,
        n_max=8,
        factor={"point": {"classical": 1}, "h": 1, "modulus": 5},
        riesz={"point": {"classical": 1}, "h": 0, "modulus": 5},
        outputs={"formats": ["csv", "json", "svg"]},
    )
    config = ExperimentConfig.parse(raw)
    return config, run_experiment(config)


def test_report_is_byte_deterministic(block_report):
    config, rep = block_report
    again = run_experiment(config)
    assert rep.to_json() == again.to_json()
    assert rep.artifacts == again.artifacts


def test_report_validates_against_shipped_schema(block_report):
    import jsonschema

    from halo_lab.cli import report_schema_path

    _, rep = block_report
    schema = json.loads(report_schema_path().read_text())
    jsonschema.validate(rep.report, schema)


def test_report_carries_no_floats(block_report):
    _, rep = block_report

    def walk(node):
        assert not isinstance(node, float), node
        if isinstance(node, dict):
            for v in node.values():
                walk(v)
        elif isinstance(node, (list, tuple)):
            for v in node:
                walk(v)

    walk(rep.report)


def test_lambda_table_is_certified_green(block_report):
    _, rep = block_report
    table = rep.report["lambda_table"]
    assert rep.report["lambda_ok"]
    assert [r["n"] for r in table] == list(range(9))
    for r in table:
        assert r["status"] == "ok"
        if r["valuation"] is not None:
            assert r["valuation"] >= r["lambda_n"]


def test_point_blocks_have_ratios_and_match(block_report):
    _, rep = block_report
    blocks = {b["label"]: b for b in rep.report["points"]}
    assert set(blocks) == {"modp", "k1"}
    assert blocks["modp"]["first_slopes"] == blocks["k1"]["first_slopes"]
    assert blocks["modp"]["v_point"] == "1"
    for row in blocks["k1"]["slopes"]:
        if row["ratio"] is not None:
            assert "/" in row["ratio"] or row["ratio"].lstrip("-").isdigit()


def test_factor_and_riesz_blocks(block_report):
    _, rep = block_report
    assert rep.report["factorization"]["q_degree"] == 4
    assert rep.report["riesz"]["dimension"] == 1


def test_csv_artifacts_have_versioned_headers(block_report):
    _, rep = block_report
    coeff = rep.artifacts["coefficients.csv"].splitlines()
    assert coeff[0] == "# schema: %s" % COEFFS_CSV_SCHEMA
    assert coeff[1] == "n,valuation,precision_modulus,lambda_n,ok"
    assert all(line.split(",")[4] == "true" for line in coeff[2:])
    slopes = rep.artifacts["slopes_modp.csv"].splitlines()
    assert slopes[0] == "# schema: %s" % SLOPES_CSV_SCHEMA
    assert slopes[1] == "slope_num,slope_den,multiplicity,provisional"


def test_svg_artifacts_are_wellformed_xml(block_report):
    _, rep = block_report
    for name, text in rep.artifacts.items():
        if name.endswith(".svg"):
            root = ET.fromstring(text)
            assert root.tag.endswith("svg")


def test_dat_artifacts_are_two_column_integers(block_report):
    _, rep = block_report
    for name, text in rep.artifacts.items():
        if not name.endswith(".dat"):
            continue
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            int(a), int(b)


def test_stage_selection_limits_report(block_report):
    config, _ = block_report
    rep = run_experiment(config, stages=("points",))
    assert "lambda_table" not in rep.report
    assert "factorization" not in rep.report
    assert "points" in rep.report
    assert not any(n == "coefficients.csv" for n in rep.artifacts)


def test_scalar_weight_config_runs_without_points_specialization():
    raw = base_config(
        weight={"kind": "classical", "k": 1},
        points=[{"classical": 1}],
        prime={"p": 3, "precision": 22, "window": [0, 18]},
        truncation=8,
        n_max=4,
    )
    rep = run_experiment(ExperimentConfig.parse(raw))
    assert rep.report["points"][0]["label"] == "k1"


def test_mod_p_weight_family_runs():
    raw = base_config(
        weight={"kind": "mod_p", "eta": 1},
        points=["mod_p"],
        prime={"p": 3, "precision": 22, "window": [0, 18]},
        truncation=8,
        n_max=4,
    )
    rep = run_experiment(ExperimentConfig.parse(raw))
    assert rep.report["points"][0]["label"] == "modp"
