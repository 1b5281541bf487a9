#!/usr/bin/env python3
"""Scan the boundary annulus: slopes of the example operator point by point.

Builds the two-block example once over the universal boundary weight ring,
then specializes its characteristic series at the mod-p fiber and at a list
of classical weights on the annulus (v_p(x) = 1), printing each point's first
certified slopes and the slope/v_p(x) ratios.  On the annulus the ratio
pattern is expected to repeat across points; digits are only printed where
certified.
"""

import argparse
import json
from fractions import Fraction
from pathlib import Path

from halo_lab.experiment import ExperimentConfig, run_experiment

HERE = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG = HERE / "configs" / "toy_up_p3.json"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT_CONFIG),
                    help="base experiment config (JSON)")
    ap.add_argument("--weights", default="1,2,4,5",
                    help="comma-separated classical weights k to scan "
                         "(annulus points need p not dividing k)")
    args = ap.parse_args()

    raw = json.loads(Path(args.config).read_text())
    ks = [int(q) for q in args.weights.split(",") if q.strip()]
    raw["points"] = ["mod_p"] + [{"classical": k} for k in ks]
    raw.pop("factor", None)
    raw.pop("riesz", None)
    config = ExperimentConfig.parse(raw)
    rep = run_experiment(config, stages=("points",))

    print("point      v_p(x)  first slopes           ratios slope/v_p(x)")
    for blk in rep.report["points"]:
        v = blk["v_point"] if blk["v_point"] is not None else "inf"
        slopes = ", ".join(blk["first_slopes"])
        ratios = ", ".join(
            row["ratio"] for row in blk["slopes"][:5]
            if row["ratio"] is not None)
        print("%-10s %-7s [%s]%s" % (blk["label"], v, slopes,
                                     ("  [" + ratios + "]") if ratios else ""))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
