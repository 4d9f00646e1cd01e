"""Smoke test for the python module. Needs the built extension on PYTHONPATH;
ctest arranges that, or point PYTHONPATH at the build directory by hand."""

import json
import math
import os
from pathlib import Path

import fdrisk


def config_dir():
    env = os.environ.get("FDRISK_CONFIG_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "configs"


def load(name):
    return (config_dir() / name).read_text()


def main():
    assert isinstance(fdrisk.version(), str) and fdrisk.version()

    tree = fdrisk.Tree(load("tree_onestep.json"))
    assert tree.levels == 2
    assert tree.node_count == 3
    assert tree.asset_dim == 1
    assert tree.nodes_at(1) == [1, 2]
    assert json.loads(tree.to_json())["levels"] == 2

    risk = fdrisk.Risk(tree, load("risk_entropic1.json"))
    assert risk.kind == "entropic"
    rho = risk.rho(0, 1, [1.0, -1.0])
    assert abs(rho[0] - math.log(math.cosh(1.0))) < 1e-12
    assert abs(rho[0] - 0.433781) < 1e-6

    risk2 = fdrisk.Risk(tree, load("risk_entropic2.json"))
    alpha = risk2.penalty(0, 1, load("measure_tilt.json"))
    assert abs(alpha[0] - 0.065406) < 1e-6

    corridor = fdrisk.bounds(tree, 0, 0.5, 1, [2.0, 0.0])
    assert abs(corridor["lower"][0] - 0.5) < 1e-12
    assert abs(corridor["upper"][0] - 1.5) < 1e-12
    capped = fdrisk.bounds(tree, 0, 2.0, 1, [2.0, 0.0])
    assert abs(capped["upper"][0] - 2.0) < 1e-12
    assert capped["pinned_upper"][0] == 1

    quote = fdrisk.price(risk, load("strategies_linear.json"), 0, 1, [2.5, 0.625])
    assert abs(quote["price"][0] - 1.0) < 1e-6
    assert quote["iterations"] > 0

    axioms = fdrisk.check_axioms(risk, 0, 1)
    assert axioms["pass"], axioms

    walk = fdrisk.Tree(load("tree_walk3.json"))
    wrisk = fdrisk.Risk(walk, load("risk_entropic1.json"))
    tc = fdrisk.check_strong_tc(wrisk, 0, 1, 2)
    assert tc["pass"], tc

    try:
        fdrisk.Tree("{\"levels\": 1, \"nodes\": []}")
    except fdrisk.ValidationError:
        pass
    else:
        raise AssertionError("empty tree must be rejected")

    print("smoke ok")


if __name__ == "__main__":
    main()
