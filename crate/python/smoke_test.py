"""Smoke test for the tpbsim Python module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import math
import tempfile
from pathlib import Path

import tpbsim


def main() -> None:
    assert abs(tpbsim.choice_probability(0.7, 10.0) - 0.9820138) < 1e-6
    assert tpbsim.choice_probability(0.5, 3.0) == 0.5
    assert math.isclose(tpbsim.attitude_update(0.5, 1.0, 1, "beneficial"), 0.75)
    assert math.isclose(tpbsim.intention_update(0.8, 0.2, 0.5), 0.5)

    params = tpbsim.ModelParams("beneficial", phi=0.7, beta=5.0)
    config = tpbsim.PopulationConfig("beneficial", n=300, alpha=0.9, seed=7)
    assert config.majority_size() == 270

    pop = tpbsim.Population(config, params)
    assert len(pop) == 300 and pop.time == 0
    for _ in range(5):
        rate = pop.step()
        assert 0.0 <= rate <= 1.0
    x0, x, z, p, y, h = pop.agents()[0]
    assert 0.0 <= x0 <= 0.4 and y in (0, 1) and h >= 0

    series = tpbsim.run(config, params, horizon=300)
    assert len(series) == 301
    assert series == tpbsim.run(config, params, horizon=300)

    outcome = tpbsim.detect_transition([0.1] * 50 + [1.0] * 60)
    assert outcome["regime"] == "full_adoption" and outcome["transition_time"] == 50

    summary = tpbsim.run_ensemble(params, replicates=10)
    assert summary["regime"] == "full_adoption"
    assert sum(summary["regime_counts"].values()) == 10

    cells = tpbsim.sweep(tpbsim.bundled_config("fig3_grid").replace("phi =", "replicates = 4\nphi =", 1))
    assert len(cells) == 4

    try:
        tpbsim.ModelParams("beneficial", phi=1.5, beta=5.0)
    except ValueError as err:
        assert "phi" in str(err)
    else:
        raise AssertionError("phi out of range accepted")

    with tempfile.TemporaryDirectory() as out:
        code = tpbsim.cli(["run", "--config", "fig3_baseline", "--replicates", "2", "--out", out])
        assert code == 0
        assert (Path(out) / "trajectory.csv").exists()
        assert tpbsim.cli(["replay", "--manifest", str(Path(out) / "manifest.json")]) == 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
