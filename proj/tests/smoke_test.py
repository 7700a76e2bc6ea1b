"""End-to-end smoke test: the CLI binary given as argv[1] and the python
module (importable via PYTHONPATH, set up by ctest) drive the same engine."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import nrmc


def fail(message):
    print("FAIL:", message)
    sys.exit(1)


def check(condition, message):
    if not condition:
        fail(message)


def base_config(out_dir):
    return {
        "graph": {"lattice": [6, 6]},
        "score": {"pop_min": 14, "pop_max": 22, "compact_scale": 0.5},
        "method": "com-flow",
        "beta": 0.5,
        "steps": 2000,
        "chains": 2,
        "seed": 5,
        "snapshot_stride": 20,
        "g_max_lag": 200,
        "g_points": 5,
        "n_boot": 20,
        "out": out_dir,
    }


def test_cli(cli, tmp):
    out_dir = tmp / "cli_out"
    config_path = tmp / "config.json"
    config_path.write_text(json.dumps(base_config(str(out_dir))))

    proc = subprocess.run(
        [cli, "--config", str(config_path)], capture_output=True, text=True
    )
    check(proc.returncode == 0, f"cli exited {proc.returncode}: {proc.stderr}")
    check("results written to" in proc.stdout, f"unexpected cli output: {proc.stdout}")
    for name in ["occupancy.csv", "transitions.csv", "g_curve.csv", "chains.csv",
                 "manifest.json", "checkpoint.bin"]:
        check((out_dir / name).exists(), f"missing output file {name}")

    manifest = json.loads((out_dir / "manifest.json").read_text())
    check(manifest["config"]["steps"] == 2000, "manifest does not echo the config")
    header = (out_dir / "occupancy.csv").read_text().splitlines()[0]
    check(header == "vertex_id,f,display_value", f"occupancy header: {header}")

    # A malformed config is a config error, exit code 2.
    bad_path = tmp / "bad.json"
    bad_path.write_text('{"graph": {"lattice": [6, 6]}, "bogus": 1}')
    proc = subprocess.run([cli, "--config", str(bad_path)], capture_output=True, text=True)
    check(proc.returncode == 2, f"bad config exited {proc.returncode}")
    check("config error" in proc.stderr, f"bad config stderr: {proc.stderr}")


def test_module(tmp):
    g = nrmc.Graph.lattice(4, 4)
    check(g.vertex_count == 16 and g.edge_count == 24, "lattice shape")
    check(sorted(g.neighbors(0)) == [1, 4], "corner neighborhood")

    labels = [0] * 8 + [1] * 8
    plan = nrmc.Plan(g, labels, 2)
    check(plan.district_pop(0) == 8.0, "district population")
    check(plan.cut_edge_count() == 4, "straight cut has four cut edges")

    score = nrmc.ScoreSpec()
    score.pop_min = 6
    score.pop_max = 10
    score.compact_scale = 0.5
    check(abs(nrmc.total_score(plan, score) - 2.0) < 1e-12, "score of the straight cut")

    validity = nrmc.ValiditySpec()
    validity.pop_min = 6
    validity.pop_max = 10
    check(nrmc.is_valid(plan, validity), "straight cut is valid")

    config = base_config("")
    config["method"] = "d2d-flow"
    config["out"] = str(tmp / "module_out")
    result = nrmc.run(config)
    check(len(result["chains"]) == 2, "chain count")
    for chain in result["chains"]:
        check(chain["steps"] == 2000, "chain length")
        check(0.0 < chain["acceptance_rate"] <= 1.0, "acceptance rate range")
        check(len(chain["final_labels"]) == 36, "final labels size")
    check(len(result["occupancy"]) == 36, "occupancy size")
    check(all(0.0 <= f <= 1.0 for f in result["occupancy"]), "occupancy range")
    check(len(result["transitions"]) == 4, "transition matrix shape")
    check(result["g_curve"][0]["t"] == 0, "g curve starts at lag zero")
    check(abs(result["g_curve"][0]["g"] - 1.0) < 1e-12, "g at lag zero")

    # Determinism: the same config replays to the same occupancy counts.
    config["out"] = ""
    again = nrmc.run(config)
    check(again["occupancy"] == result["occupancy"], "replay determinism")

    # Config errors surface as ValueError.
    try:
        nrmc.run({"graph": {"lattice": [4, 4]}, "steps": 0})
    except ValueError:
        pass
    else:
        fail("invalid config did not raise")


def main():
    check(len(sys.argv) == 2, "usage: smoke_test.py <cli-binary>")
    with tempfile.TemporaryDirectory(prefix="nrmc_smoke_") as tmp_name:
        tmp = Path(tmp_name)
        test_cli(sys.argv[1], tmp)
        test_module(tmp)
    print("smoke test passed")


if __name__ == "__main__":
    main()
