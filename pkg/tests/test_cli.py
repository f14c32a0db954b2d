import csv

import numpy as np
import pytest
import yaml

from scdsim.cli import ConfigError, ExperimentSpec, load_spec, main, parse_mu_dist, run_sweep, timing_cdf


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_single_cell_cardinality(tmp_path):
    rows = run_sweep(ExperimentSpec(policies=["scd"], rho=[0.5], seeds=[1], rounds=100, servers=[10],
                                    dispatchers=2, out=str(tmp_path)))
    assert len(rows) == 1
    assert len(read_csv(tmp_path / "sweep.csv")) == 1


def test_sweep_rows_and_header(tmp_path):
    rc = main(["--policy", "scd,jsq", "--rho", "0.5,0.9", "--seed", "1,2", "--rounds", "200",
               "--servers", "8", "--dispatchers", "2", "--out", str(tmp_path)])
    assert rc == 0
    with open(tmp_path / "sweep.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header[:3] == ["experiment_id", "policy", "seed"]
    assert len(read_csv(tmp_path / "sweep.csv")) == 8


def test_reruns_byte_identical(tmp_path):
    args = ["--mode", "tail", "--policy", "scd,hlsq", "--rho", "0.9", "--seed", "3", "--rounds", "300",
            "--servers", "10", "--dispatchers", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("sweep.csv", "ccdf_scd_0.9.csv", "ccdf_hlsq_0.9.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_ccdf_file_shape(tmp_path):
    main(["--mode", "tail", "--policy", "sed", "--rho", "0.7", "--seed", "1,2", "--rounds", "300",
          "--servers", "6", "--dispatchers", "2", "--out", str(tmp_path)])
    rows = read_csv(tmp_path / "ccdf_sed_0.7.csv")
    ccdf = [float(r["ccdf"]) for r in rows]
    assert ccdf[0] == 1.0 and ccdf[-1] == 0.0
    assert all(b <= a for a, b in zip(ccdf, ccdf[1:]))


def test_single_mode_trace(tmp_path):
    rc = main(["--mode", "single", "--policy", "twf", "--rho", "0.8", "--seed", "4", "--rounds", "150",
               "--servers", "5", "--dispatchers", "2", "--trace", "--out", str(tmp_path)])
    assert rc == 0
    assert len(read_csv(tmp_path / "single.csv")) == 1
    trace = read_csv(tmp_path / "trace.csv")
    assert len(trace) == 150 and len(trace[0]) == 6


def test_config_round_trip(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({"policies": ["scd", "wr"], "rho": [0.6], "seeds": [5], "rounds": 250,
                                   "servers": [7], "dispatchers": 3, "mu_dist": "uniform:1,20"}))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    eff = tmp_path / "a" / "config_effective.yaml"
    data = yaml.safe_load(eff.read_text())
    assert len(data["rates_by_seed"][5]) == 7 and "prng" in data
    assert main(["--config", str(eff), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_fixed_rates_and_dispatcher_overrides(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({"mu_dist": "fixed:1,2,3", "dispatchers": 2, "dispatcher_rates": [1.0, 2.0],
                                   "seeds": [1], "rounds": 100, "out": str(tmp_path / "o")}))
    assert main(["--config", str(cfg)]) == 0
    row = read_csv(tmp_path / "o" / "sweep.csv")[0]
    assert row["n"] == "3" and float(row["rho"]) == 0.5


def test_timing_outputs(tmp_path):
    assert main(["--mode", "timing", "--policy", "scd,jsq", "--servers", "16,32", "--rounds", "50",
                 "--out", str(tmp_path)]) == 0
    for policy in ("scd", "jsq"):
        for n in (16, 32):
            rows = read_csv(tmp_path / f"timing_{policy}_{n}.csv")
            t = [float(r["duration_us"]) for r in rows]
            c = [float(r["cdf"]) for r in rows]
            assert t == sorted(t) and c == sorted(c) and c[-1] == 1.0
    assert len(read_csv(tmp_path / "timing_summary.csv")) == 4
    assert "timing_method" in yaml.safe_load((tmp_path / "config_effective.yaml").read_text())


def test_timing_cdf_helper():
    d, c = timing_cdf([3000, 1000, 2000])
    assert list(d) == [1.0, 2.0, 3.0]
    assert np.allclose(c, [1 / 3, 2 / 3, 1.0])


@pytest.mark.parametrize("argv", [
    ["--policy", "nope"],
    ["--rho", "1.2"],
    ["--mu-dist", "normal:1,2"],
    ["--mode", "single", "--seed", "1,2"],
    ["--rounds", "0"],
])
def test_configuration_errors_exit_one(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "missing.yaml")]) == 1


def test_unwritable_output_exit_two(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--rounds", "10", "--seed", "1", "--servers", "3", "--out", str(blocker / "sub")]) == 2


def test_parse_mu_dist():
    assert parse_mu_dist("uniform:1,10") == ("uniform", (1.0, 10.0))
    assert parse_mu_dist("fixed:2,3") == ("fixed", (2.0, 3.0))
    with pytest.raises(ConfigError):
        parse_mu_dist("uniform:5,1")


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"rounds": 99, "policies": ["jsq"]}))
    spec = load_spec(["--config", str(cfg), "--rounds", "42"])
    assert spec.rounds == 42 and spec.policies == ["jsq"]


def test_mean_response_grows_with_load(tmp_path):
    rows = run_sweep(ExperimentSpec(policies=["scd"], rho=[0.3, 0.5, 0.7, 0.9, 0.99], seeds=[1, 2],
                                    rounds=3000, servers=[50], dispatchers=5, out=str(tmp_path)))
    for seed in (1, 2):
        means = [r.mean_response for r in rows if r.seed == seed]
        assert all(b >= a for a, b in zip(means, means[1:]))
