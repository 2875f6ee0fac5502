import json
import subprocess
import sys

import pytest
import yaml
from hypothesis import given, strategies as st

from schmidt_games.cli import ENV_OUTPUT, ENV_WORKERS, CSV_COLUMNS, dump_config, main
from schmidt_games.experiment import ConfigError, ExperimentConfig


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


configs = st.builds(
    ExperimentConfig,
    system=st.sampled_from(["doubling", "tripling", "ce:2:0.05"]),
    kind=st.just("potential"),
    y=st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=1),
    beta=st.floats(0.01, 0.99),
    gamma=st.floats(0.1, 3),
    rho1=st.none() | st.floats(1e-6, 1e-3),
    bob=st.sampled_from(["random", "concentric", "hole_seeking"]),
    depth=st.none() | st.integers(1, 500),
    games=st.integers(1, 1000),
    seed=st.integers(0, 2 ** 31),
    output=st.text("abcdef/_", min_size=1, max_size=12),
)


@given(configs)
def test_config_round_trip(cfg):
    back = ExperimentConfig.from_dict(yaml.safe_load(dump_config(cfg)))
    assert back == cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="absolute", beta=0.4).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(system="cat", y=[0.0]).validate()


def test_derive_example(capsys):
    code, out, err = run(["derive", "--system", "doubling", "--game", "potential", "--beta", "0.5",
                          "--gamma", "1", "--rho1", "0.01"], capsys)
    # the example's rho1 exceeds c'/100, so the constants print with an error
    assert code == 1
    rows = dict(line.split(None, 1) for line in out.splitlines() if line.strip())
    assert rows["r"].strip() == "4" and rows["N"].strip() == "6"
    assert "c_prime" in rows
    assert "rho1" in err


def test_derive_json(capsys):
    code, out, _ = run(["--json", "derive", "--system", "doubling", "--game", "potential",
                        "--beta", "0.5", "--gamma", "1"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["r"] == 4 and d["N"] == 6


def test_batch_deterministic(tmp_path, capsys):
    paths = []
    for i in range(2):
        p = tmp_path / f"b{i}.csv"
        code, _, _ = run(["batch", "--games", "100", "--depth", "60", "--seed", "7",
                          "--output", str(tmp_path), "--csv", str(p)], capsys)
        assert code == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    header = paths[0].decode().splitlines()[0]
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert len(paths[0].decode().splitlines()) == 101


def test_batch_workers_env(tmp_path, capsys, monkeypatch):
    serial = tmp_path / "s.csv"
    run(["batch", "--games", "6", "--depth", "20", "--csv", str(serial), "--output", str(tmp_path)],
        capsys)
    monkeypatch.setenv(ENV_WORKERS, "2")
    par = tmp_path / "p.csv"
    code, _, _ = run(["batch", "--games", "6", "--depth", "20", "--csv", str(par),
                      "--output", str(tmp_path)], capsys)
    assert code == 0 and par.read_bytes() == serial.read_bytes()


def test_output_env_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT, str(tmp_path / "env"))
    code, _, _ = run(["play", "--system", "doubling", "--game", "potential", "--depth", "12",
                      "--output", str(tmp_path / "flag")], capsys)
    assert code == 0
    files = list((tmp_path / "env").glob("*.jsonl"))
    assert len(files) == 1
    assert not (tmp_path / "flag").exists()
    code, out, _ = run(["--json", "verify", str(files[0])], capsys)
    assert code == 0
    assert json.loads(out)["reports"][0]["passed"]


def test_dimension_example(capsys):
    code, out, _ = run(["dimension", "--system", "tripling", "--hole-cylinder", "1"], capsys)
    assert code == 0
    assert "0.63093" in out


def test_tiling_and_distortion(capsys):
    assert run(["tiling", "--levels", "8"], capsys)[0] == 0
    assert run(["distortion", "--samples", "2000"], capsys)[0] == 0


def test_exit_codes(tmp_path, capsys):
    assert run(["frobnicate"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: absolute\nbeta: 0.5\n")
    assert run(["derive", "--config", str(bad)], capsys)[0] == 1
    bad.write_text("[1, 2\n")
    assert run(["derive", "--config", str(bad)], capsys)[0] == 1
    assert run(["derive", "--config", str(tmp_path / "missing.yaml")], capsys)[0] == 1
    assert run(["derive", "--system", "nosuch"], capsys)[0] == 1


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("system: doubling\nkind: potential\nbeta: 0.3\ngamma: 1.0\n")
    _, out_file, _ = run(["--json", "derive", "--config", str(cfg)], capsys)
    _, out_flag, _ = run(["--json", "derive", "--config", str(cfg), "--beta", "0.5"], capsys)
    assert json.loads(out_file)["beta"] == 0.3
    assert json.loads(out_flag)["beta"] == 0.5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "schmidt_games", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "derive" in proc.stdout
