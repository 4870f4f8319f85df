import csv
import os

import numpy as np
import pytest

from thermobilliards.cli import ConfigError, ExperimentConfig, main


def write(path, text):
    path.write_text(text)
    return str(path)


TWO_PLATES = """
[experiment]
scenario = two_plates
master_seed = 12345

[components]
temperatures = 2.0 1.0
accommodations = 1.0 1.0

[run]
n_steps = 5000
burn_in = 500
ensemble = 2
"""

DISC_SWEEP = """
[experiment]
scenario = disc_union
master_seed = 7

[geometry]
radius = 1.0
ratio = 0.5

[components]
temperatures = 1.0 2.0

[run]
n_samples = 15000

[sweep]
parameter = ratio
values = 0.3 0.7
"""

ENGINE = """
[experiment]
scenario = engine
master_seed = 3

[engine]
t_h = 50
t_c = 1
n_collisions = 500
n_runs = 4
burn_in = 50
"""


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_config_validation(tmp_path):
    cfg = ExperimentConfig(write(tmp_path / "a.ini", TWO_PLATES))
    assert cfg.scenario == "two_plates"
    assert cfg.master_seed == 12345
    assert cfg.temperatures == [2.0, 1.0]

    bad = TWO_PLATES.replace("temperatures = 2.0 1.0",
                             "temperatures = 2.0 -1.0")
    with pytest.raises(ConfigError, match="temperatures"):
        ExperimentConfig(write(tmp_path / "b.ini", bad))

    bad = TWO_PLATES.replace("[run]", "[run]\nturbo = yes")
    with pytest.raises(ConfigError, match="unknown key 'turbo'"):
        ExperimentConfig(write(tmp_path / "c.ini", bad))

    bad = TWO_PLATES + "\n[sweep]\nparameter = ratio\nvalues = 0.5\n"
    with pytest.raises(ConfigError, match="sweep parameter"):
        ExperimentConfig(write(tmp_path / "d.ini", bad))

    with pytest.raises(ConfigError, match="cannot read"):
        ExperimentConfig(str(tmp_path / "missing.ini"))


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path / "bad.ini", "[experiment]\nscenario = warp\n")
    assert main(["simulate", "--config", bad]) == 1
    assert "config error" in capsys.readouterr().err

    good = write(tmp_path / "ok.ini", TWO_PLATES)
    assert main(["simulate", "--config", good,
                 "--out", str(tmp_path / "out")]) == 0


def test_simulate_csv(tmp_path):
    cfg = write(tmp_path / "tp.ini", TWO_PLATES)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "simulate.csv")
    assert rows[0][0] == "component"
    assert "se_mean_post_energy" in rows[0]
    assert len(rows) == 3
    # 17-significant-digit round trip
    val = rows[1][3]
    assert float(val) == float(format(float(val), ".17g"))


def test_entropy_matches_closed_form(tmp_path, capsys):
    cfg = write(tmp_path / "tp.ini", TWO_PLATES)
    out = tmp_path / "out"
    assert main(["entropy", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "closed form e_p = 0.5" in text
    rows = read_csv(out / "entropy.csv")
    header, first = rows[0], rows[1]
    assert first[0] == "e_p"
    assert float(first[header.index("value")]) == pytest.approx(0.5)


def test_transition_matrix_and_stationary(tmp_path):
    cfg = write(tmp_path / "du.ini", DISC_SWEEP)
    out = tmp_path / "out"
    assert main(["transition-matrix", "--config", cfg,
                 "--out", str(out)]) == 0
    rows = read_csv(out / "transition_matrix.csv")
    assert rows[0] == ["from", "to", "p", "se", "count"]
    p = np.array([float(r[2]) for r in rows[1:]]).reshape(2, 2)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)

    assert main(["stationary", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "stationary.csv")
    weights = np.array([float(r[3]) for r in rows[1:]]).reshape(2, 2)
    assert weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_sweep_reproducible_and_tagged(tmp_path):
    cfg = write(tmp_path / "du.ini", DISC_SWEEP)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "sweep.csv").read_bytes() == \
        (out2 / "sweep.csv").read_bytes()
    rows = read_csv(out1 / "sweep.csv")
    assert rows[0][0] == "ratio"
    assert [float(r[0]) for r in rows[1:]] == [0.3, 0.7]
    # every estimate column is paired with SE / CI columns
    assert "se_delta_method" in rows[0]
    assert "ci95_low" in rows[0] and "ci95_high" in rows[0]


def test_single_value_sweep_matches_plain_entropy(tmp_path):
    single = DISC_SWEEP.replace("values = 0.3 0.7", "values = 0.5")
    cfg = write(tmp_path / "one.ini", single)
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert main(["entropy", "--config", cfg, "--out", str(out)]) == 0
    sweep_rows = read_csv(out / "sweep.csv")
    entropy_rows = read_csv(out / "entropy.csv")
    assert sweep_rows[1][1] == entropy_rows[1][2]  # identical e_p bytes


def test_engine_outputs(tmp_path):
    cfg = write(tmp_path / "eng.ini", ENGINE)
    out = tmp_path / "out"
    assert main(["engine", "--config", cfg, "--out", str(out)]) == 0
    traj = read_csv(out / "trajectory.csv")
    assert traj[0][:3] == ["collision", "t", "x_w"]
    assert len(traj) == 501
    ens = read_csv(out / "ensemble.csv")
    assert ens[0] == ["quantity", "mean", "se", "ci95_low", "ci95_high"]
    names = [r[0] for r in ens[1:]]
    assert "drift" in names and "eps_bar" in names


def test_worker_invariance(tmp_path):
    cfg = write(tmp_path / "tp.ini", TWO_PLATES)
    o1, o2 = tmp_path / "w1", tmp_path / "w2"
    assert main(["simulate", "--config", cfg, "--out", str(o1),
                 "--workers", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(o2),
                 "--workers", "2"]) == 0
    assert (o1 / "simulate.csv").read_bytes() == \
        (o2 / "simulate.csv").read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path / "tp.ini", TWO_PLATES)
    o1, o2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["simulate", "--config", cfg, "--out", str(o1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(o2),
                 "--seed", "999"]) == 0
    assert (o1 / "simulate.csv").read_bytes() != \
        (o2 / "simulate.csv").read_bytes()
