import csv
import io
import json

import pytest

from ctxcomm.cli import ConfigError, ExperimentConfig, KINDS, build_params, main, make_config
from ctxcomm.cli import build_parser


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_distance_of_equal_functions_is_zero(capsys):
    code, out = _run(capsys, "distance", "--set", "same=true", "--trials", "2000")
    assert code == 0
    (row,) = _rows(out.out)
    assert float(row["estimate"]) == 0.0 and row["seed"] == "20240601"


def test_stretch_worked_example_output(capsys):
    code, out = _run(capsys, "run", "--kind", "stretch-figure1")
    assert code == 0
    assert out.out.splitlines() == [
        "sigma: (3, 4, 7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21)",
        "phi: (3, 4, 7, 8, 9, 10, 13, 14, 19, 20, 21)",
        "psi: (7, 8, 9, 10, 13, 14, 17, 18, 19, 20, 21)",
    ]


def test_csv_columns_are_fixed(capsys):
    _, out = _run(capsys, "stability", "--trials", "1000", "--seed", "5")
    header = out.out.splitlines()[0].split(",")
    assert header[0] == "experiment_id"
    assert header[-6:] == ["trials", "estimate", "stderr", "ci95_lo", "ci95_hi", "seed"]
    row = _rows(out.out)[0]
    assert float(row["ci95_lo"]) <= float(row["estimate"]) <= float(row["ci95_hi"])


@pytest.mark.parametrize("argv", [
    ("distance", "--trials", "3000", "--set", "ell=60", "--set", "removed=5"),
    ("distance", "--trials", "3000", "--set", "family=\"subset-parity\"", "--set", "k=9",
     "--set", "n=16"),
    ("stability", "--trials", "50000"),
    ("sheppard", "--trials", "50000"),
    ("shift-game", "--trials", "3"),
    ("berry-esseen", "--trials", "100000"),
])
def test_reruns_are_byte_identical(tmp_path, capsys, argv):
    texts = []
    for i, workers in enumerate(("1", "1", "3")):
        out = tmp_path / str(i)
        assert main([*argv, "--seed", "77", "--workers", workers, "--out", str(out)]) == 0
        texts.append((out / f"{argv[0]}.csv").read_bytes())
    capsys.readouterr()
    assert texts[0] == texts[1] == texts[2]


def test_json_report_echoes_config(tmp_path, capsys):
    assert main(["sheppard", "--trials", "1000", "--seed", "3", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    doc = json.loads((tmp_path / "sheppard.json").read_text())
    assert doc["master_seed"] == 3 and doc["kind"] == "sheppard"
    (rep,) = doc["reports"]
    assert rep["trials"] == 1000 and rep["wall_clock"] >= 0


def test_config_file_round_trip(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "stability", "params": {"k": 1, "rho": 0.25},
                                "trials": 20000, "master_seed": 9}))
    code, out = _run(capsys, "run", "--config", str(path))
    assert code == 0
    row = _rows(out.out)[0]
    assert row["k"] == "1" and row["rho"] == "0.25" and row["seed"] == "9"


def test_unknown_keys_are_config_errors(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "stability", "colour": "blue"}))
    assert _run(capsys, "run", "--config", str(path))[0] == 2
    assert _run(capsys, "stability", "--set", "colour=1")[0] == 2
    assert _run(capsys, "stability", "--set", "rho=2.0")[0] == 2
    assert _run(capsys, "run")[0] == 2
    assert _run(capsys, "no-such-kind")[0] == 2
    assert _run(capsys, "suite", "no-such-suite")[0] == 2


def test_params_are_validated_before_running():
    with pytest.raises(ConfigError):
        build_params("gip", {"rho": 0.0})
    with pytest.raises(ConfigError):
        build_params("stability", {"k": "three"})
    assert set(KINDS) >= {"distance", "stability", "gip", "isr-protocol", "set-recovery",
                          "shift-game", "chromatic", "closeness", "info-cost", "berry-esseen",
                          "bruteforce", "suite"}


def test_make_config_uses_defaults():
    args = build_parser().parse_args(["chromatic"])
    cfg = make_config("chromatic", args)
    assert isinstance(cfg, ExperimentConfig) and cfg.master_seed == 20240601
    assert cfg.worker_count == 1


@pytest.mark.parametrize("argv", [
    ("chromatic",), ("closeness",), ("info-cost",), ("bruteforce",),
    ("gip", "--trials", "2", "--set", "d=64"), ("isr-protocol", "--trials", "5"),
    ("set-recovery", "--trials", "20"),
])
def test_every_kind_runs(capsys, argv):
    code, out = _run(capsys, *argv)
    assert code == 0
    assert len(_rows(out.out)) >= 1


def test_invariants_suite_passes(capsys):
    code, out = _run(capsys, "suite", "invariants")
    assert code == 0
    assert out.out and all(line.startswith("PASS") for line in out.out.splitlines())


def test_calibration_suite_is_deterministic(tmp_path, capsys):
    texts = []
    for i in range(2):
        assert main(["suite", "calibration", "--out", str(tmp_path / str(i))]) == 0
        texts.append((tmp_path / str(i) / "sheppard_calibration.txt").read_text())
    capsys.readouterr()
    assert texts[0] == texts[1]
    assert texts[0].startswith("# ctxcomm-calibration v1")


def test_acceptance_suite_reports_check_failure(capsys):
    # the Hamming-threshold identity is the one criterion that does not hold
    code, out = _run(capsys, "suite", "acceptance", "--fast", "--set", "criteria=[1, 11]")
    lines = out.out.splitlines()
    assert code == 3
    assert any(line.startswith("PASS [1]") for line in lines)
    assert any(line.startswith("FAIL [11]") for line in lines)
