import json
import os

import pandas as pd
import pytest

from src.circuit import load_circuit, loads_circuit, save_circuit
from src.cli import main
from src.topology import load_topology, save_topology


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ("RTG_LOG_LEVEL", "RTG_T_2Q", "RTG_P_2Q", "RTG_TELE_TIME_FACTOR", "RTG_TELE_ERROR_FACTOR",
                 "RTG_WORKERS", "RTG_OUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def square_files(tmp_path, square_map, long_cnot):
    topo = tmp_path / "square.json"
    circuit = tmp_path / "long_cnot.json"
    save_topology(square_map, str(topo))
    save_circuit(long_cnot, str(circuit))
    return str(topo), str(circuit)


def _transpile(square_files, out, *extra):
    topo, circuit = square_files
    return main(["--log-level", "ERROR", "transpile", "--circuit", circuit, "--topology", f"file:{topo}",
                 "--out", str(out), *extra])


def test_transpile_writes_artifacts(square_files, tmp_path, capsys):
    out = tmp_path / "run"
    assert _transpile(square_files, out) == 0
    for name in ("original.json", "routed.json", "expanded.json", "layouts.json", "report.json", "run_log.jsonl"):
        assert (out / name).exists(), name

    report = json.loads(capsys.readouterr().out)
    assert report["mode"] == "rtg"
    assert report["virtual_edges"] == [{"endpoints": [0, 2], "aux_path": [3]}]
    assert report["metrics"]["best"]["temporal_depth"] == pytest.approx(3.0)
    assert report["metrics"]["baseline"]["temporal_depth"] == pytest.approx(4.0)
    assert report["depth_reduction_percent"]["temporal"] == pytest.approx(25.0)

    expanded, data = load_circuit(str(out / "expanded.json"))
    assert expanded.num_qubits == 4
    assert data == [0, 1, 2]


def test_transpile_baseline_mode(square_files, tmp_path, capsys):
    assert _transpile(square_files, tmp_path / "base", "--mode", "baseline") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["virtual_edges"] == []
    assert report["metrics"]["best"]["swap_count"] == 1
    assert report["depth_reduction_percent"]["impl"] == 0.0


def test_transpile_strict_filter(square_files, tmp_path, capsys):
    assert _transpile(square_files, tmp_path / "strict", "--strict-filter") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["config"]["shortcut_filter"] is False
    assert report["config"]["reuse_in_router"] is False
    assert report["config"]["router"]["shortcut_distance"] is False
    # the pair itself is required, so the radius rule alone keeps it
    assert report["virtual_edges"] == [{"endpoints": [0, 2], "aux_path": [3]}]


def test_transpile_model_overrides(square_files, tmp_path, capsys):
    assert _transpile(square_files, tmp_path / "model", "--t2q", "2", "--p2q", "0.02") == 0
    model = json.loads(capsys.readouterr().out)["model"]
    assert model["t_tele"] == pytest.approx(6.0)
    assert model["p_tele"] == pytest.approx(0.2)


def test_invalid_model_is_a_config_error(square_files, tmp_path, capsys):
    # p_tele = 10 * 0.2 is not a probability
    assert _transpile(square_files, tmp_path / "bad", "--p2q", "0.2") == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "ConfigError"


def test_verify_expanded_output(square_files, tmp_path, capsys):
    out = tmp_path / "run"
    assert _transpile(square_files, out) == 0
    capsys.readouterr()
    code = main(["--log-level", "ERROR", "verify", "--original", str(out / "original.json"),
                 "--final", str(out / "expanded.json"), "--layouts", str(out / "layouts.json"), "--trials", "5"])
    assert code == 0
    result = json.loads(capsys.readouterr().out)
    assert result["passed"]
    assert result["max_deviation"] < 1e-6


def test_verify_missing_file(square_files, tmp_path):
    out = tmp_path / "run"
    assert _transpile(square_files, out) == 0
    code = main(["verify", "--original", str(out / "original.json"), "--final", str(tmp_path / "nope.json"),
                 "--layouts", str(out / "layouts.json")])
    assert code == 2


def test_generate_and_transpile_qasm(tmp_path, capsys):
    qasm = tmp_path / "ghz.qasm"
    assert main(["generate", "--bench", "GHZ:4", "--format", "qasm2", "--out", str(qasm)]) == 0
    assert qasm.read_text().startswith("OPENQASM 2.0;")
    code = main(["--log-level", "ERROR", "transpile", "--circuit", str(qasm), "--topology", "line:6",
                 "--out", str(tmp_path / "run")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["best"]["swap_count"] == 0


def test_generate_to_stdout(capsys):
    assert main(["generate", "--bench", "QAOAMaxCut:6:1", "--rounds", "2"]) == 0
    circuit, _ = loads_circuit(capsys.readouterr().out)
    assert circuit.num_qubits == 6
    assert sum(1 for g in circuit.gates if g.name == "rzz") == 2 * 9


def test_topology_command(tmp_path):
    path = tmp_path / "line.json"
    assert main(["topology", "--topology", "line:5", "--out", str(path)]) == 0
    cmap = load_topology(str(path))
    assert cmap.num_physical == 5
    assert len(cmap.native_edges) == 4


def test_suite_writes_summary(tmp_path, capsys):
    out = tmp_path / "suite"
    code = main(["--log-level", "ERROR", "suite", "--family", "GHZ", "--sizes", "3-4", "--topology", "line:8",
                 "--layout-start", "0", "--modes", "baseline,rtg", "--seeds", "2", "--out", str(out)])
    assert code == 0
    table = pd.read_csv(out / "summary-GHZ.csv")
    assert len(table) == 4
    assert set(table["mode"]) == {"baseline", "rtg"}
    assert (out / "summary-GHZ.txt").exists()
    assert os.path.isdir(out / "GHZ-3" / "rtg")


def test_suite_rejects_unknown_mode(tmp_path):
    assert main(["suite", "--family", "GHZ", "--sizes", "3", "--modes", "fast", "--out", str(tmp_path)]) == 2


def test_bad_bench_exit_code(capsys):
    assert main(["transpile", "--bench", "FOO:3", "--topology", "line:4"]) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "BenchParameterError"
