import json

from core.config import get_resource_path
from main import EXIT_CONFIG_ERROR, EXIT_FAILED, EXIT_OK, ConsolePrinter, main


def test_spectrum_command(tmp_path):
    out = tmp_path / "spectrum"
    assert main(["spectrum", "--seed", "3", "--out", str(out), "--quiet"]) == EXIT_OK
    assert (out / "summary.json").exists()
    assert (out / "traces" / "spectrum.csv").exists()


def test_missing_seed_is_config_error(tmp_path):
    assert main(["ground", "--out", str(tmp_path), "--quiet"]) == EXIT_CONFIG_ERROR


def test_missing_config_file(tmp_path):
    assert main(["ground", "--config", str(tmp_path / "nope.hjson"), "--seed", "1"]) == EXIT_CONFIG_ERROR


def test_shipped_ipea_experiment(tmp_path):
    config = str(get_resource_path("resources/experiments/ipea_exciton.hjson"))
    assert main(["ipea", "--config", config, "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    with open(tmp_path / "summary.json", encoding="utf-8") as f:
        assert json.load(f)["result"]["bits_match"] is True


def test_failed_run_exit_code(tmp_path):
    path = tmp_path / "bad_ipea.hjson"
    path.write_text("{\n  ipea: {\n    eigenstate_index: 9\n  }\n}\n", encoding="utf-8")
    assert main(["ipea", "--config", str(path), "--seed", "1", "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_FAILED


def test_validate_hamiltonian(capsys):
    path = str(get_resource_path("resources/hamiltonians/exciton.txt"))
    assert main(["validate", "--hamiltonian", path, "--quiet"]) == EXIT_OK
    output = capsys.readouterr().out
    report = json.loads(output[output.index("{"):])
    assert report["hamiltonian"]["qubits"] == 1


def test_validate_rejects_bad_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("qubits 1\n1.0 X3\n", encoding="utf-8")
    assert main(["validate", "--hamiltonian", str(path), "--quiet"]) == EXIT_CONFIG_ERROR


def test_validate_needs_an_input():
    assert main(["validate", "--quiet"]) == EXIT_CONFIG_ERROR


def test_validate_config():
    config = str(get_resource_path("resources/experiments/rfpe_two_eigenvalues.hjson"))
    assert main(["validate", "--config", config, "--mode", "rfpe", "--quiet"]) == EXIT_OK


def test_printer_routes_levels(capsys):
    printer = ConsolePrinter(quiet=True)
    printer.on_log_message("INFO", "hidden", {})
    printer.on_log_message("DEBUG", "hidden", {})
    printer.on_log_message("WARNING", "careful", {"k": 1})
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "careful (k=1)" in captured.err
