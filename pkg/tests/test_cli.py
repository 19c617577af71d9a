"""Tests for the config-driven command line: validation, runs, sidecars and exit codes."""

import json

import numpy as np
import pytest

from opendyn.cli import RunService, apply_overrides, coupling_from_string, load_config
from opendyn.cli.outputs import read_csv
from opendyn.config import CONFIG_DIR
from opendyn.errors import ConfigError, EXIT_CONFIG, EXIT_OK, EXIT_POSITIVITY, PositivityAbort, SolverError
from opendyn.main import main
from opendyn.ode import OdeSolution
from opendyn.operators import pauli_string


def write_config(directory, document, name="config.json"):
    path = directory / name
    path.write_text(json.dumps(document))
    return path


def rabi_document(**solver):
    return {
        "problem": {
            "n_qubits": 1,
            "t_f": 20.0,
            "hamiltonian": [{"builder": "pauli_sum", "paulis": [f"{1 / (4 * np.pi)!r}X"]}],
            "initial_state": {"kind": "basis", "bits": "0"},
        },
        "solver": {"name": "schrodinger", "reltol": 1e-10, "abstol": 1e-12, **solver},
        "output": {"prefix": "rabi", "observables": ["Z"], "populations": True},
    }


def error_response(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


# ============================================
# CONFIG HANDLING
# ============================================

class TestConfig:
    def test_example_configs_validate(self):
        for path in sorted(CONFIG_DIR.glob("*.json")):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        doc = rabi_document()
        doc["solver"]["tolerance"] = 1e-6
        with pytest.raises(ConfigError) as info:
            load_config(write_config(tmp_path, doc))
        assert info.value.details["errors"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_bath_solver_needs_a_bath(self, tmp_path):
        doc = rabi_document()
        doc["solver"]["name"] = "ame"
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, doc))

    def test_overrides_apply_to_ensembles_only(self, tmp_path):
        config = load_config(CONFIG_DIR / "rtn_dephasing.json")
        updated = apply_overrides(config, seed=3, workers=2)
        assert updated.ensemble.seed == 3
        assert updated.ensemble.workers == 2
        with pytest.raises(ConfigError):
            apply_overrides(config, seed=-1)
        rabi = load_config(write_config(tmp_path, rabi_document()))
        assert apply_overrides(rabi, seed=3) is rabi

    def test_coupling_strings(self):
        np.testing.assert_allclose(
            coupling_from_string("10ZII", 3),
            10 * np.kron(np.kron(pauli_string("Z"), np.eye(2)), np.eye(2)),
        )
        with pytest.raises(ValueError):
            coupling_from_string("ZI", 3)
        with pytest.raises(ValueError):
            coupling_from_string("2Q", 1)


# ============================================
# COMMAND LINE
# ============================================

class TestMain:
    def test_rabi_run_writes_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "out"
        code = main(["run", str(CONFIG_DIR / "rabi_schrodinger.json"), "--output-dir", str(out)])
        assert code == EXIT_OK
        header, rows = read_csv(out / "rabi.csv")
        assert header == ["t", "<Z>", "P_0", "P_1"]
        assert len(rows) == 201
        data = np.array(rows)
        assert np.max(np.abs(data[:, 3] - np.sin(data[:, 0] / 2) ** 2)) < 1e-6
        np.testing.assert_allclose(data[:, 1], data[:, 2] - data[:, 3], atol=1e-12)

        sidecar = json.loads((out / "rabi.json").read_text())
        assert sidecar["solver"] == "schrodinger"
        assert sidecar["solution"]["status"] == "success"
        assert sidecar["rows"] == 201
        assert sidecar["files"]["csv"] == "rabi.csv"
        assert sidecar["traces"]

    def test_unknown_solver_exits_without_files(self, tmp_path, capsys):
        doc = rabi_document()
        doc["solver"]["name"] = "magic"
        out = tmp_path / "out"
        code = main(["run", str(write_config(tmp_path, doc)), "--output-dir", str(out)])
        assert code == EXIT_CONFIG
        assert not out.exists()
        response = error_response(capsys)
        assert response["error_code"] == "config_error"
        assert response["success"] is False

    def test_single_save_point(self, tmp_path):
        out = tmp_path / "out"
        code = main(["run", str(write_config(tmp_path, rabi_document(save_points=1))), "--output-dir", str(out)])
        assert code == EXIT_OK
        _, rows = read_csv(out / "rabi.csv")
        assert len(rows) == 1
        assert rows[0][0] == 20.0

    def test_validate_writes_nothing(self, tmp_path):
        code = main(["validate", str(write_config(tmp_path, rabi_document())), "--output-dir", str(tmp_path / "out")])
        assert code == EXIT_OK
        assert not (tmp_path / "out").exists()

    def test_argument_errors_exit_two(self):
        with pytest.raises(SystemExit) as info:
            main(["run"])
        assert info.value.code == EXIT_CONFIG

    def test_lindblad_damping_config(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(CONFIG_DIR / "lindblad_damping.json"), "--output-dir", str(out)]) == EXIT_OK
        header, rows = read_csv(out / "damping.csv")
        data = np.array(rows)
        p1 = data[:, header.index("P_1")]
        np.testing.assert_allclose(p1, np.exp(-0.1 * data[:, 0]), rtol=1e-6)

    def test_sidecar_replays_bit_identically(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(CONFIG_DIR / "rabi_schrodinger.json"), "--output-dir", str(first)]) == EXIT_OK
        replay = json.loads((first / "rabi.json").read_text())["config"]
        path = write_config(tmp_path, replay, "replay.json")
        assert main(["run", str(path), "--output-dir", str(second)]) == EXIT_OK
        assert (first / "rabi.csv").read_bytes() == (second / "rabi.csv").read_bytes()

    def test_ensemble_sidecar_records_the_seed(self, tmp_path):
        doc = {
            "problem": {
                "n_qubits": 1,
                "t_f": 5.0,
                "hamiltonian": [{"builder": "pauli_sum", "paulis": ["Z"], "schedule": {"kind": "constant", "value": 0.0}}],
                "initial_state": {"kind": "plus"},
            },
            "solver": {"name": "stochastic_schrodinger", "save_points": 11},
            "ensemble": {"trajectories": 12, "workers": 2, "fluctuators": [{"operator": "Z", "b": 0.3, "gamma": 1.0}]},
            "output": {"prefix": "rtn", "observables": ["X"]},
        }
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(write_config(tmp_path, doc)), "--output-dir", str(first)]) == EXIT_OK
        sidecar = json.loads((first / "rtn.json").read_text())
        seed = sidecar["seeds"]["ensemble"]
        assert sidecar["config"]["ensemble"]["seed"] == seed
        path = write_config(tmp_path, sidecar["config"], "replay.json")
        assert main(["run", str(path), "--output-dir", str(second), "--workers", "1"]) == EXIT_OK
        assert (first / "rtn.csv").read_bytes() == (second / "rtn.csv").read_bytes()
        header, _ = read_csv(first / "rtn.csv")
        assert header == ["t", "<X>", "<X>_stderr"]

    def test_redfield_with_sampled_correlation_file(self, tmp_path):
        tau = np.linspace(0.0, 20.0, 1001)
        lines = ["# tau[ns],re,im"] + [f"{t!r},{1e-4 * np.exp(-t)!r},0.0" for t in tau]
        corr = tmp_path / "corr.csv"
        corr.write_text("\n".join(lines) + "\n")
        doc = rabi_document(name="redfield", reltol=1e-6, abstol=1e-8, positivity="off", save_points=6)
        doc["problem"]["t_f"] = 5.0
        doc["bath"] = {"type": "custom", "path": str(corr)}
        doc["couplings"] = {"operators": ["Z"], "unit": "h"}
        out = tmp_path / "out"
        assert main(["run", str(write_config(tmp_path, doc)), "--output-dir", str(out)]) == EXIT_OK
        diagnostics = json.loads((out / "rabi.json").read_text())["diagnostics"]
        assert "error" not in diagnostics
        assert diagnostics["timescales"]["tau_sb"] == pytest.approx(1e4, rel=1e-4)

    @pytest.mark.slow
    def test_witness_ame_run(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(CONFIG_DIR / "witness_ame.json"), "--output-dir", str(out)]) == EXIT_OK
        header, rows = read_csv(out / "witness_ame.csv")
        data = np.array(rows)
        p111 = data[:, header.index("P_111")]
        z1 = data[:, header.index("<ZII>")]
        assert np.all((p111 >= -1e-8) & (p111 <= 1 + 1e-8))
        assert np.all(np.abs(z1) <= 1 + 1e-8)
        sidecar = json.loads((out / "witness_ame.json").read_text())
        assert "timescales" in sidecar["diagnostics"]

    @pytest.mark.slow
    def test_rate_sweep_writes_rate_and_population_tables(self, tmp_path):
        doc = json.loads((CONFIG_DIR / "witness_rate_sweep.json").read_text())
        del doc["bath"], doc["couplings"]
        doc["problem"]["hamiltonian"][0]["witness"]["tau1"] = 2.0
        doc["solver"] = {"name": "von_neumann"}
        doc["sweep"] = {"h_p": [0.1, 0.2], "tau2": [0.0, 5.0, 10.0, 15.0], "target": "111"}
        out = tmp_path / "out"
        assert main(["rate-sweep", str(write_config(tmp_path, doc)), "--output-dir", str(out)]) == EXIT_OK

        header, rows = read_csv(out / "witness_rates.csv")
        assert header == ["h_p", "gamma", "a", "b", "c", "d", "residual"]
        assert [row[0] for row in rows] == [0.1, 0.2]
        header, rows = read_csv(out / "witness_rates_populations.csv")
        assert header == ["tau2", "P@0.1", "P@0.2"]
        data = np.array(rows)
        np.testing.assert_array_equal(data[:, 0], [0.0, 5.0, 10.0, 15.0])
        assert np.all((data[:, 1:] >= -1e-8) & (data[:, 1:] <= 1 + 1e-8))
        sidecar = json.loads((out / "witness_rates.json").read_text())
        assert len(sidecar["fits"]) == 2
        assert all(fit["status"] in ("ok", "fit") for fit in sidecar["fits"])


class TestFailureMapping:
    def solution(self, status):
        return OdeSolution(t=np.array([0.0, 1.0]), y=np.zeros((2, 4), dtype=complex), shape=(2, 2),
                           tag="matrix", status=status, message=status)

    def test_negative_state_is_a_positivity_abort(self):
        with pytest.raises(PositivityAbort) as info:
            RunService.check(self.solution("negative-state"))
        assert info.value.exit_code == EXIT_POSITIVITY

    def test_other_failures_are_solver_errors(self):
        with pytest.raises(SolverError) as info:
            RunService.check(self.solution("max-steps"))
        assert not isinstance(info.value, PositivityAbort)

    def test_success_passes(self):
        RunService.check(self.solution("success"))
