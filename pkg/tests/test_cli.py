import json
from pathlib import Path

import numpy as np
import pytest

from choi_sqpt import (
    BackendConfig,
    chi_oracle,
    plan_element,
    preset_channel,
    reconstruct_element,
    save_channel,
)
from choi_sqpt.cli import main


def _run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--output", str(out)])
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return code, report


def test_element_diagonal_bit_flip(tmp_path):
    code, report = _run(
        tmp_path,
        "element", "--preset", "bit-flip", "--param", "0.25",
        "--target", "0,1,0,1", "--backend", "exact",
    )
    assert code == 0
    assert report["results"]["value"] == [pytest.approx(0.25), pytest.approx(0.0)]
    assert report["results"]["std_error"] == 0.0
    assert report["settings"]["plan_settings"] == 1


def test_element_identity_off_diagonal(tmp_path):
    code, report = _run(
        tmp_path,
        "element", "--preset", "identity", "--dim", "2",
        "--target", "0,0,1,1", "--backend", "exact",
    )
    assert code == 0
    assert report["results"]["value"] == [pytest.approx(1.0), pytest.approx(0.0)]
    assert report["settings"]["plan_settings"] == 16


def test_element_sampled_deterministic(tmp_path):
    ch_path = tmp_path / "ch.json"
    save_channel(preset_channel("random-cptp", [8, 2], 2), ch_path)
    argv = [
        "element", "--channel", str(ch_path), "--target", "0,0,1,1",
        "--backend", "sampled", "--shots", "100000", "--seed", "42",
    ]
    code1, rep1 = _run(tmp_path, *argv)
    code2, rep2 = _run(tmp_path, *argv)
    assert code1 == code2 == 0
    assert rep1["results"]["std_error"] > 0
    rep1.pop("duration_seconds")
    rep2.pop("duration_seconds")
    assert rep1 == rep2


def test_element_lambda_indexing(tmp_path):
    # lambda indices a,b,c,d address chi at (c,a,d,b)
    code, report = _run(
        tmp_path,
        "element", "--preset", "amplitude-damping", "--param", "0.3",
        "--target", "1,1,0,0", "--lambda",
    )
    assert code == 0
    assert report["results"]["target"]["chi"] == [0, 1, 0, 1]
    assert report["results"]["value"][0] == pytest.approx(0.3)


def test_element_revalidates_against_library(tmp_path):
    code, report = _run(
        tmp_path,
        "element", "--preset", "random-cptp", "--param", "5", "--param", "2",
        "--dim", "3", "--target", "0,1,2,2",
    )
    assert code == 0
    ch = preset_channel("random-cptp", [5, 2], 3)
    est = reconstruct_element(plan_element(0, 1, 2, 2, 3), ch, BackendConfig())
    assert report["results"]["value"] == [est.value.real, est.value.imag]
    assert report["settings"]["plan_settings"] == est.settings_used


def test_exit_2_on_bad_target(tmp_path):
    code, _ = _run(tmp_path, "element", "--preset", "identity", "--dim", "2",
                   "--target", "0,0,5,0")
    assert code == 2
    code, _ = _run(tmp_path, "element", "--preset", "identity", "--dim", "2",
                   "--target", "0,0")
    assert code == 2


def test_exit_2_on_unknown_preset(tmp_path):
    code, _ = _run(tmp_path, "element", "--preset", "wibble", "--target", "0,0,0,0")
    assert code == 2


def test_exit_2_on_bad_flag():
    assert main(["element", "--nonsense"]) == 2


def test_exit_3_on_unparseable_channel(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    code, _ = _run(tmp_path, "element", "--channel", str(bad), "--target", "0,0,0,0")
    assert code == 3
    code, _ = _run(tmp_path, "element", "--channel", str(tmp_path / "missing.json"),
                   "--target", "0,0,0,0")
    assert code == 3


def test_exit_4_on_tp_shortcut_for_non_tp(tmp_path):
    ch_path = tmp_path / "nontp.json"
    doc = {
        "dim": 2,
        "kraus": [[[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]],
    }
    ch_path.write_text(json.dumps(doc), encoding="utf-8")
    code, _ = _run(tmp_path, "full", "--channel", str(ch_path), "--tp-shortcut")
    assert code == 4


def test_full_identity_matches_oracle(tmp_path):
    code, report = _run(tmp_path, "full", "--preset", "identity", "--dim", "2")
    assert code == 0
    chi = chi_oracle(preset_channel("identity", dim=2))
    entries = np.array(report["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(4, 4)
    assert np.max(np.abs(loaded - chi)) < 1e-12
    assert report["settings"] == {"total": 16, "measured": 16, "inferred": 0}


def test_full_random_cptp_matches_oracle(tmp_path):
    code, report = _run(
        tmp_path,
        "full", "--preset", "random-cptp", "--param", "7", "--param", "4",
        "--dim", "4",
    )
    assert code == 0
    chi = chi_oracle(preset_channel("random-cptp", [7, 4], 4))
    entries = np.array(report["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(16, 16)
    assert np.max(np.abs(loaded - chi)) < 1e-10


def test_full_tp_shortcut_counts(tmp_path):
    code, report = _run(
        tmp_path,
        "full", "--preset", "amplitude-damping", "--param", "0.3", "--tp-shortcut",
    )
    assert code == 0
    assert report["settings"] == {"total": 16, "measured": 12, "inferred": 4}


def test_full_product_hermitian_strategy(tmp_path):
    code, report = _run(
        tmp_path,
        "full", "--preset", "random-cptp", "--param", "9", "--dim", "3",
        "--strategy", "product-hermitian",
    )
    assert code == 0
    chi = chi_oracle(preset_channel("random-cptp", [9], 3))
    entries = np.array(report["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(9, 9)
    assert np.max(np.abs(loaded - chi)) < 1e-10


def test_validate_identity_passes(tmp_path):
    code, report = _run(tmp_path, "validate", "--preset", "identity", "--dim", "2")
    assert code == 0
    assert report["results"]["cptp"] is True
    assert report["results"]["trace_law_delta"] < 1e-10


def test_validate_truncated_kraus_fails(tmp_path):
    ch_path = tmp_path / "nontp.json"
    # lone Kraus block of an amplitude-damping channel: CP but not TP
    doc = {
        "dim": 2,
        "kraus": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.8366600265340756, 0.0]]]],
    }
    ch_path.write_text(json.dumps(doc), encoding="utf-8")
    code, report = _run(tmp_path, "validate", "--channel", str(ch_path))
    assert code == 4
    assert report["results"]["trace_preserving"] is False
    assert "min_chi_eigenvalue" in report["results"]


def test_plan_counts(tmp_path):
    code, report = _run(tmp_path, "plan", "--dim", "3", "--target", "0,0,0,0")
    assert code == 0
    assert report["settings"]["plan_settings"] == 1
    code, report = _run(tmp_path, "plan", "--dim", "3", "--target", "0,1,2,0")
    assert code == 0
    assert report["settings"]["plan_settings"] == 16
    code, report = _run(tmp_path, "plan", "--dim", "3", "--target", "0,1,0,2")
    assert code == 0
    assert report["settings"]["plan_settings"] == 4
    assert len(report["results"]["terms"]) == 4


def test_plan_requires_dim_or_channel(tmp_path):
    code, _ = _run(tmp_path, "plan", "--target", "0,0,0,0")
    assert code == 2


def test_convert_round_trip(tmp_path):
    code, report = _run(
        tmp_path, "convert", "--preset", "bit-flip", "--param", "0.25", "--to", "pauli"
    )
    assert code == 0
    assert report["results"]["chi"]["convention"] == "pauli-row-ixyz"
    entries = np.array(report["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(4, 4)
    np.testing.assert_allclose(loaded, np.diag([0.75, 0.25, 0, 0]), atol=1e-12)

    pauli_path = tmp_path / "pauli.json"
    pauli_path.write_text(json.dumps(report["results"]["chi"]), encoding="utf-8")
    code, back = _run(tmp_path, "convert", "--chi", str(pauli_path), "--to", "choi")
    assert code == 0
    entries = np.array(back["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(4, 4)
    chi = chi_oracle(preset_channel("bit-flip", [0.25]))
    assert np.max(np.abs(loaded - chi)) < 1e-12


def test_convert_rejects_odd_dimension(tmp_path):
    code, _ = _run(tmp_path, "convert", "--preset", "random-cptp", "--param", "3",
                   "--dim", "3", "--to", "pauli")
    assert code == 2


def test_convert_rejects_wrong_convention(tmp_path):
    code, report = _run(tmp_path, "convert", "--preset", "identity", "--dim", "2")
    pauli_path = tmp_path / "pauli.json"
    pauli_path.write_text(json.dumps(report["results"]["chi"]), encoding="utf-8")
    code, _ = _run(tmp_path, "convert", "--chi", str(pauli_path), "--to", "pauli")
    assert code == 2


def test_seed_env_var(tmp_path, monkeypatch):
    argv = [
        "element", "--preset", "bit-flip", "--param", "0.25",
        "--target", "0,0,1,1", "--backend", "sampled", "--shots", "10000",
    ]
    monkeypatch.setenv("CHOI_SQPT_SEED", "42")
    _, from_env = _run(tmp_path, *argv)
    monkeypatch.delenv("CHOI_SQPT_SEED")
    _, explicit = _run(tmp_path, *(argv + ["--seed", "42"]))
    assert from_env["backend"]["seed"] == 42
    assert from_env["results"]["value"] == explicit["results"]["value"]


def test_reports_are_byte_identical_modulo_duration(tmp_path):
    argv = [
        "full", "--preset", "random-cptp", "--param", "6", "--dim", "2",
        "--backend", "sampled", "--shots", "4096", "--seed", "13",
    ]
    out = tmp_path / "report.json"
    argv = argv + ["--output", str(out)]
    assert main(argv) == 0
    doc1 = json.loads(out.read_text(encoding="utf-8"))
    assert main(argv) == 0
    doc2 = json.loads(out.read_text(encoding="utf-8"))
    doc1["duration_seconds"] = doc2["duration_seconds"] = 0.0
    blob1 = json.dumps(doc1, sort_keys=True)
    blob2 = json.dumps(doc2, sort_keys=True)
    assert blob1 == blob2


def test_golden_report_regenerates_identically(capsys):
    golden_path = Path(__file__).parent / "data" / "golden_full_bit_flip.json"
    golden = golden_path.read_text(encoding="utf-8")
    code = main(["full", "--preset", "bit-flip", "--param", "0.25",
                 "--backend", "exact", "--seed", "0"])
    assert code == 0
    regenerated = json.loads(capsys.readouterr().out)
    regenerated["duration_seconds"] = 0.0
    assert json.dumps(regenerated, sort_keys=True, indent=2) + "\n" == golden
    # and the frozen numbers still agree with the oracle
    chi = chi_oracle(preset_channel("bit-flip", [0.25]))
    entries = np.array(json.loads(golden)["results"]["chi"]["entries"])
    loaded = (entries[:, 0] + 1j * entries[:, 1]).reshape(4, 4)
    assert np.max(np.abs(loaded - chi)) < 1e-12


def test_stdout_json_when_no_output(capsys):
    code = main(["plan", "--dim", "2", "--target", "0,0,0,0"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["settings"]["plan_settings"] == 1


def test_pretty_prints_summary(capsys):
    code = main([
        "element", "--preset", "bit-flip", "--param", "0.25",
        "--target", "0,1,0,1", "--pretty",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "chi[0,1;0,1]" in out
    assert "settings: 1" in out


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.strip()
