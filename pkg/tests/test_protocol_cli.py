import json
import sys
from pathlib import Path

import pytest
import yaml

from apparent_loci.errors import CurveError, InputError
from apparent_loci.kernel import Poly
from apparent_loci.main import load_fuzz_config, main
from apparent_loci.places import INFINITY, Affine, Closed
from apparent_loci.protocol import (
    CertificateModel,
    TrivializeInput,
    certificate_from_model,
    certificate_to_model,
    instance_frame,
    parse_document,
    place_from_model,
    place_to_model,
    read_document,
)
from apparent_loci.trivializer import Check, VerificationReport, trivialize, verify_certificate

INSTANCES = Path(__file__).parent.parent / "instances"


@pytest.fixture
def settings(tmp_path):
    path = tmp_path / "settings.yaml"
    config = {
        "paths": {"output_dir": str(tmp_path / "out")},
        "plugins": {"output": {"certificate": {"enabled": True}, "report": {"enabled": True}}},
        "logging": {"level": "WARNING"},
    }
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return str(path)


def run_cli(monkeypatch, *argv):
    monkeypatch.setattr(sys, "argv", ["apparent-loci", *argv])
    with pytest.raises(SystemExit) as info:
        main()
    return info.value.code


# -- documents ------------------------------------------------------------------


def test_certificate_round_trip(demo_frame):
    cert = trivialize(demo_frame)
    model = certificate_to_model(cert, verify_certificate(cert), name="demo")
    assert model.passed
    again = CertificateModel.model_validate_json(model.model_dump_json())
    assert again == model
    restored = certificate_from_model(again)
    assert restored == cert
    assert verify_certificate(restored).passed


def test_place_models(g1):
    branch = Closed(Poly.x() ** 2 + 2 * Poly.x() + 4, Poly([-3]), 2)
    for place in (INFINITY, Affine(2, -3), branch):
        assert place_from_model(g1, place_to_model(place)) == place


def test_invalid_json_reports_line_and_column():
    with pytest.raises(InputError) as info:
        parse_document('{\n  "curve": [1, 0, 0, 1],\n  "p": 2,,\n}', TrivializeInput)
    assert info.value.line == 3
    assert info.value.column is not None


def test_schema_errors_are_input_errors():
    with pytest.raises(InputError):
        parse_document('{"curve": [1, 0, 0, 1]}', TrivializeInput)


def test_bad_curve_is_refused():
    doc = parse_document('{"curve": [1, 0, 0, 0, 1], "p": 1, "frame": [[{"a": "1"}]]}', TrivializeInput)
    with pytest.raises(CurveError):
        instance_frame(doc)


def test_frame_shape_must_match_p():
    doc = parse_document('{"curve": [1, 0, 0, 1], "p": 2, "frame": [[{"a": "1"}]]}', TrivializeInput)
    with pytest.raises(InputError):
        instance_frame(doc)


def test_instance_files_load():
    demo = read_document(INSTANCES / "demo_p2_g1.json", TrivializeInput)
    frame = instance_frame(demo)
    assert frame.rank == 2 and frame.width == 2
    assert demo.basepoint.kind == "infinity"


# -- command line ---------------------------------------------------------------


def test_rr_command(monkeypatch, settings, capsys):
    assert run_cli(monkeypatch, "rr", str(INSTANCES / "rr_3inf.json"), "--config", settings) == 0
    assert "dimension 3" in capsys.readouterr().out


def test_div_command(monkeypatch, settings, tmp_path, capsys):
    result = tmp_path / "div.json"
    code = run_cli(monkeypatch, "div", str(INSTANCES / "div_sample.json"), "--config", settings, "--output", str(result))
    assert code == 0
    assert "3*(0,1) - 3*inf" in capsys.readouterr().out
    entries = json.loads(result.read_text())["entries"]
    assert [e["degree"] for e in entries] == [0, 0, 0]


def test_trivialize_writes_certificate_and_report(monkeypatch, settings, tmp_path):
    cert_path = tmp_path / "demo.cert.json"
    code = run_cli(
        monkeypatch, "trivialize", str(INSTANCES / "demo_p2_g1.json"), "--config", settings, "-o", str(cert_path)
    )
    assert code == 0
    model = read_document(cert_path, CertificateModel)
    assert model.passed and model.count <= model.bound
    assert (tmp_path / "out" / "demo_p2_g1.report.md").exists()


def test_dry_run_writes_nothing(monkeypatch, settings, tmp_path):
    cert_path = tmp_path / "dry.cert.json"
    code = run_cli(
        monkeypatch,
        "trivialize",
        str(INSTANCES / "identity_p2_g1.json"),
        "--config",
        settings,
        "-o",
        str(cert_path),
        "--dry-run",
    )
    assert code == 0
    assert not cert_path.exists()
    assert not (tmp_path / "out").exists()


def test_gauge_command(monkeypatch, settings, tmp_path, capsys):
    cert_path = tmp_path / "demo.cert.json"
    run_cli(monkeypatch, "trivialize", str(INSTANCES / "demo_p2_g1.json"), "--config", settings, "-o", str(cert_path))
    capsys.readouterr()
    code = run_cli(monkeypatch, "gauge", str(INSTANCES / "system_zero_p2_g1.json"), str(cert_path), "--config", settings)
    assert code == 0
    out = capsys.readouterr().out
    assert "contained:" in out
    assert "unchecked:" in out


def test_exit_code_for_malformed_input(monkeypatch, settings, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"curve": [1, 0, 0, 1], "p": 2,', encoding="utf-8")
    assert run_cli(monkeypatch, "trivialize", str(broken), "--config", settings) == 2


def test_exit_code_for_irrational_locus(monkeypatch, settings):
    assert run_cli(monkeypatch, "trivialize", str(INSTANCES / "irrational_p2_g1.json"), "--config", settings) == 3


def test_exit_code_for_singular_frame(monkeypatch, settings):
    assert run_cli(monkeypatch, "trivialize", str(INSTANCES / "singular_p2_g1.json"), "--config", settings) == 4


def test_exit_code_for_failed_verification(monkeypatch, settings):
    failing = VerificationReport((Check("span", False, "forced"),))
    monkeypatch.setattr("apparent_loci.engine.verify_certificate", lambda cert, frame: failing)
    assert run_cli(monkeypatch, "trivialize", str(INSTANCES / "identity_p2_g1.json"), "--config", settings) == 5


# -- fuzz configs ---------------------------------------------------------------


def test_empty_fuzz_run(monkeypatch, settings, tmp_path, capsys):
    monkeypatch.delenv("APPARENT_LOCI_SEED", raising=False)
    config = tmp_path / "fuzz.yaml"
    config.write_text(yaml.safe_dump({"curves": [[1, 0, 0, 1]], "ps": [2], "count": 0}), encoding="utf-8")
    result = tmp_path / "fuzz.json"
    assert run_cli(monkeypatch, "fuzz", str(config), "--config", settings, "--output", str(result)) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "fuzz summary (seed 1)"
    assert len(out.splitlines()) == 2
    assert json.loads(result.read_text())["rows"] == []
    assert result.with_suffix(".txt").exists()


def test_seed_override_from_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("APPARENT_LOCI_SEED", raising=False)
    config = tmp_path / "fuzz.yaml"
    config.write_text(yaml.safe_dump({"curves": [[1, 0, 0, 1]], "ps": [1], "count": 1, "seed": 3}), encoding="utf-8")
    assert load_fuzz_config(str(config)).seed == 3
    monkeypatch.setenv("APPARENT_LOCI_SEED", "17")
    assert load_fuzz_config(str(config)).seed == 17
    monkeypatch.setenv("APPARENT_LOCI_SEED", "seventeen")
    with pytest.raises(InputError):
        load_fuzz_config(str(config))


def test_invalid_fuzz_yaml_has_a_location(tmp_path):
    config = tmp_path / "fuzz.yaml"
    config.write_text("curves: [[1, 0, 0, 1]\nps: [1]\n", encoding="utf-8")
    with pytest.raises(InputError) as info:
        load_fuzz_config(str(config))
    assert info.value.line is not None


def test_seed_falls_back_to_the_global_config(monkeypatch, tmp_path):
    monkeypatch.delenv("APPARENT_LOCI_SEED", raising=False)
    config = tmp_path / "fuzz.yaml"
    config.write_text(yaml.safe_dump({"curves": [[1, 0, 0, 1]], "ps": [1], "count": 1}), encoding="utf-8")
    settings = {"fuzz": {"seed": 42}}
    assert load_fuzz_config(str(config)).seed == 1
    assert load_fuzz_config(str(config), settings).seed == 42
    config.write_text(yaml.safe_dump({"curves": [[1, 0, 0, 1]], "ps": [1], "count": 1, "seed": 3}), encoding="utf-8")
    assert load_fuzz_config(str(config), settings).seed == 3
    monkeypatch.setenv("APPARENT_LOCI_SEED", "17")
    assert load_fuzz_config(str(config), settings).seed == 17


def test_fuzz_run_reads_the_global_seed(monkeypatch, settings, tmp_path, capsys):
    monkeypatch.delenv("APPARENT_LOCI_SEED", raising=False)
    data = yaml.safe_load(Path(settings).read_text(encoding="utf-8"))
    data["fuzz"] = {"seed": 9}
    Path(settings).write_text(yaml.safe_dump(data), encoding="utf-8")
    config = tmp_path / "fuzz.yaml"
    config.write_text(yaml.safe_dump({"curves": [[1, 0, 0, 1]], "ps": [2], "count": 0}), encoding="utf-8")
    result = tmp_path / "fuzz.json"
    assert run_cli(monkeypatch, "fuzz", str(config), "--config", settings, "--output", str(result)) == 0
    assert capsys.readouterr().out.splitlines()[0] == "fuzz summary (seed 9)"
