import json
from fractions import Fraction

import pytest

from dyadic_cz.backend_utils.czd import czd
from dyadic_cz.backend_utils.czd_verification import verify_czd
from dyadic_cz.backend_utils.errors import InputFormatError
from dyadic_cz.backend_utils.file_handlers import (
    FileHandlerFactory,
    JSONArtifactHandler,
    MeasureFileHandler,
    ReportFileHandler,
    dump_artifact,
    write_artifact,
)


SIGNED = {
    "dimension": 1,
    "growth_dim": "1",
    "points": [
        {"x": ["0"], "mass": "1", "f": "3"},
        {"x": ["1/2"], "mass": "2", "f": "-1/2"},
        {"x": ["5"], "mass": "1"},
    ],
}


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return path


def test_factory_kinds():
    assert isinstance(FileHandlerFactory.get_file_handler("measure"), MeasureFileHandler)
    assert isinstance(FileHandlerFactory.get_file_handler("report"), ReportFileHandler)
    assert isinstance(FileHandlerFactory.get_file_handler("json"), JSONArtifactHandler)
    with pytest.raises(InputFormatError):
        FileHandlerFactory.get_file_handler("pdf")


def test_read_measure(tmp_path, three_atoms):
    path = _write(tmp_path, "mu.json", three_atoms.to_json())
    assert MeasureFileHandler().read_file(path) == three_atoms


def test_missing_density_defaults_to_zero(tmp_path):
    positive, negative = MeasureFileHandler().read_signed(_write(tmp_path, "mu.json", SIGNED))
    assert positive.densities == [3, 0, 0]
    assert negative.densities == [0, Fraction(1, 2), 0]
    assert positive.masses == negative.masses == [1, 2, 1]


def test_signed_density_refused_by_plain_reader(tmp_path):
    with pytest.raises(InputFormatError):
        MeasureFileHandler().read_file(_write(tmp_path, "mu.json", SIGNED))


@pytest.mark.parametrize("payload", ["{not json", json.dumps({"dimension": 1}), json.dumps({"dimension": 1, "growth_dim": "1", "points": [{"x": ["0"], "mass": 0.5}]})])
def test_malformed_measure_files(tmp_path, payload):
    with pytest.raises(InputFormatError):
        MeasureFileHandler().read_file(_write(tmp_path, "bad.json", payload))


def test_missing_file(tmp_path):
    with pytest.raises(InputFormatError):
        MeasureFileHandler().read_file(tmp_path / "absent.json")


def test_report_round_trip(tmp_path, three_atoms, line):
    dec = czd(three_atoms, line, Fraction(4))
    path = tmp_path / "report.json"
    write_artifact(path, {"measure": three_atoms.to_json(), "decomposition": dec.to_json()})
    parts = ReportFileHandler().read_file(path)
    assert list(parts) == ["f"]
    mu, family, again = parts["f"]
    assert family == line
    assert verify_czd(mu, family, again).passed


def test_report_with_parts(tmp_path, three_atoms, line):
    part = {"measure": three_atoms.to_json(), "decomposition": czd(three_atoms, line, Fraction(4)).to_json()}
    path = _write(tmp_path, "report.json", {"parts": {"positive": part, "negative": part}})
    assert list(ReportFileHandler().read_file(path)) == ["negative", "positive"]


def test_report_must_match_its_measure(tmp_path, three_atoms, line):
    data = czd(three_atoms, line, Fraction(4)).to_json()
    data["g"] = data["g"][:2]
    path = _write(tmp_path, "report.json", {"measure": three_atoms.to_json(), "decomposition": data})
    with pytest.raises(InputFormatError):
        ReportFileHandler().read_file(path)


def test_artifacts_are_stable(tmp_path):
    assert dump_artifact({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
    path = tmp_path / "out.json"
    write_artifact(path, {"z": "1/3"})
    assert JSONArtifactHandler().read_file(path) == {"z": "1/3"}
