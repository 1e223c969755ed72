"""
Tests de la CLI: códigos de salida, reportes y reproducibilidad byte a byte
"""
import csv
import glob
import json
import os

import pytest

from app.cli import main, split_tokens, split_weight_pair
from app.core.errors import InstanceParseError


def _only(pattern: str) -> str:
    matches = glob.glob(pattern)
    assert len(matches) == 1, matches
    return matches[0]


def _csv_body(path: str):
    with open(path, encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("# ")]
    return list(csv.reader(lines))


def test_dyson_bound_report(tmp_path):
    """dyson --m 2 --n 2 --weights-uniform --omega 3: salida 0 y cota 7/5 en el JSON"""
    code = main(["dyson", "--m", "2", "--n", "2", "--weights-uniform", "--omega", "3",
                 "--out", str(tmp_path), "-q"])
    assert code == 0
    with open(_only(os.path.join(tmp_path, "dyson_*.json")), encoding="utf-8") as f:
        report = json.load(f)
    assert report["command"] == "dyson"
    assert report["result"]["forward"] == "7/5"
    assert report["result"]["classical"] == "7/5"
    assert report["result"]["verdict"] is None
    rows = _csv_body(_only(os.path.join(tmp_path, "dyson_*.csv")))
    assert rows[0] == ["bound", "value"]


def test_bestapprox_phi_csv_lists_fibonacci(tmp_path):
    """bestapprox --instance phi: la columna X es 1, 2, 3, 5, 8, ..."""
    code = main(["bestapprox", "--instance", "phi", "--bound", "100", "--out", str(tmp_path), "-q"])
    assert code == 0
    rows = _csv_body(_only(os.path.join(tmp_path, "bestapprox_*.csv")))
    assert rows[0] == ["k", "X", "Y", "M", "log_Y", "neg_log_M"]
    assert [row[1] for row in rows[1:]] == ["1", "2", "3", "5", "8", "13", "21", "34", "55", "89"]


def test_rational_instance_exits_with_degenerate_rank(tmp_path):
    """bestapprox --instance half: salida 3 y JSON de error"""
    code = main(["bestapprox", "--instance", "half", "--out", str(tmp_path), "-q"])
    assert code == 3
    with open(_only(os.path.join(tmp_path, "bestapprox_*.json")), encoding="utf-8") as f:
        report = json.load(f)
    assert report["result"]["error"]["error"] == "DegenerateRank"
    assert report["result"]["error"]["exit_code"] == 3


def test_unparseable_token_exits_with_two(tmp_path):
    """Un token desconocido en la matriz da salida 2"""
    code = main(["exponents", "--matrix", "foo(2)", "--out", str(tmp_path), "-q"])
    assert code == 2


def test_unknown_instance_exits_with_two(tmp_path):
    """Instancia inexistente"""
    assert main(["exponents", "--instance", "nonexistent", "--out", str(tmp_path), "-q"]) == 2


def test_reports_are_byte_identical_across_runs(tmp_path):
    """El mismo RunConfig produce los mismos bytes en cualquier directorio"""
    args = ["bestapprox", "--instance", "sqrt2", "--bound", "500", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a"), "-q"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "-q"]) == 0
    for ext in ("json", "csv"):
        first = _only(os.path.join(tmp_path, "a", f"bestapprox_*.{ext}"))
        second = _only(os.path.join(tmp_path, "b", f"bestapprox_*.{ext}"))
        assert os.path.basename(first) == os.path.basename(second)
        with open(first, "rb") as f1, open(second, "rb") as f2:
            assert f1.read() == f2.read()


def test_run_id_changes_with_config(tmp_path):
    """Otra semilla, otro run id"""
    base = ["dyson", "--m", "1", "--n", "2", "--omega", "2", "--out", str(tmp_path), "-q"]
    assert main(base + ["--seed", "1"]) == 0
    assert main(base + ["--seed", "2"]) == 0
    assert len(glob.glob(os.path.join(tmp_path, "dyson_*.json"))) == 2


def test_format_json_only(tmp_path):
    """--format json no escribe CSV"""
    assert main(["dyson", "--m", "1", "--n", "1", "--omega", "inf", "--format", "json",
                 "--out", str(tmp_path), "-q"]) == 0
    assert glob.glob(os.path.join(tmp_path, "*.csv")) == []
    with open(_only(os.path.join(tmp_path, "dyson_*.json")), encoding="utf-8") as f:
        assert json.load(f)["result"]["forward"] == "inf"


def test_split_tokens_respects_parentheses():
    """Las comas dentro de paréntesis no separan"""
    assert split_tokens("root(2,3),phi") == ["root(2,3)", "phi"]
    assert split_tokens("sqrt(2);sqrt(3)", ";") == ["sqrt(2)", "sqrt(3)"]
    with pytest.raises(InstanceParseError):
        split_tokens("root(2,3")


def test_split_weight_pair():
    """Presets de pesos "s;r" y "w(s;r)" """
    assert split_weight_pair("w(1/3,2/3;1)") == ("1/3,2/3", "1")
    assert split_weight_pair("uniform") == ("uniform", "uniform")
    with pytest.raises(InstanceParseError):
        split_weight_pair("1/2,1/2")
