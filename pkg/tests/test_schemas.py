"""
Tests de validación de instancias, RunConfig y corpus con nombre
"""
from fractions import Fraction

import pytest

from app.core.errors import InstanceParseError
from app.core.instances import get_instance, list_instances
from app.core.schemas import build_instance, build_run_config
from app.services.report_service import jsonable, run_id


def test_instance_fills_shape_and_parses_tokens():
    """m y n se deducen de la matriz"""
    spec = build_instance(matrix=[["sqrt(2)", "1/3"]], weights_r="1/4,3/4")
    assert (spec.m, spec.n) == (1, 2)
    A = spec.target()
    assert A.entry(0, 1).exact == Fraction(1, 3)
    s, r = spec.weights()
    assert r.weights == (Fraction(1, 4), Fraction(3, 4))


def test_instance_rejects_bad_input():
    """Token desconocido, matriz irregular, forma declarada falsa y pesos que no suman 1"""
    with pytest.raises(InstanceParseError):
        build_instance(matrix=[["foo(2)"]])
    with pytest.raises(InstanceParseError):
        build_instance(matrix=[["1", "2"], ["3"]])
    with pytest.raises(InstanceParseError):
        build_instance(matrix=[["phi"]], m=2)
    with pytest.raises(InstanceParseError):
        build_instance(matrix=[["phi", "phi"]], weights_r="1/2,1/3")


def test_zero_theta_is_homogeneous():
    """theta = ["zero"] equivale a no desplazar"""
    assert build_instance(matrix=[["phi"]], theta=["zero"]).theta_values() is None
    assert build_instance(matrix=[["phi"]], theta=["1/3"]).theta_values()[0].exact == Fraction(1, 3)


def test_provenance_records_named_constants():
    """Cada constante con nombre queda registrada con su aproximación"""
    records = get_instance("cubic_pair").provenance()
    assert [r["token"] for r in records] == ["root(2,3)", "root(4,3)"]
    assert all(r["kind"] == "named" for r in records)
    assert records[0]["approx"].startswith("1.2599")


def test_named_corpus_and_aliases():
    """Instancias con nombre y alias"""
    assert {"phi", "sqrt2", "sqrt3", "half", "liouville"} <= set(list_instances())
    assert get_instance("golden").name == "phi"
    assert get_instance("sqrt(2)").matrix == [["sqrt(2)"]]
    with pytest.raises(InstanceParseError):
        get_instance("pi")


def test_run_config_grid_validation():
    """La malla debe cumplir 1 < tmin < tmax y razón > 1"""
    with pytest.raises(InstanceParseError):
        build_run_config(command="exponents", tmin="1", tmax="100")
    with pytest.raises(InstanceParseError):
        build_run_config(command="exponents", tmax="abc")
    with pytest.raises(InstanceParseError):
        build_run_config(command="exponents", budget=0)


def test_run_id_ignores_output_directory():
    """El run id depende de la configuración canónica, no de --out"""
    first = build_run_config(command="dyson", out="/tmp/a", tmax="4096", options={"m": 2, "n": 2})
    second = build_run_config(command="dyson", out="/tmp/b", tmax="4096.0", options={"m": 2, "n": 2})
    assert first.canonical() == second.canonical()
    assert run_id(first.canonical()) == run_id(second.canonical())
    third = build_run_config(command="dyson", seed=1, tmax="4096", options={"m": 2, "n": 2})
    assert run_id(third.canonical()) != run_id(first.canonical())


def test_jsonable_handles_special_values():
    """inf, Fraction y tuplas se serializan de forma estable"""
    assert jsonable({"a": float("inf"), "b": Fraction(7, 5), "c": (1, 2)}) == {"a": "inf", "b": "7/5", "c": [1, 2]}
