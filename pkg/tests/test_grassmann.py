"""
Tests de álgebra exterior, subespacios racionales y exponentes intermedios
"""
import random
from fractions import Fraction

import pytest

from app.core.errors import PreconditionViolation
from app.core.numerics import parse_real
from app.services.exponent_service import ExponentService
from app.services.grassmann_service import (
    GrassmannService,
    embed,
    exterior_map,
    gram_inner,
    norm_squared,
    point_subspace_distance,
    projective_distance,
    split_lifted,
    subspace_from_basis,
    wedge,
    wedge_vectors,
)
from app.services.transference_service import TransferenceService
from app.services.types import GridConfig, LiftedPoint, Multivector, SamplingConfig, Verdict


def _random_vector(rng: random.Random, n: int):
    return [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(n)]


def test_wedge_signs():
    """e_1 ^ e_0 = -e_01 y e_0 ^ e_1 = e_01"""
    e0, e1 = Multivector.basis(3, [0]), Multivector.basis(3, [1])
    assert wedge(e0, e1).coeffs == (1, 0, 0)
    assert wedge(e1, e0).coeffs == (-1, 0, 0)
    assert wedge(e0, e0).is_zero()


def test_wedge_is_anticommutative_and_associative():
    """u ^ v = -(v ^ u) y (u ^ v) ^ w = u ^ (v ^ w)"""
    rng = random.Random(1)
    for _ in range(50):
        u, v, w = (Multivector.vector(_random_vector(rng, 4)) for _ in range(3))
        assert wedge(u, v) == -wedge(v, u)
        assert wedge(wedge(u, v), w) == wedge(u, wedge(v, w))


def test_grade_overflow():
    """Grado j + k > n se rechaza"""
    with pytest.raises(PreconditionViolation):
        wedge(Multivector.basis(2, [0, 1]), Multivector.basis(2, [0]))


def test_gram_determinant_matches_coefficient_norm():
    """|u_1 ^ ... ^ u_k|^2 = det(<u_i, u_j>)"""
    rng = random.Random(2)
    for _ in range(100):
        n = rng.randint(2, 5)
        k = rng.randint(1, n)
        us = [_random_vector(rng, n) for _ in range(k)]
        assert norm_squared(wedge_vectors(us)) == gram_inner(us, us)


def test_pluecker_relation_for_decomposable_bivectors():
    """p01 p23 - p02 p13 + p03 p12 = 0 para u ^ v en R^4"""
    rng = random.Random(3)
    for _ in range(50):
        p01, p02, p03, p12, p13, p23 = wedge_vectors([_random_vector(rng, 4), _random_vector(rng, 4)]).coeffs
        assert p01 * p23 - p02 * p13 + p03 * p12 == 0


def test_projective_distance():
    """d(P, P) = 0, ejes ortogonales a distancia 1 y siempre en [0, 1]"""
    assert float(projective_distance([1, 2, 3], [2, 4, 6])) == 0
    assert float(projective_distance([1, 0], [0, 1])) == pytest.approx(1.0)
    rng = random.Random(4)
    for _ in range(50):
        d = float(projective_distance(_random_vector(rng, 3) + [1], _random_vector(rng, 3) + [1]))
        assert 0 <= d <= 1 + 1e-12
    with pytest.raises(PreconditionViolation):
        projective_distance([0, 0], [1, 0])


def test_subspace_height_and_point_distance():
    """Recta por (1, 0, 0) y (1, 1, 1): Plücker primitivo, altura 1, punto contenido a distancia 0"""
    L = subspace_from_basis([[1, 0, 0], [1, 1, 1]])
    assert L.d == 1
    assert L.pluecker.coeffs == (1, 1, 0)
    assert L.height == 1
    inside = LiftedPoint((Fraction(1, 2), Fraction(1, 2)))
    assert float(point_subspace_distance(inside, L)) == 0
    outside = LiftedPoint((Fraction(1), Fraction(0)))
    assert float(point_subspace_distance(outside, L)) > 0
    with pytest.raises(PreconditionViolation):
        subspace_from_basis([[1, 2, 3], [2, 4, 6]])


def test_split_lifted_recovers_x():
    """X = e_0 ^ Z - Y"""
    rng = random.Random(5)
    for _ in range(30):
        X = Multivector(4, 2, tuple(rng.randint(-5, 5) for _ in range(6)))
        Z, Y = split_lifted(X)
        rebuilt = wedge(Multivector.basis(4, [0]), embed(Z)) - embed(Y)
        assert rebuilt == X


def test_exterior_map_matches_wedge():
    """La matriz de Z -> alpha ^ Z coincide con el producto exterior"""
    alpha = LiftedPoint((Fraction(1, 3), Fraction(-2, 7), Fraction(5, 2)))
    G = exterior_map(alpha, 1)
    rng = random.Random(6)
    for _ in range(20):
        Z = [rng.randint(-4, 4) for _ in range(3)]
        expected = wedge(alpha.as_multivector(lifted=False), Multivector.vector(Z)).coeffs
        assert tuple(x.exact for x in G.apply(Z)) == expected


def test_definition_equivalence_sweep():
    """1000 casos aleatorios con n <= 4 y todo d <= n-1: ninguna desigualdad de comparación falla"""
    result = GrassmannService().equivalence_sweep(count=1000, max_n=4, max_d=3, seed=9)
    assert result["violations"] == []
    assert result["covered"] == [[n, d] for n in range(1, 5) for d in range(n)]


def test_definition_equivalence_with_irrational_point():
    """Las comparaciones valen también con alpha irracional"""
    alpha = (parse_real("sqrt(2)"), parse_real("phi"))
    X = Multivector(3, 2, (3, -1, 2))
    report = GrassmannService().def_equivalence_check(alpha, X)
    assert report.holds


def test_transpose_identity():
    """|beta ^ (alpha ^ gamma)| = |(beta ^ alpha) ^ gamma|"""
    service = GrassmannService()
    alpha = (parse_real("sqrt(2)"), parse_real("sqrt(3)"), Fraction(1, 5))
    for d in (0, 1, 2):
        assert service.transpose_identity_check(alpha, d, trials=100)["mismatches"] == []


def test_collapse_for_a_single_number():
    """Con n = 1 y d = 0 el exponente intermedio es el de aproximación de sqrt(2)"""
    service = GrassmannService(ExponentService(GridConfig(tmax=Fraction(2048))))
    report = service.collapse_check((parse_real("sqrt(2)"),), 0)
    assert report.agrees
    assert report.intermediate.point_estimate == pytest.approx(report.reference.point_estimate, abs=report.tolerance)


def test_collapse_simultaneous_case():
    """n = 2, d = 0: aproximación simultánea de (sqrt(2), sqrt(3)) dentro de la tolerancia de normas"""
    service = GrassmannService(ExponentService(GridConfig(tmax=Fraction(512))))
    report = service.collapse_check((parse_real("sqrt(2)"), parse_real("sqrt(3)")), 0)
    assert report.reference.kind.norm == "weighted"
    assert report.agrees


def test_collapse_dual_case():
    """n = 2, d = n-1: la forma lineal q1 sqrt(2) + q2 sqrt(3) frente a la fila (sqrt(2), sqrt(3))"""
    service = GrassmannService(ExponentService(GridConfig(tmax=Fraction(2048))))
    report = service.collapse_check((parse_real("sqrt(2)"), parse_real("sqrt(3)")), 1)
    assert report.d == 1
    assert report.intermediate.kind.norm == "exterior"
    assert report.reference.kind.norm == "weighted"
    assert report.agrees


@pytest.mark.parametrize("d", [0, 2])
def test_collapse_in_three_dimensions(d):
    """n = 3: d = 0 frente a la aproximación simultánea y d = 2 frente a la forma lineal"""
    service = GrassmannService(ExponentService(GridConfig(tmax=Fraction(4096))))
    alpha = (parse_real("sqrt(2)"), parse_real("sqrt(3)"), parse_real("sqrt(5)"))
    report = service.collapse_check(alpha, d)
    assert report.intermediate.profile and report.reference.profile
    assert report.agrees, f"|{report.difference:.4f}| > {report.tolerance:.4f}"


def test_intermediate_limits():
    """d fuera de [0, n-1], colapso con d intermedio y límites de escritorio"""
    service = GrassmannService(max_dim=3, max_grade=1)
    alpha = (Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))
    with pytest.raises(PreconditionViolation):
        service.intermediate_exponent(alpha, 3)
    with pytest.raises(PreconditionViolation):
        service.intermediate_exponent(alpha, 2)
    with pytest.raises(PreconditionViolation):
        service.collapse_check(alpha, 1)
    with pytest.raises(PreconditionViolation):
        service.intermediate_exponent(alpha, 0, theta=[Fraction(1, 2)])


def test_intermediate_exponent_has_certified_lower_bound():
    """omega_1 de (sqrt(2), sqrt(3)) con testigos exactos"""
    service = GrassmannService(ExponentService(GridConfig(tmax=Fraction(512))))
    estimate = service.intermediate_exponent((parse_real("sqrt(2)"), parse_real("sqrt(3)")), 1)
    assert estimate.kind.norm == "exterior"
    assert estimate.profile
    assert float(estimate.lower_bound) <= estimate.point_estimate


def test_intermediate_transfer_check():
    """omega_0(alpha, theta) >= 1/omega_hat_0(alpha) para n = 1 sobre dos thetas"""
    exponents = ExponentService(GridConfig(tmax=Fraction(1024)))
    service = GrassmannService(exponents, TransferenceService(exponents, SamplingConfig(count=2, seed=0)))
    report = service.bv_transfer_check((parse_real("phi"),), 0)
    assert report.verdict != Verdict.VIOLATED
    assert len(report.samples) == 2
    assert report.details["transpose_identity"]["mismatches"] == 0
