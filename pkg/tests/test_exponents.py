"""
Tests de estimación de exponentes: sucesiones, malla de escalas y serie de Liouville
"""
import math
from fractions import Fraction

import pytest

from app.core.errors import PreconditionViolation
from app.core.numerics import WeightVector, certify_power_bound, parse_real
from app.services.exponent_service import ExponentService
from app.services.types import ExponentKind, GridConfig, TargetMatrix

SQRT2 = TargetMatrix.scalar(parse_real("sqrt(2)"))


def test_sqrt2_pair_is_close_to_one():
    """sqrt(2) hasta Y = 10^6: omega y omega_hat a menos de 0.05 de 1, con cota inferior 1"""
    service = ExponentService(GridConfig(tmax=Fraction(10 ** 6)))
    omega, omega_hat = service.estimate_pair(SQRT2)
    assert omega.method == "sequence"
    assert abs(omega.point_estimate - 1) < 0.05
    assert abs(omega_hat.point_estimate - 1) < 0.05
    assert omega.lower_bound >= 1
    assert float(omega.lower_bound) <= omega.point_estimate
    assert omega.witnesses
    assert any("dirichlet" in note for note in omega.notes)


def test_phi_ordinary_estimate_has_no_additive_bias():
    """phi: M_k Y_k tiende a 1/sqrt(5), la pendiente de -log M frente a log Y es 1"""
    service = ExponentService(GridConfig(tmax=Fraction(10 ** 5)))
    omega = service.estimate_ordinary(TargetMatrix.scalar(parse_real("phi")))
    assert omega.point_estimate == pytest.approx(1.0, abs=0.01)


def test_sequence_witnesses_are_exact():
    """Cada testigo cumple |q sqrt(2) - p| < T^(-omega) con ||q|| < T"""
    service = ExponentService(GridConfig(tmax=Fraction(5000)))
    omega = service.estimate_ordinary(SQRT2)
    for w in omega.witnesses:
        q, p = w.q[0], w.p[0]
        assert abs(q) < w.T
        assert certify_power_bound(abs(parse_real("sqrt(2)") * q - p), w.T, w.exponent)


def test_liouville_exponent_is_capped():
    """La constante de Liouville supera el tope: omega = inf marcado como capped"""
    service = ExponentService()
    A = TargetMatrix.scalar(parse_real("liouville(2)"))
    omega = service.estimate_ordinary(A)
    assert omega.method == "series"
    assert omega.capped
    assert omega.point_estimate == math.inf
    assert omega.lower_bound > 10
    certified = [w for w in omega.witnesses if w.source.endswith("+certified")]
    assert certified


def test_liouville_uniform_exponent_is_finite():
    """omega_hat de la serie de Liouville queda acotado y por encima de 1"""
    service = ExponentService()
    omega_hat = service.estimate_uniform(TargetMatrix.scalar(parse_real("liouville(2)")))
    assert not omega_hat.capped
    assert omega_hat.point_estimate >= 1


@pytest.mark.parametrize("token", ["liouville(2)", "liouville(9,10)"])
@pytest.mark.parametrize("mode", ["ordinary", "uniform"])
def test_liouville_series_witnesses_are_all_certified(token, mode):
    """Cada testigo de la serie queda certificado, numéricamente o por la cota exacta de la cola"""
    service = ExponentService()
    estimate = service.estimate(TargetMatrix.scalar(parse_real(token)), ExponentKind(mode))
    sources = {w.source for w in estimate.witnesses}
    assert sources <= {"series_truncation+certified", "series_truncation+tail_bound"}
    assert "series_truncation+tail_bound" in sources
    for w in estimate.witnesses:
        if not w.source.endswith("+tail_bound"):
            continue
        T_power = int(w.T.split("^")[1])
        f = int(w.q.split("^")[1])
        k = next(k for k in range(1, 80) if math.factorial(k) == f)
        # cola < b^(k! + 1 - (k+1)!) <= T^(-omega)
        assert f < T_power
        assert T_power * w.exponent <= math.factorial(k + 1) - f - 1


def test_grid_uniform_meets_dirichlet():
    """Por la malla, D(T) < 1/T en la cola para sqrt(2)"""
    service = ExponentService(GridConfig(tmax=Fraction(4096)))
    omega_hat = service.estimate(SQRT2, ExponentKind("uniform"), method="grid")
    assert omega_hat.method == "grid"
    assert omega_hat.lower_bound >= 1
    assert omega_hat.witnesses
    assert omega_hat.slack > 0


def test_scale_profile_is_monotone():
    """D(T) no crece con T y el q elegido queda por debajo de T"""
    service = ExponentService(GridConfig(tmax=Fraction(2048)))
    profile = service.scale_profile(SQRT2)
    residuals = [p.residual for p in profile]
    assert residuals == sorted(residuals, reverse=True)
    assert all(abs(p.q[0]) < p.T for p in profile)


def test_inhomogeneous_estimate_uses_grid():
    """Con theta = 1/3 se usa la malla y el exponente es del orden de 1"""
    service = ExponentService(GridConfig(tmax=Fraction(4096)))
    omega = service.estimate_ordinary(SQRT2, theta=[Fraction(1, 3)])
    assert omega.kind.shift == "inhomogeneous"
    assert omega.method == "grid"
    assert 0.5 < omega.point_estimate < 2


def test_multiplicative_estimate_searches_hyperbolic_cross():
    """El exponente multiplicativo de un par cúbico se estima por búsqueda directa"""
    service = ExponentService(GridConfig(tmax=Fraction(256)))
    A = TargetMatrix.of([[parse_real("root(2,3)")], [parse_real("root(4,3)")]])
    estimate = service.estimate(A, ExponentKind("ordinary", "multiplicative"))
    assert estimate.kind.norm == "multiplicative"
    assert estimate.profile
    assert estimate.point_estimate > 0


def test_sequence_method_rejects_shift():
    """El camino por sucesiones solo existe en el caso homogéneo"""
    service = ExponentService()
    with pytest.raises(PreconditionViolation):
        service.estimate_ordinary(SQRT2, theta=[Fraction(1, 2)], method="sequence")
    with pytest.raises(PreconditionViolation):
        service.estimate_ordinary(SQRT2, method="newton")


def test_weights_must_match_shape():
    """Pesos con dimensión equivocada"""
    service = ExponentService()
    with pytest.raises(PreconditionViolation):
        service.estimate_ordinary(SQRT2, s=WeightVector.uniform(2))


def test_invalid_grid():
    """La malla exige 1 < tmin < tmax y razón > 1"""
    with pytest.raises(PreconditionViolation):
        GridConfig(tmin=Fraction(1), tmax=Fraction(100))
    with pytest.raises(PreconditionViolation):
        GridConfig(tmin=Fraction(2), tmax=Fraction(100), ratio=Fraction(1))
