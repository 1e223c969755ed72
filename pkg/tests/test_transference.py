"""
Tests de las cotas de transferencia y de sus validadores
"""
import random
from fractions import Fraction

import pytest

from app.core.errors import PreconditionViolation
from app.core.numerics import INFINITY, WeightVector, is_infinite, parse_real
from app.services.exponent_service import ExponentService
from app.services.transference_service import TransferenceService
from app.services.types import DysonBoundInput, GridConfig, PowerLaw, SamplingConfig, TargetMatrix, Verdict

PHI = TargetMatrix.scalar(parse_real("phi"))


def _uniform_input(m, n, omega):
    return DysonBoundInput(m, n, WeightVector.uniform(m), WeightVector.uniform(n), omega)


def test_classical_bound_example():
    """m = n = 2, omega = 3 da 7/5"""
    service = TransferenceService()
    assert service.dyson_classical_bound(2, 2, Fraction(3)) == Fraction(7, 5)
    assert service.dyson_weighted_bound(_uniform_input(2, 2, Fraction(3))) == Fraction(7, 5)


def test_uniform_weights_reduce_to_classical_bound():
    """Con pesos uniformes la cota ponderada coincide con la clásica"""
    rng = random.Random(5)
    service = TransferenceService()
    for _ in range(1000):
        m, n = rng.randint(1, 4), rng.randint(1, 4)
        omega = Fraction(rng.randint(1, 400), rng.randint(1, 50)) + 1
        assert service.dyson_weighted_bound(_uniform_input(m, n, omega)) == service.dyson_classical_bound(m, n, omega)


def test_dirichlet_exponent_is_a_fixed_point():
    """omega = 1 se transfiere en 1 en ambas direcciones"""
    service = TransferenceService()
    s = WeightVector((Fraction(1, 3), Fraction(2, 3)))
    r = WeightVector((Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)))
    inp = DysonBoundInput(2, 3, s, r, Fraction(1))
    assert service.dyson_weighted_bound(inp, "forward") == 1
    assert service.dyson_weighted_bound(inp, "backward") == 1


def test_infinite_omega():
    """omega = inf: n/(n-1) si n > 1 e infinito si n = 1"""
    service = TransferenceService()
    assert service.dyson_classical_bound(2, 2, INFINITY) == 2
    assert is_infinite(service.dyson_classical_bound(3, 1, INFINITY))
    assert service.dyson_weighted_bound(_uniform_input(2, 3, INFINITY)) == Fraction(3, 2)


def test_weighted_bound_is_monotone_in_omega():
    """La cota crece con omega"""
    service = TransferenceService()
    s = WeightVector((Fraction(1, 3), Fraction(2, 3)))
    r = WeightVector.uniform(1)
    values = [service.dyson_weighted_bound(DysonBoundInput(2, 1, s, r, Fraction(k, 2))) for k in range(2, 12)]
    assert values == sorted(values)


def test_bound_input_checks_weights():
    """Los pesos deben tener longitud m y n"""
    with pytest.raises(PreconditionViolation):
        DysonBoundInput(2, 1, WeightVector.uniform(1), WeightVector.uniform(1), Fraction(2))


def test_validate_dyson_on_phi():
    """Para m = n = 1 la cota es la identidad y la validación es consistente"""
    service = TransferenceService(ExponentService(GridConfig(tmax=Fraction(4096))))
    report = service.validate_dyson(PHI)
    assert report.verdict == Verdict.CONSISTENT
    assert set(report.bound) == {"ordinary/forward", "ordinary/backward", "uniform/forward", "uniform/backward"}


def test_validate_dyson_on_liouville_constant():
    """La serie de Liouville da omega = inf en ambos lados y la validación es consistente"""
    service = TransferenceService(ExponentService(GridConfig(tmax=Fraction(4096))))
    report = service.validate_dyson(TargetMatrix.scalar(parse_real("liouville(2)")))
    assert report.verdict == Verdict.CONSISTENT
    assert report.estimates["omega"]["method"] == "series"
    assert report.estimates["omega"]["capped"] and report.estimates["transpose_omega"]["capped"]
    assert not report.estimates["omega_hat"]["capped"]
    assert all(check["holds"] for check in report.details["checks"])


def test_validate_dyson_on_row_sqrt2_sqrt3():
    """m = 1, n = 2: forma lineal q1 sqrt(2) + q2 sqrt(3) y su traspuesta; Dirichlet sostiene ambas cotas"""
    service = TransferenceService(ExponentService(GridConfig(tmax=Fraction(4096))))
    A = TargetMatrix.of([[parse_real("sqrt(2)"), parse_real("sqrt(3)")]])
    report = service.validate_dyson(A)
    assert report.verdict != Verdict.VIOLATED
    assert set(report.bound) == {"ordinary/forward", "ordinary/backward", "uniform/forward", "uniform/backward"}
    for key in ("omega", "omega_hat", "transpose_omega", "transpose_omega_hat"):
        assert report.estimates[key]["method"] == "sequence"
    assert report.verdict == Verdict.CONSISTENT


def test_theta_sampling_is_reproducible():
    """Misma semilla, mismas muestras; otra semilla, otras"""
    service = TransferenceService(sampling=SamplingConfig(count=8, seed=3))
    first = service.sample_thetas(2)
    assert first == service.sample_thetas(2)
    assert first != service.sample_thetas(2, seed=4)
    assert all(0 <= t < 1 for theta in first for t in theta)


def test_bl_validate_reports_every_sample():
    """La validación inhomogénea registra cada theta y nunca declara violación"""
    exponents = ExponentService(GridConfig(tmax=Fraction(1024)))
    service = TransferenceService(exponents, SamplingConfig(count=3, seed=1))
    report = service.bl_validate(PHI)
    assert len(report.samples) == 3
    assert report.verdict in (Verdict.CONSISTENT, Verdict.INCONCLUSIVE)
    assert 0.0 <= report.details["fraction_within_tolerance"] <= 1.0
    assert set(report.bound) == {"omega(tA,theta)", "omega_hat(tA,theta)"}


@pytest.mark.slow
@pytest.mark.parametrize("token", ["phi", "sqrt(2)"])
def test_bl_equality_holds_for_most_shifts(token):
    """100 theta sembrados: cotas certificadas >= 1/omega_hat - holgura y >= 90% a menos de 0.15 de la igualdad"""
    exponents = ExponentService(GridConfig(tmax=Fraction(1 << 18)))
    service = TransferenceService(exponents, SamplingConfig(count=100, seed=0, tolerance=0.15))
    report = service.bl_validate(TargetMatrix.scalar(parse_real(token)))
    assert len(report.samples) == 100
    assert report.verdict != Verdict.VIOLATED
    assert report.details["fraction_within_tolerance"] >= 0.9
    errors = [sample for sample in report.samples if "error" in sample]
    assert not errors
    assert sum(sample["ordinary_ok"] for sample in report.samples) >= 95


def test_shifted_ordinary_estimate_is_a_slope_not_a_maximum():
    """Con theta, el punto ordinario es la pendiente de -log D(T) y no supera el máximo de la cola"""
    service = ExponentService(GridConfig(tmax=Fraction(1 << 14)))
    theta = [Fraction(2, 7)]
    omega = service.estimate_ordinary(PHI, theta=theta)
    profile = service.scale_profile(PHI, theta)
    assert omega.point_estimate <= max(p.omega for p in profile)
    assert float(omega.lower_bound) <= omega.point_estimate
    assert omega.witnesses


def test_psi_phi_transfer_finds_promised_witnesses():
    """phi no es (T^-1/10)-aproximable y cada theta tiene su testigo phi(T1)"""
    exponents = ExponentService(GridConfig(tmax=Fraction(4096)))
    service = TransferenceService(exponents)
    psi = PowerLaw(Fraction(1, 10), Fraction(1))
    phi = PowerLaw(Fraction(1), Fraction(1, 2))
    thetas = [(Fraction(1, 3),), (Fraction(5, 7),)]
    report = service.psi_phi_transfer_check(PHI, None, None, psi, phi, thetas=thetas)
    assert report.verdict == Verdict.CONSISTENT
    assert report.details["transferred_scales"]
    assert all(not sample["missing"] for sample in report.samples)


def test_psi_phi_without_certified_scales_is_inconclusive():
    """Si A es psi-aproximable en toda la malla no hay nada que transferir"""
    exponents = ExponentService(GridConfig(tmax=Fraction(1024)))
    service = TransferenceService(exponents)
    psi = PowerLaw(Fraction(10), Fraction(1, 2))
    phi = PowerLaw(Fraction(1), Fraction(1, 2))
    report = service.psi_phi_transfer_check(PHI, None, None, psi, phi, thetas=[(Fraction(1, 2),)])
    assert report.verdict == Verdict.INCONCLUSIVE
    assert "reason" in report.details
