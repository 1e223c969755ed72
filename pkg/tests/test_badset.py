"""
Tests de la construcción de Cantor, certificados Bad^epsilon y controles
"""
from fractions import Fraction

import pytest

from app.core.errors import DegenerateRank, PreconditionViolation, TheoremViolation
from app.core.numerics import CertReal, WeightVector, parse_real
from app.services import badset_service
from app.services.badset_service import (
    BadsetService,
    cantor_constant,
    epsilon_from_alpha,
    epsilon_one,
    radius_for_alpha,
)
from app.services.exponent_service import ExponentService
from app.services.types import GridConfig, TargetMatrix

ONE = WeightVector.uniform(1)
PHI = TargetMatrix.scalar(parse_real("phi"))


@pytest.fixture(scope="module")
def phi_certificate():
    service = BadsetService(ExponentService(GridConfig(tmax=Fraction(1 << 21))))
    return service.bad_certificate(PHI, alpha=Fraction(1, 5), depth=6, check_bound=10 ** 4)


def test_constants_for_alpha_one_fifth():
    """alpha = 0.2, n = 1: R = 8, c = 0.225, epsilon = 0.00125, epsilon_1 = 0.0125"""
    R = radius_for_alpha(Fraction(1, 5), 1, 1)
    assert R == 8
    assert cantor_constant(Fraction(1, 5), R, 1, 1).exact == Fraction(9, 40)
    assert epsilon_from_alpha(Fraction(1, 5), R, 1, 1, 1).exact == Fraction(1, 800)
    assert epsilon_one(Fraction(1, 5), R, 1, 1).exact == Fraction(1, 80)


def test_alpha_out_of_range():
    """alpha debe estar en (0, 1/2) y dejar c >= 1/10"""
    for alpha in (Fraction(0), Fraction(1, 2), Fraction(9, 20)):
        with pytest.raises(PreconditionViolation):
            radius_for_alpha(alpha, 1, 1)


def test_cantor_descent_keeps_every_level_away_from_integers():
    """dist(y_j theta, Z) >= alpha en todos los niveles, con ambos selectores"""
    service = BadsetService()
    ys = [(1,), (8,), (64,), (512,), (4096,)]
    for selector, seed in (("first", None), ("random", 3)):
        state = service.cantor_descend(ys, Fraction(1, 5), ONE, 4, selector=selector, seed=seed)
        theta = state.theta[0]
        for (y,) in ys[:4]:
            value = y * theta
            assert abs(value - round(value)) >= Fraction(1, 5)
        assert all(level.survivors >= level.survivor_bound for level in state.levels)
        assert state.levels[0].children == 8


def test_random_selector_is_reproducible():
    """La misma semilla da el mismo theta"""
    service = BadsetService()
    ys = [(1,), (8,), (64,), (512,)]
    first = service.cantor_descend(ys, Fraction(1, 5), ONE, 3, selector="random", seed=11)
    second = service.cantor_descend(ys, Fraction(1, 5), ONE, 3, selector="random", seed=11)
    assert first.theta == second.theta


def test_cantor_descent_requires_growth():
    """Razones ||y_(j+1)|| / ||y_j|| por debajo de R se rechazan"""
    with pytest.raises(PreconditionViolation):
        BadsetService().cantor_descend([(1,), (4,)], Fraction(1, 5), ONE, 1)


def test_cantor_descent_rejects_levels_below_the_survivor_bound(monkeypatch):
    """Si un nivel queda por debajo de la cota garantizada de supervivientes, el descenso falla con TheoremViolation"""
    # con c = 19/20 la cota exige 7 de 8 hijos; con alpha = 1/5 sólo sobreviven 4
    monkeypatch.setattr(badset_service, "cantor_constant", lambda alpha, R, n, delta: CertReal.rational(Fraction(19, 20)))
    with pytest.raises(TheoremViolation) as info:
        BadsetService().cantor_descend([(1,), (8,)], Fraction(1, 5), ONE, 1, R=8)
    assert info.value.details["k"] == 0
    assert info.value.details["survivors"] == 4
    assert info.value.details["survivor_bound"] == 7
    assert info.value.exit_code == 8


def test_phi_certificate_passes_window(phi_certificate):
    """phi: subsucesión 1, 8, 89, ..., ventana superada y cota cubierta por la prueba ~16828"""
    cert = phi_certificate
    assert cert.R == 8
    assert cert.window_pass
    assert cert.min_product >= float(cert.epsilon)
    assert cert.proof_covered_bound == pytest.approx(0.0125 * 1346269)
    assert len(cert.levels) == 6
    assert not any("extends beyond" in c for c in cert.caveats)


def test_phi_subsequence_denominators(phi_certificate):
    """Los índices de la subsucesión apuntan a 1, 8, 89, 987, 10946, 121393, 1346269"""
    service = BadsetService(ExponentService(GridConfig(tmax=Fraction(1 << 21))))
    seq = service.exponents.homogeneous_sequence(PHI, ONE, ONE, 1 << 21)
    ys = [seq.entries[i].X[0] for i in phi_certificate.subsequence]
    assert ys == [1, 8, 89, 987, 10946, 121393, 1346269]


def test_negative_control_fails_window():
    """theta = frac(phi) anula el producto en p = 1"""
    service = BadsetService()
    theta = service.negative_control_theta(PHI)
    assert float(theta[0]) == pytest.approx(0.6180339887498949)
    check = service.window_check(PHI, ONE, ONE, theta, Fraction(1, 800), 100)
    assert not check.passed
    assert check.min_product < 1e-9


def test_rational_target_has_no_certificate():
    """A racional: rango degenerado"""
    with pytest.raises(DegenerateRank):
        BadsetService().bad_certificate(TargetMatrix.scalar(Fraction(1, 2)))


def test_key_congruence_is_exact():
    """<q_k, theta> coincide módulo 1 con la descomposición por pares (p, q)"""
    service = BadsetService()
    seq = service.exponents.homogeneous_sequence(PHI, ONE, ONE, 100)
    pairs = [((1,), (0,)), ((2,), (3,)), ((-5,), (7,))]
    result = service.key_congruence_check(PHI, seq, (Fraction(1, 3),), pairs)
    assert result["checked"] == len(seq.entries) * len(pairs)
    assert result["failures"] == []


def test_borel_cantelli_frequencies_follow_measure():
    """Frecuencias de S_k cerca de su medida 2 Y_k^(-eta) y resultado reproducible"""
    service = BadsetService()
    seq = service.exponents.homogeneous_sequence(PHI, ONE, ONE, 10 ** 4)
    first = service.borel_cantelli_experiment(PHI, epsilon=Fraction(1, 2), sample_count=500, seed=0, seq=seq,
                                              thetas=[(Fraction(1, 3),)])
    assert first.eta == Fraction(1, 4)
    for level in first.levels:
        assert abs(level["frequency"] - min(1.0, level["measure_bound"])) < 0.1
    assert 0.0 <= first.tail_free_fraction <= 1.0
    assert len(first.theta_counts) == 1
    second = service.borel_cantelli_experiment(PHI, epsilon=Fraction(1, 2), sample_count=500, seed=0, seq=seq)
    assert second.levels == first.levels
